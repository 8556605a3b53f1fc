//! Reference derivatives that share no code with the jet engine: a
//! first-order dual-number evaluator over the expression tree, and central
//! finite differences built on top of it.

use nalgebra::DMatrix;

use crate::expr::{Expr, Func, Jet2, Point, ScalarField, Var};
use crate::geometry::{geometry_at, SodeSystem};

/// Value and gradient over the flat `(x, y)` coordinates.
#[derive(Debug, Clone)]
struct Dual {
    v: f64,
    g: Vec<f64>,
}

impl Dual {
    fn constant(m: usize, v: f64) -> Dual {
        Dual { v, g: vec![0.0; m] }
    }

    fn map(&self, v: f64, d: f64) -> Dual {
        Dual {
            v,
            g: self.g.iter().map(|a| a * d).collect(),
        }
    }

    fn combine(&self, o: &Dual, v: f64, da: f64, db: f64) -> Dual {
        Dual {
            v,
            g: self.g.iter().zip(&o.g).map(|(a, b)| da * a + db * b).collect(),
        }
    }
}

fn func(f: Func, u: f64) -> (f64, f64) {
    match f {
        Func::Sqrt => (u.sqrt(), 0.5 / u.sqrt()),
        Func::Sin => (u.sin(), u.cos()),
        Func::Cos => (u.cos(), -u.sin()),
        Func::Exp => (u.exp(), u.exp()),
        Func::Log => (u.ln(), 1.0 / u),
    }
}

fn dual(e: &Expr, dim: usize, at: &[f64]) -> Dual {
    let m = 2 * dim;
    match e {
        Expr::Num(v) => Dual::constant(m, *v),
        Expr::Var(v) => {
            let s = match v {
                Var::X(i) => *i,
                Var::Y(i) => dim + i,
            };
            let mut d = Dual::constant(m, at[s]);
            d.g[s] = 1.0;
            d
        }
        Expr::Neg(a) => {
            let a = dual(a, dim, at);
            a.map(-a.v, -1.0)
        }
        Expr::Add(a, b) => {
            let (a, b) = (dual(a, dim, at), dual(b, dim, at));
            a.combine(&b, a.v + b.v, 1.0, 1.0)
        }
        Expr::Sub(a, b) => {
            let (a, b) = (dual(a, dim, at), dual(b, dim, at));
            a.combine(&b, a.v - b.v, 1.0, -1.0)
        }
        Expr::Mul(a, b) => {
            let (a, b) = (dual(a, dim, at), dual(b, dim, at));
            a.combine(&b, a.v * b.v, b.v, a.v)
        }
        Expr::Div(a, b) => {
            let (a, b) = (dual(a, dim, at), dual(b, dim, at));
            a.combine(&b, a.v / b.v, 1.0 / b.v, -a.v / (b.v * b.v))
        }
        Expr::Pow(a, b) => {
            let base = dual(a, dim, at);
            let ex = dual(b, dim, at);
            let constant_exponent = ex.g.iter().all(|d| *d == 0.0);
            if constant_exponent {
                let k = ex.v;
                let v = base.v.powf(k);
                let d = if k == 0.0 { 0.0 } else { k * base.v.powf(k - 1.0) };
                base.map(v, d)
            } else {
                let v = base.v.powf(ex.v);
                base.combine(&ex, v, ex.v * base.v.powf(ex.v - 1.0), v * base.v.ln())
            }
        }
        Expr::Call(f, a) => {
            let a = dual(a, dim, at);
            let (v, d) = func(*f, a.v);
            a.map(v, d)
        }
    }
}

fn flat(p: &Point) -> Vec<f64> {
    p.x.iter().chain(&p.y).copied().collect()
}

/// Gradient over `(x, y)` from the dual evaluator.
pub fn dual_gradient(f: &ScalarField, p: &Point) -> (f64, Vec<f64>) {
    let d = dual(f.expr(), f.dim(), &flat(p));
    (d.v, d.g)
}

/// Reference derivatives: first order by central differences of the value,
/// second order by central differences of the dual gradient.
#[derive(Debug, Clone)]
pub struct FdJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
}

pub fn fd_jet(f: &ScalarField, p: &Point, h: f64) -> FdJet {
    let dim = f.dim();
    let m = 2 * dim;
    let base = flat(p);
    let value_at = |z: &[f64]| dual(f.expr(), dim, z).v;
    let grad_at = |z: &[f64]| dual(f.expr(), dim, z).g;
    let mut grad = vec![0.0; m];
    let mut hess = DMatrix::zeros(m, m);
    for k in 0..m {
        let mut a = base.clone();
        let mut b = base.clone();
        a[k] += h;
        b[k] -= h;
        grad[k] = (value_at(&a) - value_at(&b)) / (2.0 * h);
        let (ga, gb) = (grad_at(&a), grad_at(&b));
        for l in 0..m {
            hess[(l, k)] = (ga[l] - gb[l]) / (2.0 * h);
        }
    }
    FdJet {
        value: value_at(&base),
        grad,
        hess,
    }
}

/// Largest mismatch between a jet and its reference, each entry measured as
/// `|a − b| / (abs + rel·|b|)`. Values at most 1 mean agreement.
pub fn jet_mismatch(jet: &Jet2, fd: &FdJet, abs: f64, rel: f64) -> f64 {
    let dim = jet.dim();
    let var = |s: usize| if s < dim { Var::X(s) } else { Var::Y(s - dim) };
    let score = |a: f64, b: f64| (a - b).abs() / (abs + rel * b.abs());
    let mut worst = score(jet.value(), fd.value);
    for s in 0..2 * dim {
        worst = worst.max(score(jet.d(var(s)), fd.grad[s]));
        for t in 0..2 * dim {
            worst = worst.max(score(jet.dd(var(s), var(t)), fd.hess[(s, t)]));
        }
    }
    if worst.is_nan() {
        f64::INFINITY
    } else {
        worst
    }
}

/// `∂R^i_j/∂y^k` by central differences of the Jacobi endomorphism.
pub fn fd_phi_dy(sode: &SodeSystem, p: &Point, h: f64) -> Option<Vec<DMatrix<f64>>> {
    (0..sode.dim())
        .map(|k| {
            let mut a = p.clone();
            let mut b = p.clone();
            a.y[k] += h;
            b.y[k] -= h;
            let pa = geometry_at(sode, &a).ok()?.phi;
            let pb = geometry_at(sode, &b).ok()?.phi;
            Some((pa - pb) / (2.0 * h))
        })
        .collect()
}

/// Residuals of the curvature identity at `p` with `Φ` differentiated by
/// central differences: first `max |3R^i_jk − (∂R^i_k/∂y^j − ∂R^i_j/∂y^k)|`,
/// then the same with the two derivative terms exchanged.
pub fn curvature_identity_residuals(sode: &SodeSystem, p: &Point, h: f64) -> Option<(f64, f64)> {
    let geo = geometry_at(sode, p).ok()?;
    let d = fd_phi_dy(sode, p, h)?;
    let n = sode.dim();
    let (mut consistent, mut swapped) = (0.0f64, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let lhs = 3.0 * geo.curv[(i, j, k)];
                let curl = d[j][(i, k)] - d[k][(i, j)];
                consistent = consistent.max((lhs - curl).abs());
                swapped = swapped.max((lhs + curl).abs());
            }
        }
    }
    Some((consistent, swapped))
}

/// `Φ` with `N` and `∂G/∂x` from the dual evaluator and the derivatives of
/// `N` by central differences.
pub fn fd_jacobi_endomorphism(sode: &SodeSystem, p: &Point, h: f64) -> DMatrix<f64> {
    let n = sode.dim();
    let g = |q: &Point| -> Vec<f64> {
        sode.coeffs()
            .iter()
            .map(|c| dual(c.expr(), n, &flat(q)).v)
            .collect()
    };
    let shift = |q: &Point, slot: usize, t: f64| {
        let mut r = q.clone();
        if slot < n {
            r.x[slot] += t;
        } else {
            r.y[slot - n] += t;
        }
        r
    };
    let conn = |q: &Point| -> DMatrix<f64> {
        let grads: Vec<Vec<f64>> = sode
            .coeffs()
            .iter()
            .map(|c| dual(c.expr(), n, &flat(q)).g)
            .collect();
        DMatrix::from_fn(n, n, |i, j| grads[i][n + j])
    };
    let g0 = g(p);
    let n0 = conn(p);
    let dn = |slot: usize| (conn(&shift(p, slot, h)) - conn(&shift(p, slot, -h))) / (2.0 * h);
    let dn_dx: Vec<_> = (0..n).map(dn).collect();
    let dn_dy: Vec<_> = (0..n).map(|k| dn(n + k)).collect();
    let dg_dx = |i: usize, j: usize| dual(sode.coeffs()[i].expr(), n, &flat(p)).g[j];
    DMatrix::from_fn(n, n, |i, j| {
        let mut s_n = 0.0;
        for k in 0..n {
            s_n += p.y[k] * dn_dx[k][(i, j)] - 2.0 * g0[k] * dn_dy[k][(i, j)];
        }
        let nn: f64 = (0..n).map(|r| n0[(i, r)] * n0[(r, j)]).sum();
        2.0 * dg_dx(i, j) - s_n - nn
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, random_point, rng};

    #[test]
    fn dual_matches_known_gradient() {
        let f = ScalarField::parse("sqrt(y1^2+y2^2)", 2).unwrap();
        let (v, g) = dual_gradient(&f, &Point::new(vec![0.0, 0.0], vec![3.0, 4.0]));
        assert_eq!(v, 5.0);
        assert!((g[2] - 0.6).abs() < 1e-15 && (g[3] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn jets_agree_with_reference() {
        let mut r = rng(1);
        for _ in 0..100 {
            let f = random_field(&mut r, 2, 4);
            let p = random_point(&mut r, 2);
            let m = jet_mismatch(&f.jet(&p).unwrap(), &fd_jet(&f, &p, 1e-5), 1e-6, 1e-6);
            assert!(m <= 1.0, "{f} at {p:?}: {m}");
        }
    }

    #[test]
    fn fd_jacobi_endomorphism_on_ex1() {
        let s = SodeSystem::parse(&["(y1^2 + y2^2)/2", "2*y1*y2"], true).unwrap();
        let phi = fd_jacobi_endomorphism(&s, &Point::new(vec![0.1, 0.2], vec![1.0, 2.0]), 1e-5);
        let want = [[-4.0, 2.0], [4.0, -2.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((phi[(i, j)] - want[i][j]).abs() < 1e-5, "{phi}");
            }
        }
    }
}
