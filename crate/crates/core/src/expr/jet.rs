//! Second-order forward-mode jets over the `2n` coordinates `(x, y)`.

use std::ops::{Add, Mul, Neg, Sub};

use super::ast::Var;

/// Value, gradient and Hessian of a scalar field at one point.
///
/// The Hessian is stored as a packed upper triangle over the flat
/// `(x1..xn, y1..yn)` ordering, so every unordered pair of variables has
/// exactly one slot and `dxdx`, `dydy` are symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    dim: usize,
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

#[inline]
fn packed(m: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * (2 * m - a - 1) / 2 + b
}

impl Jet2 {
    pub fn constant(dim: usize, value: f64) -> Jet2 {
        let m = 2 * dim;
        Jet2 {
            dim,
            value,
            grad: vec![0.0; m],
            hess: vec![0.0; m * (m + 1) / 2],
        }
    }

    pub fn zero(dim: usize) -> Jet2 {
        Jet2::constant(dim, 0.0)
    }

    /// The jet of a coordinate function.
    pub fn variable(dim: usize, var: Var, value: f64) -> Jet2 {
        let mut j = Jet2::constant(dim, value);
        j.grad[var.slot(dim)] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn dx(&self, i: usize) -> f64 {
        self.grad[i]
    }

    pub fn dy(&self, i: usize) -> f64 {
        self.grad[self.dim + i]
    }

    pub fn dxdx(&self, i: usize, j: usize) -> f64 {
        self.hess[packed(2 * self.dim, i, j)]
    }

    /// `∂²f/∂x^i∂y^j`.
    pub fn dxdy(&self, i: usize, j: usize) -> f64 {
        self.hess[packed(2 * self.dim, i, self.dim + j)]
    }

    pub fn dydy(&self, i: usize, j: usize) -> f64 {
        self.hess[packed(2 * self.dim, self.dim + i, self.dim + j)]
    }

    /// First partial with respect to a variable.
    pub fn d(&self, v: Var) -> f64 {
        self.grad[v.slot(self.dim)]
    }

    /// Second partial with respect to two variables.
    pub fn dd(&self, a: Var, b: Var) -> f64 {
        self.hess[packed(2 * self.dim, a.slot(self.dim), b.slot(self.dim))]
    }

    pub fn grad_x(&self) -> Vec<f64> {
        self.grad[..self.dim].to_vec()
    }

    pub fn grad_y(&self) -> Vec<f64> {
        self.grad[self.dim..].to_vec()
    }

    /// Euler operator `C(f) = y^i ∂f/∂y^i` at the fibre point `y`.
    pub fn euler(&self, y: &[f64]) -> f64 {
        y.iter().enumerate().map(|(i, yi)| yi * self.dy(i)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|v| v.is_finite())
            && self.hess.iter().all(|v| v.is_finite())
    }

    /// Composition with a scalar function given its value and first two
    /// derivatives at `self.value`.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let m = self.grad.len();
        let grad: Vec<f64> = self.grad.iter().map(|g| f1 * g).collect();
        let mut hess: Vec<f64> = self.hess.iter().map(|h| f1 * h).collect();
        if f2 != 0.0 {
            for a in 0..m {
                let ga = self.grad[a];
                if ga == 0.0 {
                    continue;
                }
                for b in a..m {
                    hess[packed(m, a, b)] += f2 * ga * self.grad[b];
                }
            }
        }
        Jet2 {
            dim: self.dim,
            value: f0,
            grad,
            hess,
        }
    }

    pub fn scale(&self, k: f64) -> Jet2 {
        Jet2 {
            dim: self.dim,
            value: k * self.value,
            grad: self.grad.iter().map(|g| k * g).collect(),
            hess: self.hess.iter().map(|h| k * h).collect(),
        }
    }

    pub fn recip(&self) -> Jet2 {
        let u = self.value;
        self.chain(1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u))
    }

    pub fn powi(&self, k: i32) -> Jet2 {
        if k == 0 {
            return Jet2::constant(self.dim, 1.0);
        }
        let u = self.value;
        let kf = k as f64;
        let f1 = kf * u.powi(k - 1);
        let f2 = if k == 1 { 0.0 } else { kf * (kf - 1.0) * u.powi(k - 2) };
        self.chain(u.powi(k), f1, f2)
    }

    fn zip(&self, other: &Jet2, f: impl Fn(f64, f64) -> f64) -> Jet2 {
        debug_assert_eq!(self.dim, other.dim);
        Jet2 {
            dim: self.dim,
            value: f(self.value, other.value),
            grad: self
                .grad
                .iter()
                .zip(&other.grad)
                .map(|(a, b)| f(*a, *b))
                .collect(),
            hess: self
                .hess
                .iter()
                .zip(&other.hess)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        let m = self.grad.len();
        let (u, v) = (self.value, rhs.value);
        let grad = self
            .grad
            .iter()
            .zip(&rhs.grad)
            .map(|(gu, gv)| u * gv + v * gu)
            .collect();
        let mut hess: Vec<f64> = self
            .hess
            .iter()
            .zip(&rhs.hess)
            .map(|(hu, hv)| u * hv + v * hu)
            .collect();
        for a in 0..m {
            for b in a..m {
                hess[packed(m, a, b)] += self.grad[a] * rhs.grad[b] + rhs.grad[a] * self.grad[b];
            }
        }
        Jet2 {
            dim: self.dim,
            value: u * v,
            grad,
            hess,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_index_is_a_bijection() {
        for m in 1..7 {
            let mut seen = vec![false; m * (m + 1) / 2];
            for a in 0..m {
                for b in a..m {
                    let k = packed(m, a, b);
                    assert!(!seen[k]);
                    seen[k] = true;
                    assert_eq!(k, packed(m, b, a));
                }
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    #[test]
    fn product_of_coordinates() {
        let x = Jet2::variable(1, Var::X(0), 3.0);
        let y = Jet2::variable(1, Var::Y(0), 2.0);
        let p = &x * &y;
        assert_eq!(p.value(), 6.0);
        assert_eq!((p.dx(0), p.dy(0)), (2.0, 3.0));
        assert_eq!(p.dxdy(0, 0), 1.0);
        assert_eq!((p.dxdx(0, 0), p.dydy(0, 0)), (0.0, 0.0));
    }

    #[test]
    fn reciprocal_second_derivative() {
        let y = Jet2::variable(1, Var::Y(0), 2.0);
        let r = y.recip();
        assert_eq!(r.value(), 0.5);
        assert_eq!(r.dy(0), -0.25);
        assert_eq!(r.dydy(0, 0), 0.25);
    }
}
