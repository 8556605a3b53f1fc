//! Objects derived from a semispray `S = y^i ∂/∂x^i − 2G^i ∂/∂y^i`, evaluated
//! pointwise from the 2-jets of its coefficients.

mod integrate;

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;

use crate::error::{Error, EvalError, Result};
use crate::expr::{Jet2, Point, ScalarField};

pub use integrate::{integrate_geodesic, Trajectory};

/// A second-order system `ẍ^i + 2G^i(x, ẋ) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SodeSystem {
    dim: usize,
    coeffs: Vec<ScalarField>,
    homog2: bool,
}

impl SodeSystem {
    pub fn new(coeffs: Vec<ScalarField>, homog2: bool) -> Result<SodeSystem> {
        let dim = coeffs.len();
        if dim == 0 {
            return Err(Error::Shape("a system needs at least one coefficient".into()));
        }
        if let Some(bad) = coeffs.iter().find(|f| f.dim() != dim) {
            return Err(Error::Shape(format!(
                "coefficient has dimension {}, system has {dim}",
                bad.dim()
            )));
        }
        Ok(SodeSystem {
            dim,
            coeffs,
            homog2,
        })
    }

    /// Parse the coefficients `G^1..G^n`.
    pub fn parse(srcs: &[&str], homog2: bool) -> Result<SodeSystem> {
        let dim = srcs.len();
        let coeffs = srcs
            .iter()
            .map(|s| ScalarField::parse(s, dim))
            .collect::<Result<Vec<_>, _>>()?;
        SodeSystem::new(coeffs, homog2)
    }

    /// The free system `G ≡ 0`.
    pub fn flat(dim: usize) -> SodeSystem {
        SodeSystem {
            dim,
            coeffs: vec![ScalarField::zero(dim); dim],
            homog2: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[ScalarField] {
        &self.coeffs
    }

    /// Whether the system is declared to be a spray (`G` 2-homogeneous).
    pub fn homog2(&self) -> bool {
        self.homog2
    }

    pub fn values(&self, p: &Point) -> Result<Vec<f64>, EvalError> {
        self.coeffs.iter().map(|g| g.eval(p)).collect()
    }

    pub fn jets(&self, p: &Point) -> Result<Vec<Jet2>, EvalError> {
        self.coeffs.iter().map(|g| g.jet(p)).collect()
    }
}

/// A semi-basic 1-form `θ_i(x, y) dx^i`. Used for both `θ` and `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiBasicOneForm {
    dim: usize,
    comps: Vec<ScalarField>,
}

impl SemiBasicOneForm {
    pub fn new(comps: Vec<ScalarField>) -> Result<SemiBasicOneForm> {
        let dim = comps.len();
        if dim == 0 || comps.iter().any(|c| c.dim() != dim) {
            return Err(Error::Shape(format!(
                "one-form needs {dim} components of dimension {dim}"
            )));
        }
        Ok(SemiBasicOneForm { dim, comps })
    }

    pub fn parse(srcs: &[&str]) -> Result<SemiBasicOneForm> {
        let dim = srcs.len();
        let comps = srcs
            .iter()
            .map(|s| ScalarField::parse(s, dim))
            .collect::<Result<Vec<_>, _>>()?;
        SemiBasicOneForm::new(comps)
    }

    pub fn zero(dim: usize) -> SemiBasicOneForm {
        SemiBasicOneForm {
            dim,
            comps: vec![ScalarField::zero(dim); dim],
        }
    }

    /// `d_J f = (∂f/∂y^i) dx^i`.
    pub fn vertical_differential(f: &ScalarField) -> SemiBasicOneForm {
        SemiBasicOneForm {
            dim: f.dim(),
            comps: (0..f.dim()).map(|i| f.dy(i)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn comps(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(ScalarField::is_zero)
    }

    pub fn jets(&self, p: &Point) -> Result<Vec<Jet2>, EvalError> {
        self.comps.iter().map(|c| c.jet(p)).collect()
    }

    /// `i_S θ = θ_i y^i` as a field.
    pub fn contract_spray(&self) -> ScalarField {
        let terms: Vec<ScalarField> = self
            .comps
            .iter()
            .enumerate()
            .map(|(i, c)| c * &ScalarField::y(self.dim, i))
            .collect();
        ScalarField::sum(self.dim, &terms)
    }
}

/// Dense `n×n×n` array indexed `[(i, j, k)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Tensor3 {
        Tensor3 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Tensor3 {
        let mut t = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t[(i, j, k)] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[(i * self.n + j) * self.n + k]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        &mut self.data[(i * self.n + j) * self.n + k]
    }
}

/// Everything derived from the spray at one point.
///
/// Index conventions: `n[(i, j)] = N^i_j`, `gamma[(i, j, k)] = Γ^i_jk`,
/// `phi[(i, j)] = R^i_j`, `curv[(i, j, k)] = R^i_jk`.
#[derive(Debug, Clone)]
pub struct GeometryJet {
    pub point: Point,
    pub g_jets: Vec<Jet2>,
    /// `G^i` at the point.
    pub g: Vec<f64>,
    pub n: DMatrix<f64>,
    pub gamma: Tensor3,
    /// `∂N^i_j/∂x^k`.
    pub dn_dx: Tensor3,
    pub phi: DMatrix<f64>,
    pub curv: Tensor3,
}

pub fn geometry_at(sode: &SodeSystem, p: &Point) -> Result<GeometryJet, EvalError> {
    let jets = sode.jets(p)?;
    Ok(GeometryJet::from_jets(p.clone(), jets))
}

impl GeometryJet {
    pub fn from_jets(point: Point, g_jets: Vec<Jet2>) -> GeometryJet {
        let dim = g_jets.len();
        let y = &point.y;
        let g: Vec<f64> = g_jets.iter().map(Jet2::value).collect();
        let n = DMatrix::from_fn(dim, dim, |i, j| g_jets[i].dy(j));
        let gamma = Tensor3::from_fn(dim, |i, j, k| g_jets[i].dydy(j, k));
        let dn_dx = Tensor3::from_fn(dim, |i, j, k| g_jets[i].dxdy(k, j));

        let mut phi = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut s_n = 0.0;
                for k in 0..dim {
                    s_n += y[k] * dn_dx[(i, j, k)] - 2.0 * g[k] * gamma[(i, j, k)];
                }
                let nn: f64 = (0..dim).map(|r| n[(i, r)] * n[(r, j)]).sum();
                phi[(i, j)] = 2.0 * g_jets[i].dx(j) - s_n - nn;
            }
        }

        // δN^i_j/δx^k
        let dn_h = Tensor3::from_fn(dim, |i, j, k| {
            let corr: f64 = (0..dim).map(|l| n[(l, k)] * gamma[(i, j, l)]).sum();
            dn_dx[(i, j, k)] - corr
        });
        let mut curv = Tensor3::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in (j + 1)..dim {
                    let r = dn_h[(i, j, k)] - dn_h[(i, k, j)];
                    curv[(i, j, k)] = r;
                    curv[(i, k, j)] = -r;
                }
            }
        }

        GeometryJet {
            point,
            g_jets,
            g,
            n,
            gamma,
            dn_dx,
            phi,
            curv,
        }
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// `S(f)` from the jet of `f`.
    pub fn spray(&self, f: &Jet2) -> f64 {
        let y = &self.point.y;
        (0..self.dim())
            .map(|i| y[i] * f.dx(i) - 2.0 * self.g[i] * f.dy(i))
            .sum()
    }

    /// `S(∂f/∂y^a)` from the jet of `f`.
    pub fn spray_of_dy(&self, f: &Jet2, a: usize) -> f64 {
        let y = &self.point.y;
        (0..self.dim())
            .map(|m| y[m] * f.dxdy(m, a) - 2.0 * self.g[m] * f.dydy(m, a))
            .sum()
    }

    /// `δf/δx^k = ∂f/∂x^k − N^l_k ∂f/∂y^l`.
    pub fn horizontal(&self, f: &Jet2, k: usize) -> f64 {
        let corr: f64 = (0..self.dim()).map(|l| self.n[(l, k)] * f.dy(l)).sum();
        f.dx(k) - corr
    }

    /// `δ(∂f/∂y^a)/δx^k`.
    pub fn horizontal_of_dy(&self, f: &Jet2, a: usize, k: usize) -> f64 {
        let corr: f64 = (0..self.dim())
            .map(|l| self.n[(l, k)] * f.dydy(a, l))
            .sum();
        f.dxdy(k, a) - corr
    }

    /// `∇a_i = S(a_i) − a_k N^k_i` given `a` and `S(a)`.
    pub fn nabla_form(&self, a: &[f64], s_a: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let corr: f64 = (0..self.dim()).map(|k| a[k] * self.n[(k, i)]).sum();
                s_a[i] - corr
            })
            .collect()
    }

    /// `∇A_ij = S(A_ij) − A_kj N^k_i − A_ik N^k_j` given `A` and `S(A)`.
    pub fn nabla_02_from(&self, a: &DMatrix<f64>, s_a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = &self.n;
        let dim = self.dim();
        DMatrix::from_fn(dim, dim, |i, j| {
            let mut v = s_a[(i, j)];
            for k in 0..dim {
                v -= a[(k, j)] * n[(k, i)] + a[(i, k)] * n[(k, j)];
            }
            v
        })
    }
}

/// `S(f)` at `p`.
pub fn spray_apply(sode: &SodeSystem, f: &ScalarField, p: &Point) -> Result<f64, EvalError> {
    let geo = geometry_at(sode, p)?;
    Ok(geo.spray(&f.jet(p)?))
}

/// `δf/δx^i` at `p` for `i = 1..n`.
pub fn horizontal_derivative(
    sode: &SodeSystem,
    f: &ScalarField,
    p: &Point,
) -> Result<Vec<f64>, EvalError> {
    let geo = geometry_at(sode, p)?;
    let j = f.jet(p)?;
    Ok((0..sode.dim()).map(|k| geo.horizontal(&j, k)).collect())
}

pub fn nabla_oneform(
    sode: &SodeSystem,
    a: &SemiBasicOneForm,
    p: &Point,
) -> Result<Vec<f64>, EvalError> {
    let geo = geometry_at(sode, p)?;
    let jets = a.jets(p)?;
    let vals: Vec<f64> = jets.iter().map(Jet2::value).collect();
    let s: Vec<f64> = jets.iter().map(|j| geo.spray(j)).collect();
    Ok(geo.nabla_form(&vals, &s))
}

/// `∇A` for a matrix of fields `a[i][j] = A_ij`.
pub fn nabla_02(
    sode: &SodeSystem,
    a: &[Vec<ScalarField>],
    p: &Point,
) -> Result<DMatrix<f64>, EvalError> {
    let dim = sode.dim();
    let geo = geometry_at(sode, p)?;
    let mut vals = DMatrix::zeros(dim, dim);
    let mut s = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let jet = a[i][j].jet(p)?;
            vals[(i, j)] = jet.value();
            s[(i, j)] = geo.spray(&jet);
        }
    }
    Ok(geo.nabla_02_from(&vals, &s))
}

/// The multiplier `g_ij = ∂θ_i/∂y^j` of a semi-basic form and its fibre
/// derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    pub g: DMatrix<f64>,
    /// `dg[(i, j, k)] = ∂g_ij/∂y^k`.
    pub dg: Tensor3,
}

impl Multiplier {
    pub fn from_jets(theta: &[Jet2]) -> Multiplier {
        let dim = theta.len();
        Multiplier {
            g: DMatrix::from_fn(dim, dim, |i, j| theta[i].dy(j)),
            dg: Tensor3::from_fn(dim, |i, j, k| theta[i].dydy(j, k)),
        }
    }

    /// `∇g` at the geometry's point, from the jets of `θ`.
    pub fn nabla(&self, geo: &GeometryJet, theta: &[Jet2]) -> DMatrix<f64> {
        let dim = theta.len();
        let s = DMatrix::from_fn(dim, dim, |i, j| geo.spray_of_dy(&theta[i], j));
        geo.nabla_02_from(&self.g, &s)
    }
}

pub fn multiplier_of(theta: &SemiBasicOneForm, p: &Point) -> Result<Multiplier, EvalError> {
    Ok(Multiplier::from_jets(&theta.jets(p)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> SodeSystem {
        SodeSystem::parse(&["((y1)^2 + (y2)^2)/2", "2*y1*y2"], true).unwrap()
    }

    fn at(x: [f64; 2], y: [f64; 2]) -> Point {
        Point::new(x.to_vec(), y.to_vec())
    }

    fn assert_mat(m: &DMatrix<f64>, want: &[&[f64]], tol: f64) {
        for (i, row) in want.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                assert!((m[(i, j)] - w).abs() <= tol, "[{i},{j}] {} vs {w}", m[(i, j)]);
            }
        }
    }

    #[test]
    fn ex1_connection_and_jacobi_endomorphism() {
        let geo = geometry_at(&ex1(), &at([0.4, -0.9], [1.0, 2.0])).unwrap();
        assert_mat(&geo.n, &[&[1.0, 2.0], &[4.0, 2.0]], 0.0);
        assert_mat(&geo.phi, &[&[-4.0, 2.0], &[4.0, -2.0]], 1e-12);
    }

    #[test]
    fn flat_spray_has_no_geometry() {
        let p = Point::new(vec![0.1, 0.2, 0.3], vec![1.0, -2.0, 0.5]);
        let geo = geometry_at(&SodeSystem::flat(3), &p).unwrap();
        assert_eq!(geo.n.amax(), 0.0);
        assert_eq!(geo.gamma.max_abs(), 0.0);
        assert_eq!(geo.phi.amax(), 0.0);
        assert_eq!(geo.curv.max_abs(), 0.0);
    }

    #[test]
    fn spray_and_horizontal_derivatives() {
        let s = ex1();
        let p = at([0.3, 0.7], [1.0, 2.0]);
        let theta1 = ScalarField::parse("2*y1", 2).unwrap();
        assert_eq!(spray_apply(&s, &theta1, &p).unwrap(), -10.0);
        assert_eq!(spray_apply(&s, &ScalarField::constant(2, 3.0), &p).unwrap(), 0.0);
        assert_eq!(spray_apply(&s, &ScalarField::x(2, 0), &p).unwrap(), 1.0);
        let l = ScalarField::parse("(2*(y1)^2 + (y2)^2)/2", 2).unwrap();
        let h = horizontal_derivative(&s, &l, &p).unwrap();
        assert_eq!(h[0], -10.0);
        let flat = SodeSystem::flat(2);
        let f = ScalarField::parse("x1^2*y2 + sin(x2)", 2).unwrap();
        let h = horizontal_derivative(&flat, &f, &p).unwrap();
        assert_eq!(h, vec![2.0 * 0.3 * 2.0, 0.7f64.cos()]);
    }

    #[test]
    fn nabla_of_constant_multiplier_on_ex1() {
        let s = ex1();
        let p = at([0.0, 0.0], [0.6, -1.3]);
        let c = |v: f64| ScalarField::constant(2, v);
        let g = vec![vec![c(2.0), c(0.0)], vec![c(0.0), c(1.0)]];
        let ng = nabla_02(&s, &g, &p).unwrap();
        let (y1, y2) = (0.6, -1.3);
        assert_mat(
            &ng,
            &[&[-4.0 * y1, -4.0 * y2], &[-4.0 * y2, -4.0 * y1]],
            1e-14,
        );
        let theta = SemiBasicOneForm::parse(&["2*y1", "y2"]).unwrap();
        let jets = theta.jets(&p).unwrap();
        let geo = geometry_at(&s, &p).unwrap();
        let m = Multiplier::from_jets(&jets);
        assert_eq!(m.nabla(&geo, &jets), ng);
        assert_eq!(m.dg.max_abs(), 0.0);
    }

    #[test]
    fn nabla_on_one_forms() {
        let s = ex1();
        let p = at([0.0, 0.0], [1.0, 2.0]);
        let a = SemiBasicOneForm::parse(&["1", "0"]).unwrap();
        // ∇a_i = −N^1_i
        assert_eq!(nabla_oneform(&s, &a, &p).unwrap(), vec![-1.0, -2.0]);
    }

    #[test]
    fn curvature_is_antisymmetric() {
        let s = SodeSystem::parse(
            &["x2*y1*y2 + x3^2*y3", "sin(x1)*y2^2 + y1*y3", "x1*x2*y1^2 - y3"],
            false,
        )
        .unwrap();
        let p = Point::new(vec![0.3, -0.5, 0.8], vec![1.1, 0.4, -0.7]);
        let geo = geometry_at(&s, &p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert_eq!(geo.curv[(i, j, k)], -geo.curv[(i, k, j)]);
                }
            }
        }
        assert!(geo.curv.max_abs() > 0.0);
    }

    #[test]
    fn curvature_is_the_vertical_curl_of_the_jacobi_endomorphism() {
        // 3R^i_jk = ∂R^i_k/∂y^j − ∂R^i_j/∂y^k, the local form of 3R = [J, Φ].
        let s = SodeSystem::parse(
            &["x2*y1*y2 + x3^2*y3^2 + x1", "sin(x1)*y2^2 + y1*y3*x3", "x1*x2*y1^2 - y3*y2"],
            false,
        )
        .unwrap();
        let p = Point::new(vec![0.3, -0.5, 0.8], vec![1.1, 0.4, -0.7]);
        let geo = geometry_at(&s, &p).unwrap();
        let h = 1e-5;
        let dphi = |k: usize| {
            let mut a = p.clone();
            let mut b = p.clone();
            a.y[k] += h;
            b.y[k] -= h;
            let pa = geometry_at(&s, &a).unwrap().phi;
            let pb = geometry_at(&s, &b).unwrap().phi;
            (pa - pb) / (2.0 * h)
        };
        let d: Vec<_> = (0..3).map(dphi).collect();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let rhs = d[j][(i, k)] - d[k][(i, j)];
                    let lhs = 3.0 * geo.curv[(i, j, k)];
                    assert!((lhs - rhs).abs() < 1e-6, "{i}{j}{k}: {lhs} vs {rhs}");
                }
            }
        }
    }

    #[test]
    fn shape_errors() {
        let f1 = ScalarField::parse("y1", 1).unwrap();
        let f2 = ScalarField::parse("y1", 2).unwrap();
        assert!(SodeSystem::new(vec![f1.clone(), f2], false).is_err());
        assert!(SodeSystem::new(vec![], false).is_err());
        assert!(SemiBasicOneForm::new(vec![f1.clone(), f1]).is_err());
    }
}
