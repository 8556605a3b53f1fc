use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::expr::poly::Exponents;
use crate::expr::{Jet2, Point, Poly, ScalarField, Var};
use crate::geometry::SemiBasicOneForm;
use crate::random::exponents_up_to;

/// One basis 1-form: a monomial `x^α y^β` in component `comp`, zero
/// elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisElement {
    pub comp: usize,
    pub exps: Exponents,
    pub label: String,
}

/// Monomial ansatz `θ(c) = Σ_m c_m b^(m)` with `|β| ≤ deg_y`, `|α| ≤ deg_x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnsatzBasis {
    pub dim: usize,
    pub deg_y: u32,
    pub deg_x: u32,
    pub elements: Vec<BasisElement>,
}

impl AnsatzBasis {
    pub fn new(dim: usize, deg_y: u32, deg_x: u32) -> AnsatzBasis {
        let ys = exponents_up_to(dim, deg_y);
        let xs = exponents_up_to(dim, deg_x);
        let mut elements = Vec::new();
        for comp in 0..dim {
            for ye in &ys {
                for xe in &xs {
                    let exps: Exponents = xe.iter().chain(ye).copied().collect();
                    let mono = Poly::monomial(dim, exps.clone(), 1.0);
                    elements.push(BasisElement {
                        comp,
                        label: format!("{mono} dx{}", comp + 1),
                        exps,
                    });
                }
            }
        }
        AnsatzBasis {
            dim,
            deg_y,
            deg_x,
            elements,
        }
    }

    /// A basis with no elements, for degenerate requests.
    pub fn empty(dim: usize) -> AnsatzBasis {
        AnsatzBasis {
            dim,
            deg_y: 0,
            deg_x: 0,
            elements: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Jet of the monomial of element `m` (the only non-zero component).
    pub fn monomial_jet(&self, m: usize, p: &Point) -> Jet2 {
        let e = &self.elements[m].exps;
        let n = self.dim;
        let coords: Vec<f64> = p.x.iter().chain(&p.y).copied().collect();
        let mut jet = Jet2::constant(n, 1.0);
        for (slot, &k) in e.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let var = if slot < n { Var::X(slot) } else { Var::Y(slot - n) };
            jet = &jet * &Jet2::variable(n, var, coords[slot]).powi(k as i32);
        }
        jet
    }

    /// Component polynomials of `θ(c)`.
    pub fn polys(&self, c: &DVector<f64>) -> Vec<Poly> {
        let mut comps = vec![Poly::zero(self.dim); self.dim];
        for (m, el) in self.elements.iter().enumerate() {
            if c[m] != 0.0 {
                comps[el.comp] = comps[el.comp].add(&Poly::monomial(self.dim, el.exps.clone(), c[m]));
            }
        }
        comps
    }

    pub fn form(&self, c: &DVector<f64>) -> SemiBasicOneForm {
        let comps: Vec<ScalarField> = self.polys(c).iter().map(Poly::to_field).collect();
        SemiBasicOneForm::new(comps).expect("components share the basis dimension")
    }

    /// Numerical rank of the matrix of basis values at `points`, one row per
    /// (point, component). Equals `len()` when the elements are independent
    /// as functions on the samples.
    pub fn gram_rank(&self, points: &[Point]) -> usize {
        if self.is_empty() {
            return 0;
        }
        let n = self.dim;
        let rows = points.len() * n;
        let mut m = DMatrix::zeros(rows.max(self.len()), self.len());
        for (s, p) in points.iter().enumerate() {
            for (k, el) in self.elements.iter().enumerate() {
                m[(s * n + el.comp, k)] = self.monomial_jet(k, p).value();
            }
        }
        let sv = m.singular_values();
        let top = sv.max();
        sv.iter().filter(|v| **v > 1e-10 * top).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::SampleDomain;

    #[test]
    fn sizes() {
        assert_eq!(AnsatzBasis::new(2, 1, 0).len(), 6);
        assert_eq!(AnsatzBasis::new(2, 2, 2).len(), 72);
        assert_eq!(AnsatzBasis::new(3, 1, 0).len(), 12);
    }

    #[test]
    fn monomial_jets_match_fields() {
        let b = AnsatzBasis::new(2, 2, 1);
        let p = Point::new(vec![0.3, -0.7], vec![1.2, 0.4]);
        for m in 0..b.len() {
            let mut c = DVector::zeros(b.len());
            c[m] = 1.0;
            let form = b.form(&c);
            let want = form.comps()[b.elements[m].comp].jet(&p).unwrap();
            let got = b.monomial_jet(m, &p);
            let vars: Vec<Var> = (0..2).map(Var::X).chain((0..2).map(Var::Y)).collect();
            assert!((got.value() - want.value()).abs() < 1e-12);
            for &u in &vars {
                assert!((got.d(u) - want.d(u)).abs() < 1e-12, "{}", b.elements[m].label);
                for &v in &vars {
                    assert!((got.dd(u, v) - want.dd(u, v)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn elements_are_independent() {
        let b = AnsatzBasis::new(2, 2, 2);
        let pts = SampleDomain::new(2).with_count(60).points();
        assert_eq!(b.gram_rank(&pts), b.len());
    }
}
