//! Sparse polynomials in `(x, y)`, used where exact integration in the fibre
//! variables is needed (reconstructing `L` and `𝒟` from polynomial data).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::ast::{Expr, Var};
use super::field::ScalarField;

/// Exponents over the flat `(x1..xn, y1..yn)` ordering.
pub type Exponents = Vec<u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<Exponents, f64>,
}

impl Poly {
    pub fn zero(dim: usize) -> Poly {
        Poly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Poly {
        Poly::monomial(dim, vec![0; 2 * dim], c)
    }

    pub fn monomial(dim: usize, exps: Exponents, c: f64) -> Poly {
        assert_eq!(exps.len(), 2 * dim);
        let mut p = Poly::zero(dim);
        if c != 0.0 {
            p.terms.insert(exps, c);
        }
        p
    }

    pub fn var(dim: usize, v: Var) -> Poly {
        let mut e = vec![0; 2 * dim];
        e[v.slot(dim)] = 1;
        Poly::monomial(dim, e, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Interpret a field as a polynomial, if it is one syntactically:
    /// sums, products, non-negative integer powers and division by constants.
    pub fn from_field(f: &ScalarField) -> Option<Poly> {
        from_expr(f.expr(), f.dim())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn scale(&self, k: f64) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), k * c);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    fn add_term(&mut self, e: Exponents, c: f64) {
        let slot = self.terms.entry(e.clone()).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn partial(&self, v: Var) -> Poly {
        let s = v.slot(self.dim);
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            if e[s] > 0 {
                let mut e2 = e.clone();
                e2[s] -= 1;
                out.add_term(e2, c * e[s] as f64);
            }
        }
        out
    }

    pub fn y_degree(&self, e: &Exponents) -> u32 {
        e[self.dim..].iter().sum()
    }

    /// Largest total degree in `y` over all terms.
    pub fn max_y_degree(&self) -> u32 {
        self.terms.keys().map(|e| self.y_degree(e)).max().unwrap_or(0)
    }

    /// Remove the terms that do not involve `y`.
    pub fn drop_pure_x(&self) -> Poly {
        let mut out = self.clone();
        out.terms.retain(|e, _| e[self.dim..].iter().any(|&k| k > 0));
        out
    }

    /// Drop coefficients smaller than `eps` times the largest one.
    pub fn chop(&self, eps: f64) -> Poly {
        let scale = self.terms.values().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut out = self.clone();
        out.terms.retain(|_, c| c.abs() > eps * scale);
        out
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let xs = x.iter().zip(&e[..self.dim]);
                let ys = y.iter().zip(&e[self.dim..]);
                c * xs.chain(ys).map(|(v, k)| v.powi(*k as i32)).product::<f64>()
            })
            .sum()
    }

    pub fn to_field(&self) -> ScalarField {
        let dim = self.dim;
        let mut acc: Option<Arc<Expr>> = None;
        for (e, c) in &self.terms {
            let mut term: Option<Arc<Expr>> = None;
            for (slot, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let v = if slot < dim {
                    Var::X(slot)
                } else {
                    Var::Y(slot - dim)
                };
                let mut factor = Arc::new(Expr::Var(v));
                if k > 1 {
                    factor = Arc::new(Expr::Pow(factor, Arc::new(Expr::Num(k as f64))));
                }
                term = Some(match term {
                    None => factor,
                    Some(t) => Arc::new(Expr::Mul(t, factor)),
                });
            }
            let mag = Arc::new(Expr::Num(c.abs()));
            let body = match term {
                None => mag,
                Some(t) if c.abs() == 1.0 => t,
                Some(t) => Arc::new(Expr::Mul(mag, t)),
            };
            acc = Some(match (acc, *c < 0.0) {
                (None, false) => body,
                (None, true) => Arc::new(Expr::Neg(body)),
                (Some(a), false) => Arc::new(Expr::Add(a, body)),
                (Some(a), true) => Arc::new(Expr::Sub(a, body)),
            });
        }
        let expr = acc.unwrap_or_else(|| Arc::new(Expr::Num(0.0)));
        ScalarField::from_expr(dim, expr)
    }
}

/// Human-oriented rendering, e.g. `y1^2 + 0.5*y2^2`. Parses back to the same
/// polynomial.
impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            let mut factors = Vec::new();
            for (slot, &p) in e.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                let name = if slot < self.dim {
                    format!("x{}", slot + 1)
                } else {
                    format!("y{}", slot - self.dim + 1)
                };
                factors.push(if p == 1 { name } else { format!("{name}^{p}") });
            }
            let sign = if *c < 0.0 { "-" } else { "+" };
            match (k, sign) {
                (0, "+") => {}
                (0, _) => write!(f, "-")?,
                _ => write!(f, " {sign} ")?,
            }
            let mag = c.abs();
            if factors.is_empty() {
                write!(f, "{mag:?}")?;
            } else if mag == 1.0 {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{mag:?}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// `P` with `∂P/∂y^i = comps[i]`, by integrating along rays `t ↦ (x, t·y)`:
/// `P = Σ_i ∫₀¹ comps[i](x, t y) y^i dt`. Exact for polynomials; equals a
/// potential whenever the components are `y`-closed. `P(x, 0) = 0`.
pub fn radial_potential(comps: &[Poly]) -> Poly {
    let dim = comps.len();
    let mut out = Poly::zero(dim);
    for (i, c) in comps.iter().enumerate() {
        assert_eq!(c.dim, dim);
        for (e, coef) in &c.terms {
            let k = c.y_degree(e) as f64;
            let mut e2 = e.clone();
            e2[dim + i] += 1;
            out.add_term(e2, coef / (k + 1.0));
        }
    }
    out
}

fn from_expr(e: &Expr, dim: usize) -> Option<Poly> {
    Some(match e {
        Expr::Num(v) => Poly::constant(dim, *v),
        Expr::Var(v) => Poly::var(dim, *v),
        Expr::Neg(a) => from_expr(a, dim)?.scale(-1.0),
        Expr::Add(a, b) => from_expr(a, dim)?.add(&from_expr(b, dim)?),
        Expr::Sub(a, b) => from_expr(a, dim)?.add(&from_expr(b, dim)?.scale(-1.0)),
        Expr::Mul(a, b) => from_expr(a, dim)?.mul(&from_expr(b, dim)?),
        Expr::Div(a, b) => {
            let d = from_expr(b, dim)?;
            let c = match d.terms.len() {
                1 => {
                    let (e, c) = d.terms.iter().next().unwrap();
                    if e.iter().any(|&k| k > 0) {
                        return None;
                    }
                    *c
                }
                _ => return None,
            };
            from_expr(a, dim)?.scale(1.0 / c)
        }
        Expr::Pow(b, x) => {
            let k = x.integer_literal().filter(|k| *k >= 0)?;
            let base = from_expr(b, dim)?;
            let mut acc = Poly::constant(dim, 1.0);
            for _ in 0..k {
                acc = acc.mul(&base);
            }
            acc
        }
        Expr::Call(..) => return None,
    })
}
