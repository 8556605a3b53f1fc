use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::ast::{Expr, Func, Var};
use super::jet::Jet2;
use super::parse::parse;
use super::Point;
use crate::error::{EvalError, ParseError};

/// A scalar function of `(x, y)` on an `n`-dimensional configuration space.
///
/// Fields are immutable; cloning shares the expression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dim: usize,
    expr: Arc<Expr>,
}

/// Parse `src` as a field over `x1..x<dim>, y1..y<dim>`.
pub fn parse_scalar_field(src: &str, dim: usize) -> Result<ScalarField, ParseError> {
    ScalarField::parse(src, dim)
}

impl ScalarField {
    pub fn parse(src: &str, dim: usize) -> Result<ScalarField, ParseError> {
        if dim == 0 {
            return Err(ParseError::Syntax {
                pos: 0,
                msg: "dimension must be at least 1".into(),
            });
        }
        Ok(ScalarField {
            dim,
            expr: Arc::new(parse(src, dim)?),
        })
    }

    pub(crate) fn from_expr(dim: usize, expr: Arc<Expr>) -> ScalarField {
        ScalarField { dim, expr }
    }

    pub fn constant(dim: usize, v: f64) -> ScalarField {
        ScalarField::from_expr(dim, Arc::new(Expr::Num(v)))
    }

    pub fn zero(dim: usize) -> ScalarField {
        ScalarField::constant(dim, 0.0)
    }

    pub fn var(dim: usize, v: Var) -> ScalarField {
        assert!(v.index() < dim, "variable {v} out of range for dimension {dim}");
        ScalarField::from_expr(dim, Arc::new(Expr::Var(v)))
    }

    pub fn x(dim: usize, i: usize) -> ScalarField {
        ScalarField::var(dim, Var::X(i))
    }

    pub fn y(dim: usize, i: usize) -> ScalarField {
        ScalarField::var(dim, Var::Y(i))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self.expr, Expr::Num(v) if v == 0.0)
    }

    pub fn depends_on_y(&self) -> bool {
        let mut found = false;
        self.expr.visit_vars(&mut |v| found |= matches!(v, Var::Y(_)));
        found
    }

    pub fn eval(&self, p: &Point) -> Result<f64, EvalError> {
        check_point(self.dim, p)?;
        value(&self.expr, p)
    }

    /// Value with all first and second partials at `p`.
    pub fn jet(&self, p: &Point) -> Result<Jet2, EvalError> {
        check_point(self.dim, p)?;
        jet(&self.expr, self.dim, p)
    }

    /// `C(f) − deg·f` at `p`, where `C(f) = y^i ∂f/∂y^i`.
    pub fn euler_residual(&self, p: &Point, deg: f64) -> Result<f64, EvalError> {
        let j = self.jet(p)?;
        Ok(j.euler(&p.y) - deg * j.value())
    }

    /// Symbolic partial derivative with respect to `v`.
    pub fn partial(&self, v: Var) -> ScalarField {
        ScalarField::from_expr(self.dim, derive(&self.expr, v))
    }

    pub fn dx(&self, i: usize) -> ScalarField {
        self.partial(Var::X(i))
    }

    pub fn dy(&self, i: usize) -> ScalarField {
        self.partial(Var::Y(i))
    }

    pub fn call(&self, func: Func) -> ScalarField {
        ScalarField::from_expr(self.dim, Arc::new(Expr::Call(func, self.expr.clone())))
    }

    pub fn scale(&self, k: f64) -> ScalarField {
        &ScalarField::constant(self.dim, k) * self
    }

    pub fn div(&self, rhs: &ScalarField) -> ScalarField {
        ScalarField::from_expr(self.dim, mk_div(self.expr.clone(), rhs.expr.clone()))
    }

    pub fn powi(&self, k: i32) -> ScalarField {
        ScalarField::from_expr(
            self.dim,
            Arc::new(Expr::Pow(self.expr.clone(), Arc::new(Expr::Num(k as f64)))),
        )
    }

    /// Sum of fields; the empty sum is zero.
    pub fn sum<'a>(dim: usize, items: impl IntoIterator<Item = &'a ScalarField>) -> ScalarField {
        items
            .into_iter()
            .fold(ScalarField::zero(dim), |acc, f| &acc + f)
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        ScalarField::from_expr(self.dim, mk_add(self.expr.clone(), rhs.expr.clone()))
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        ScalarField::from_expr(self.dim, mk_sub(self.expr.clone(), rhs.expr.clone()))
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        ScalarField::from_expr(self.dim, mk_mul(self.expr.clone(), rhs.expr.clone()))
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        ScalarField::from_expr(self.dim, mk_neg(self.expr.clone()))
    }
}

fn check_point(dim: usize, p: &Point) -> Result<(), EvalError> {
    if p.x.len() != dim || p.y.len() != dim {
        return Err(EvalError::new(
            "<point>",
            format!(
                "point has dimension ({}, {}), field expects {dim}",
                p.x.len(),
                p.y.len()
            ),
        ));
    }
    Ok(())
}

fn coord(p: &Point, v: Var) -> f64 {
    match v {
        Var::X(i) => p.x[i],
        Var::Y(i) => p.y[i],
    }
}

fn finite(e: &Expr, v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::new(e, format!("non-finite value {v}")))
    }
}

fn value(e: &Expr, p: &Point) -> Result<f64, EvalError> {
    let v = match e {
        Expr::Num(v) => *v,
        Expr::Var(v) => coord(p, *v),
        Expr::Neg(a) => -value(a, p)?,
        Expr::Add(a, b) => value(a, p)? + value(b, p)?,
        Expr::Sub(a, b) => value(a, p)? - value(b, p)?,
        Expr::Mul(a, b) => value(a, p)? * value(b, p)?,
        Expr::Div(a, b) => {
            let d = value(b, p)?;
            if d == 0.0 {
                return Err(EvalError::new(e, "division by zero"));
            }
            value(a, p)? / d
        }
        Expr::Pow(b, x) => {
            let base = value(b, p)?;
            match x.integer_literal() {
                Some(k) => base.powi(k),
                None => {
                    if base <= 0.0 {
                        return Err(EvalError::new(e, "real power of a non-positive base"));
                    }
                    (value(x, p)? * base.ln()).exp()
                }
            }
        }
        Expr::Call(f, a) => {
            let u = value(a, p)?;
            if !f.in_domain(u) {
                return Err(EvalError::new(e, format!("argument {u} outside domain")));
            }
            f.eval(u)
        }
    };
    finite(e, v)
}

fn jet(e: &Expr, dim: usize, p: &Point) -> Result<Jet2, EvalError> {
    let j = match e {
        Expr::Num(v) => Jet2::constant(dim, *v),
        Expr::Var(v) => Jet2::variable(dim, *v, coord(p, *v)),
        Expr::Neg(a) => -&jet(a, dim, p)?,
        Expr::Add(a, b) => &jet(a, dim, p)? + &jet(b, dim, p)?,
        Expr::Sub(a, b) => &jet(a, dim, p)? - &jet(b, dim, p)?,
        Expr::Mul(a, b) => &jet(a, dim, p)? * &jet(b, dim, p)?,
        Expr::Div(a, b) => {
            let d = jet(b, dim, p)?;
            if d.value() == 0.0 {
                return Err(EvalError::new(e, "division by zero"));
            }
            &jet(a, dim, p)? * &d.recip()
        }
        Expr::Pow(b, x) => {
            let base = jet(b, dim, p)?;
            match x.integer_literal() {
                Some(k) => base.powi(k),
                None => {
                    if base.value() <= 0.0 {
                        return Err(EvalError::new(e, "real power of a non-positive base"));
                    }
                    let u = base.value();
                    let log_base = base.chain(u.ln(), 1.0 / u, -1.0 / (u * u));
                    let t = &jet(x, dim, p)? * &log_base;
                    let ev = t.value().exp();
                    t.chain(ev, ev, ev)
                }
            }
        }
        Expr::Call(f, a) => {
            let u = jet(a, dim, p)?;
            if !f.in_domain(u.value()) {
                return Err(EvalError::new(
                    e,
                    format!("argument {} outside domain", u.value()),
                ));
            }
            let (f0, f1, f2) = f.eval2(u.value());
            u.chain(f0, f1, f2)
        }
    };
    if j.is_finite() {
        Ok(j)
    } else {
        Err(EvalError::new(e, "non-finite value or derivative"))
    }
}

fn num(v: f64) -> Arc<Expr> {
    Arc::new(Expr::Num(v))
}

pub(crate) fn mk_add(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => num(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Arc::new(Expr::Add(a, b)),
    }
}

pub(crate) fn mk_sub(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => num(x - y),
        (Some(x), _) if x == 0.0 => mk_neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Arc::new(Expr::Sub(a, b)),
    }
}

pub(crate) fn mk_mul(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Arc::new(Expr::Mul(a, b)),
    }
}

pub(crate) fn mk_div(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), _) if x == 0.0 => num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Arc::new(Expr::Div(a, b)),
    }
}

pub(crate) fn mk_neg(a: Arc<Expr>) -> Arc<Expr> {
    match a.as_constant() {
        Some(x) => num(-x),
        None => Arc::new(Expr::Neg(a)),
    }
}

fn derive(e: &Expr, v: Var) -> Arc<Expr> {
    match e {
        Expr::Num(_) => num(0.0),
        Expr::Var(w) => num(if *w == v { 1.0 } else { 0.0 }),
        Expr::Neg(a) => mk_neg(derive(a, v)),
        Expr::Add(a, b) => mk_add(derive(a, v), derive(b, v)),
        Expr::Sub(a, b) => mk_sub(derive(a, v), derive(b, v)),
        Expr::Mul(a, b) => mk_add(
            mk_mul(derive(a, v), b.clone()),
            mk_mul(a.clone(), derive(b, v)),
        ),
        Expr::Div(a, b) => {
            let num_part = mk_sub(
                mk_mul(derive(a, v), b.clone()),
                mk_mul(a.clone(), derive(b, v)),
            );
            mk_div(num_part, mk_mul(b.clone(), b.clone()))
        }
        Expr::Pow(b, x) => match x.integer_literal() {
            Some(0) => num(0.0),
            Some(k) => {
                let lowered = if k == 1 {
                    num(1.0)
                } else {
                    Arc::new(Expr::Pow(b.clone(), num((k - 1) as f64)))
                };
                mk_mul(mk_mul(num(k as f64), lowered), derive(b, v))
            }
            None => {
                let whole = Arc::new(e.clone());
                let log_b = Arc::new(Expr::Call(Func::Log, b.clone()));
                let inner = mk_add(
                    mk_mul(derive(x, v), log_b),
                    mk_div(mk_mul(x.clone(), derive(b, v)), b.clone()),
                );
                mk_mul(whole, inner)
            }
        },
        Expr::Call(f, a) => {
            let da = derive(a, v);
            if da.as_constant() == Some(0.0) {
                return num(0.0);
            }
            let outer = match f {
                Func::Sqrt => mk_div(
                    num(0.5),
                    Arc::new(Expr::Call(Func::Sqrt, a.clone())),
                ),
                Func::Sin => Arc::new(Expr::Call(Func::Cos, a.clone())),
                Func::Cos => mk_neg(Arc::new(Expr::Call(Func::Sin, a.clone()))),
                Func::Exp => Arc::new(Expr::Call(Func::Exp, a.clone())),
                Func::Log => mk_div(num(1.0), a.clone()),
            };
            mk_mul(outer, da)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: &[f64], y: &[f64]) -> Point {
        Point::new(x.to_vec(), y.to_vec())
    }

    #[test]
    fn ex1_second_spray_coefficient() {
        let f = ScalarField::parse("2*y1*y2", 2).unwrap();
        let j = f.jet(&pt(&[0.3, -0.2], &[1.0, 2.0])).unwrap();
        assert_eq!(j.value(), 4.0);
        assert_eq!((j.dy(0), j.dy(1)), (4.0, 2.0));
        assert_eq!(
            [j.dydy(0, 0), j.dydy(0, 1), j.dydy(1, 0), j.dydy(1, 1)],
            [0.0, 2.0, 2.0, 0.0]
        );
    }

    #[test]
    fn ex1_first_coefficient_parses() {
        let f = ScalarField::parse("((y1)^2 + (y2)^2)/2", 2).unwrap();
        assert_eq!(f.eval(&pt(&[0.0, 0.0], &[1.0, 2.0])).unwrap(), 2.5);
    }

    #[test]
    fn zero_field() {
        let f = ScalarField::parse("0", 3).unwrap();
        let j = f.jet(&pt(&[1.0, 2.0, 3.0], &[-1.0, 0.5, 2.0])).unwrap();
        assert_eq!(j, Jet2::zero(3));
    }

    #[test]
    fn linear_coordinate() {
        let f = ScalarField::parse("x1", 3).unwrap();
        let p = pt(&[0.7, 2.0, 3.0], &[-1.0, 0.5, 2.0]);
        let j = f.jet(&p).unwrap();
        let mut want = Jet2::variable(3, Var::X(0), 0.7);
        assert_eq!(j, want.clone());
        want = want.scale(2.0);
        assert_ne!(j, want);
    }

    #[test]
    fn euclidean_norm_gradient() {
        let f = ScalarField::parse("sqrt((y1)^2+(y2)^2)", 2).unwrap();
        let j = f.jet(&pt(&[0.0, 0.0], &[3.0, 4.0])).unwrap();
        assert!((j.value() - 5.0).abs() < 1e-15);
        assert!((j.dy(0) - 0.6).abs() < 1e-15);
        assert!((j.dy(1) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            ScalarField::parse("y1*y3", 2),
            Err(ParseError::Dimension { .. })
        ));
        assert!(matches!(
            ScalarField::parse("abs(y1)", 2),
            Err(ParseError::UnsupportedFunction { .. })
        ));
        assert!(matches!(
            ScalarField::parse("y1 +", 2),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            ScalarField::parse("z1", 2),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            ScalarField::parse("(y1", 2),
            Err(ParseError::Syntax { .. })
        ));
        assert!(ScalarField::parse("", 2).is_err());
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let f = ScalarField::parse("1 + log(y1 - 1)", 1).unwrap();
        let err = f.eval(&pt(&[0.0], &[1.0])).unwrap_err();
        assert!(err.subexpr.contains("log"), "{err}");
        assert!(f.jet(&pt(&[0.0], &[1.0])).is_err());
        let g = ScalarField::parse("y1^0.5", 1).unwrap();
        assert!(g.jet(&pt(&[0.0], &[-1.0])).is_err());
        assert!(g.jet(&pt(&[0.0], &[4.0])).is_ok());
        let h = ScalarField::parse("1/y1", 1).unwrap();
        assert!(h.eval(&pt(&[0.0], &[0.0])).is_err());
    }

    #[test]
    fn precedence() {
        let p = pt(&[2.0], &[3.0]);
        let cases = [
            ("-y1^2", -9.0),
            ("2^-1", 0.5),
            ("2^3^2", 512.0),
            ("x1 - y1 - 1", -2.0),
            ("x1 / y1 * 3", 2.0),
            ("1.5e1 + .5", 15.5),
            ("(-y1)^3", -27.0),
        ];
        for (src, want) in cases {
            let f = ScalarField::parse(src, 1).unwrap();
            let got = f.eval(&p).unwrap();
            assert!((got - want).abs() <= 1e-13 * want.abs(), "{src}: {got}");
        }
    }

    #[test]
    fn euler_residuals() {
        let p = pt(&[0.4, -0.3], &[1.0, 1.0]);
        let two_g1 = ScalarField::parse("(y1)^2+(y2)^2", 2).unwrap();
        assert_eq!(two_g1.euler_residual(&p, 2.0).unwrap(), 0.0);
        let cubic = ScalarField::parse("y1*y2*y2", 2).unwrap();
        assert_eq!(cubic.euler_residual(&p, 2.0).unwrap(), 1.0);
        let lin = ScalarField::parse("x1*y1", 2).unwrap();
        assert_eq!(lin.euler_residual(&p, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn symbolic_partial_matches_jet() {
        let f = ScalarField::parse("sin(x1*y2) + y1^3/(1 + x2^2) + exp(y1)*sqrt(2 + y2^2)", 2)
            .unwrap();
        let p = pt(&[0.3, -0.7], &[0.9, 1.4]);
        let j = f.jet(&p).unwrap();
        for (k, v) in [Var::X(0), Var::X(1), Var::Y(0), Var::Y(1)].into_iter().enumerate() {
            let d = f.partial(v).eval(&p).unwrap();
            assert!((d - j.d(v)).abs() < 1e-13, "slot {k}");
        }
        let dyy = f.dy(0).dy(1).eval(&p).unwrap();
        assert!((dyy - j.dydy(0, 1)).abs() < 1e-13);
    }

    #[test]
    fn display_round_trips() {
        let f = ScalarField::parse("-(y1 - 2.5e-3)^2 * x1 / 3 + cos(-x1)^-2 + y1^1.5", 1).unwrap();
        let g = ScalarField::parse(&f.to_string(), 1).unwrap();
        let p = pt(&[0.25], &[1.75]);
        assert_eq!(f.jet(&p).unwrap(), g.jet(&p).unwrap());
    }
}
