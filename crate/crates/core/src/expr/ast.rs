use std::fmt;
use std::sync::Arc;

/// A coordinate on the tangent space: a base coordinate `x<k>` or a fibre
/// coordinate `y<k>`. Indices are zero-based internally and one-based in text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X(usize),
    Y(usize),
}

impl Var {
    pub fn index(self) -> usize {
        match self {
            Var::X(i) | Var::Y(i) => i,
        }
    }

    /// Position of this variable in the flat `(x1..xn, y1..yn)` ordering.
    pub fn slot(self, dim: usize) -> usize {
        match self {
            Var::X(i) => i,
            Var::Y(i) => dim + i,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::Y(i) => write!(f, "y{}", i + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    /// Value, first and second derivative of the function at `u`.
    pub(crate) fn eval2(self, u: f64) -> (f64, f64, f64) {
        match self {
            Func::Sqrt => {
                let s = u.sqrt();
                (s, 0.5 / s, -0.25 / (s * u))
            }
            Func::Sin => (u.sin(), u.cos(), -u.sin()),
            Func::Cos => (u.cos(), -u.sin(), -u.cos()),
            Func::Exp => {
                let e = u.exp();
                (e, e, e)
            }
            Func::Log => (u.ln(), 1.0 / u, -1.0 / (u * u)),
        }
    }

    pub(crate) fn eval(self, u: f64) -> f64 {
        match self {
            Func::Sqrt => u.sqrt(),
            Func::Sin => u.sin(),
            Func::Cos => u.cos(),
            Func::Exp => u.exp(),
            Func::Log => u.ln(),
        }
    }

    /// Whether `u` lies in the open domain where the function is twice
    /// differentiable.
    pub(crate) fn in_domain(self, u: f64) -> bool {
        match self {
            Func::Sqrt | Func::Log => u > 0.0,
            _ => true,
        }
    }
}

/// Expression tree. Children are shared so derived expressions (partial
/// derivatives, assembled Lagrangians) can reuse subtrees.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
}

impl Expr {
    /// The exponent as an integer when it is a (possibly negated) integral
    /// literal. Such powers use the integer power rule and accept any base.
    pub(crate) fn integer_literal(&self) -> Option<i32> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Neg(inner) => match inner.as_ref() {
                Expr::Num(v) => -*v,
                _ => return None,
            },
            _ => return None,
        };
        if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 {
            Some(v as i32)
        } else {
            None
        }
    }

    pub(crate) fn as_constant(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn visit_vars(&self, f: &mut impl FnMut(Var)) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Neg(a) | Expr::Call(_, a) => a.visit_vars(f),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }
}

/// Fully parenthesised rendering; parsing the output reproduces the tree's
/// evaluation bit for bit (literals use the shortest round-trip form).
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "(-{:?})", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
