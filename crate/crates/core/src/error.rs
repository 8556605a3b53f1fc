use thiserror::Error;

use crate::expr::Point;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("variable {var} at {pos} exceeds dimension {dim}")]
    Dimension { var: String, pos: usize, dim: usize },
    #[error("unsupported function `{name}` at {pos}")]
    UnsupportedFunction { name: String, pos: usize },
}

/// A non-finite value or an out-of-domain argument met while evaluating.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("evaluation failed in `{subexpr}`: {msg}")]
pub struct EvalError {
    pub subexpr: String,
    pub msg: String,
}

impl EvalError {
    pub fn new(subexpr: impl ToString, msg: impl Into<String>) -> Self {
        EvalError {
            subexpr: subexpr.to_string(),
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("integration blew up at t = {time}; last finite state x = {:?}, y = {:?}", .last.x, .last.y)]
pub struct BlowupError {
    pub time: f64,
    pub last: Point,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Blowup(#[from] BlowupError),
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("form is not closed: residual {residual:.3e} ({what})")]
    Closedness { what: String, residual: f64 },
    #[error("cannot reconstruct: {0}")]
    NotReconstructible(String),
    #[error("missing section: {0}")]
    MissingSection(String),
    #[error("invalid problem file: {0}")]
    Problem(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
