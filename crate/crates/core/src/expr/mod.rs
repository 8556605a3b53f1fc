//! Expression language for fields on the tangent space: parsing, evaluation
//! with exact second-order jets, and symbolic partial derivatives.
//!
//! The accepted grammar is listed in the README.

mod ast;
mod field;
mod jet;
mod parse;
pub mod poly;

use serde::{Deserialize, Serialize};

pub use ast::{Expr, Func, Var};
pub use field::{parse_scalar_field, ScalarField};
pub use jet::Jet2;
pub use poly::Poly;

/// A point `(x, y)` of the tangent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Point {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Point {
        assert_eq!(x.len(), y.len(), "x and y must have the same dimension");
        Point { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn y_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
