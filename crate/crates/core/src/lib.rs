pub mod error;
pub mod expr;
pub mod geometry;
pub mod conditions;
pub mod oracle;
pub mod random;
pub mod solver;
pub mod cli;
