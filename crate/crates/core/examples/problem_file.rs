//! Load a problem file and run its checks and its solve, as `hlab check`
//! and `hlab solve` do.
//!
//! ```text
//! cargo run --example problem_file -- crates/core/examples/gyro_class.prob
//! ```

use hlab::cli::{cmd_check, cmd_solve, Overrides, ProblemFile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/ex1_dissipative.prob").to_string());
    let file = ProblemFile::load(&path)?;
    let ov = Overrides::default();
    if file.check.is_some() {
        print!("{}", cmd_check(&file, &ov)?.summary());
    }
    if file.solve.is_some() {
        print!("{}", cmd_solve(&file, &ov)?.summary());
    }
    Ok(())
}
