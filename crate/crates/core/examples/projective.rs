//! The family G^i = lambda F y^i: dissipative for every lambda, a Finsler
//! spray only for lambda = 0.

use hlab::cli::{cmd_example, ExampleParams, Overrides};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for lambda in [0.0, 0.5, 1.0, 2.0] {
        let params = ExampleParams { lambda, dim: 2 };
        let report = cmd_example("projective", &params, &Overrides::default())?;
        let failed: Vec<&str> = report
            .reports
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.id.as_str())
            .collect();
        println!("lambda = {lambda}: {} reports, failing {:?}", report.reports.len(), failed);
    }
    Ok(())
}
