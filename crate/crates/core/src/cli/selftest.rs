use std::time::Instant;

use super::{cmd_example, ExampleParams, Overrides, RunReport, Settings};
use crate::conditions::{ConditionReport, SampleDomain};
use crate::error::{EvalError, Result};
use crate::expr::Point;
use crate::geometry::{integrate_geodesic, SodeSystem};
use crate::oracle::{curvature_identity_residuals, fd_jet, jet_mismatch};
use crate::random::{random_field, random_point, random_semispray, rng};

/// Sizes and tolerances of the self-test.
#[derive(Debug, Clone, PartialEq)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Random field/point pairs compared against finite differences.
    pub jet_pairs: usize,
    /// Per-entry tolerance `tol·(1 + |reference|)`.
    pub jet_tol: f64,
    pub jet_h: f64,
    /// Random systems in the curvature identity sweep, half with n = 2, half n = 3.
    pub systems: usize,
    pub identity_tol: f64,
    pub identity_h: f64,
    /// Accepted range of the RK4 error ratio when the step is halved.
    pub rk4_ratio: (f64, f64),
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            seed: 0,
            jet_pairs: 1000,
            jet_tol: 1e-6,
            jet_h: 1e-5,
            systems: 50,
            identity_tol: 1e-5,
            identity_h: 1e-4,
            rk4_ratio: (12.0, 20.0),
        }
    }
}

/// Largest normalized mismatch between jets and finite differences; at most
/// `1` means every entry agrees.
fn jets_report(cfg: &SelftestConfig) -> ConditionReport {
    let mut r = rng(cfg.seed);
    let samples: Vec<Result<f64, EvalError>> = (0..cfg.jet_pairs)
        .map(|k| {
            let dim = 2 + k % 2;
            let f = random_field(&mut r, dim, 4);
            let p = random_point(&mut r, dim);
            let jet = f.jet(&p)?;
            Ok(jet_mismatch(&jet, &fd_jet(&f, &p, cfg.jet_h), cfg.jet_tol, cfg.jet_tol))
        })
        .collect();
    ConditionReport::from_samples("SELFTEST.jets", 1.0, samples)
}

/// Global error at `t = 1` of RK4 on `x'' = −(x')²`, `x(0) = 0`, `x'(0) = 1`,
/// whose solution is `x = ln(1 + t)`.
pub fn rk4_error(h: f64) -> Result<f64> {
    let sode = SodeSystem::parse(&["y1^2/2"], false)?;
    let steps = (1.0 / h).round() as usize;
    let traj = integrate_geodesic(&sode, &Point::new(vec![0.0], vec![1.0]), h, steps)?;
    let t = traj.times[steps];
    let end = traj.last();
    Ok((end.x[0] - (1.0 + t).ln()).abs().max((end.y[0] - 1.0 / (1.0 + t)).abs()))
}

fn rk4_report(cfg: &SelftestConfig) -> Result<ConditionReport> {
    let ratio = rk4_error(0.05)? / rk4_error(0.025)?;
    let (lo, hi) = cfg.rk4_ratio;
    let outside = (lo - ratio).max(ratio - hi).max(0.0);
    Ok(ConditionReport::from_samples("SELFTEST.rk4", 0.0, [Ok(outside)])
        .with_note(format!("error ratio {ratio:.4}")))
}

fn identity_report(cfg: &SelftestConfig) -> ConditionReport {
    let mut r = rng(cfg.seed.wrapping_add(1));
    let samples: Vec<Result<f64, EvalError>> = (0..cfg.systems)
        .map(|k| {
            let dim = 2 + k % 2;
            let sode = random_semispray(&mut r, dim, 2);
            let p = random_point(&mut r, dim);
            curvature_identity_residuals(&sode, &p, cfg.identity_h)
                .map(|(consistent, _)| consistent)
                .ok_or_else(|| EvalError::new("curvature identity", "evaluation failed"))
        })
        .collect();
    ConditionReport::from_samples("SELFTEST.identity", cfg.identity_tol, samples)
}

fn determinism_report(cfg: &SelftestConfig) -> Result<ConditionReport> {
    let ov = Overrides {
        seed: Some(cfg.seed),
        ..Overrides::default()
    };
    let a = cmd_example("ex1", &ExampleParams::default(), &ov)?.to_json_untimed()?;
    let b = cmd_example("ex1", &ExampleParams::default(), &ov)?.to_json_untimed()?;
    let differ = if a == b { 0.0 } else { 1.0 };
    Ok(ConditionReport::from_samples("SELFTEST.determinism", 0.0, [Ok(differ)]))
}

/// Jets against finite differences, the RK4 convergence order, the
/// curvature identity on random systems, and reproducibility of reports.
pub fn cmd_selftest(cfg: &SelftestConfig) -> Result<RunReport> {
    let start = Instant::now();
    let settings = Settings {
        tol: cfg.jet_tol,
        domain: SampleDomain::new(2).with_seed(cfg.seed),
        p: None,
        solve: None,
        trajectory: None,
        derived: Vec::new(),
        parameters: [
            ("jet_pairs".to_string(), cfg.jet_pairs as f64),
            ("jet_h".to_string(), cfg.jet_h),
            ("systems".to_string(), cfg.systems as f64),
            ("identity_tol".to_string(), cfg.identity_tol),
            ("identity_h".to_string(), cfg.identity_h),
            ("rk4_ratio_min".to_string(), cfg.rk4_ratio.0),
            ("rk4_ratio_max".to_string(), cfg.rk4_ratio.1),
        ]
        .into_iter()
        .collect(),
    };
    let digest = super::digest(&format!("selftest seed={}", cfg.seed));
    let mut report = RunReport::new("selftest", digest, settings);
    report.reports.push(jets_report(cfg));
    report.reports.push(rk4_report(cfg)?);
    report.reports.push(identity_report(cfg));
    report.reports.push(determinism_report(cfg)?);
    Ok(report.finish(start, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_is_fourth_order() {
        let ratio = rk4_error(0.05).unwrap() / rk4_error(0.025).unwrap();
        assert!((12.0..=20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn small_selftest_passes() {
        let cfg = SelftestConfig {
            jet_pairs: 50,
            systems: 6,
            ..SelftestConfig::default()
        };
        let r = cmd_selftest(&cfg).unwrap();
        assert!(r.reports.iter().all(|r| r.pass), "{}", r.summary());
    }
}
