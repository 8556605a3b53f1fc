//! Problem-file driven commands: `check`, `solve`, `example`, `selftest`.
//!
//! Every command returns a [`RunReport`], which serializes to JSON that is
//! byte-identical across runs with the same input and seed once the
//! `timing` member is removed.

mod catalog;
mod problem;
mod selftest;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

pub use catalog::{example_names, example_source, Example, ExampleParams};
pub use problem::{
    digest, CheckSpec, ProblemFile, SolveSpec, TrajectorySpec, DEFAULT_TRAJECTORY_H,
    DEFAULT_TRAJECTORY_STEPS,
};
pub use selftest::{cmd_selftest, SelftestConfig};

use crate::conditions::{
    check_energy_variation, BasicTwoForm, Checker, ConditionReport, SampleDomain, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::geometry::{integrate_geodesic, SemiBasicOneForm};
use crate::solver::{reconstruct_lagrangian, solve, SolveOutcome, SolveRequest};

pub const TOOL: &str = "hlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every id `[check]` accepts. Group ids expand to several reports.
pub const CHECK_IDS: [&str; 35] = [
    "LGH", "LGH1", "LGH2", "LGH3", "H", "H1", "H2", "H3", "D1", "D2", "D3", "DR", "G1", "G2",
    "OMEGA", "LAGRANGE", "THM1", "HOM", "HOM.spray", "HOM.theta", "HOM.sigma", "THM5", "FM",
    "FMA", "FMD", "THM6", "COR4", "THM7", "THM7.pre", "COR5", "GNV", "GNV.1", "GNV.2", "ENERGY",
    "ENERGY.pointwise",
];

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
}

impl Overrides {
    fn domain(&self, d: &SampleDomain) -> Result<SampleDomain> {
        let mut d = d.clone();
        if let Some(s) = self.seed {
            d = d.with_seed(s);
        }
        if let Some(c) = self.samples {
            d = d.with_count(c);
        }
        d.validate()?;
        Ok(d)
    }

    fn tol(&self, file: Option<f64>) -> Result<f64> {
        let t = self.tol.or(file).unwrap_or(DEFAULT_TOL);
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("tolerance must be finite and >= 0, got {t}")));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Solved,
    #[serde(rename = "no solutions")]
    NoSolutions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

/// Effective settings, echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub tol: f64,
    pub domain: SampleDomain,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectorySpec>,
    /// How data absent from the input was obtained, e.g. `sigma = d_J(dissipation)`.
    pub derived: Vec<String>,
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input_digest: String,
    pub settings: Settings,
    pub reports: Vec<ConditionReport>,
    /// Report ids that are meant to fail on this input.
    pub expected_failures: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveOutcome>,
    pub status: Status,
    pub timing: Timing,
}

impl RunReport {
    fn new(command: impl Into<String>, digest: String, settings: Settings) -> RunReport {
        RunReport {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            input_digest: digest,
            settings,
            reports: Vec::new(),
            expected_failures: Vec::new(),
            solve: None,
            status: Status::Pass,
            timing: Timing { elapsed_ms: 0.0 },
        }
    }

    /// A report meets expectations if it passes, or fails and is listed in
    /// `expected_failures`.
    pub fn reports_ok(&self) -> bool {
        self.reports
            .iter()
            .all(|r| r.pass != self.expected_failures.contains(&r.id))
    }

    /// Set the status. With `require_verified`, a solve only counts as a
    /// pass if it produced solutions and all of them re-check.
    fn finish(mut self, start: Instant, require_verified: bool) -> RunReport {
        let ok = self.reports_ok();
        self.status = match &self.solve {
            _ if !ok => Status::Fail,
            Some(s) if require_verified => {
                let verified = !s.solutions.is_empty() && s.solutions.iter().all(|b| b.verified());
                if verified {
                    Status::Pass
                } else {
                    Status::Fail
                }
            }
            Some(s) if s.solutions.is_empty() => Status::NoSolutions,
            Some(_) => Status::Solved,
            None => Status::Pass,
        };
        self.timing.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }

    /// 0 when every report meets expectations or a solve completed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Fail => 1,
            _ => 0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON without the `timing` member.
    pub fn to_json_untimed(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let mut out = format!("{} {} {}\n", self.tool, self.version, self.command);
        for r in &self.reports {
            let mark = match (r.pass, self.expected_failures.contains(&r.id)) {
                (true, _) => "pass",
                (false, true) => "fail (expected)",
                (false, false) => "FAIL",
            };
            out += &format!(
                "  {:<20} max {:>10.3e}  mean {:>10.3e}  tol {:>8.1e}  n {:>4}  {mark}",
                r.id, r.max, r.mean, r.tol, r.count
            );
            if r.skipped > 0 {
                out += &format!("  skipped {}", r.skipped);
            }
            if let Some(n) = &r.note {
                out += &format!("  ({n})");
            }
            out.push('\n');
        }
        if let Some(s) = &self.solve {
            out += &format!(
                "  solve {} deg_y={} deg_x={}: {} unknowns, {} rows, rank {}, nullity {}\n",
                s.set, s.deg_y, s.deg_x, s.unknowns, s.rows, s.rank, s.nullity
            );
            for w in &s.warnings {
                out += &format!("  warning: {w}\n");
            }
            for (k, b) in s.solutions.iter().enumerate() {
                let verdict = if b.verified() { "verified" } else { "NOT verified" };
                out += &format!("  solution {} ({verdict})\n", k + 1);
                out += &format!("    theta = ({})\n", b.theta.join(", "));
                if let Some(l) = &b.lagrangian {
                    out += &format!("    L = {l}\n");
                }
                if let Some(d) = &b.dissipation {
                    out += &format!("    D = {d}\n");
                }
                if let Some(e) = &b.error {
                    out += &format!("    error: {e}\n");
                }
            }
        }
        let status = serde_json::to_value(self.status)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        out += &format!("status: {status}\n");
        out
    }
}

/// Data sources of a problem, with derivations filled in on demand.
struct Data<'a> {
    file: &'a ProblemFile,
    domain: &'a SampleDomain,
    derived: Vec<String>,
}

impl<'a> Data<'a> {
    fn note(&mut self, s: &str) {
        if !self.derived.iter().any(|d| d == s) {
            self.derived.push(s.to_string());
        }
    }

    fn theta(&mut self, id: &str) -> Result<SemiBasicOneForm> {
        if let Some(t) = &self.file.theta {
            return Ok(t.clone());
        }
        if let Some(l) = &self.file.lagrangian {
            self.note("theta = d_J(lagrangian)");
            return Ok(SemiBasicOneForm::vertical_differential(l));
        }
        if let Some(g) = &self.file.gyro {
            self.note("theta = metric * y from [gyro]");
            return Ok(g.theta.clone());
        }
        Err(Error::MissingSection(format!(
            "{id} requires [theta], [lagrangian] or [gyro]"
        )))
    }

    fn omega(&mut self, id: &str) -> Result<BasicTwoForm> {
        if let Some(w) = &self.file.omega {
            return Ok(w.clone());
        }
        if let Some(g) = &self.file.gyro {
            self.note("omega from [gyro]");
            return Ok(g.omega.clone());
        }
        Err(Error::MissingSection(format!("{id} requires [omega] or [gyro]")))
    }

    fn sigma(&mut self) -> SemiBasicOneForm {
        if let Some(s) = &self.file.sigma {
            return s.clone();
        }
        if let Some(d) = &self.file.dissipation {
            self.note("sigma = d_J(dissipation)");
            return SemiBasicOneForm::vertical_differential(d);
        }
        let w = self
            .file
            .omega
            .as_ref()
            .or(self.file.gyro.as_ref().map(|g| &g.omega));
        if let Some(w) = w {
            self.note("sigma = i_S(omega)");
            return w.contract_spray();
        }
        self.note("sigma = 0");
        SemiBasicOneForm::zero(self.file.dim)
    }

    fn lagrangian(&mut self, id: &str) -> Result<ScalarField> {
        if let Some(l) = &self.file.lagrangian {
            return Ok(l.clone());
        }
        if let Some(t) = &self.file.theta {
            self.note("lagrangian reconstructed from theta");
            let pts = self.domain.clone().with_count(self.domain.count.min(40)).points();
            return reconstruct_lagrangian(t, &pts);
        }
        Err(Error::MissingSection(format!("{id} requires [lagrangian] or [theta]")))
    }

    fn dissipation(&mut self, id: &str) -> Result<ScalarField> {
        self.file
            .dissipation
            .clone()
            .ok_or_else(|| Error::MissingSection(format!("{id} requires [dissipation]")))
    }

    fn p(&self, id: &str) -> Result<f64> {
        self.file
            .check
            .as_ref()
            .and_then(|c| c.p)
            .ok_or_else(|| Error::Problem(format!("{id} requires `p` in [check]")))
    }

    fn trajectory(&self, id: &str) -> Result<&'a TrajectorySpec> {
        self.file
            .trajectory
            .as_ref()
            .ok_or_else(|| Error::MissingSection(format!("{id} requires [trajectory]")))
    }
}

/// Canonical spelling of a check id, or `None` if unknown.
pub fn canonical_id(id: &str) -> Option<&'static str> {
    CHECK_IDS
        .iter()
        .copied()
        .find(|c| c.eq_ignore_ascii_case(id.trim()))
}

/// The group an id belongs to; the group runs once and the id selects from it.
fn group_of(id: &'static str) -> &'static str {
    match id {
        "LGH1" | "LGH2" | "LGH3" => "LGH",
        "H1" | "H2" | "H3" => "H",
        "HOM.spray" | "HOM.theta" | "HOM.sigma" | "THM5" => "HOM",
        "FMA" | "FMD" => "FM",
        "THM7.pre" => "THM7",
        "GNV.1" | "GNV.2" => "GNV",
        other => other,
    }
}

fn run_group(group: &str, data: &mut Data, checker: &Checker, tol: f64) -> Result<Vec<ConditionReport>> {
    Ok(match group {
        "LGH" => {
            let t = data.theta(group)?;
            checker.lgh(&t, &data.sigma())
        }
        "H" => checker.classic(&data.theta(group)?),
        "D1" => vec![checker.d1(&data.theta(group)?)],
        "D2" => {
            let t = data.theta(group)?;
            vec![checker.d2(&t, &data.dissipation(group)?)]
        }
        "D3" => vec![checker.d3(&data.theta(group)?)],
        "DR" => vec![checker.obstruction(&data.theta(group)?)],
        "G1" => {
            let t = data.theta(group)?;
            vec![checker.g1(&t, &data.omega(group)?)]
        }
        "G2" => vec![checker.g2(&data.theta(group)?)],
        "OMEGA" => vec![checker.omega_basic(&data.theta(group)?)],
        "LAGRANGE" => {
            let l = data.lagrangian(group)?;
            vec![checker.lagrange(&l, &data.sigma())]
        }
        "THM1" => {
            let t = data.theta(group)?;
            vec![checker.thm1(&t, &data.sigma())]
        }
        "HOM" => {
            let t = data.theta(group)?;
            let p = data.p(group)?;
            checker.homogeneous(&t, &data.sigma(), p)?
        }
        "FM" => checker.finsler_metrizable(&data.theta(group)?),
        "THM6" | "COR4" => {
            let l = data.lagrangian(group)?;
            let p = data.p(group)?;
            let s = data.sigma();
            if group == "THM6" {
                vec![checker.thm6(&l, &s, p)]
            } else {
                vec![checker.cor4(&l, &s, p)]
            }
        }
        "THM7" => {
            let t = data.theta(group)?;
            checker.thm7(&t, &data.sigma())
        }
        "COR5" => {
            let t = data.theta(group)?;
            vec![checker.cor5(&t, &data.omega(group)?)]
        }
        "GNV" => {
            let g = data
                .file
                .gyro
                .as_ref()
                .ok_or_else(|| Error::MissingSection("GNV requires [gyro]".into()))?;
            g.check_gnv(data.domain, tol)?
        }
        "ENERGY" | "ENERGY.pointwise" => {
            let spec = data.trajectory(group)?;
            let l = data.lagrangian(group)?;
            let s = data.sigma();
            let traj = integrate_geodesic(&data.file.sode, &spec.init(), spec.h, spec.steps)?;
            let (report, trace) = check_energy_variation(&l, &s, &traj)?;
            if group == "ENERGY" {
                vec![report]
            } else {
                vec![trace.pointwise_report(report.tol)]
            }
        }
        other => return Err(Error::Problem(format!("unknown check id `{other}`"))),
    })
}

fn expand_ids(ids: &[String]) -> Result<Vec<&'static str>> {
    let mut out = Vec::new();
    for raw in ids {
        let id = canonical_id(raw).ok_or_else(|| {
            Error::Problem(format!(
                "unknown check id `{raw}` (known: {})",
                CHECK_IDS.join(", ")
            ))
        })?;
        if !out.contains(&id) {
            out.push(id);
        }
    }
    Ok(out)
}

fn settings(file: &ProblemFile, ov: &Overrides) -> Result<Settings> {
    Ok(Settings {
        tol: ov.tol(file.check.as_ref().map(|c| c.tol))?,
        domain: ov.domain(&file.domain)?,
        p: file.check.as_ref().and_then(|c| c.p),
        solve: None,
        trajectory: None,
        derived: Vec::new(),
        parameters: BTreeMap::new(),
    })
}

fn check_into(report: &mut RunReport, file: &ProblemFile, spec: &CheckSpec) -> Result<()> {
    let ids = expand_ids(&spec.ids)?;
    let tol = report.settings.tol;
    let domain = report.settings.domain.clone();
    let checker = Checker::new(&file.sode, &domain, tol)?;
    let mut data = Data {
        file,
        domain: &domain,
        derived: std::mem::take(&mut report.settings.derived),
    };
    let mut groups: BTreeMap<&str, Vec<ConditionReport>> = BTreeMap::new();
    for id in &ids {
        let group = group_of(id);
        if !groups.contains_key(group) {
            let rs = run_group(group, &mut data, &checker, tol)?;
            groups.insert(group, rs);
        }
        for r in &groups[group] {
            let wanted = group == *id || r.id == *id;
            if wanted && !report.reports.iter().any(|x| x.id == r.id) {
                report.reports.push(r.clone());
            }
        }
    }
    report.settings.derived = data.derived;
    if ids.iter().any(|id| id.starts_with("ENERGY")) {
        report.settings.trajectory = file.trajectory.clone();
    }
    Ok(())
}

fn solve_into(report: &mut RunReport, file: &ProblemFile, spec: &SolveSpec) -> Result<()> {
    let mut data = Data {
        file,
        domain: &report.settings.domain,
        derived: std::mem::take(&mut report.settings.derived),
    };
    let sigma = spec.set.uses_sigma().then(|| data.sigma());
    report.settings.derived = data.derived;
    let req = SolveRequest::new(spec.set, report.settings.domain.clone())
        .with_degrees(spec.deg_y, spec.deg_x)
        .with_rank_tol(spec.rank_tol);
    report.solve = Some(solve(&file.sode, sigma.as_ref(), &req)?);
    report.settings.solve = Some(spec.clone());
    Ok(())
}

/// Run every id listed in `[check]`.
pub fn cmd_check(file: &ProblemFile, ov: &Overrides) -> Result<RunReport> {
    let start = Instant::now();
    let spec = file
        .check
        .as_ref()
        .ok_or_else(|| Error::MissingSection("check requires [check]".into()))?;
    let mut report = RunReport::new("check", file.digest.clone(), settings(file, ov)?);
    check_into(&mut report, file, spec)?;
    Ok(report.finish(start, false))
}

/// Assemble, solve, filter and reconstruct per `[solve]`.
pub fn cmd_solve(file: &ProblemFile, ov: &Overrides) -> Result<RunReport> {
    let start = Instant::now();
    let spec = file
        .solve
        .as_ref()
        .ok_or_else(|| Error::MissingSection("solve requires [solve]".into()))?;
    let mut report = RunReport::new("solve", file.digest.clone(), settings(file, ov)?);
    solve_into(&mut report, file, spec)?;
    Ok(report.finish(start, false))
}

/// Run a built-in example: its `[check]` ids and, if present, its `[solve]`.
pub fn cmd_example(name: &str, params: &ExampleParams, ov: &Overrides) -> Result<RunReport> {
    let start = Instant::now();
    let example = example_source(name, params)?;
    let file = ProblemFile::parse(&example.source)?;
    let mut settings = settings(&file, ov)?;
    settings.parameters = example.parameters;
    let mut report = RunReport::new(format!("example {name}"), file.digest.clone(), settings);
    report.expected_failures = example.expected_failures;
    if let Some(spec) = &file.check {
        check_into(&mut report, &file, spec)?;
    }
    if let Some(spec) = &file.solve {
        solve_into(&mut report, &file, spec)?;
    }
    Ok(report.finish(start, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_case_insensitive() {
        assert_eq!(canonical_id("lgh2"), Some("LGH2"));
        assert_eq!(canonical_id("energy.POINTWISE"), Some("ENERGY.pointwise"));
        assert_eq!(canonical_id("nope"), None);
    }

    #[test]
    fn g1_without_omega_or_theta_is_a_missing_section() {
        let text = "[sode]\ndim = 2\ng1 = 0\ng2 = 0\n[check]\nids = G1\n";
        let file = ProblemFile::parse(text).unwrap();
        match cmd_check(&file, &Overrides::default()) {
            Err(Error::MissingSection(m)) => assert!(m.contains("G1"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn d2_names_its_requirement() {
        let text = "[sode]\ndim = 1\ng1 = 0\n[theta]\nc1 = y1\n[check]\nids = D2\n";
        let file = ProblemFile::parse(text).unwrap();
        let e = cmd_check(&file, &Overrides::default()).unwrap_err();
        assert_eq!(e.to_string(), "missing section: D2 requires [dissipation]");
    }

    #[test]
    fn individual_ids_select_from_their_group() {
        let text = "[sode]\ndim = 2\ng1 = 0\ng2 = 0\n[theta]\nc1 = y1\nc2 = y2\n[check]\nids = LGH2, H\n";
        let file = ProblemFile::parse(text).unwrap();
        let r = cmd_check(&file, &Overrides::default()).unwrap();
        let ids: Vec<&str> = r.reports.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["LGH2", "H1", "H2", "H3"]);
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.settings.derived, ["sigma = 0"]);
    }

    #[test]
    fn overrides_take_precedence() {
        let text = "[sode]\ndim = 1\ng1 = 0\n[theta]\nc1 = y1\n[domain]\ncount = 7\nseed = 3\n[check]\nids = D1\ntol = 1e-3\n";
        let file = ProblemFile::parse(text).unwrap();
        let ov = Overrides {
            seed: Some(9),
            samples: Some(11),
            tol: Some(1e-6),
        };
        let r = cmd_check(&file, &ov).unwrap();
        assert_eq!(r.settings.domain.seed, 9);
        assert_eq!(r.reports[0].count, 11);
        assert_eq!(r.reports[0].tol, 1e-6);
    }
}
