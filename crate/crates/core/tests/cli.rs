use std::path::PathBuf;
use std::process::Command;

use hlab::cli::{
    cmd_check, cmd_example, cmd_selftest, cmd_solve, example_names, ExampleParams, Overrides,
    ProblemFile, RunReport, SelftestConfig, Status,
};
use hlab::error::Error;
use jsonschema::JSONSchema;
use serde_json::Value;

fn prob(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn schema() -> JSONSchema {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../report.schema.json");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    JSONSchema::compile(&v).unwrap()
}

fn assert_valid(r: &RunReport) {
    let v: Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    let s = schema();
    let msgs: Vec<String> = match s.validate(&v) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{e} at {}", e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "{}: {msgs:?}", r.command);
}

fn ids(r: &RunReport) -> Vec<&str> {
    r.reports.iter().map(|r| r.id.as_str()).collect()
}

#[test]
fn ex1_file_passes_every_listed_check() {
    let file = ProblemFile::load(prob("ex1_dissipative.prob")).unwrap();
    let r = cmd_check(&file, &Overrides::default()).unwrap();
    assert_eq!(ids(&r), ["LGH1", "LGH2", "LGH3", "D1", "D2", "D3", "THM1", "ENERGY"]);
    assert!(r.reports.iter().all(|r| r.pass), "{}", r.summary());
    assert_eq!(r.status, Status::Pass);
    assert_valid(&r);
}

#[test]
fn gyro_file_passes_every_listed_check() {
    let file = ProblemFile::load(prob("gyro_class.prob")).unwrap();
    let r = cmd_check(&file, &Overrides::default()).unwrap();
    assert_eq!(ids(&r), ["G1", "G2", "GNV.1", "GNV.2", "ENERGY"]);
    assert_eq!(r.status, Status::Pass, "{}", r.summary());
    assert_valid(&r);
}

#[test]
fn solve_on_ex1_prints_lagrangian_and_dissipation() {
    let file = ProblemFile::load(prob("ex1_dissipative.prob")).unwrap();
    let r = cmd_solve(&file, &Overrides::default()).unwrap();
    assert_eq!(r.status, Status::Solved);
    let s = r.solve.as_ref().unwrap();
    assert_eq!(s.solutions.len(), 1);
    assert!(s.solutions[0].verified());
    assert!(r.summary().contains("L = ") && r.summary().contains("D = "));
    assert_valid(&r);
}

#[test]
fn flat_system_yields_quadratic_lagrangians() {
    let file = ProblemFile::load(prob("flat_metric.prob")).unwrap();
    let r = cmd_solve(&file, &Overrides::default()).unwrap();
    let s = r.solve.as_ref().unwrap();
    assert!(!s.solutions.is_empty());
    for b in &s.solutions {
        assert!(b.verified());
        let l = b.lagrangian_field.as_ref().unwrap();
        let p = hlab::expr::Point::new(vec![0.3, 0.1], vec![0.7, -1.1]);
        assert!(l.euler_residual(&p, 2.0).unwrap().abs() < 1e-12);
    }
}

#[test]
fn infeasible_solve_reports_no_solutions() {
    let file = ProblemFile::load(prob("no_multiplier.prob")).unwrap();
    let r = cmd_solve(&file, &Overrides::default()).unwrap();
    assert_eq!(r.status, Status::NoSolutions);
    assert_eq!(r.exit_code(), 0);
    assert_valid(&r);
}

#[test]
fn projective_file_passes() {
    let file = ProblemFile::load(prob("projective.prob")).unwrap();
    let r = cmd_check(&file, &Overrides::default()).unwrap();
    assert_eq!(r.status, Status::Pass, "{}", r.summary());
    let s = cmd_solve(&file, &Overrides::default()).unwrap();
    let sol = &s.solve.as_ref().unwrap().solutions;
    assert_eq!(sol.len(), 1);
    assert!((sol[0].multiplier[0][0] - 2.0).abs() < 1e-8);
}

#[test]
fn every_example_meets_its_expectations() {
    for name in example_names() {
        let r = cmd_example(name, &ExampleParams::default(), &Overrides::default()).unwrap();
        assert_eq!(r.status, Status::Pass, "{}", r.summary());
        assert_valid(&r);
    }
    let flat = ExampleParams { lambda: 0.0, dim: 3 };
    let r = cmd_example("projective", &flat, &Overrides::default()).unwrap();
    assert!(r.reports.iter().all(|r| r.pass), "{}", r.summary());
}

#[test]
fn thm1_agrees_with_lgh_on_the_catalog() {
    for name in example_names() {
        let r = cmd_example(name, &ExampleParams::default(), &Overrides::default()).unwrap();
        let lgh = r.reports.iter().filter(|r| r.id.starts_with("LGH")).all(|r| r.pass);
        let thm1 = r.reports.iter().find(|r| r.id == "THM1").map(|r| r.pass);
        if let Some(thm1) = thm1 {
            assert_eq!(lgh, thm1, "{name}");
        }
    }
}

#[test]
fn reports_are_reproducible_and_seed_dependent() {
    let ov = |seed| Overrides {
        seed: Some(seed),
        ..Overrides::default()
    };
    let p = ExampleParams::default();
    let a = cmd_example("projective", &p, &ov(3)).unwrap();
    let b = cmd_example("projective", &p, &ov(3)).unwrap();
    let c = cmd_example("projective", &p, &ov(4)).unwrap();
    assert_eq!(a.to_json_untimed().unwrap(), b.to_json_untimed().unwrap());
    assert_ne!(a.to_json_untimed().unwrap(), c.to_json_untimed().unwrap());
    let verdicts = |r: &RunReport| r.reports.iter().map(|r| r.pass).collect::<Vec<_>>();
    assert_eq!(verdicts(&a), verdicts(&c));
}

#[test]
fn selftest_report_validates() {
    let cfg = SelftestConfig {
        jet_pairs: 40,
        systems: 4,
        ..SelftestConfig::default()
    };
    let r = cmd_selftest(&cfg).unwrap();
    assert_eq!(r.status, Status::Pass, "{}", r.summary());
    assert_valid(&r);
}

#[test]
fn missing_sections_are_named() {
    let text = "[sode]\ndim = 2\ng1 = y1^2\ng2 = 0\n[check]\nids = G1\n";
    let file = ProblemFile::parse(text).unwrap();
    match cmd_check(&file, &Overrides::default()) {
        Err(Error::MissingSection(m)) => assert_eq!(m, "G1 requires [theta], [lagrangian] or [gyro]"),
        other => panic!("{other:?}"),
    }
    let text = "[sode]\ndim = 2\ng1 = y1^2\ng2 = 0\n[theta]\nc1 = y1\nc2 = y2\n[check]\nids = G1\n";
    let file = ProblemFile::parse(text).unwrap();
    match cmd_check(&file, &Overrides::default()) {
        Err(Error::MissingSection(m)) => assert_eq!(m, "G1 requires [omega] or [gyro]"),
        other => panic!("{other:?}"),
    }
}

fn hlab(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hlab")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr),
    )
}

#[test]
fn binary_exit_codes() {
    let ex1 = prob("ex1_dissipative.prob");
    let (code, out) = hlab(&["check", ex1.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");

    let dir = std::env::temp_dir().join(format!("hlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let failing = dir.join("failing.prob");
    let text = std::fs::read_to_string(&ex1).unwrap().replace("ids = LGH, D1, D2, D3, THM1, ENERGY", "ids = H");
    std::fs::write(&failing, text).unwrap();
    let (code, out) = hlab(&["check", failing.to_str().unwrap()]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("H3") && out.contains("FAIL"));

    let broken = dir.join("broken.prob");
    std::fs::write(&broken, "[sode]\ndim = 2\ng1 = y1^\ng2 = 0\n").unwrap();
    let (code, out) = hlab(&["check", broken.to_str().unwrap()]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("[sode] g1"), "{out}");

    let (code, _) = hlab(&["check", dir.join("absent.prob").to_str().unwrap()]);
    assert_eq!(code, 2);

    let (code, out) = hlab(&["solve", prob("no_multiplier.prob").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("no solutions"));

    let json = dir.join("ex1.json");
    let (code, _) = hlab(&["example", "ex1", "--seed", "2", "--samples", "50", "--json", json.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(schema().is_valid(&v));
    assert_eq!(v["settings"]["domain"]["seed"], 2);
    assert_eq!(v["reports"][0]["count"], 50);

    let (code, out) = hlab(&["example", "projective", "--lambda", "-0.5"]);
    assert_eq!(code, 0, "{out}");
    std::fs::remove_dir_all(&dir).ok();
}
