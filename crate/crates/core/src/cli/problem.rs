use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use ini::{Ini, Properties};
use nalgebra::DMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::conditions::{BasicTwoForm, GyroClass, SampleDomain, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::expr::{Point, ScalarField};
use crate::geometry::{SemiBasicOneForm, SodeSystem};
use crate::solver::{ConditionSet, DEFAULT_DEG_X, DEFAULT_DEG_Y, DEFAULT_RANK_TOL};

pub const DEFAULT_TRAJECTORY_H: f64 = 1e-3;
pub const DEFAULT_TRAJECTORY_STEPS: usize = 1000;

const SECTIONS: [&str; 12] = [
    "sode",
    "theta",
    "sigma",
    "lagrangian",
    "dissipation",
    "omega",
    "gyro",
    "domain",
    "check",
    "solve",
    "trajectory",
    "meta",
];

/// What `[check]` asks for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSpec {
    pub ids: Vec<String>,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSpec {
    pub set: ConditionSet,
    pub deg_y: u32,
    pub deg_x: u32,
    pub rank_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySpec {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub h: f64,
    pub steps: usize,
}

impl TrajectorySpec {
    pub fn init(&self) -> Point {
        Point::new(self.x0.clone(), self.y0.clone())
    }
}

/// A parsed problem file. Every expression is parsed with the dimension
/// declared in `[sode]`.
#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub dim: usize,
    pub sode: SodeSystem,
    pub theta: Option<SemiBasicOneForm>,
    pub sigma: Option<SemiBasicOneForm>,
    pub lagrangian: Option<ScalarField>,
    pub dissipation: Option<ScalarField>,
    pub omega: Option<BasicTwoForm>,
    pub gyro: Option<GyroClass>,
    pub domain: SampleDomain,
    pub check: Option<CheckSpec>,
    pub solve: Option<SolveSpec>,
    pub trajectory: Option<TrajectorySpec>,
    /// Hex SHA-256 of the source text.
    pub digest: String,
}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Problem(msg.into())
}

/// Keys of one section, with unknown-key detection.
struct Section<'a> {
    name: &'a str,
    props: BTreeMap<String, String>,
}

impl<'a> Section<'a> {
    fn new(name: &'a str, props: &Properties) -> Result<Section<'a>> {
        let mut map = BTreeMap::new();
        for (k, v) in props.iter() {
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(bad(format!("[{name}] repeats key `{k}`")));
            }
        }
        Ok(Section { name, props: map })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.props.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .ok_or_else(|| bad(format!("[{}] needs `{key}`", self.name)))
    }

    fn number<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| bad(format!("[{}] `{key}` = `{v}` is not a valid number", self.name))),
        }
    }

    fn floats(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => list(&v)
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| bad(format!("[{}] `{key}` has a bad entry `{s}`", self.name)))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    fn finish(self) -> Result<()> {
        match self.props.keys().next() {
            None => Ok(()),
            Some(k) => Err(bad(format!("[{}] has unknown key `{k}`", self.name))),
        }
    }
}

fn list(v: &str) -> Vec<String> {
    v.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn field(src: &str, dim: usize, at: &str) -> Result<ScalarField> {
    ScalarField::parse(src, dim).map_err(|e| bad(format!("{at}: {e}")))
}

fn boolean(v: &str, at: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(format!("{at}: `{v}` is not a boolean"))),
    }
}

fn components(sec: &mut Section, prefix: &str, dim: usize) -> Result<Vec<ScalarField>> {
    (1..=dim)
        .map(|i| {
            let key = format!("{prefix}{i}");
            let src = sec.require(&key)?;
            field(&src, dim, &format!("[{}] {key}", sec.name))
        })
        .collect()
}

fn form(ini: &Ini, name: &str, dim: usize) -> Result<Option<SemiBasicOneForm>> {
    let Some(props) = ini.section(Some(name)) else {
        return Ok(None);
    };
    let mut sec = Section::new(name, props)?;
    let comps = components(&mut sec, "c", dim)?;
    sec.finish()?;
    Ok(Some(SemiBasicOneForm::new(comps)?))
}

fn single(ini: &Ini, name: &str, key: &str, dim: usize) -> Result<Option<ScalarField>> {
    let Some(props) = ini.section(Some(name)) else {
        return Ok(None);
    };
    let mut sec = Section::new(name, props)?;
    let src = sec.require(key)?;
    sec.finish()?;
    Ok(Some(field(&src, dim, &format!("[{name}] {key}"))?))
}

/// `w12` or `w1_2`, one-based with `i < j`.
fn omega_key(key: &str, dim: usize) -> Option<(usize, usize)> {
    let rest = key.strip_prefix('w')?;
    let (i, j) = match rest.split_once('_') {
        Some((a, b)) => (a.parse().ok()?, b.parse().ok()?),
        None if rest.len() == 2 => (
            rest[..1].parse().ok()?,
            rest[1..].parse().ok()?,
        ),
        None => return None,
    };
    (1 <= i && i < j && j <= dim).then_some((i, j))
}

fn omega(ini: &Ini, dim: usize) -> Result<Option<BasicTwoForm>> {
    let Some(props) = ini.section(Some("omega")) else {
        return Ok(None);
    };
    let sec = Section::new("omega", props)?;
    let mut entries = Vec::new();
    for (k, v) in &sec.props {
        let (i, j) = omega_key(k, dim)
            .ok_or_else(|| bad(format!("[omega] key `{k}` is not w<i><j> with 1 <= i < j <= {dim}")))?;
        entries.push((i - 1, j - 1, field(v, dim, &format!("[omega] {k}"))?));
    }
    Ok(Some(BasicTwoForm::from_upper(dim, entries).map_err(|e| bad(format!("[omega]: {e}")))?))
}

fn gyro(ini: &Ini, dim: usize) -> Result<Option<GyroClass>> {
    let Some(props) = ini.section(Some("gyro")) else {
        return Ok(None);
    };
    let mut sec = Section::new("gyro", props)?;
    let mut g = DMatrix::identity(dim, dim);
    let mut n = Vec::with_capacity(dim);
    for i in 0..dim {
        if let Some(row) = sec.floats(&format!("metric{}", i + 1))? {
            if row.len() != dim {
                return Err(bad(format!("[gyro] metric{} needs {dim} entries", i + 1)));
            }
            for (j, v) in row.into_iter().enumerate() {
                g[(i, j)] = v;
            }
        }
        let key = format!("n{}", i + 1);
        let row = list(&sec.require(&key)?);
        if row.len() != dim {
            return Err(bad(format!("[gyro] {key} needs {dim} entries")));
        }
        n.push(
            row.iter()
                .map(|s| field(s, dim, &format!("[gyro] {key}")))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let v = match sec.take("v") {
        Some(src) => {
            let items = list(&src);
            if items.len() != dim {
                return Err(bad(format!("[gyro] v needs {dim} entries")));
            }
            items
                .iter()
                .map(|s| field(s, dim, "[gyro] v"))
                .collect::<Result<Vec<_>>>()?
        }
        None => vec![ScalarField::zero(dim); dim],
    };
    sec.finish()?;
    GyroClass::new(g, n, v).map(Some).map_err(|e| bad(format!("[gyro]: {e}")))
}

impl ProblemFile {
    pub fn load(path: impl AsRef<Path>) -> Result<ProblemFile> {
        let text = std::fs::read_to_string(path.as_ref())?;
        ProblemFile::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ProblemFile> {
        let ini = Ini::load_from_str_noescape(text).map_err(|e| bad(e.to_string()))?;
        for (name, props) in ini.iter() {
            match name {
                None if props.is_empty() => {}
                None => return Err(bad("keys must appear inside a section")),
                Some(n) if SECTIONS.contains(&n) => {}
                Some(n) => return Err(bad(format!("unknown section [{n}]"))),
            }
        }
        let props = ini
            .section(Some("sode"))
            .ok_or_else(|| Error::MissingSection("every problem requires [sode]".into()))?;
        let mut sec = Section::new("sode", props)?;
        let dim: usize = sec
            .number("dim")?
            .ok_or_else(|| bad("[sode] needs `dim`"))?;
        if dim == 0 {
            return Err(bad("[sode] dim must be at least 1"));
        }
        let homog2 = match sec.take("homog2") {
            Some(v) => boolean(&v, "[sode] homog2")?,
            None => false,
        };
        let gyro = gyro(&ini, dim)?;
        let sode = match &gyro {
            Some(gy) => {
                if (1..=dim).any(|i| sec.props.contains_key(&format!("g{i}"))) {
                    return Err(bad("[sode] must not list g1..gn when [gyro] defines the system"));
                }
                gy.sode.clone()
            }
            None => {
                let coeffs = components(&mut sec, "g", dim)?;
                SodeSystem::new(coeffs, homog2)?
            }
        };
        sec.finish()?;

        let mut domain = SampleDomain::new(dim);
        if let Some(props) = ini.section(Some("domain")) {
            let mut sec = Section::new("domain", props)?;
            let low = sec.number("x_low")?.unwrap_or(domain.x_low[0]);
            let high = sec.number("x_high")?.unwrap_or(domain.x_high[0]);
            domain = domain.with_x_box(low, high);
            let r_min = sec.number("r_min")?.unwrap_or(domain.r_min);
            let r_max = sec.number("r_max")?.unwrap_or(domain.r_max);
            domain = domain.with_annulus(r_min, r_max);
            if let Some(c) = sec.number("count")? {
                domain = domain.with_count(c);
            }
            if let Some(s) = sec.number("seed")? {
                domain = domain.with_seed(s);
            }
            sec.finish()?;
        }
        domain.validate()?;

        let check = match ini.section(Some("check")) {
            None => None,
            Some(props) => {
                let mut sec = Section::new("check", props)?;
                let ids = list(&sec.require("ids")?);
                if ids.is_empty() {
                    return Err(bad("[check] ids is empty"));
                }
                let tol = sec.number("tol")?.unwrap_or(DEFAULT_TOL);
                let p = sec.number("p")?;
                sec.finish()?;
                Some(CheckSpec { ids, tol, p })
            }
        };

        let solve = match ini.section(Some("solve")) {
            None => None,
            Some(props) => {
                let mut sec = Section::new("solve", props)?;
                let set: ConditionSet = sec.require("set")?.parse()?;
                let deg_y = sec.number("deg_y")?.unwrap_or(DEFAULT_DEG_Y);
                let deg_x = sec.number("deg_x")?.unwrap_or(DEFAULT_DEG_X);
                let rank_tol = sec.number("rank_tol")?.unwrap_or(DEFAULT_RANK_TOL);
                sec.finish()?;
                Some(SolveSpec {
                    set,
                    deg_y,
                    deg_x,
                    rank_tol,
                })
            }
        };

        let trajectory = match ini.section(Some("trajectory")) {
            None => None,
            Some(props) => {
                let mut sec = Section::new("trajectory", props)?;
                let y0 = sec
                    .floats("y0")?
                    .ok_or_else(|| bad("[trajectory] needs `y0`"))?;
                let x0 = sec.floats("x0")?.unwrap_or_else(|| vec![0.0; dim]);
                if x0.len() != dim || y0.len() != dim {
                    return Err(bad(format!("[trajectory] x0 and y0 need {dim} entries")));
                }
                let h = sec.number("h")?.unwrap_or(DEFAULT_TRAJECTORY_H);
                let steps = sec.number("steps")?.unwrap_or(DEFAULT_TRAJECTORY_STEPS);
                sec.finish()?;
                Some(TrajectorySpec { x0, y0, h, steps })
            }
        };

        Ok(ProblemFile {
            dim,
            sode,
            theta: form(&ini, "theta", dim)?,
            sigma: form(&ini, "sigma", dim)?,
            lagrangian: single(&ini, "lagrangian", "l", dim)?,
            dissipation: single(&ini, "dissipation", "d", dim)?,
            omega: omega(&ini, dim)?,
            gyro,
            domain,
            check,
            solve,
            trajectory,
            digest: digest(text),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX1: &str = "
[sode]
dim = 2
g1 = (y1^2 + y2^2)/2
g2 = 2*y1*y2
homog2 = true

[theta]
c1 = 2*y1
c2 = y2

[check]
ids = LGH, D1
";

    #[test]
    fn parses_minimal_file() {
        let p = ProblemFile::parse(EX1).unwrap();
        assert_eq!(p.dim, 2);
        assert!(p.sode.homog2());
        assert_eq!(p.check.unwrap().ids, vec!["LGH", "D1"]);
        assert_eq!(p.domain, SampleDomain::new(2));
        assert_eq!(p.digest.len(), 64);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let e = ProblemFile::parse(&format!("{EX1}\n[extra]\na = 1\n")).unwrap_err();
        assert!(e.to_string().contains("[extra]"), "{e}");
        let e = ProblemFile::parse(&EX1.replace("homog2", "homog")).unwrap_err();
        assert!(e.to_string().contains("homog"), "{e}");
    }

    #[test]
    fn expressions_use_the_declared_dimension() {
        let e = ProblemFile::parse(&EX1.replace("c2 = y2", "c2 = y3")).unwrap_err();
        assert!(e.to_string().contains("y3"), "{e}");
    }

    #[test]
    fn missing_sode_is_a_missing_section() {
        assert!(matches!(
            ProblemFile::parse("[theta]\nc1 = y1\n"),
            Err(Error::MissingSection(_))
        ));
    }

    #[test]
    fn omega_keys() {
        assert_eq!(omega_key("w12", 2), Some((1, 2)));
        assert_eq!(omega_key("w2_10", 10), Some((2, 10)));
        assert_eq!(omega_key("w21", 2), None);
        assert_eq!(omega_key("w13", 2), None);
    }

    #[test]
    fn gyro_section_defines_the_system() {
        let text = "
[sode]
dim = 2
[gyro]
n1 = 0, 1
n2 = -1, 0
v = x1, x2
";
        let p = ProblemFile::parse(text).unwrap();
        assert!(p.gyro.is_some());
        let v = p.sode.values(&Point::new(vec![0.5, 0.0], vec![1.0, 0.0])).unwrap();
        assert!((v[0] - 0.25).abs() < 1e-15 && (v[1] + 1.0).abs() < 1e-15);
    }
}
