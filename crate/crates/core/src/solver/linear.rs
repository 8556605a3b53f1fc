use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::AnsatzBasis;
use crate::conditions::equations::Local;
use crate::conditions::SampleDomain;
use crate::error::{Error, Result};
use crate::expr::{Jet2, Point};
use crate::geometry::{geometry_at, GeometryJet, SemiBasicOneForm, SodeSystem};

/// Which linear conditions on `θ` the system encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionSet {
    /// LD1: `d_J θ = 0`, `d_h θ = 0`.
    D1,
    /// H1–H3 (no force).
    H,
    /// LGH1–LGH3 with a given `σ`.
    GH,
    /// LG2 with the symmetries of LGH1 and `∇g = 0`.
    G2Core,
}

impl ConditionSet {
    pub fn name(self) -> &'static str {
        match self {
            ConditionSet::D1 => "D1",
            ConditionSet::H => "H",
            ConditionSet::GH => "GH",
            ConditionSet::G2Core => "G2-core",
        }
    }

    pub fn uses_sigma(self) -> bool {
        self == ConditionSet::GH
    }

    /// Labeled signed rows for one sample.
    fn rows(self, local: &Local) -> Vec<(&'static str, f64)> {
        let tag = |id: &'static str, v: Vec<f64>| v.into_iter().map(move |r| (id, r));
        match self {
            ConditionSet::D1 => tag("D1", local.ld1()).collect(),
            ConditionSet::H | ConditionSet::GH => {
                let (a, b, c) = if self == ConditionSet::H {
                    ("H1", "H2", "H3")
                } else {
                    ("LGH1", "LGH2", "LGH3")
                };
                tag(a, local.lgh1())
                    .chain(tag(b, local.lgh2()))
                    .chain(tag(c, local.lgh3()))
                    .collect()
            }
            ConditionSet::G2Core => tag("G2", local.lg2()).collect(),
        }
    }
}

impl fmt::Display for ConditionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConditionSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<ConditionSet> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "D1" => ConditionSet::D1,
            "H" => ConditionSet::H,
            "GH" | "LGH" => ConditionSet::GH,
            "G2-CORE" | "G2CORE" | "G2" => ConditionSet::G2Core,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown condition set `{other}` (expected D1, H, GH or G2-core)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowLabel {
    pub condition: &'static str,
    pub sample: usize,
    /// Position within the sample's rows for this condition.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RankWarning {
    /// The basis has no elements.
    EmptyBasis,
    /// Fewer rows than twice the number of unknowns.
    UnderSampled { rows: usize, unknowns: usize },
}

impl fmt::Display for RankWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankWarning::EmptyBasis => write!(f, "empty basis"),
            RankWarning::UnderSampled { rows, unknowns } => {
                write!(f, "{rows} rows for {unknowns} unknowns (under-sampled)")
            }
        }
    }
}

/// `A c = b`: one row per scalar condition instance per sample.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub labels: Vec<RowLabel>,
    pub points: Vec<Point>,
    pub warnings: Vec<RankWarning>,
}

impl LinearSystem {
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn unknowns(&self) -> usize {
        self.a.ncols()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.b.iter().all(|v| *v == 0.0)
    }

    /// `max |(A c − b)_r|` over rows labeled `condition`.
    pub fn residual(&self, c: &DVector<f64>, condition: &str) -> f64 {
        let r = &self.a * c - &self.b;
        self.labels
            .iter()
            .zip(r.iter())
            .filter(|(l, _)| l.condition == condition)
            .fold(0.0, |m, (_, v)| f64::max(m, v.abs()))
    }
}

/// Collocation rows per unknown.
pub const ROWS_PER_UNKNOWN: usize = 4;

fn sample_rows(
    set: ConditionSet,
    geo: &GeometryJet,
    basis: &AnsatzBasis,
    sigma: &[Jet2],
) -> (Vec<&'static str>, DMatrix<f64>, Vec<f64>) {
    let n = basis.dim;
    let zero = vec![Jet2::zero(n); n];
    let rhs_rows = set.rows(&Local {
        geo,
        theta: &zero,
        sigma,
    });
    let labels: Vec<&'static str> = rhs_rows.iter().map(|(l, _)| *l).collect();
    let b: Vec<f64> = rhs_rows.iter().map(|(_, v)| -v).collect();
    let mut a = DMatrix::zeros(labels.len(), basis.len());
    for m in 0..basis.len() {
        let mut theta = zero.clone();
        theta[basis.elements[m].comp] = basis.monomial_jet(m, &geo.point);
        let col = set.rows(&Local {
            geo,
            theta: &theta,
            sigma: &zero,
        });
        for (r, (_, v)) in col.iter().enumerate() {
            a[(r, m)] = *v;
        }
    }
    (labels, a, b)
}

/// Build the collocation system for `set`. The sample list is the domain's,
/// extended with further seeded points until there are at least
/// `ROWS_PER_UNKNOWN` rows per unknown. Points where the system cannot be
/// evaluated are skipped.
pub fn assemble(
    sode: &SodeSystem,
    sigma: Option<&SemiBasicOneForm>,
    basis: &AnsatzBasis,
    set: ConditionSet,
    domain: &SampleDomain,
) -> Result<LinearSystem> {
    domain.validate()?;
    let n = sode.dim();
    if basis.dim != n || domain.dim != n {
        return Err(Error::Shape("basis, domain and system dimensions differ".into()));
    }
    if set.uses_sigma() && sigma.is_none() {
        return Err(Error::InvalidArgument(format!("condition set {set} needs a force σ")));
    }
    let zero_sigma = SemiBasicOneForm::zero(n);
    let sigma = sigma.filter(|_| set.uses_sigma()).unwrap_or(&zero_sigma);
    let target = ROWS_PER_UNKNOWN * basis.len();

    let mut blocks = Vec::new();
    let mut labels = Vec::new();
    let mut points = Vec::new();
    let mut rows = 0;
    let mut batch = domain.clone();
    let mut evaluated = 0usize;
    let mut failed = 0usize;
    let mut extra = 0u64;
    loop {
        for p in batch.points() {
            let local = geometry_at(sode, &p).and_then(|g| sigma.jets(&p).map(|s| (g, s)));
            let (geo, s) = match local {
                Ok(v) => v,
                Err(_) => {
                    failed += 1;
                    continue;
                }
            };
            evaluated += 1;
            let (l, a, b) = sample_rows(set, &geo, basis, &s);
            let sample = points.len();
            for (index, cond) in l.iter().enumerate() {
                labels.push(RowLabel {
                    condition: cond,
                    sample,
                    index,
                });
            }
            rows += a.nrows();
            blocks.push((a, b));
            points.push(p);
        }
        if rows >= target || evaluated == 0 || extra == 16 {
            break;
        }
        extra += 1;
        batch.seed = domain.seed.wrapping_add(extra);
    }
    if evaluated == 0 || failed as f64 > 0.1 * (evaluated + failed) as f64 {
        return Err(Error::InvalidArgument(format!(
            "system could not be evaluated at {failed} of {} sample points",
            evaluated + failed
        )));
    }

    let mut a = DMatrix::zeros(rows, basis.len());
    let mut b = DVector::zeros(rows);
    let mut r0 = 0;
    for (ab, bb) in blocks {
        let k = ab.nrows();
        a.view_mut((r0, 0), (k, basis.len())).copy_from(&ab);
        for (i, v) in bb.into_iter().enumerate() {
            b[r0 + i] = v;
        }
        r0 += k;
    }
    let mut warnings = Vec::new();
    if basis.is_empty() {
        warnings.push(RankWarning::EmptyBasis);
    } else if rows < 2 * basis.len() {
        warnings.push(RankWarning::UnderSampled {
            rows,
            unknowns: basis.len(),
        });
    }
    Ok(LinearSystem {
        a,
        b,
        labels,
        points,
        warnings,
    })
}

/// Result of the SVD solve.
#[derive(Debug, Clone)]
pub struct NullspaceSolution {
    /// Least-squares solution of minimal norm; `None` for homogeneous systems.
    pub particular: Option<DVector<f64>>,
    /// Orthonormal basis of the near-nullspace.
    pub nullspace: Vec<DVector<f64>>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

/// Singular values at most `rank_tol · s_max` span the nullspace. Wide
/// systems are padded with zero rows so every right singular vector is
/// available.
pub fn solve_nullspace(ls: &LinearSystem, rank_tol: f64) -> NullspaceSolution {
    let (m, n) = (ls.rows(), ls.unknowns());
    if n == 0 {
        return NullspaceSolution {
            particular: None,
            nullspace: Vec::new(),
            singular_values: Vec::new(),
            rank: 0,
        };
    }
    let mut a = DMatrix::zeros(m.max(n), n);
    a.view_mut((0, 0), (m, n)).copy_from(&ls.a);
    let svd = a.svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let s = &svd.singular_values;
    let s_max = s.max();
    let cut = rank_tol * s_max;
    let mut nullspace = Vec::new();
    let mut rank = 0;
    for k in 0..n {
        if s_max == 0.0 || s[k] <= cut {
            nullspace.push(vt.row(k).transpose());
        } else {
            rank += 1;
        }
    }
    let particular = if ls.is_homogeneous() {
        None
    } else {
        let mut b = DVector::zeros(m.max(n));
        b.rows_mut(0, m).copy_from(&ls.b);
        let mut x = DVector::zeros(n);
        for k in 0..n {
            if s_max > 0.0 && s[k] > cut {
                let coef = u.column(k).dot(&b) / s[k];
                x += vt.row(k).transpose() * coef;
            }
        }
        Some(x)
    };
    NullspaceSolution {
        particular,
        nullspace,
        singular_values: s.iter().copied().collect(),
        rank,
    }
}

/// Keep the combinations of `solutions` whose multiplier `g_ij` is
/// non-trivial on `points`, each scaled so that its largest `|g_ij|` entry
/// over the samples equals `+1`.
///
/// The trivial directions are split off by an SVD of the matrix of `g`
/// values, so the survivors carry no component along them.
pub fn filter_nontrivial(
    solutions: &[DVector<f64>],
    basis: &AnsatzBasis,
    points: &[Point],
) -> Vec<DVector<f64>> {
    if solutions.is_empty() || basis.is_empty() {
        return Vec::new();
    }
    let n = basis.dim;
    // g values of each basis element at each sample.
    let per_elem: Vec<Vec<f64>> = (0..basis.len())
        .map(|m| {
            let mut v = vec![0.0; points.len() * n * n];
            let comp = basis.elements[m].comp;
            for (s, p) in points.iter().enumerate() {
                let jet = basis.monomial_jet(m, p);
                for j in 0..n {
                    v[(s * n + comp) * n + j] = jet.dy(j);
                }
            }
            v
        })
        .collect();
    let g_of = |c: &DVector<f64>| -> DVector<f64> {
        let mut out = DVector::zeros(points.len() * n * n);
        for (m, col) in per_elem.iter().enumerate() {
            if c[m] != 0.0 {
                for (o, v) in out.iter_mut().zip(col) {
                    *o += c[m] * v;
                }
            }
        }
        out
    };
    let cols: Vec<DVector<f64>> = solutions.iter().map(g_of).collect();
    let k = cols.len();
    let rows = cols[0].len().max(k);
    let mut gm = DMatrix::zeros(rows, k);
    for (j, c) in cols.iter().enumerate() {
        gm.view_mut((0, j), (c.len(), 1)).copy_from(c);
    }
    let svd = gm.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut out = Vec::new();
    for (idx, sv) in svd.singular_values.iter().enumerate() {
        let mix = vt.row(idx);
        let mut c = DVector::zeros(basis.len());
        for (j, s) in solutions.iter().enumerate() {
            c += s * mix[j];
        }
        let g = g_of(&c);
        let big = g.iter().fold(0.0f64, |b, v| if v.abs() > b.abs() { *v } else { b });
        if big.abs() <= super::NONTRIVIAL_TOL || *sv <= super::NONTRIVIAL_TOL {
            continue;
        }
        out.push(c / big);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> SodeSystem {
        SodeSystem::parse(&["(y1^2 + y2^2)/2", "2*y1*y2"], true).unwrap()
    }

    #[test]
    fn ex1_d1_nullspace() {
        let basis = AnsatzBasis::new(2, 1, 0);
        let ls = assemble(&ex1(), None, &basis, ConditionSet::D1, &SampleDomain::new(2)).unwrap();
        assert!(ls.rows() >= 4 * basis.len());
        assert!(ls.warnings.is_empty());
        let sol = solve_nullspace(&ls, 1e-9);
        assert_eq!(sol.nullspace.len(), 3);
        for c in &sol.nullspace {
            assert!((&ls.a * c).amax() <= 1e-9 * sol.singular_values[0]);
        }
        let kept = filter_nontrivial(&sol.nullspace, &basis, &ls.points);
        assert_eq!(kept.len(), 1);
        let theta = basis.polys(&kept[0]);
        // θ = (y1, y2/2): g = diag(1, 1/2).
        let p = Point::new(vec![0.2, 0.1], vec![0.7, -1.3]);
        let t0 = theta[0].eval(&p.x, &p.y);
        let t1 = theta[1].eval(&p.x, &p.y);
        assert!((t0 - 0.7).abs() < 1e-9 && (t1 + 0.65).abs() < 1e-9, "{t0} {t1}");
    }

    #[test]
    fn identity_system_has_no_nullspace() {
        let ls = LinearSystem {
            a: DMatrix::identity(4, 4),
            b: DVector::zeros(4),
            labels: Vec::new(),
            points: Vec::new(),
            warnings: Vec::new(),
        };
        let sol = solve_nullspace(&ls, 1e-9);
        assert!(sol.nullspace.is_empty() && sol.particular.is_none());
        assert_eq!(sol.rank, 4);
    }

    #[test]
    fn empty_basis_warns() {
        let basis = AnsatzBasis::empty(2);
        let ls = assemble(&ex1(), None, &basis, ConditionSet::D1, &SampleDomain::new(2)).unwrap();
        assert_eq!(ls.warnings, vec![RankWarning::EmptyBasis]);
        assert!(solve_nullspace(&ls, 1e-9).nullspace.is_empty());
    }

    #[test]
    fn flat_h_contains_euclidean() {
        let basis = AnsatzBasis::new(2, 1, 0);
        let ls = assemble(&SodeSystem::flat(2), None, &basis, ConditionSet::H, &SampleDomain::new(2)).unwrap();
        let sol = solve_nullspace(&ls, 1e-9);
        let kept = filter_nontrivial(&sol.nullspace, &basis, &ls.points);
        assert_eq!(kept.len(), 3);
        // The Euclidean θ = y_i dx^i lies in the span of the kept directions.
        let mut target = DVector::zeros(basis.len());
        for (m, el) in basis.elements.iter().enumerate() {
            if el.exps[2 + el.comp] == 1 {
                target[m] = 1.0;
            }
        }
        let k = DMatrix::from_columns(&kept);
        let coef = k.clone().svd(true, true).solve(&target, 1e-12).unwrap();
        assert!((&k * coef - &target).amax() < 1e-9);
    }

    #[test]
    fn condition_set_names() {
        for s in ["D1", "H", "GH", "G2-core"] {
            assert_eq!(s.parse::<ConditionSet>().unwrap().name(), s);
        }
        assert!("H4".parse::<ConditionSet>().is_err());
    }
}
