//! Search for `θ` satisfying a linear condition set by collocation on a
//! monomial ansatz, then reconstruct `L` and `𝒟` from it.

mod basis;
mod linear;
mod reconstruct;

use nalgebra::DVector;
use serde::Serialize;

pub use basis::{AnsatzBasis, BasisElement};
pub use linear::{
    assemble, filter_nontrivial, solve_nullspace, ConditionSet, LinearSystem, NullspaceSolution,
    RankWarning, RowLabel, ROWS_PER_UNKNOWN,
};
pub use reconstruct::{
    fibre_potential, horizontal_fields, reconstruct_dissipation, reconstruct_lagrangian, spray_field,
    CHOP_EPS,
};

use crate::conditions::{Checker, ConditionReport, SampleDomain, DEFAULT_TOL, NONTRIVIAL_TOL};
use crate::error::Result;
use crate::expr::{Poly, ScalarField};
use crate::geometry::{multiplier_of, SemiBasicOneForm, SodeSystem};

pub const DEFAULT_RANK_TOL: f64 = 1e-9;
pub const DEFAULT_DEG_Y: u32 = 2;
pub const DEFAULT_DEG_X: u32 = 2;
/// Recovered solutions are re-checked at this multiple of the default
/// condition tolerance.
pub const VERIFY_FACTOR: f64 = 10.0;
/// Samples used for reconstruction post-checks.
const RECONSTRUCT_SAMPLES: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRequest {
    pub set: ConditionSet,
    pub deg_y: u32,
    pub deg_x: u32,
    pub rank_tol: f64,
    pub domain: SampleDomain,
}

impl SolveRequest {
    pub fn new(set: ConditionSet, domain: SampleDomain) -> SolveRequest {
        SolveRequest {
            set,
            deg_y: DEFAULT_DEG_Y,
            deg_x: DEFAULT_DEG_X,
            rank_tol: DEFAULT_RANK_TOL,
            domain,
        }
    }

    pub fn with_degrees(mut self, deg_y: u32, deg_x: u32) -> SolveRequest {
        self.deg_y = deg_y;
        self.deg_x = deg_x;
        self
    }

    pub fn with_rank_tol(mut self, rank_tol: f64) -> SolveRequest {
        self.rank_tol = rank_tol;
        self
    }
}

/// One recovered `θ` with its reconstructions and re-check.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionBundle {
    /// Non-zero coefficients as `(basis label, value)`.
    pub coefficients: Vec<(String, f64)>,
    pub theta: Vec<String>,
    /// `g_ij` at the first verification sample.
    pub multiplier: Vec<Vec<f64>>,
    pub lagrangian: Option<String>,
    pub dissipation: Option<String>,
    pub verification: Vec<ConditionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub theta_form: SemiBasicOneForm,
    #[serde(skip)]
    pub lagrangian_field: Option<ScalarField>,
    #[serde(skip)]
    pub dissipation_field: Option<ScalarField>,
}

impl SolutionBundle {
    pub fn verified(&self) -> bool {
        self.error.is_none() && self.verification.iter().all(|r| r.pass)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutcome {
    pub set: String,
    pub deg_y: u32,
    pub deg_x: u32,
    pub unknowns: usize,
    pub rows: usize,
    pub rank: usize,
    pub nullity: usize,
    pub warnings: Vec<String>,
    pub status: String,
    pub solutions: Vec<SolutionBundle>,
}

/// Render a field as a polynomial when it is one.
pub fn render(f: &ScalarField) -> String {
    match Poly::from_field(f) {
        Some(p) => p.to_string(),
        None => f.to_string(),
    }
}

fn chopped(c: &DVector<f64>) -> DVector<f64> {
    let top = c.amax();
    c.map(|v| if v.abs() <= CHOP_EPS * top { 0.0 } else { v })
}

fn verify(
    checker: &Checker,
    set: ConditionSet,
    theta: &SemiBasicOneForm,
    sigma: Option<&SemiBasicOneForm>,
    lagrangian: Option<&ScalarField>,
    dissipation: Option<&ScalarField>,
) -> Vec<ConditionReport> {
    match set {
        ConditionSet::D1 => {
            let mut out = vec![checker.d1(theta)];
            if let (Some(l), Some(d)) = (lagrangian, dissipation) {
                out.push(checker.d2(theta, d));
                out.push(checker.lagrange(l, &SemiBasicOneForm::vertical_differential(d)));
            }
            out
        }
        ConditionSet::H => checker.classic(theta),
        ConditionSet::GH => {
            let zero = SemiBasicOneForm::zero(theta.dim());
            let sigma = sigma.unwrap_or(&zero);
            let mut out = checker.lgh(theta, sigma);
            if let Some(l) = lagrangian {
                out.push(checker.lagrange(l, sigma));
            }
            out
        }
        ConditionSet::G2Core => vec![checker.g2(theta)],
    }
}

fn bundle(
    sode: &SodeSystem,
    sigma: Option<&SemiBasicOneForm>,
    req: &SolveRequest,
    basis: &AnsatzBasis,
    checker: &Checker,
    c: &DVector<f64>,
) -> SolutionBundle {
    let c = chopped(c);
    let polys = basis.polys(&c);
    let theta = basis.form(&c);
    let coefficients = basis
        .elements
        .iter()
        .zip(c.iter())
        .filter(|(_, v)| **v != 0.0)
        .map(|(e, v)| (e.label.clone(), *v))
        .collect();
    let points = &checker.points()[..checker.points().len().min(RECONSTRUCT_SAMPLES)];
    let multiplier = multiplier_of(&theta, &checker.points()[0])
        .map(|m| (0..basis.dim).map(|i| m.g.row(i).iter().copied().collect()).collect())
        .unwrap_or_default();
    let mut error = None;
    let lagrangian = match reconstruct_lagrangian(&theta, points) {
        Ok(l) => Some(l),
        Err(e) => {
            error = Some(e.to_string());
            None
        }
    };
    let dissipation = match (&lagrangian, req.set) {
        (Some(l), ConditionSet::D1) => match reconstruct_dissipation(sode, l, points) {
            Ok(d) => Some(d),
            Err(e) => {
                error = Some(e.to_string());
                None
            }
        },
        _ => None,
    };
    let verification = verify(checker, req.set, &theta, sigma, lagrangian.as_ref(), dissipation.as_ref());
    SolutionBundle {
        coefficients,
        theta: polys.iter().map(|p| p.to_string()).collect(),
        multiplier,
        lagrangian: lagrangian.as_ref().map(render),
        dissipation: dissipation.as_ref().map(render),
        verification,
        error,
        theta_form: theta,
        lagrangian_field: lagrangian,
        dissipation_field: dissipation,
    }
}

/// Assemble, solve, filter and reconstruct.
///
/// Homogeneous systems yield one solution per non-trivial nullspace
/// direction, normalized so the largest `|g_ij|` is `1`. Systems with a
/// force yield the least-squares particular solution when it is consistent
/// and non-trivial.
pub fn solve(sode: &SodeSystem, sigma: Option<&SemiBasicOneForm>, req: &SolveRequest) -> Result<SolveOutcome> {
    let basis = AnsatzBasis::new(sode.dim(), req.deg_y, req.deg_x);
    let ls = assemble(sode, sigma, &basis, req.set, &req.domain)?;
    let sol = solve_nullspace(&ls, req.rank_tol);
    let mut candidates = Vec::new();
    match &sol.particular {
        None => candidates.extend(filter_nontrivial(&sol.nullspace, &basis, &ls.points)),
        Some(x) => {
            let residual = (&ls.a * x - &ls.b).amax();
            let consistent = residual <= DEFAULT_TOL * ls.b.amax().max(1.0);
            if consistent && !filter_nontrivial(std::slice::from_ref(x), &basis, &ls.points).is_empty() {
                candidates.push(x.clone());
            }
        }
    }
    let checker = Checker::new(sode, &req.domain, VERIFY_FACTOR * DEFAULT_TOL)?;
    let solutions: Vec<SolutionBundle> = candidates
        .iter()
        .map(|c| bundle(sode, sigma, req, &basis, &checker, c))
        .collect();
    let status = if solutions.is_empty() {
        "no solutions"
    } else {
        "solved"
    };
    Ok(SolveOutcome {
        set: req.set.name().to_string(),
        deg_y: req.deg_y,
        deg_x: req.deg_x,
        unknowns: ls.unknowns(),
        rows: ls.rows(),
        rank: sol.rank,
        nullity: sol.nullspace.len(),
        warnings: ls.warnings.iter().map(|w| w.to_string()).collect(),
        status: status.to_string(),
        solutions,
    })
}

/// Largest `|g_ij|` of `θ` over `points`.
pub fn multiplier_scale(theta: &SemiBasicOneForm, points: &[crate::expr::Point]) -> f64 {
    points
        .iter()
        .filter_map(|p| multiplier_of(theta, p).ok())
        .map(|m| m.g.amax())
        .fold(0.0, f64::max)
}

/// Whether `θ` passes the non-triviality threshold on `points`.
pub fn is_nontrivial(theta: &SemiBasicOneForm, points: &[crate::expr::Point]) -> bool {
    multiplier_scale(theta, points) > NONTRIVIAL_TOL
}
