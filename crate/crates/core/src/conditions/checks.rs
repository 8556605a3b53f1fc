use nalgebra::DMatrix;

use super::equations::{max_abs, Local};
use super::report::ConditionReport;
use super::sample::SampleDomain;
use crate::error::{Error, EvalError, ParseError, Result};
use crate::expr::{Jet2, Point, ScalarField, Var};
use crate::geometry::{geometry_at, GeometryJet, SemiBasicOneForm, SodeSystem, Trajectory};

/// Default absolute tolerance for residuals built from exact jets.
pub const DEFAULT_TOL: f64 = 1e-8;
/// `θ` counts as non-trivial when some `|g_ij|` exceeds this on the samples.
pub const NONTRIVIAL_TOL: f64 = 1e-6;
/// `g` counts as regular when `|det g|` exceeds this at every sample.
pub const REGULAR_TOL: f64 = 1e-8;
/// The energy check passes when the residual is at most this times `h²`.
pub const ENERGY_TOL_FACTOR: f64 = 10.0;

/// A basic 2-form `ω`, stored as an antisymmetric matrix of `x`-only fields.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicTwoForm {
    dim: usize,
    comps: Vec<Vec<ScalarField>>,
}

impl BasicTwoForm {
    /// Build from the entries above the diagonal, given as `(i, j, ω_ij)`
    /// with zero-based `i < j`. Missing entries are zero.
    pub fn from_upper(dim: usize, entries: Vec<(usize, usize, ScalarField)>) -> Result<BasicTwoForm> {
        let mut comps = vec![vec![ScalarField::zero(dim); dim]; dim];
        for (i, j, f) in entries {
            if i >= j || j >= dim {
                return Err(Error::Shape(format!(
                    "2-form entry ({}, {}) must satisfy i < j <= {dim}",
                    i + 1,
                    j + 1
                )));
            }
            if f.dim() != dim {
                return Err(Error::Shape(format!(
                    "2-form entry has dimension {}, expected {dim}",
                    f.dim()
                )));
            }
            let mut y_var = None;
            f.expr().visit_vars(&mut |v| {
                if let Var::Y(_) = v {
                    y_var.get_or_insert(v);
                }
            });
            if let Some(v) = y_var {
                return Err(ParseError::Dimension {
                    var: v.to_string(),
                    pos: 0,
                    dim: 0,
                }
                .into());
            }
            comps[j][i] = -&f;
            comps[i][j] = f;
        }
        Ok(BasicTwoForm { dim, comps })
    }

    /// Parse entries `(i, j, src)` with one-based indices.
    pub fn parse(dim: usize, entries: &[(usize, usize, &str)]) -> Result<BasicTwoForm> {
        let mut parsed = Vec::new();
        for (i, j, src) in entries {
            if *i == 0 || *j == 0 {
                return Err(Error::Shape("2-form indices are one-based".into()));
            }
            parsed.push((i - 1, j - 1, ScalarField::parse(src, dim)?));
        }
        BasicTwoForm::from_upper(dim, parsed)
    }

    pub fn zero(dim: usize) -> BasicTwoForm {
        BasicTwoForm {
            dim,
            comps: vec![vec![ScalarField::zero(dim); dim]; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn comp(&self, i: usize, j: usize) -> &ScalarField {
        &self.comps[i][j]
    }

    pub fn jets(&self, p: &Point) -> Result<Vec<Vec<Jet2>>, EvalError> {
        self.comps
            .iter()
            .map(|row| row.iter().map(|f| f.jet(p)).collect())
            .collect()
    }

    /// `σ = i_S ω`, with components `σ_i = ω_ij y^j`.
    pub fn contract_spray(&self) -> SemiBasicOneForm {
        let n = self.dim;
        let comps = (0..n)
            .map(|i| {
                let terms: Vec<ScalarField> = (0..n)
                    .filter(|&j| !self.comps[i][j].is_zero())
                    .map(|j| &self.comps[i][j] * &ScalarField::y(n, j))
                    .collect();
                ScalarField::sum(n, &terms)
            })
            .collect();
        SemiBasicOneForm::new(comps).expect("components share the form's dimension")
    }
}

/// Evaluates conditions over a fixed sample list. Geometry is computed once
/// per sample and shared by all checks.
pub struct Checker {
    sode: SodeSystem,
    tol: f64,
    points: Vec<Point>,
    geos: Vec<Result<GeometryJet, EvalError>>,
}

struct Sample<'a> {
    point: &'a Point,
    geo: &'a GeometryJet,
}

fn zero_jets(dim: usize) -> Vec<Jet2> {
    vec![Jet2::zero(dim); dim]
}

impl Checker {
    pub fn new(sode: &SodeSystem, domain: &SampleDomain, tol: f64) -> Result<Checker> {
        domain.validate()?;
        if domain.dim != sode.dim() {
            return Err(Error::Shape(format!(
                "domain has dimension {}, system has {}",
                domain.dim,
                sode.dim()
            )));
        }
        Ok(Checker::with_points(sode, domain.points(), tol))
    }

    pub fn with_points(sode: &SodeSystem, points: Vec<Point>, tol: f64) -> Checker {
        let geos = points.iter().map(|p| geometry_at(sode, p)).collect();
        Checker {
            sode: sode.clone(),
            tol,
            points,
            geos,
        }
    }

    pub fn sode(&self) -> &SodeSystem {
        &self.sode
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn dim(&self) -> usize {
        self.sode.dim()
    }

    /// One report per id, from a per-sample function returning one residual
    /// per id.
    fn run<F>(&self, ids: &[&str], tol: f64, f: F) -> Vec<ConditionReport>
    where
        F: Fn(&Sample) -> Result<Vec<f64>, EvalError>,
    {
        let results: Vec<Result<Vec<f64>, EvalError>> = self
            .points
            .iter()
            .zip(&self.geos)
            .map(|(point, geo)| {
                let geo = geo.as_ref().map_err(Clone::clone)?;
                f(&Sample { point, geo })
            })
            .collect();
        ids.iter()
            .enumerate()
            .map(|(k, id)| {
                let samples = results.iter().map(|r| match r {
                    Ok(v) => Ok(v[k]),
                    Err(e) => Err(e.clone()),
                });
                ConditionReport::from_samples(*id, tol, samples)
            })
            .collect()
    }

    fn run1<F>(&self, id: &str, f: F) -> ConditionReport
    where
        F: Fn(&Sample) -> Result<f64, EvalError>,
    {
        self.run(&[id], self.tol, |s| f(s).map(|v| vec![v])).remove(0)
    }

    /// Largest `|g_ij|` over the samples, for the non-triviality test.
    pub fn multiplier_size(&self, theta: &SemiBasicOneForm) -> f64 {
        let n = self.dim();
        self.points
            .iter()
            .filter_map(|p| theta.jets(p).ok())
            .map(|t| {
                t.iter()
                    .flat_map(|ti| (0..n).map(move |j| ti.dy(j).abs()))
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    fn annotate_trivial(&self, theta: &SemiBasicOneForm, mut reports: Vec<ConditionReport>) -> Vec<ConditionReport> {
        if self.multiplier_size(theta) <= NONTRIVIAL_TOL {
            if let Some(first) = reports.first_mut() {
                *first = first.clone().with_note("theta is trivial on the sample set");
            }
        }
        reports
    }

    fn with_forms<F>(
        &self,
        theta: &SemiBasicOneForm,
        sigma: Option<&SemiBasicOneForm>,
        s: &Sample,
        f: F,
    ) -> Result<Vec<f64>, EvalError>
    where
        F: Fn(&Local) -> Vec<f64>,
    {
        let t = theta.jets(s.point)?;
        let sg = match sigma {
            Some(sig) => sig.jets(s.point)?,
            None => zero_jets(self.dim()),
        };
        Ok(f(&Local {
            geo: s.geo,
            theta: &t,
            sigma: &sg,
        }))
    }

    /// LGH1–LGH3.
    pub fn lgh(&self, theta: &SemiBasicOneForm, sigma: &SemiBasicOneForm) -> Vec<ConditionReport> {
        let reports = self.run(&["LGH1", "LGH2", "LGH3"], self.tol, |s| {
            self.with_forms(theta, Some(sigma), s, |l| {
                vec![max_abs(&l.lgh1()), max_abs(&l.lgh2()), max_abs(&l.lgh3())]
            })
        });
        self.annotate_trivial(theta, reports)
    }

    /// H1–H3: the LGH conditions with `σ = 0`.
    pub fn classic(&self, theta: &SemiBasicOneForm) -> Vec<ConditionReport> {
        let reports = self.run(&["H1", "H2", "H3"], self.tol, |s| {
            self.with_forms(theta, None, s, |l| {
                vec![max_abs(&l.lgh1()), max_abs(&l.lgh2()), max_abs(&l.lgh3())]
            })
        });
        self.annotate_trivial(theta, reports)
    }

    pub fn d1(&self, theta: &SemiBasicOneForm) -> ConditionReport {
        let r = self.run1("D1", |s| self.with_forms(theta, None, s, |l| l.ld1()).map(|v| max_abs(&v)));
        self.annotate_trivial(theta, vec![r]).remove(0)
    }

    pub fn d2(&self, theta: &SemiBasicOneForm, dissipation: &ScalarField) -> ConditionReport {
        let r = self.run1("D2", |s| {
            let d = dissipation.jet(s.point)?;
            self.with_forms(theta, None, s, |l| l.ld2(&d)).map(|v| max_abs(&v))
        });
        self.annotate_trivial(theta, vec![r]).remove(0)
    }

    pub fn d3(&self, theta: &SemiBasicOneForm) -> ConditionReport {
        let r = self.run1("D3", |s| self.with_forms(theta, None, s, |l| l.ld3()).map(|v| max_abs(&v)));
        self.annotate_trivial(theta, vec![r]).remove(0)
    }

    /// The cyclic curvature sums of LD3 alone.
    pub fn obstruction(&self, theta: &SemiBasicOneForm) -> ConditionReport {
        self.run1("DR", |s| {
            self.with_forms(theta, None, s, |l| l.obstruction())
                .map(|v| max_abs(&v))
        })
    }

    pub fn g1(&self, theta: &SemiBasicOneForm, omega: &BasicTwoForm) -> ConditionReport {
        let r = self.run1("G1", |s| {
            let w = omega.jets(s.point)?;
            self.with_forms(theta, None, s, |l| l.lg1(&w)).map(|v| max_abs(&v))
        });
        self.annotate_trivial(theta, vec![r]).remove(0)
    }

    pub fn g2(&self, theta: &SemiBasicOneForm) -> ConditionReport {
        let r = self.run1("G2", |s| self.with_forms(theta, None, s, |l| l.lg2()).map(|v| max_abs(&v)));
        self.annotate_trivial(theta, vec![r]).remove(0)
    }

    /// Basic-ness of the derived `ω_ij = δθ_i/δx^j − δθ_j/δx^i`: the
    /// residual is `max |∂ω_ij/∂y^k|`.
    pub fn omega_basic(&self, theta: &SemiBasicOneForm) -> ConditionReport {
        let n = self.dim();
        self.run1("OMEGA", |s| {
            self.with_forms(theta, None, s, |l| {
                let mut rows = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        for k in 0..n {
                            rows.push(l.dy_omega(i, j, k));
                        }
                    }
                }
                rows
            })
            .map(|v| max_abs(&v))
        })
    }

    /// `|δ_S L − σ|`.
    pub fn lagrange(&self, lagrangian: &ScalarField, sigma: &SemiBasicOneForm) -> ConditionReport {
        self.run1("LAGRANGE", |s| {
            let lj = lagrangian.jet(s.point)?;
            let sg = sigma.jets(s.point)?;
            let t = zero_jets(self.dim());
            let local = Local {
                geo: s.geo,
                theta: &t,
                sigma: &sg,
            };
            let rows: Vec<f64> = local
                .lagrange(&lj)
                .iter()
                .zip(&sg)
                .map(|(a, b)| a - b.value())
                .collect();
            Ok(max_abs(&rows))
        })
    }

    /// Closedness of `ℒ_S θ − σ` on `TM`.
    pub fn thm1(&self, theta: &SemiBasicOneForm, sigma: &SemiBasicOneForm) -> ConditionReport {
        self.run1("THM1", |s| {
            self.with_forms(theta, Some(sigma), s, |l| l.thm1())
                .map(|v| max_abs(&v))
        })
    }

    fn euler_report(&self, id: &str, form: &SemiBasicOneForm, deg: f64) -> ConditionReport {
        self.run1(id, |s| {
            let mut m = 0.0f64;
            for c in form.comps() {
                m = m.max(c.euler_residual(s.point, deg)?.abs());
            }
            Ok(m)
        })
    }

    /// `C(G^i) − 2G^i`.
    pub fn spray_homogeneity(&self) -> ConditionReport {
        self.run1("HOM.spray", |s| {
            let y = &s.point.y;
            let m = s
                .geo
                .g_jets
                .iter()
                .map(|g| (g.euler(y) - 2.0 * g.value()).abs())
                .fold(0.0, f64::max);
            Ok(m)
        })
    }

    /// The `p > 1` route: homogeneity of the data, LGH1 and LGH3, and
    /// `δ_S L = σ` for `L = i_S θ / p`.
    pub fn homogeneous(
        &self,
        theta: &SemiBasicOneForm,
        sigma: &SemiBasicOneForm,
        p: f64,
    ) -> Result<Vec<ConditionReport>> {
        if !(p > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "the homogeneous route needs p > 1, got {p}"
            )));
        }
        let mut out = vec![
            self.spray_homogeneity(),
            self.euler_report("HOM.theta", theta, p - 1.0),
            self.euler_report("HOM.sigma", sigma, p),
        ];
        let lgh = self.lgh(theta, sigma);
        out.push(lgh[0].clone());
        out.push(lgh[2].clone());
        let l = theta.contract_spray().scale(1.0 / p);
        let mut thm5 = self.lagrange(&l, sigma);
        thm5.id = "THM5".into();
        out.push(thm5);
        Ok(out)
    }

    /// FMA (regularity, `i_S θ > 0`) and FMD (`d_J θ = 0`, `∇d_v θ = 0`,
    /// `ℒ_C θ = θ`).
    pub fn finsler_metrizable(&self, theta: &SemiBasicOneForm) -> Vec<ConditionReport> {
        let n = self.dim();
        let fma = self.run(&["FMA"], 0.0, |s| {
            let t = theta.jets(s.point)?;
            let g = DMatrix::from_fn(n, n, |i, j| t[i].dy(j));
            let det = g.determinant().abs();
            let contraction: f64 = t.iter().zip(&s.point.y).map(|(a, y)| a.value() * y).sum();
            Ok(vec![0.0f64.max(REGULAR_TOL - det).max(REGULAR_TOL - contraction)])
        });
        let fmd = self.run1("FMD", |s| {
            let t = theta.jets(s.point)?;
            let z = zero_jets(n);
            let l = Local {
                geo: s.geo,
                theta: &t,
                sigma: &z,
            };
            let mut rows = l.lgh1();
            rows.extend(l.lgh3());
            for c in &t {
                rows.push(c.euler(&s.point.y) - c.value());
            }
            Ok(max_abs(&rows))
        });
        let mut out = fma;
        out.push(fmd);
        out
    }

    fn horizontal_rows<F>(&self, id: &str, lagrangian: &ScalarField, sigma: &SemiBasicOneForm, f: F) -> ConditionReport
    where
        F: Fn(&[f64], &[Jet2], &[f64]) -> Vec<f64>,
    {
        let n = self.dim();
        self.run1(id, |s| {
            let lj = lagrangian.jet(s.point)?;
            let sg = sigma.jets(s.point)?;
            let hl: Vec<f64> = (0..n).map(|k| s.geo.horizontal(&lj, k)).collect();
            Ok(max_abs(&f(&hl, &sg, &s.point.y)))
        })
    }

    /// `2(p−1) δL/δx^i − (1−p) σ_i − ∂(σ_k y^k)/∂y^i`.
    pub fn thm6(&self, lagrangian: &ScalarField, sigma: &SemiBasicOneForm, p: f64) -> ConditionReport {
        self.horizontal_rows("THM6", lagrangian, sigma, |hl, sg, y| {
            (0..hl.len())
                .map(|i| {
                    let d_contr: f64 =
                        sg[i].value() + (0..y.len()).map(|k| y[k] * sg[k].dy(i)).sum::<f64>();
                    2.0 * (p - 1.0) * hl[i] - (1.0 - p) * sg[i].value() - d_contr
                })
                .collect()
        })
    }

    /// `(p−1) δL/δx^i − σ_i`.
    pub fn cor4(&self, lagrangian: &ScalarField, sigma: &SemiBasicOneForm, p: f64) -> ConditionReport {
        self.horizontal_rows("COR4", lagrangian, sigma, |hl, sg, _| {
            (0..hl.len())
                .map(|i| (p - 1.0) * hl[i] - sg[i].value())
                .collect()
        })
    }

    /// The `p = 1` route: precondition `i_S σ = 0`, then `d_J θ = 0` and
    /// `d_h θ = ½ d_J σ` on the horizontal frame.
    pub fn thm7(&self, theta: &SemiBasicOneForm, sigma: &SemiBasicOneForm) -> Vec<ConditionReport> {
        let n = self.dim();
        let pre = self.run1("THM7.pre", |s| {
            let sg = sigma.jets(s.point)?;
            Ok(sg.iter().zip(&s.point.y).map(|(a, y)| a.value() * y).sum::<f64>())
        });
        let main = self.run1("THM7", |s| {
            self.with_forms(theta, Some(sigma), s, |l| {
                let mut rows = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        rows.push(l.g(i, j) - l.g(j, i));
                        let dh = l.h_theta(j, i) - l.h_theta(i, j);
                        let dj = l.sigma[j].dy(i) - l.sigma[i].dy(j);
                        rows.push(dh - 0.5 * dj);
                    }
                }
                rows
            })
            .map(|v| max_abs(&v))
        });
        let main = self.annotate_trivial(theta, vec![main]).remove(0);
        vec![pre, main]
    }

    /// `ℒ_C θ = 0`, `d_J θ = 0`, `d_h θ = ω`.
    pub fn cor5(&self, theta: &SemiBasicOneForm, omega: &BasicTwoForm) -> ConditionReport {
        let n = self.dim();
        let r = self.run1("COR5", |s| {
            let w = omega.jets(s.point)?;
            self.with_forms(theta, None, s, |l| {
                let mut rows: Vec<f64> = l.theta.iter().map(|c| c.euler(&s.point.y)).collect();
                for i in 0..n {
                    for j in (i + 1)..n {
                        rows.push(l.g(i, j) - l.g(j, i));
                        rows.push(l.omega(i, j) - w[i][j].value());
                    }
                }
                rows
            })
            .map(|v| max_abs(&v))
        });
        self.annotate_trivial(theta, vec![r]).remove(0)
    }
}

/// `ω_ij = δθ_i/δx^j − δθ_j/δx^i` at `p`. On the gyroscopic class this
/// reproduces `ω_ij = N^k_i g_kj − N^k_j g_ki`.
pub fn derive_omega(
    sode: &SodeSystem,
    theta: &SemiBasicOneForm,
    p: &Point,
) -> Result<DMatrix<f64>, EvalError> {
    let geo = geometry_at(sode, p)?;
    let t = theta.jets(p)?;
    let z = zero_jets(sode.dim());
    let l = Local {
        geo: &geo,
        theta: &t,
        sigma: &z,
    };
    let n = sode.dim();
    Ok(DMatrix::from_fn(n, n, |i, j| l.omega(i, j)))
}

/// `δ_S L` at `p`.
pub fn lagrange_differential(
    sode: &SodeSystem,
    lagrangian: &ScalarField,
    p: &Point,
) -> Result<Vec<f64>, EvalError> {
    let geo = geometry_at(sode, p)?;
    let lj = lagrangian.jet(p)?;
    let z = zero_jets(sode.dim());
    let l = Local {
        geo: &geo,
        theta: &z,
        sigma: &z,
    };
    Ok(l.lagrange(&lj))
}

/// The energy `E_L = y^i ∂L/∂y^i − L` along a trajectory together with
/// `i_S σ` at each node.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub h: f64,
    pub energy: Vec<f64>,
    pub power: Vec<f64>,
}

impl EnergyTrace {
    pub fn drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().fold(0.0, |m, e| f64::max(m, (e - e0).abs()))
    }

    fn centered(&self, k: usize) -> f64 {
        (self.energy[k + 1] - self.energy[k - 1]) / (2.0 * self.h)
    }

    fn interior(&self) -> std::ops::Range<usize> {
        1..self.energy.len().saturating_sub(1)
    }

    /// Centered difference of `E_L` against `i_S σ` at the middle node.
    /// Carries the `h²/6 · d³E_L/dt³` truncation error of the quotient.
    pub fn pointwise_residuals(&self) -> Vec<f64> {
        self.interior().map(|k| self.centered(k) - self.power[k]).collect()
    }

    /// Centered difference of `E_L` against the Simpson mean of `i_S σ` over
    /// the same three-node stencil. Both sides estimate the mean of `dE_L/dt`
    /// on `[t_{k-1}, t_{k+1}]`, so only quadrature and integrator error remain.
    pub fn stencil_residuals(&self) -> Vec<f64> {
        self.interior()
            .map(|k| {
                let mean = (self.power[k - 1] + 4.0 * self.power[k] + self.power[k + 1]) / 6.0;
                self.centered(k) - mean
            })
            .collect()
    }

    pub fn pointwise_report(&self, tol: f64) -> ConditionReport {
        let samples = self.pointwise_residuals().into_iter().map(Ok);
        ConditionReport::from_samples("ENERGY.pointwise", tol, samples)
    }
}

/// `S(E_L) = i_S σ` along `traj`, compared on three-node stencils at the
/// interior nodes (see [`EnergyTrace::stencil_residuals`]). Tolerance `10·h²`.
pub fn check_energy_variation(
    lagrangian: &ScalarField,
    sigma: &SemiBasicOneForm,
    traj: &Trajectory,
) -> Result<(ConditionReport, EnergyTrace)> {
    let mut energy = Vec::with_capacity(traj.states.len());
    let mut power = Vec::with_capacity(traj.states.len());
    for p in &traj.states {
        let l = lagrangian.jet(p)?;
        energy.push(l.euler(&p.y) - l.value());
        let s = sigma.jets(p)?;
        power.push(s.iter().zip(&p.y).map(|(a, y)| a.value() * y).sum());
    }
    let trace = EnergyTrace {
        h: traj.h,
        energy,
        power,
    };
    let tol = ENERGY_TOL_FACTOR * traj.h * traj.h;
    let samples = trace.stencil_residuals().into_iter().map(Ok);
    let report = ConditionReport::from_samples("ENERGY", tol, samples);
    Ok((report, trace))
}

/// An instance of `ẍ^i + 2N^i_j(x) ẋ^j + V^i(x) = 0` with a constant metric.
#[derive(Debug, Clone)]
pub struct GyroClass {
    pub g: DMatrix<f64>,
    pub n: Vec<Vec<ScalarField>>,
    pub v: Vec<ScalarField>,
    pub sode: SodeSystem,
    /// `θ_i = g_ik y^k`.
    pub theta: SemiBasicOneForm,
    /// `ω_ij = N^k_i g_kj − N^k_j g_ki`.
    pub omega: BasicTwoForm,
}

impl GyroClass {
    pub fn new(g: DMatrix<f64>, n: Vec<Vec<ScalarField>>, v: Vec<ScalarField>) -> Result<GyroClass> {
        let dim = v.len();
        if g.nrows() != dim || g.ncols() != dim || n.len() != dim || n.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape(format!("gyroscopic data must be {dim}-dimensional")));
        }
        if (&g - g.transpose()).amax() > 0.0 || g.clone().cholesky().is_none() {
            return Err(Error::InvalidArgument("g must be symmetric positive definite".into()));
        }
        for f in n.iter().flatten().chain(&v) {
            if f.depends_on_y() {
                return Err(Error::InvalidArgument(format!("`{f}` must depend on x only")));
            }
        }
        let c = |a: f64| ScalarField::constant(dim, a);
        let coeffs = (0..dim)
            .map(|i| {
                let mut terms: Vec<ScalarField> = (0..dim)
                    .filter(|&j| !n[i][j].is_zero())
                    .map(|j| &n[i][j] * &ScalarField::y(dim, j))
                    .collect();
                terms.push(v[i].scale(0.5));
                ScalarField::sum(dim, &terms)
            })
            .collect();
        let sode = SodeSystem::new(coeffs, false)?;
        let theta = SemiBasicOneForm::new(
            (0..dim)
                .map(|i| {
                    let terms: Vec<ScalarField> = (0..dim)
                        .filter(|&k| g[(i, k)] != 0.0)
                        .map(|k| ScalarField::y(dim, k).scale(g[(i, k)]))
                        .collect();
                    ScalarField::sum(dim, &terms)
                })
                .collect(),
        )?;
        let mut entries = Vec::new();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let mut terms = Vec::new();
                for k in 0..dim {
                    if g[(k, j)] != 0.0 {
                        terms.push(&n[k][i] * &c(g[(k, j)]));
                    }
                    if g[(k, i)] != 0.0 {
                        terms.push(-&(&n[k][j] * &c(g[(k, i)])));
                    }
                }
                entries.push((i, j, ScalarField::sum(dim, &terms)));
            }
        }
        let omega = BasicTwoForm::from_upper(dim, entries)?;
        Ok(GyroClass {
            g,
            n,
            v,
            sode,
            theta,
            omega,
        })
    }

    /// The classic form `ẍ = A ẋ + B x`: `N = −A/2`, `V = −B x`.
    pub fn classic(g: DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<GyroClass> {
        let dim = a.nrows();
        let n = (0..dim)
            .map(|i| (0..dim).map(|j| ScalarField::constant(dim, -0.5 * a[(i, j)])).collect())
            .collect();
        let v = (0..dim)
            .map(|i| {
                let terms: Vec<ScalarField> = (0..dim)
                    .filter(|&j| b[(i, j)] != 0.0)
                    .map(|j| ScalarField::x(dim, j).scale(-b[(i, j)]))
                    .collect();
                ScalarField::sum(dim, &terms)
            })
            .collect();
        GyroClass::new(g, n, v)
    }

    /// The two algebraic conditions on `N` and `V`, at sample base points.
    pub fn check_gnv(&self, domain: &SampleDomain, tol: f64) -> Result<Vec<ConditionReport>> {
        domain.validate()?;
        let dim = self.v.len();
        let g = &self.g;
        let pts = domain.points();
        let eval = |p: &Point| -> Result<(f64, f64), EvalError> {
            let nv = self
                .n
                .iter()
                .map(|row| row.iter().map(|f| f.eval(p)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            let vj = self.v.iter().map(|f| f.jet(p)).collect::<Result<Vec<_>, _>>()?;
            let (mut r1, mut r2) = (0.0f64, 0.0f64);
            for i in 0..dim {
                for j in 0..dim {
                    let mut a = 0.0;
                    let mut b = 0.0;
                    for k in 0..dim {
                        a += g[(i, k)] * nv[k][j] + g[(j, k)] * nv[k][i];
                        b += g[(i, k)] * vj[k].dx(j) - g[(j, k)] * vj[k].dx(i);
                    }
                    r1 = r1.max(a.abs());
                    r2 = r2.max(b.abs());
                }
            }
            Ok((r1, r2))
        };
        let results: Vec<_> = pts.iter().map(eval).collect();
        let pick = |k: usize| {
            results.iter().map(move |r| match r {
                Ok((a, b)) => Ok(if k == 0 { *a } else { *b }),
                Err(e) => Err(e.clone()),
            })
        };
        Ok(vec![
            ConditionReport::from_samples("GNV.1", tol, pick(0)),
            ConditionReport::from_samples("GNV.2", tol, pick(1)),
        ])
    }

    /// GNV.1, GNV.2 and G1 with the constructed `θ` and `ω`.
    pub fn check(&self, domain: &SampleDomain, tol: f64) -> Result<Vec<ConditionReport>> {
        let mut out = self.check_gnv(domain, tol)?;
        let checker = Checker::new(&self.sode, domain, tol)?;
        out.push(checker.g1(&self.theta, &self.omega));
        Ok(out)
    }
}

/// Convenience wrapper: GNV and G1 reports for gyroscopic data.
pub fn check_gyro_class(
    g: DMatrix<f64>,
    n: Vec<Vec<ScalarField>>,
    v: Vec<ScalarField>,
    domain: &SampleDomain,
    tol: f64,
) -> Result<Vec<ConditionReport>> {
    GyroClass::new(g, n, v)?.check(domain, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::integrate_geodesic;

    fn f(src: &str) -> ScalarField {
        ScalarField::parse(src, 2).unwrap()
    }

    fn ex1() -> SodeSystem {
        SodeSystem::parse(&["(y1^2 + y2^2)/2", "2*y1*y2"], true).unwrap()
    }

    fn ex1_theta() -> SemiBasicOneForm {
        SemiBasicOneForm::parse(&["2*y1", "y2"]).unwrap()
    }

    fn ex1_dissipation() -> ScalarField {
        f("-2/3*y1^3 - 2*y1*y2^2")
    }

    fn domain() -> SampleDomain {
        SampleDomain::new(2).with_count(60).with_seed(7)
    }

    fn checker(sode: &SodeSystem) -> Checker {
        Checker::new(sode, &domain(), 1e-9).unwrap()
    }

    /// `σ_i = S(∂L/∂y^i) − ∂L/∂x^i`, built symbolically.
    fn lagrange_form(sode: &SodeSystem, l: &ScalarField) -> SemiBasicOneForm {
        let n = sode.dim();
        let s = |h: &ScalarField| {
            let mut terms = Vec::new();
            for k in 0..n {
                terms.push(&ScalarField::y(n, k) * &h.dx(k));
                terms.push((&sode.coeffs()[k] * &h.dy(k)).scale(-2.0));
            }
            ScalarField::sum(n, &terms)
        };
        SemiBasicOneForm::new((0..n).map(|i| &s(&l.dy(i)) - &l.dx(i)).collect()).unwrap()
    }

    #[test]
    fn ex1_dissipative_conditions_pass() {
        let c = checker(&ex1());
        let theta = ex1_theta();
        let sigma = SemiBasicOneForm::vertical_differential(&ex1_dissipation());
        for r in c.lgh(&theta, &sigma) {
            assert!(r.pass, "{r:?}");
            assert!(r.note.is_none());
        }
        assert!(c.d1(&theta).pass);
        assert!(c.d2(&theta, &ex1_dissipation()).pass);
        assert!(c.d3(&theta).pass);
        assert!(c.thm1(&theta, &sigma).pass);
        let l = f("y1^2 + y2^2/2");
        assert!(c.lagrange(&l, &sigma).pass);
        assert!(c.omega_basic(&theta).pass);
    }

    #[test]
    fn ex1_fails_classic_h3_only() {
        let c = checker(&ex1());
        let r = c.classic(&ex1_theta());
        assert!(r[0].pass && r[1].pass, "{r:?}");
        assert!(!r[2].pass);
        assert!(r[2].max > 0.5);
    }

    #[test]
    fn asymmetric_multiplier_fails_lgh1() {
        let c = checker(&ex1());
        let theta = SemiBasicOneForm::parse(&["y2", "0"]).unwrap();
        let r = c.lgh(&theta, &SemiBasicOneForm::zero(2));
        assert!(!r[0].pass);
    }

    #[test]
    fn perturbed_force_fails_closedness() {
        let c = checker(&ex1());
        let sigma = SemiBasicOneForm::parse(&["-2*y1^2 - 2*y2^2 + y2^2", "-4*y1*y2"]).unwrap();
        assert!(!c.thm1(&ex1_theta(), &sigma).pass);
        assert!(c.thm1(&SemiBasicOneForm::zero(2), &SemiBasicOneForm::zero(2)).pass);
    }

    #[test]
    fn lagrange_differential_values() {
        let p = Point::new(vec![0.3, -0.2], vec![1.0, 2.0]);
        let v = lagrange_differential(&ex1(), &f("y1^2 + y2^2/2"), &p).unwrap();
        assert!((v[0] + 10.0).abs() < 1e-12 && (v[1] + 8.0).abs() < 1e-12);

        let proj = SodeSystem::parse(&["sqrt(y1^2+y2^2)*y1", "sqrt(y1^2+y2^2)*y2"], true).unwrap();
        let p = Point::new(vec![0.0, 0.0], vec![3.0, 4.0]);
        let v = lagrange_differential(&proj, &f("y1^2 + y2^2"), &p).unwrap();
        assert!((v[0] + 60.0).abs() < 1e-10 && (v[1] + 80.0).abs() < 1e-10);
    }

    #[test]
    fn lgh_holds_for_any_lagrangian_with_its_own_force() {
        // A non-homogeneous semispray in three dimensions with a regular L and
        // σ := δ_S L. Every generalized condition must then hold.
        let sode = SodeSystem::parse(
            &["x2*y1^2 + y3*x1", "y1*y2 - x3^2 + 0.5*y3^2", "x1*x2*y2 + y1*y3"],
            false,
        )
        .unwrap();
        let l = ScalarField::parse("y1^2 + x1*y1*y2 + 2*y2^2 + y3^2*(1 + x2^2) + y1^3*x3", 3).unwrap();
        let theta = SemiBasicOneForm::vertical_differential(&l);
        let sigma = lagrange_form(&sode, &l);
        let c = Checker::new(&sode, &SampleDomain::new(3).with_count(40), 1e-8).unwrap();
        for r in c.lgh(&theta, &sigma) {
            assert!(r.pass, "{r:?}");
        }
        assert!(c.thm1(&theta, &sigma).pass);
        assert!(c.lagrange(&l, &sigma).pass);
        let wrong = SemiBasicOneForm::new(sigma.comps().iter().map(|s| s.scale(-1.0)).collect()).unwrap();
        let r = c.lgh(&theta, &wrong);
        assert!(!r[1].pass || !r[2].pass);
    }

    #[test]
    fn cyclic_sums_vanish_in_two_dimensions() {
        let sode = SodeSystem::parse(&["x1*y1^2 + y2", "sin(x2)*y1*y2 + x1"], false).unwrap();
        let theta = SemiBasicOneForm::parse(&["y1*y2 + x1", "y2^3*x2"]).unwrap();
        let r = checker(&sode).obstruction(&theta);
        assert_eq!(r.max, 0.0);
    }

    #[test]
    fn trivial_theta_is_noted() {
        let c = checker(&ex1());
        let theta = SemiBasicOneForm::parse(&["x1", "x2"]).unwrap();
        let r = c.d1(&theta);
        assert!(r.note.is_some());
    }

    fn skew_gyro(n12: f64, n21: f64) -> GyroClass {
        let g = DMatrix::identity(2, 2);
        let c = |v: f64| ScalarField::constant(2, v);
        GyroClass::new(
            g,
            vec![vec![c(0.0), c(n12)], vec![c(n21), c(0.0)]],
            vec![f("x1"), f("x2")],
        )
        .unwrap()
    }

    #[test]
    fn gyroscopic_instance_passes_g1() {
        let gy = skew_gyro(1.0, -1.0);
        let p = Point::new(vec![0.1, 0.2], vec![1.0, -0.5]);
        let w = gy.omega.comp(0, 1).eval(&p).unwrap();
        assert_eq!(w, -2.0);
        let derived = derive_omega(&gy.sode, &gy.theta, &p).unwrap();
        assert!((derived[(0, 1)] + 2.0).abs() < 1e-12);
        assert!((derived[(1, 0)] - 2.0).abs() < 1e-12);
        for r in gy.check(&domain(), 1e-8).unwrap() {
            assert!(r.pass, "{r:?}");
        }
        let c = checker(&gy.sode);
        assert!(c.g2(&gy.theta).pass);
        assert!(c.omega_basic(&gy.theta).pass);
    }

    #[test]
    fn non_skew_connection_fails() {
        let gy = skew_gyro(1.0, 1.0);
        let r = gy.check(&domain(), 1e-8).unwrap();
        assert!(!r[0].pass && r[0].max >= 1.0);
        assert!(!r[2].pass);
    }

    #[test]
    fn classic_gyro_with_nonsymmetric_b_fails_second_condition() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, -3.0, 0.0]);
        let good = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.5, -2.0]);
        let bad = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, -2.0]);
        let g = DMatrix::identity(2, 2);
        let r = GyroClass::classic(g.clone(), &a, &good).unwrap().check(&domain(), 1e-8).unwrap();
        assert!(r.iter().all(|r| r.pass), "{r:?}");
        let r = GyroClass::classic(g, &a, &bad).unwrap().check(&domain(), 1e-8).unwrap();
        assert!(r[0].pass && !r[1].pass);
    }

    #[test]
    fn basic_two_form_rejects_velocity() {
        let err = BasicTwoForm::parse(2, &[(1, 2, "x1*y2")]).unwrap_err();
        assert!(matches!(err, Error::Parse(ParseError::Dimension { .. })));
        let w = BasicTwoForm::parse(2, &[(1, 2, "x1")]).unwrap();
        let p = Point::new(vec![3.0, 0.0], vec![0.0, 0.0]);
        assert_eq!(w.comp(1, 0).eval(&p).unwrap(), -3.0);
    }

    fn projective(lambda: f64) -> SodeSystem {
        let g1 = format!("{lambda}*sqrt(y1^2+y2^2)*y1");
        let g2 = format!("{lambda}*sqrt(y1^2+y2^2)*y2");
        SodeSystem::parse(&[&g1, &g2], true).unwrap()
    }

    fn projective_sigma(lambda: f64) -> SemiBasicOneForm {
        let a = format!("{}*sqrt(y1^2+y2^2)*y1", -4.0 * lambda);
        let b = format!("{}*sqrt(y1^2+y2^2)*y2", -4.0 * lambda);
        SemiBasicOneForm::parse(&[&a, &b]).unwrap()
    }

    #[test]
    fn projective_family() {
        let l = f("y1^2 + y2^2");
        let theta = SemiBasicOneForm::vertical_differential(&l);
        for lambda in [0.5, 1.0, 2.0] {
            let c = checker(&projective(lambda));
            let sigma = projective_sigma(lambda);
            assert!(c.lagrange(&l, &sigma).pass);
            assert!(c.thm6(&l, &sigma, 2.0).pass);
            assert!(c.cor4(&l, &sigma, 2.0).pass);
            let h = c.classic(&theta);
            assert!(!h[2].pass && h[2].max >= 0.1);
            for r in c.homogeneous(&theta, &sigma, 2.0).unwrap() {
                assert!(r.pass, "{r:?}");
            }
            assert!(c.lgh(&theta, &sigma)[1].max <= 1e-7);
        }
        let c = checker(&projective(0.0));
        let euclid = SemiBasicOneForm::parse(&["y1", "y2"]).unwrap();
        assert!(c.finsler_metrizable(&euclid).iter().all(|r| r.pass));
    }

    #[test]
    fn homogeneous_route_rejects_wrong_degree() {
        let c = checker(&SodeSystem::flat(2));
        let theta = SemiBasicOneForm::parse(&["y1/sqrt(y1^2+y2^2)", "y2/sqrt(y1^2+y2^2)"]).unwrap();
        let r = c.homogeneous(&theta, &SemiBasicOneForm::zero(2), 2.0).unwrap();
        assert!(!r[1].pass);
        assert!(c.homogeneous(&theta, &SemiBasicOneForm::zero(2), 1.0).is_err());
    }

    #[test]
    fn finsler_checks() {
        let c = checker(&ex1());
        let euclid = SemiBasicOneForm::parse(&["y1", "y2"]).unwrap();
        let r = c.finsler_metrizable(&euclid);
        assert!(r[0].pass && !r[1].pass);
        let basic = SemiBasicOneForm::parse(&["x1", "1"]).unwrap();
        assert!(!checker(&SodeSystem::flat(2)).finsler_metrizable(&basic)[0].pass);
    }

    #[test]
    fn finslerian_gyroscopic_system() {
        // G^i = −½ F ω_ij y^j with constant ω_12 = c, θ = d_J F.
        let fsrc = "sqrt(y1^2+y2^2)";
        let sode = SodeSystem::parse(
            &[&format!("-0.5*{fsrc}*1.5*y2"), &format!("0.5*{fsrc}*1.5*y1")],
            true,
        )
        .unwrap();
        let theta = SemiBasicOneForm::parse(&[&format!("y1/{fsrc}"), &format!("y2/{fsrc}")]).unwrap();
        let omega = BasicTwoForm::parse(2, &[(1, 2, "1.5")]).unwrap();
        let sigma = omega.contract_spray();
        let c = checker(&sode);
        let r = c.thm7(&theta, &sigma);
        assert!(r.iter().all(|r| r.pass), "{r:?}");
        assert!(c.cor5(&theta, &omega).pass);
        assert!(c.lagrange(&f(fsrc), &sigma).pass);
        let wrong = BasicTwoForm::parse(2, &[(1, 2, "-1.5")]).unwrap();
        assert!(!c.cor5(&theta, &wrong).pass);
        let pushed = SemiBasicOneForm::parse(&["y1", "y2"]).unwrap();
        assert!(!c.thm7(&theta, &pushed)[0].pass);
    }

    #[test]
    fn energy_variation_along_ex1() {
        let sode = ex1();
        let traj = integrate_geodesic(&sode, &Point::new(vec![0.0, 0.0], vec![1.0, 2.0]), 1e-3, 100).unwrap();
        let sigma = SemiBasicOneForm::vertical_differential(&ex1_dissipation());
        let (r, trace) = check_energy_variation(&f("y1^2 + y2^2/2"), &sigma, &traj).unwrap();
        assert!(r.pass && r.max <= 1e-5, "{r:?}");
        assert_eq!(r.count, 99);
        let pw = trace.pointwise_report(1e-5);
        assert!(pw.max > 1e-4 && pw.max < 1e-2, "{pw:?}");
        assert!(trace.power.iter().all(|p| *p < 0.0));
        for (p, s) in traj.states.iter().zip(&trace.power) {
            let d = ex1_dissipation().eval(p).unwrap();
            assert!((3.0 * d - s).abs() < 1e-10);
        }
    }

    #[test]
    fn gyroscopic_energy_is_conserved() {
        let gy = skew_gyro(1.0, -1.0);
        let traj = integrate_geodesic(&gy.sode, &Point::new(vec![0.5, 0.0], vec![0.0, 1.0]), 1e-3, 2000).unwrap();
        let l = f("(y1^2 + y2^2)/2 - (x1^2 + x2^2)/2");
        let (r, trace) = check_energy_variation(&l, &gy.omega.contract_spray(), &traj).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(trace.drift() <= 1e-6);
    }
}
