use crate::conditions::lagrange_differential;
use crate::error::{Error, Result};
use crate::expr::poly::radial_potential;
use crate::expr::{Point, Poly, ScalarField};
use crate::geometry::{SemiBasicOneForm, SodeSystem};

/// Relative size below which polynomial coefficients are dropped.
pub const CHOP_EPS: f64 = 1e-12;

fn jets_scale(comps: &[ScalarField], points: &[Point]) -> f64 {
    points
        .iter()
        .filter_map(|p| comps.iter().map(|c| c.jet(p)).collect::<Result<Vec<_>, _>>().ok())
        .flat_map(|js| {
            js.into_iter()
                .flat_map(|j| std::iter::once(j.value().abs()).chain(j.grad_y().into_iter().map(f64::abs)))
                .collect::<Vec<_>>()
        })
        .fold(1.0, f64::max)
}

/// `max |∂φ_i/∂y^j − ∂φ_j/∂y^i|` over the samples.
fn y_curl(comps: &[ScalarField], points: &[Point]) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in points {
        let js = comps.iter().map(|c| c.jet(p)).collect::<Result<Vec<_>, _>>()?;
        for i in 0..js.len() {
            for j in (i + 1)..js.len() {
                worst = worst.max((js[i].dy(j) - js[j].dy(i)).abs());
            }
        }
    }
    Ok(worst)
}

/// Common homogeneity degree `k` of the components (`C(φ_i) = k φ_i`),
/// if there is one on the samples.
fn homogeneity_degree(comps: &[ScalarField], points: &[Point], tol: f64) -> Result<Option<f64>> {
    let mut k = None;
    for p in points {
        let js = comps.iter().map(|c| c.jet(p)).collect::<Result<Vec<_>, _>>()?;
        let num: f64 = js.iter().map(|j| j.euler(&p.y) * j.value()).sum();
        let den: f64 = js.iter().map(|j| j.value() * j.value()).sum();
        if den > 1e-20 {
            k = Some(num / den);
            break;
        }
    }
    let Some(k) = k else { return Ok(None) };
    for p in points {
        for c in comps {
            if c.euler_residual(p, k)?.abs() > tol {
                return Ok(None);
            }
        }
    }
    Ok(Some(k))
}

/// `P` with `∂P/∂y^i = φ_i` and no pure-`x` part.
///
/// Polynomial components are integrated exactly along rays in `y`.
/// Otherwise, components that share a homogeneity degree `k > −1` use
/// `P = φ_i y^i / (k + 1)`, the same ray integral in closed form.
/// `what` names the object in errors.
pub fn fibre_potential(comps: &[ScalarField], points: &[Point], what: &str) -> Result<ScalarField> {
    let dim = comps.len();
    let scale = jets_scale(comps, points);
    let tol = 1e-8 * scale;
    let curl = y_curl(comps, points)?;
    if curl > tol {
        return Err(Error::Closedness {
            what: format!("{what}: components are not closed in y"),
            residual: curl,
        });
    }
    let polys: Option<Vec<Poly>> = comps.iter().map(Poly::from_field).collect();
    let potential = match polys {
        Some(ps) => radial_potential(&ps).drop_pure_x().chop(CHOP_EPS).to_field(),
        None => match homogeneity_degree(comps, points, tol)? {
            Some(k) if k > -1.0 + 1e-9 => {
                let terms: Vec<ScalarField> = comps
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(i, c)| c * &ScalarField::y(dim, i))
                    .collect();
                ScalarField::sum(dim, &terms).scale(1.0 / (k + 1.0))
            }
            _ => {
                return Err(Error::NotReconstructible(format!(
                    "{what}: components are neither polynomial nor jointly homogeneous"
                )))
            }
        },
    };
    for p in points {
        let j = potential.jet(p)?;
        for (i, c) in comps.iter().enumerate() {
            let r = (j.dy(i) - c.eval(p)?).abs();
            if r > 1e-10 * scale {
                return Err(Error::Closedness {
                    what: format!("{what}: potential does not reproduce the components"),
                    residual: r,
                });
            }
        }
    }
    Ok(potential)
}

/// `L` with `d_J L = θ`, gauge `L(x, 0) = 0`.
pub fn reconstruct_lagrangian(theta: &SemiBasicOneForm, points: &[Point]) -> Result<ScalarField> {
    fibre_potential(theta.comps(), points, "theta")
}

/// `S(f) = y^k ∂f/∂x^k − 2G^k ∂f/∂y^k` as an expression.
pub fn spray_field(sode: &SodeSystem, f: &ScalarField) -> ScalarField {
    let n = sode.dim();
    let mut terms = Vec::new();
    for k in 0..n {
        let fx = f.dx(k);
        if !fx.is_zero() {
            terms.push(&ScalarField::y(n, k) * &fx);
        }
        let fy = f.dy(k);
        if !fy.is_zero() && !sode.coeffs()[k].is_zero() {
            terms.push((&sode.coeffs()[k] * &fy).scale(-2.0));
        }
    }
    ScalarField::sum(n, &terms)
}

/// `δf/δx^i = ∂f/∂x^i − N^l_i ∂f/∂y^l` as expressions.
pub fn horizontal_fields(sode: &SodeSystem, f: &ScalarField) -> Vec<ScalarField> {
    let n = sode.dim();
    (0..n)
        .map(|i| {
            let mut out = f.dx(i);
            for l in 0..n {
                let nli = sode.coeffs()[l].dy(i);
                let fy = f.dy(l);
                if !nli.is_zero() && !fy.is_zero() {
                    out = &out - &(&nli * &fy);
                }
            }
            out
        })
        .collect()
}

/// `𝒟 = S(L) − 2f` with `∂f/∂y^i = δL/δx^i`, so that `δ_S L = d_J 𝒟`.
/// The pure-`x` part is dropped when `𝒟` is polynomial.
pub fn reconstruct_dissipation(sode: &SodeSystem, lagrangian: &ScalarField, points: &[Point]) -> Result<ScalarField> {
    let h = horizontal_fields(sode, lagrangian);
    let f = fibre_potential(&h, points, "d_h L")?;
    let s_l = spray_field(sode, lagrangian);
    let d = match (Poly::from_field(&s_l), Poly::from_field(&f)) {
        (Some(a), Some(b)) => a.add(&b.scale(-2.0)).drop_pure_x().chop(CHOP_EPS).to_field(),
        _ => &s_l - &f.scale(2.0),
    };
    let scale = jets_scale(&h, points);
    for p in points {
        let el = lagrange_differential(sode, lagrangian, p)?;
        let j = d.jet(p)?;
        for (i, v) in el.iter().enumerate() {
            let r = (v - j.dy(i)).abs();
            if r > 1e-8 * scale {
                return Err(Error::Closedness {
                    what: "dissipation does not reproduce the Lagrange differential".into(),
                    residual: r,
                });
            }
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::SampleDomain;

    fn pts() -> Vec<Point> {
        SampleDomain::new(2).with_count(30).points()
    }

    fn poly(f: &ScalarField) -> Poly {
        Poly::from_field(f).unwrap()
    }

    #[test]
    fn ex1_lagrangian_and_dissipation() {
        let sode = SodeSystem::parse(&["(y1^2 + y2^2)/2", "2*y1*y2"], true).unwrap();
        let theta = SemiBasicOneForm::parse(&["2*y1", "y2"]).unwrap();
        let l = reconstruct_lagrangian(&theta, &pts()).unwrap();
        assert_eq!(poly(&l), poly(&ScalarField::parse("y1^2 + 0.5*y2^2", 2).unwrap()));
        let d = reconstruct_dissipation(&sode, &l, &pts()).unwrap();
        let want = poly(&ScalarField::parse("-2/3*y1^3 - 2*y1*y2^2", 2).unwrap());
        let diff = poly(&d).add(&want.scale(-1.0)).chop(1e-12);
        assert!(diff.terms().all(|(_, c)| c.abs() < 1e-12), "{}", poly(&d));
    }

    #[test]
    fn flat_euclidean() {
        let theta = SemiBasicOneForm::parse(&["y1", "y2"]).unwrap();
        let l = reconstruct_lagrangian(&theta, &pts()).unwrap();
        assert_eq!(l.to_string(), poly(&ScalarField::parse("y1^2/2 + y2^2/2", 2).unwrap()).to_field().to_string());
        let d = reconstruct_dissipation(&SodeSystem::flat(2), &l, &pts()).unwrap();
        assert!(poly(&d).is_zero());
    }

    #[test]
    fn asymmetric_multiplier_is_rejected() {
        let theta = SemiBasicOneForm::parse(&["y2", "0"]).unwrap();
        assert!(matches!(
            reconstruct_lagrangian(&theta, &pts()),
            Err(Error::Closedness { .. })
        ));
    }

    #[test]
    fn projective_dissipation_is_homogeneous() {
        for lambda in [0.5, 1.0, 2.0] {
            let g1 = format!("{lambda}*sqrt(y1^2+y2^2)*y1");
            let g2 = format!("{lambda}*sqrt(y1^2+y2^2)*y2");
            let sode = SodeSystem::parse(&[&g1, &g2], true).unwrap();
            let l = ScalarField::parse("y1^2 + y2^2", 2).unwrap();
            let d = reconstruct_dissipation(&sode, &l, &pts()).unwrap();
            for p in pts() {
                let f = p.y_norm();
                let v = d.eval(&p).unwrap();
                assert!((v + 4.0 / 3.0 * lambda * f.powi(3)).abs() < 1e-10);
                assert!(d.euler_residual(&p, 3.0).unwrap().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn non_polynomial_inhomogeneous_is_not_reconstructible() {
        let theta = SemiBasicOneForm::parse(&["sin(y1)", "y2"]).unwrap();
        assert!(matches!(
            reconstruct_lagrangian(&theta, &pts()),
            Err(Error::NotReconstructible(_))
        ));
    }
}
