use serde::Serialize;

use super::SodeSystem;
use crate::error::{BlowupError, Error, Result};
use crate::expr::Point;

/// Solution curve `t ↦ (x(t), ẋ(t))` sampled at fixed steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Point>,
    pub h: f64,
    pub method: &'static str,
}

impl Trajectory {
    pub fn last(&self) -> &Point {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

fn rhs(sode: &SodeSystem, p: &Point) -> Option<(Vec<f64>, Vec<f64>)> {
    let g = sode.values(p).ok()?;
    let dy: Vec<f64> = g.iter().map(|v| -2.0 * v).collect();
    Some((p.y.clone(), dy))
}

fn axpy(p: &Point, h: f64, k: &(Vec<f64>, Vec<f64>)) -> Point {
    Point {
        x: p.x.iter().zip(&k.0).map(|(a, b)| a + h * b).collect(),
        y: p.y.iter().zip(&k.1).map(|(a, b)| a + h * b).collect(),
    }
}

fn rk4_step(sode: &SodeSystem, p: &Point, h: f64) -> Option<Point> {
    let k1 = rhs(sode, p)?;
    let k2 = rhs(sode, &axpy(p, h / 2.0, &k1))?;
    let k3 = rhs(sode, &axpy(p, h / 2.0, &k2))?;
    let k4 = rhs(sode, &axpy(p, h, &k3))?;
    let comb = |a: &[f64], b: &[f64], c: &[f64], d: &[f64], base: &[f64]| -> Vec<f64> {
        (0..base.len())
            .map(|i| base[i] + h / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
            .collect()
    };
    let next = Point {
        x: comb(&k1.0, &k2.0, &k3.0, &k4.0, &p.x),
        y: comb(&k1.1, &k2.1, &k3.1, &k4.1, &p.y),
    };
    let finite = next.x.iter().chain(&next.y).all(|v| v.is_finite());
    finite.then_some(next)
}

/// Classical fixed-step RK4 on `ẋ = y, ẏ = −2G(x, y)`.
///
/// Fails with [`BlowupError`] as soon as a stage leaves the domain of `G`
/// or a state stops being finite.
pub fn integrate_geodesic(
    sode: &SodeSystem,
    init: &Point,
    h: f64,
    steps: usize,
) -> Result<Trajectory> {
    if !(h > 0.0) || steps == 0 {
        return Err(Error::InvalidArgument(format!(
            "need h > 0 and steps >= 1, got h = {h}, steps = {steps}"
        )));
    }
    if init.dim() != sode.dim() {
        return Err(Error::Shape(format!(
            "initial point has dimension {}, system has {}",
            init.dim(),
            sode.dim()
        )));
    }
    let mut times = vec![0.0];
    let mut states = vec![init.clone()];
    for step in 1..=steps {
        let prev = states.last().unwrap();
        match rk4_step(sode, prev, h) {
            Some(next) => {
                times.push(step as f64 * h);
                states.push(next);
            }
            None => {
                return Err(BlowupError {
                    time: times[step - 1],
                    last: prev.clone(),
                }
                .into())
            }
        }
    }
    Ok(Trajectory {
        times,
        states,
        h,
        method: "rk4",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_motion_is_a_straight_line() {
        let init = Point::new(vec![0.0, 0.0], vec![1.0, 0.0]);
        let t = integrate_geodesic(&SodeSystem::flat(2), &init, 0.1, 10).unwrap();
        assert_eq!(t.states.len(), 11);
        assert!((t.last().x[0] - 1.0).abs() < 1e-14);
        assert_eq!(t.last().x[1], 0.0);
        assert_eq!(t.last().y, vec![1.0, 0.0]);
    }

    #[test]
    fn quadratic_drag_matches_closed_form() {
        let s = SodeSystem::parse(&["y1^2/2"], true).unwrap();
        let init = Point::new(vec![0.0], vec![1.0]);
        let t = integrate_geodesic(&s, &init, 1e-3, 1000).unwrap();
        assert!((t.last().x[0] - 2f64.ln()).abs() < 1e-8);
        assert!((t.last().y[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn blowup_reports_last_finite_state() {
        // ẍ = ẋ², solution −log(1 − t) blows up at t = 1.
        let s = SodeSystem::parse(&["-y1^2/2"], true).unwrap();
        let init = Point::new(vec![0.0], vec![1.0]);
        let err = integrate_geodesic(&s, &init, 0.05, 10_000).unwrap_err();
        match err {
            Error::Blowup(b) => {
                assert!(b.time > 0.5 && b.time < 2.0, "{}", b.time);
                assert!(b.last.y[0].is_finite());
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bad_arguments() {
        let init = Point::new(vec![0.0], vec![1.0]);
        let s = SodeSystem::flat(1);
        assert!(integrate_geodesic(&s, &init, 0.0, 5).is_err());
        assert!(integrate_geodesic(&s, &init, 0.1, 0).is_err());
        assert!(integrate_geodesic(&SodeSystem::flat(2), &init, 0.1, 3).is_err());
    }
}
