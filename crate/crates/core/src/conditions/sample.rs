use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Point;

/// Where condition residuals are sampled: a box in `x` times an annulus
/// `r_min ≤ ‖y‖ ≤ r_max` in `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDomain {
    pub dim: usize,
    pub x_low: Vec<f64>,
    pub x_high: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
    pub seed: u64,
}

impl SampleDomain {
    /// `x ∈ [−1, 1]^n`, `‖y‖ ∈ [0.5, 2]`, 200 points, seed 0.
    pub fn new(dim: usize) -> SampleDomain {
        SampleDomain {
            dim,
            x_low: vec![-1.0; dim],
            x_high: vec![1.0; dim],
            r_min: 0.5,
            r_max: 2.0,
            count: 200,
            seed: 0,
        }
    }

    pub fn with_count(mut self, count: usize) -> SampleDomain {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> SampleDomain {
        self.seed = seed;
        self
    }

    pub fn with_x_box(mut self, low: f64, high: f64) -> SampleDomain {
        self.x_low = vec![low; self.dim];
        self.x_high = vec![high; self.dim];
        self
    }

    pub fn with_annulus(mut self, r_min: f64, r_max: f64) -> SampleDomain {
        self.r_min = r_min;
        self.r_max = r_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.dim == 0 {
            return bad("domain dimension must be positive".into());
        }
        if self.x_low.len() != self.dim || self.x_high.len() != self.dim {
            return bad(format!("x bounds must have {} entries", self.dim));
        }
        if self.x_low.iter().zip(&self.x_high).any(|(l, h)| !(l <= h)) {
            return bad("x_low must not exceed x_high".into());
        }
        if !(self.r_min > 0.0 && self.r_min <= self.r_max && self.r_max.is_finite()) {
            return bad(format!(
                "need 0 < r_min <= r_max, got {} and {}",
                self.r_min, self.r_max
            ));
        }
        if self.count == 0 {
            return bad("sample count must be at least 1".into());
        }
        Ok(())
    }

    /// The sample list. Identical settings give identical points.
    pub fn points(&self) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count).map(|_| self.draw(&mut rng)).collect()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Point {
        let x = (0..self.dim)
            .map(|i| {
                let (l, h) = (self.x_low[i], self.x_high[i]);
                if l == h {
                    l
                } else {
                    rng.gen_range(l..h)
                }
            })
            .collect();
        let dir = loop {
            let v: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|a| a / norm).collect::<Vec<_>>();
            }
        };
        let r = if self.r_min == self.r_max {
            self.r_min
        } else {
            rng.gen_range(self.r_min..self.r_max)
        };
        Point::new(x, dir.into_iter().map(|d| r * d).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_respect_the_domain_and_the_seed() {
        let d = SampleDomain::new(3).with_count(50).with_seed(7);
        let pts = d.points();
        assert_eq!(pts.len(), 50);
        for p in &pts {
            assert!(p.x.iter().all(|v| (-1.0..=1.0).contains(v)));
            let r = p.y_norm();
            assert!((0.5 - 1e-12..=2.0 + 1e-12).contains(&r));
        }
        assert_eq!(pts, d.points());
        assert_ne!(pts, d.clone().with_seed(8).points());
    }

    #[test]
    fn validation() {
        assert!(SampleDomain::new(2).validate().is_ok());
        assert!(SampleDomain::new(2).with_count(0).validate().is_err());
        assert!(SampleDomain::new(2).with_annulus(0.0, 1.0).validate().is_err());
        assert!(SampleDomain::new(2).with_annulus(2.0, 1.0).validate().is_err());
        assert!(SampleDomain::new(2).with_x_box(1.0, -1.0).validate().is_err());
    }
}
