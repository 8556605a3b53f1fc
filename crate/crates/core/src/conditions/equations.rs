//! Pointwise local equations, as signed rows.
//!
//! Every function here is affine in the jets of `θ` (and of `σ`, `𝒟`, `ω`
//! where present), which is what lets the solver build its linear system by
//! evaluating the same rows on basis elements.

use crate::expr::Jet2;
use crate::geometry::GeometryJet;

/// The data of one sample point.
pub struct Local<'a> {
    pub geo: &'a GeometryJet,
    pub theta: &'a [Jet2],
    pub sigma: &'a [Jet2],
}

impl Local<'_> {
    fn dim(&self) -> usize {
        self.geo.dim()
    }

    fn y(&self) -> &[f64] {
        &self.geo.point.y
    }

    /// `g_ij = ∂θ_i/∂y^j`.
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.theta[i].dy(j)
    }

    /// `g_ik R^k_j`.
    fn g_phi(&self, i: usize, j: usize) -> f64 {
        (0..self.dim()).map(|k| self.g(i, k) * self.geo.phi[(k, j)]).sum()
    }

    /// `g_ik R^k_j − g_jk R^k_i`.
    pub fn phi_skew(&self, i: usize, j: usize) -> f64 {
        self.g_phi(i, j) - self.g_phi(j, i)
    }

    /// `∇g_ij`.
    pub fn nabla_g(&self, i: usize, j: usize) -> f64 {
        let dim = self.dim();
        let mut v = self.geo.spray_of_dy(&self.theta[i], j);
        for k in 0..dim {
            v -= self.g(k, j) * self.geo.n[(k, i)] + self.g(i, k) * self.geo.n[(k, j)];
        }
        v
    }

    /// `δθ_i/δx^j`.
    pub fn h_theta(&self, i: usize, j: usize) -> f64 {
        self.geo.horizontal(&self.theta[i], j)
    }

    /// Derived `ω_ij = δθ_i/δx^j − δθ_j/δx^i`.
    pub fn omega(&self, i: usize, j: usize) -> f64 {
        self.h_theta(i, j) - self.h_theta(j, i)
    }

    /// `∂/∂y^k (δθ_i/δx^j)`.
    fn dy_h_theta(&self, i: usize, j: usize, k: usize) -> f64 {
        let t = &self.theta[i];
        let geo = self.geo;
        let mut v = t.dxdy(j, k);
        for l in 0..self.dim() {
            v -= geo.gamma[(l, j, k)] * t.dy(l) + geo.n[(l, j)] * t.dydy(l, k);
        }
        v
    }

    /// `∂ω_ij/∂y^k` for the derived `ω`.
    pub fn dy_omega(&self, i: usize, j: usize, k: usize) -> f64 {
        self.dy_h_theta(i, j, k) - self.dy_h_theta(j, i, k)
    }

    /// `g_il R^l_jk + g_kl R^l_ij + g_jl R^l_ki`.
    pub fn cyclic(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        let c = &self.geo.curv;
        let a: f64 = (0..n).map(|l| self.g(i, l) * c[(l, j, k)]).sum();
        let b: f64 = (0..n).map(|l| self.g(k, l) * c[(l, i, j)]).sum();
        let d: f64 = (0..n).map(|l| self.g(j, l) * c[(l, k, i)]).sum();
        a + b + d
    }

    /// `δg_ij/δx^k − g_il Γ^l_jk − g_lj Γ^l_ik`.
    pub fn berwald_h(&self, i: usize, j: usize, k: usize) -> f64 {
        let geo = self.geo;
        let mut v = geo.horizontal_of_dy(&self.theta[i], j, k);
        for l in 0..self.dim() {
            v -= self.g(i, l) * geo.gamma[(l, j, k)] + self.g(l, j) * geo.gamma[(l, i, k)];
        }
        v
    }

    /// `δ_S L` from the jet of `L`.
    pub fn lagrange(&self, l: &Jet2) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.geo.spray_of_dy(l, i) - l.dx(i))
            .collect()
    }

    // Row families. Each returns the signed residuals of one condition.

    /// `g_ij − g_ji` and `∂g_ij/∂y^k − ∂g_ik/∂y^j`.
    pub fn lgh1(&self) -> Vec<f64> {
        let n = self.dim();
        let mut rows = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                rows.push(self.g(i, j) - self.g(j, i));
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in (j + 1)..n {
                    rows.push(self.theta[i].dydy(j, k) - self.theta[i].dydy(k, j));
                }
            }
        }
        rows
    }

    /// `g_ik R^k_j − g_jk R^k_i − ½∇A_ij + (δσ_i/δx^j − δσ_j/δx^i)` with
    /// `A_ij = ∂σ_i/∂y^j − ∂σ_j/∂y^i`.
    pub fn lgh2(&self) -> Vec<f64> {
        let n = self.dim();
        let geo = self.geo;
        let s = self.sigma;
        let a = nalgebra::DMatrix::from_fn(n, n, |i, j| s[i].dy(j) - s[j].dy(i));
        let sa = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            geo.spray_of_dy(&s[i], j) - geo.spray_of_dy(&s[j], i)
        });
        let na = geo.nabla_02_from(&a, &sa);
        let mut rows = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let h = geo.horizontal(&s[i], j) - geo.horizontal(&s[j], i);
                rows.push(self.phi_skew(i, j) - 0.5 * na[(i, j)] + h);
            }
        }
        rows
    }

    /// `∇g_ij − ½(∂σ_i/∂y^j + ∂σ_j/∂y^i)`.
    pub fn lgh3(&self) -> Vec<f64> {
        let n = self.dim();
        let s = self.sigma;
        let mut rows = Vec::new();
        for i in 0..n {
            for j in 0..n {
                rows.push(self.nabla_g(i, j) - 0.5 * (s[i].dy(j) + s[j].dy(i)));
            }
        }
        rows
    }

    /// `∂θ_i/∂y^j − ∂θ_j/∂y^i` and `δθ_i/δx^j − δθ_j/δx^i`.
    pub fn ld1(&self) -> Vec<f64> {
        let n = self.dim();
        let mut rows = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                rows.push(self.g(i, j) - self.g(j, i));
                rows.push(self.omega(i, j));
            }
        }
        rows
    }

    /// LD2 with `σ = d_J 𝒟`.
    pub fn ld2(&self, d: &Jet2) -> Vec<f64> {
        let n = self.dim();
        let geo = self.geo;
        let mut rows = self.lgh1();
        for i in 0..n {
            for j in (i + 1)..n {
                let rhs = geo.horizontal_of_dy(d, j, i) - geo.horizontal_of_dy(d, i, j);
                rows.push(self.phi_skew(i, j) - rhs);
            }
        }
        for i in 0..n {
            for j in 0..n {
                rows.push(self.nabla_g(i, j) - d.dydy(i, j));
            }
        }
        rows
    }

    /// The curvature cyclic sums, the local form of `d_R θ = 0`.
    pub fn obstruction(&self) -> Vec<f64> {
        let n = self.dim();
        let mut rows = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    rows.push(self.cyclic(i, j, k));
                }
            }
        }
        rows
    }

    /// LD3: symmetries, cyclic curvature sums, symmetry of `g_ij|k` in `j, k`.
    pub fn ld3(&self) -> Vec<f64> {
        let n = self.dim();
        let mut rows = self.lgh1();
        rows.extend(self.obstruction());
        for i in 0..n {
            for j in 0..n {
                for k in (j + 1)..n {
                    rows.push(self.berwald_h(i, j, k) - self.berwald_h(i, k, j));
                }
            }
        }
        rows
    }

    fn gyro_rows(&self, rhs: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        let n = self.dim();
        let mut rows = self.lgh1();
        for i in 0..n {
            for j in (i + 1)..n {
                rows.push(self.phi_skew(i, j) - rhs(i, j));
            }
        }
        for i in 0..n {
            for j in 0..n {
                rows.push(self.nabla_g(i, j));
            }
        }
        rows
    }

    /// LG1 for a basic 2-form with jets `omega[i][j]`.
    pub fn lg1(&self, omega: &[Vec<Jet2>]) -> Vec<f64> {
        let y = self.y().to_vec();
        let n = self.dim();
        self.gyro_rows(|i, j| {
            (0..n)
                .map(|k| {
                    (omega[i][j].dx(k) + omega[j][k].dx(i) + omega[k][i].dx(j)) * y[k]
                })
                .sum()
        })
    }

    /// LG2.
    pub fn lg2(&self) -> Vec<f64> {
        let y = self.y().to_vec();
        let n = self.dim();
        self.gyro_rows(|i, j| (0..n).map(|k| self.cyclic(i, j, k) * y[k]).sum())
    }

    /// Components of `d(ℒ_S θ − σ)` on the coordinate frame of `TM`.
    pub fn thm1(&self) -> Vec<f64> {
        let n = self.dim();
        let geo = self.geo;
        let y = self.y();
        let (t, s) = (self.theta, self.sigma);
        let gj = &geo.g_jets;
        // ∂S(θ_i)/∂x^j
        let dx_s = |i: usize, j: usize| -> f64 {
            let mut v = 0.0;
            for k in 0..n {
                v += y[k] * t[i].dxdx(j, k);
                v -= 2.0 * (gj[k].dx(j) * t[i].dy(k) + geo.g[k] * t[i].dxdy(j, k));
            }
            v
        };
        // ∂S(θ_i)/∂y^j
        let dy_s = |i: usize, j: usize| -> f64 {
            let mut v = t[i].dx(j);
            for k in 0..n {
                v += y[k] * t[i].dxdy(k, j);
                v -= 2.0 * (geo.n[(k, j)] * t[i].dy(k) + geo.g[k] * t[i].dydy(j, k));
            }
            v
        };
        let mut rows = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let a = dx_s(i, j) - s[i].dx(j);
                let b = dx_s(j, i) - s[j].dx(i);
                rows.push(a - b);
                rows.push(self.g(i, j) - self.g(j, i));
            }
        }
        for i in 0..n {
            for j in 0..n {
                rows.push(dy_s(i, j) - s[i].dy(j) - t[j].dx(i));
            }
        }
        rows
    }
}

/// Largest absolute entry; NaN if any entry is NaN.
pub fn max_abs(rows: &[f64]) -> f64 {
    rows.iter().fold(0.0f64, |m, v| {
        if v.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(v.abs())
        }
    })
}
