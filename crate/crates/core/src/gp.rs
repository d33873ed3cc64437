//! Incremental Gaussian-process posterior inference over a fixed candidate
//! grid, plus the confidence-width function `beta`.
//!
//! The posterior mean and variance are the standard closed forms
//!
//! ```text
//! mu_t(x)      = k_t(x)^T (K_t + lambda I)^{-1} y_t
//! sigma_t(x)^2 = k(x, x) - k_t(x)^T (K_t + lambda I)^{-1} k_t(x)
//! ```
//!
//! maintained through a lower-triangular factor `L L^T = K_t + lambda I`
//! that grows by one row per observation and is never rebuilt. For each
//! grid point we cache the forward-solve vector `v = L^{-1} k_t(x)`; its
//! entries are append-only, so the cached mean `<v, z>` (with
//! `z = L^{-1} y`) and variance `k(x,x) - <v, v>` update in constant time
//! per entry. Queries at arbitrary off-grid points run a fresh forward
//! solve against the same factor.
//!
//! A consequence of the append-only bookkeeping is that cached posterior
//! variances are nonincreasing in `t` by construction, which the sampling
//! rules downstream rely on.

use crate::error::{Error, Result};
use crate::kernel::{GammaBound, KernelSpec};

/// Algorithm-level parameters shared across the pipeline.
///
/// `range` is the known interval containing the maximum of the objective.
/// All other fields parameterize the confidence machinery: the RKHS norm
/// bound, sub-Gaussian noise scale, GP noise-variance `lambda`, Holder
/// continuity `(holder_l, holder_alpha)`, the shrinking hyperparameter
/// `shrink_c` in `(0, 1/2)`, the global confidence `delta0`, the local
/// test error `test_p` in `(0, 1/2)`, and the query horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoParams {
    pub rkhs_bound: f64,
    pub noise_scale: f64,
    pub lambda: f64,
    pub holder_l: f64,
    pub holder_alpha: f64,
    pub shrink_c: f64,
    pub delta0: f64,
    pub test_p: f64,
    pub horizon: usize,
    pub range: (f64, f64),
    pub domain_dim: usize,
    /// Use the variant of `beta` with an extra factor 2 inside the root.
    /// Off by default; config key `beta.appendix_factor2`.
    pub beta_appendix_factor2: bool,
}

impl AlgoParams {
    /// Validate all bounds. `horizon = 0` is accepted as a degenerate
    /// no-op configuration (runs produce an empty trace).
    pub fn validated(self) -> Result<Self> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        }
        positive("B", self.rkhs_bound)?;
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "R must be nonnegative, got {}",
                self.noise_scale
            )));
        }
        positive("lambda", self.lambda)?;
        positive("L", self.holder_l)?;
        if !(self.holder_alpha > 0.0 && self.holder_alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1], got {}",
                self.holder_alpha
            )));
        }
        if !(self.shrink_c > 0.0 && self.shrink_c < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "c must lie in (0, 1/2), got {}",
                self.shrink_c
            )));
        }
        if !(self.delta0 > 0.0 && self.delta0 < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta0 must lie in (0, 1), got {}",
                self.delta0
            )));
        }
        if !(self.test_p > 0.0 && self.test_p < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "p must lie in (0, 1/2), got {}",
                self.test_p
            )));
        }
        if !(self.range.0 < self.range.1) {
            return Err(Error::InvalidConfig(format!(
                "range must satisfy a < b, got [{}, {}]",
                self.range.0, self.range.1
            )));
        }
        if self.domain_dim == 0 {
            return Err(Error::InvalidConfig("domain dimension must be >= 1".into()));
        }
        Ok(self)
    }

    /// Confidence used by the sampling rule inside local tests.
    pub fn eta_sample(&self) -> f64 {
        debug_assert!(self.horizon >= 1);
        self.delta0 / (4.0 * self.horizon as f64)
    }
}

/// Confidence width `beta_s(nu) = B + R sqrt(gamma_{s-1} + 1 + ln(1/nu))`.
///
/// Nondecreasing in `s`, nonincreasing in `nu`.
pub fn beta(params: &AlgoParams, gamma: &GammaBound, step: usize, confidence: f64) -> f64 {
    debug_assert!(step >= 1);
    debug_assert!(confidence > 0.0 && confidence < 1.0);
    let mut inner = gamma.bound(step - 1) + 1.0 + (1.0 / confidence).ln();
    if params.beta_appendix_factor2 {
        inner *= 2.0;
    }
    params.rkhs_bound + params.noise_scale * inner.sqrt()
}

/// Incremental GP posterior restricted to a fixed candidate grid.
#[derive(Debug, Clone)]
pub struct GPState {
    kernel: KernelSpec,
    lambda: f64,
    grid: Vec<Vec<f64>>,
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
    /// Row `s` holds `L[s][0..=s]` of the growing lower-triangular factor.
    chol_rows: Vec<Vec<f64>>,
    /// `z = L^{-1} y`; entries are append-only.
    z: Vec<f64>,
    /// Per grid point: `v = L^{-1} k_t(x)`, append-only.
    grid_v: Vec<Vec<f64>>,
    grid_mu: Vec<f64>,
    grid_var: Vec<f64>,
}

const PIVOT_JITTER: f64 = 1e-10;

impl GPState {
    /// An empty posterior (pure prior) over `grid`. The grid may be empty
    /// if only off-grid queries are needed.
    pub fn new(kernel: KernelSpec, lambda: f64, grid: Vec<Vec<f64>>) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        for p in &grid {
            if p.len() != kernel.dim {
                return Err(Error::DimensionMismatch {
                    expected: kernel.dim,
                    got: p.len(),
                });
            }
        }
        let m = grid.len();
        let grid_var = grid
            .iter()
            .map(|p| kernel.eval_unchecked(p, p))
            .collect::<Vec<_>>();
        Ok(GPState {
            kernel,
            lambda,
            grid,
            xs: Vec::new(),
            ys: Vec::new(),
            chol_rows: Vec::new(),
            z: Vec::new(),
            grid_v: vec![Vec::new(); m],
            grid_mu: vec![0.0; m],
            grid_var,
        })
    }

    pub fn observations(&self) -> usize {
        self.xs.len()
    }

    pub fn grid(&self) -> &[Vec<f64>] {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Cached posterior mean and standard deviation at a grid point.
    pub fn grid_mean_sd(&self, index: usize) -> (f64, f64) {
        (self.grid_mu[index], self.grid_var[index].max(0.0).sqrt())
    }

    pub fn grid_means(&self) -> &[f64] {
        &self.grid_mu
    }

    /// Observe at a grid point; reuses the cached forward solve.
    pub fn observe_grid(&mut self, index: usize, y: f64) -> Result<()> {
        let a = self.grid_v[index].clone();
        let x = self.grid[index].clone();
        self.extend(x, y, a)
    }

    /// Observe at an arbitrary point. One forward solve against the
    /// current factor, then the same constant-size row append.
    pub fn posterior_update(&mut self, x: &[f64], y: f64) -> Result<()> {
        if x.len() != self.kernel.dim {
            return Err(Error::DimensionMismatch {
                expected: self.kernel.dim,
                got: x.len(),
            });
        }
        let a = self.forward_solve_kvec(x);
        self.extend(x.to_vec(), y, a)
    }

    /// Posterior mean and standard deviation at an arbitrary point.
    /// Tiny negative variances from roundoff are clamped to zero.
    pub fn posterior_mean_sd(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.kernel.dim {
            return Err(Error::DimensionMismatch {
                expected: self.kernel.dim,
                got: x.len(),
            });
        }
        let v = self.forward_solve_kvec(x);
        let mu: f64 = v.iter().zip(self.z.iter()).map(|(a, b)| a * b).sum();
        let var = self.kernel.eval_unchecked(x, x) - v.iter().map(|a| a * a).sum::<f64>();
        Ok((mu, var.max(0.0).sqrt()))
    }

    /// `L^{-1} [k(x_1, x), ..., k(x_t, x)]` by forward substitution.
    fn forward_solve_kvec(&self, x: &[f64]) -> Vec<f64> {
        let t = self.xs.len();
        let mut v = Vec::with_capacity(t);
        for s in 0..t {
            let row = &self.chol_rows[s];
            let mut acc = self.kernel.eval_unchecked(&self.xs[s], x);
            for j in 0..s {
                acc -= row[j] * v[j];
            }
            v.push(acc / row[s]);
        }
        v
    }

    fn extend(&mut self, x: Vec<f64>, y: f64, a: Vec<f64>) -> Result<()> {
        let kxx = self.kernel.eval_unchecked(&x, &x);
        let aa: f64 = a.iter().map(|w| w * w).sum();
        let mut pivot_sq = kxx + self.lambda - aa;
        if pivot_sq <= 0.0 {
            // One retry with jitter on the incoming diagonal entry.
            pivot_sq = kxx + self.lambda + PIVOT_JITTER - aa;
            if pivot_sq <= 0.0 {
                return Err(Error::Numeric(format!(
                    "factorization breakdown: pivot^2 = {pivot_sq:.3e} after jitter"
                )));
            }
        }
        let pivot = pivot_sq.sqrt();

        let az: f64 = a.iter().zip(self.z.iter()).map(|(u, w)| u * w).sum();
        let z_new = (y - az) / pivot;

        for i in 0..self.grid.len() {
            let vi = &mut self.grid_v[i];
            let dot: f64 = a.iter().zip(vi.iter()).map(|(u, w)| u * w).sum();
            let v_new = (self.kernel.eval_unchecked(&self.grid[i], &x) - dot) / pivot;
            self.grid_mu[i] += v_new * z_new;
            self.grid_var[i] -= v_new * v_new;
            vi.push(v_new);
        }

        let mut row = a;
        row.push(pivot);
        self.chol_rows.push(row);
        self.z.push(z_new);
        self.xs.push(x);
        self.ys.push(y);
        Ok(())
    }
}
