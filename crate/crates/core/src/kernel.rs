//! Covariance kernels and information-gain growth bounds.
//!
//! Two stationary families are supported, both normalized to unit variance
//! so that `k(x, x) = 1`: the squared exponential and the Matern family at
//! the half-integer smoothness values that admit closed forms. The
//! information-gain bound [`GammaBound`] feeds the confidence widths used
//! by every sequential test in the pipeline; it has no closed form, so we
//! use the published asymptotic orders with a configurable scale constant.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    SquaredExponential,
    Matern,
}

/// Smoothness values for which the Matern kernel has a closed form.
pub const MATERN_NUS: [f64; 3] = [0.5, 1.5, 2.5];

/// A stationary, unit-variance covariance kernel on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscale: f64,
    /// Matern smoothness, one of [`MATERN_NUS`]. Ignored for SE.
    pub nu: f64,
    pub dim: usize,
}

impl KernelSpec {
    pub fn squared_exponential(lengthscale: f64, dim: usize) -> Result<Self> {
        let spec = KernelSpec {
            family: KernelFamily::SquaredExponential,
            lengthscale,
            nu: f64::NAN,
            dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn matern(lengthscale: f64, nu: f64, dim: usize) -> Result<Self> {
        let spec = KernelSpec {
            family: KernelFamily::Matern,
            lengthscale,
            nu,
            dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lengthscale > 0.0) || !self.lengthscale.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "kernel lengthscale must be positive, got {}",
                self.lengthscale
            )));
        }
        if self.dim == 0 {
            return Err(Error::InvalidConfig("kernel dimension must be >= 1".into()));
        }
        if self.family == KernelFamily::Matern
            && !MATERN_NUS.iter().any(|&v| v == self.nu)
        {
            return Err(Error::InvalidConfig(format!(
                "matern nu must be one of {:?}, got {}",
                MATERN_NUS, self.nu
            )));
        }
        Ok(())
    }

    /// Covariance between two points. Symmetric, with values in `(0, 1]`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        let mut sq = 0.0;
        for (a, b) in x.iter().zip(y.iter()) {
            let d = a - b;
            sq += d * d;
        }
        match self.family {
            KernelFamily::SquaredExponential => {
                (-sq / (2.0 * self.lengthscale * self.lengthscale)).exp()
            }
            KernelFamily::Matern => {
                let r = sq.sqrt() / self.lengthscale;
                if self.nu == 0.5 {
                    (-r).exp()
                } else if self.nu == 1.5 {
                    let s = 3f64.sqrt() * r;
                    (1.0 + s) * (-s).exp()
                } else {
                    let s = 5f64.sqrt() * r;
                    (1.0 + s + s * s / 3.0) * (-s).exp()
                }
            }
        }
    }
}

/// Sublinear growth bound on the maximum information gain after `t`
/// observations. The published orders are used with a scale constant
/// `C_gamma` exposed through the `gamma.c` config key.
#[derive(Debug, Clone)]
pub struct GammaBound {
    pub kernel: KernelSpec,
    pub scale: f64,
}

impl GammaBound {
    pub fn new(kernel: KernelSpec, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "gamma scale must be positive, got {scale}"
            )));
        }
        Ok(GammaBound { kernel, scale })
    }

    /// Nonnegative and nondecreasing in `t`.
    pub fn bound(&self, t: usize) -> f64 {
        let t = t as f64;
        let d = self.kernel.dim as f64;
        match self.kernel.family {
            KernelFamily::SquaredExponential => {
                self.scale * (t + 2.0).ln().powi(self.kernel.dim as i32 + 1)
            }
            KernelFamily::Matern => {
                let dd = d * (d + 1.0);
                let exponent = dd / (2.0 * self.kernel.nu + dd);
                self.scale * t.powf(exponent) * (t + 2.0).ln()
            }
        }
    }
}
