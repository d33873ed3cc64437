//! Run configuration: per-objective defaults, line-oriented `key=value`
//! overrides, canonical echo and content hashing.

use crate::error::{Error, Result};
use crate::gp::AlgoParams;
use crate::kernel::{GammaBound, KernelFamily, KernelSpec};
use crate::threds::Strategy;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Branin,
    Rosenbrock,
    GpSample,
    Piecewise,
}

impl ObjectiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::Branin => "branin",
            ObjectiveKind::Rosenbrock => "rosenbrock",
            ObjectiveKind::GpSample => "gpsample",
            ObjectiveKind::Piecewise => "piecewise",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "branin" => Ok(ObjectiveKind::Branin),
            "rosenbrock" => Ok(ObjectiveKind::Rosenbrock),
            "gpsample" => Ok(ObjectiveKind::GpSample),
            "piecewise" => Ok(ObjectiveKind::Piecewise),
            other => Err(Error::InvalidConfig(format!("unknown objective: {other}"))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ObjectiveKind::Branin | ObjectiveKind::Rosenbrock => 2,
            ObjectiveKind::GpSample | ObjectiveKind::Piecewise => 1,
        }
    }
}

/// All tunable knobs with their config keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub objective: ObjectiveKind,
    /// `kernel.family`: `se` or `matern`.
    pub kernel_family: KernelFamily,
    /// `kernel.lengthscale`
    pub kernel_lengthscale: f64,
    /// `kernel.nu` (Matern only)
    pub kernel_nu: f64,
    /// `gamma.c`
    pub gamma_c: f64,
    /// `gp.lambda`
    pub lambda: f64,
    /// `gp.B`
    pub rkhs_bound: f64,
    /// `gp.R`
    pub noise_scale: f64,
    /// `beta.appendix_factor2`
    pub beta_appendix_factor2: bool,
    /// `algo.c`
    pub shrink_c: f64,
    /// `algo.L`
    pub holder_l: f64,
    /// `algo.alpha`
    pub holder_alpha: f64,
    /// `algo.delta0`
    pub delta0: f64,
    /// `search.p`
    pub test_p: f64,
    /// `search.strategy`: `rwt` or `heuristic`.
    pub strategy: Strategy,
    /// `search.test_cap`: query ration for a single local test (0 = only
    /// the global budget guards a test). A rationed test that hits the
    /// cap conservatively accepts, exactly like the horizon rule.
    pub search_test_cap: usize,
    /// `range.a`, `range.b`: known bounds on the maximum, original units.
    pub range: (f64, f64),
    /// `noise.sd`: observation noise standard deviation, original units.
    pub noise_sd: f64,
    /// `baseline.grid_max`
    pub baseline_grid_max: usize,
    /// `objective.seed` (gpsample only)
    pub objective_seed: u64,
}

impl Config {
    /// Defaults reproducing the desk-scale experiment setup for each
    /// objective; shared constants: SE kernel with lengthscale 0.2,
    /// lambda = R = 0.01, noise variance 0.01, delta0 = 1e-3, p = 0.4.
    pub fn defaults_for(objective: ObjectiveKind) -> Config {
        let (rkhs_bound, range, holder_l, noise_sd) = match objective {
            ObjectiveKind::Branin => (0.5, (0.5, 1.2), 4.2, 0.1),
            ObjectiveKind::Rosenbrock => (2.0, (3.0, 12.0), 42.0, 0.1),
            ObjectiveKind::GpSample => (1.0, (0.0, 1.5), 6.0, 0.1),
            ObjectiveKind::Piecewise => (0.8, (0.5, 1.1), 4.5, 0.01),
        };
        Config {
            objective,
            kernel_family: KernelFamily::SquaredExponential,
            kernel_lengthscale: 0.2,
            kernel_nu: 2.5,
            gamma_c: 1.0,
            lambda: 0.01,
            rkhs_bound,
            noise_scale: 0.01,
            beta_appendix_factor2: false,
            shrink_c: 0.2,
            holder_l,
            holder_alpha: 1.0,
            delta0: 1e-3,
            test_p: 0.4,
            strategy: Strategy::Rwt,
            search_test_cap: 64,
            range,
            noise_sd,
            baseline_grid_max: 6400,
            objective_seed: 1,
        }
    }

    /// Apply line-oriented `key=value` overrides. Blank lines and `#`
    /// comments are skipped.
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key=value", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num(key: &str, value: &str) -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("{key}: not a number: {value}")))
        }
        match key {
            "kernel.family" => {
                self.kernel_family = match value {
                    "se" | "squared_exponential" => KernelFamily::SquaredExponential,
                    "matern" => KernelFamily::Matern,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "kernel.family must be se or matern, got {other}"
                        )))
                    }
                }
            }
            "kernel.lengthscale" => self.kernel_lengthscale = num(key, value)?,
            "kernel.nu" => self.kernel_nu = num(key, value)?,
            "gamma.c" => self.gamma_c = num(key, value)?,
            "gp.lambda" => self.lambda = num(key, value)?,
            "gp.B" => self.rkhs_bound = num(key, value)?,
            "gp.R" => self.noise_scale = num(key, value)?,
            "beta.appendix_factor2" => {
                self.beta_appendix_factor2 = match value {
                    "true" | "1" | "on" => true,
                    "false" | "0" | "off" => false,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "beta.appendix_factor2 must be boolean, got {other}"
                        )))
                    }
                }
            }
            "algo.c" => self.shrink_c = num(key, value)?,
            "algo.L" => self.holder_l = num(key, value)?,
            "algo.alpha" => self.holder_alpha = num(key, value)?,
            "algo.delta0" => self.delta0 = num(key, value)?,
            "search.p" => self.test_p = num(key, value)?,
            "search.test_cap" => {
                self.search_test_cap = value.parse::<usize>().map_err(|_| {
                    Error::InvalidConfig(format!("search.test_cap: not an integer: {value}"))
                })?
            }
            "search.strategy" => {
                self.strategy = match value {
                    "rwt" => Strategy::Rwt,
                    "heuristic" => Strategy::Heuristic,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "search.strategy must be rwt or heuristic, got {other}"
                        )))
                    }
                }
            }
            "range.a" => self.range.0 = num(key, value)?,
            "range.b" => self.range.1 = num(key, value)?,
            "noise.sd" => self.noise_sd = num(key, value)?,
            "baseline.grid_max" => {
                self.baseline_grid_max = value.parse::<usize>().map_err(|_| {
                    Error::InvalidConfig(format!("baseline.grid_max: not an integer: {value}"))
                })?
            }
            "objective.seed" => {
                self.objective_seed = value.parse::<u64>().map_err(|_| {
                    Error::InvalidConfig(format!("objective.seed: not an integer: {value}"))
                })?
            }
            other => {
                return Err(Error::InvalidConfig(format!("unknown config key: {other}")));
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        let dim = self.objective.dim();
        match self.kernel_family {
            KernelFamily::SquaredExponential => {
                KernelSpec::squared_exponential(self.kernel_lengthscale, dim)
            }
            KernelFamily::Matern => KernelSpec::matern(self.kernel_lengthscale, self.kernel_nu, dim),
        }
    }

    pub fn gamma(&self) -> Result<GammaBound> {
        GammaBound::new(self.kernel()?, self.gamma_c)
    }

    /// Parameters in original units; the harness normalizes them.
    pub fn algo_params(&self, horizon: usize) -> Result<AlgoParams> {
        AlgoParams {
            rkhs_bound: self.rkhs_bound,
            noise_scale: self.noise_scale,
            lambda: self.lambda,
            holder_l: self.holder_l,
            holder_alpha: self.holder_alpha,
            shrink_c: self.shrink_c,
            delta0: self.delta0,
            test_p: self.test_p,
            horizon,
            range: self.range,
            domain_dim: self.objective.dim(),
            beta_appendix_factor2: self.beta_appendix_factor2,
        }
        .validated()
    }

    /// Canonical `key=value` echo, sorted by key; the basis of the
    /// content hash and the metadata file.
    pub fn canonical_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("algo.L={}", self.holder_l),
            format!("algo.alpha={}", self.holder_alpha),
            format!("algo.c={}", self.shrink_c),
            format!("algo.delta0={}", self.delta0),
            format!("baseline.grid_max={}", self.baseline_grid_max),
            format!("beta.appendix_factor2={}", self.beta_appendix_factor2),
            format!("gamma.c={}", self.gamma_c),
            format!("gp.B={}", self.rkhs_bound),
            format!("gp.R={}", self.noise_scale),
            format!("gp.lambda={}", self.lambda),
            format!(
                "kernel.family={}",
                match self.kernel_family {
                    KernelFamily::SquaredExponential => "se",
                    KernelFamily::Matern => "matern",
                }
            ),
            format!("kernel.lengthscale={}", self.kernel_lengthscale),
            format!("kernel.nu={}", self.kernel_nu),
            format!("noise.sd={}", self.noise_sd),
            format!("objective={}", self.objective.name()),
            format!("objective.seed={}", self.objective_seed),
            format!("range.a={}", self.range.0),
            format!("range.b={}", self.range.1),
            format!("search.p={}", self.test_p),
            format!("search.test_cap={}", self.search_test_cap),
            format!(
                "search.strategy={}",
                match self.strategy {
                    Strategy::Rwt => "rwt",
                    Strategy::Heuristic => "heuristic",
                }
            ),
        ];
        lines.sort();
        lines
    }

    /// Content hash of the canonical echo, in the style of a git blob id.
    pub fn content_hash(&self) -> String {
        let body = self.canonical_lines().join("\n");
        let mut hasher = Sha256::new();
        hasher.update(format!("blob {}\0", body.len()));
        hasher.update(body.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
