//! The local sequential test: given a discretized region, a threshold and
//! confidence parameters, decide whether the region contains a point whose
//! function value exceeds the threshold.
//!
//! Each test owns a fresh [`GPState`] over its grid, independent of any
//! other test's history. At every step it first evaluates verdict checks
//! against the lower and upper confidence envelopes, then queries the
//! UCB-maximizing grid point. A termination horizon caps the number of
//! queries; reaching it is a conservative accept. Two-sided variants skew
//! the false-alarm and miss-detection confidences for the leaf and root
//! roles of the tree walk.

use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::gp::{beta, AlgoParams, GPState};
use crate::kernel::GammaBound;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMode {
    OneSided,
    /// Leaf test: presence confirmed with confidence `1 - delta_hat`,
    /// absence with `1 - p`.
    TwoSidedAcceptHigh,
    /// Root termination test: presence with `1 - p`, absence with
    /// `1 - delta_hat`.
    TwoSidedRejectHigh,
}

/// Parameters of one invocation of the test.
#[derive(Debug, Clone)]
pub struct TestConfig {
    pub tau: f64,
    /// Confidence for the verdict checks (`p` in the tree walk).
    pub eta_check: f64,
    /// Confidence for the sampling rule, `delta0 / 4T`.
    pub eta_sample: f64,
    /// `L * Delta^alpha` for the current epoch.
    pub gap: f64,
    pub mode: TestMode,
    /// Two-sided modes only.
    pub delta_hat: f64,
}

/// Outcome of a single test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub verdict: Verdict,
    pub queries_used: usize,
    /// Set when the global query budget ran out mid-test; the verdict is
    /// then the conservative accept.
    pub terminated_by_budget: bool,
    pub trace: Vec<(Vec<f64>, f64)>,
}

const TERM_SCAN_CAP: usize = 10_000_000;

/// Termination time: `1 + min { t : 2 beta_t(eta) (1 + 2 lambda) sqrt(m/t) <= gap }`.
///
/// The scan skips exactly: whenever the condition fails at `t`, it fails
/// for every `t' < required(t)` as well because `beta` is nondecreasing,
/// so the scan may jump to `ceil(required(t))` without passing the
/// minimizer. Errors once the cap is passed.
pub fn t_term(
    params: &AlgoParams,
    gamma: &GammaBound,
    eta: f64,
    gap: f64,
    grid_size: usize,
) -> Result<usize> {
    debug_assert!(eta > 0.0 && eta < 1.0);
    debug_assert!(gap > 0.0);
    debug_assert!(grid_size >= 1);
    let m = grid_size as f64;
    let factor = 2.0 * (1.0 + 2.0 * params.lambda) * m.sqrt() / gap;
    let mut t = 1usize;
    loop {
        let b = beta(params, gamma, t, eta);
        let required = (factor * b).powi(2);
        if t as f64 >= required {
            return Ok(t + 1);
        }
        let next = required.ceil();
        if !(next <= TERM_SCAN_CAP as f64) {
            return Err(Error::TerminationScanOverflow);
        }
        t = next as usize;
    }
}

/// One-sided local test (the tree walk's child test).
pub fn local_test(
    grid: &Grid,
    cfg: &TestConfig,
    params: &AlgoParams,
    gamma: &GammaBound,
    oracle: &mut dyn FnMut(&[f64]) -> f64,
    budget_cap: usize,
) -> Result<TestOutcome> {
    debug_assert!(matches!(cfg.mode, TestMode::OneSided));
    run_test(grid, cfg, params, gamma, oracle, budget_cap)
}

/// Two-sided variant with asymmetric confidences; see [`TestMode`].
pub fn two_sided_test(
    grid: &Grid,
    tau: f64,
    p: f64,
    delta_hat: f64,
    mode: TestMode,
    gap: f64,
    eta_sample: f64,
    params: &AlgoParams,
    gamma: &GammaBound,
    oracle: &mut dyn FnMut(&[f64]) -> f64,
    budget_cap: usize,
) -> Result<TestOutcome> {
    debug_assert!(delta_hat > 0.0 && delta_hat <= p && p < 0.5);
    let cfg = TestConfig {
        tau,
        eta_check: p,
        eta_sample,
        gap,
        mode,
        delta_hat,
    };
    run_test(grid, &cfg, params, gamma, oracle, budget_cap)
}

/// The shared engine. Per step `s` (one-indexed, `s - 1` queries made):
/// horizon check, positive check on the max LCB, negative check on the
/// max UCB, budget check, then one query at the UCB-sampling argmax.
pub fn run_test(
    grid: &Grid,
    cfg: &TestConfig,
    params: &AlgoParams,
    gamma: &GammaBound,
    oracle: &mut dyn FnMut(&[f64]) -> f64,
    budget_cap: usize,
) -> Result<TestOutcome> {
    let m = grid.points.len();
    if m == 0 {
        return Err(Error::InvalidConfig("local test on an empty grid".into()));
    }
    debug_assert!(budget_cap >= 1);

    // Horizons. A scan overflow means the gap is unreachably small for
    // these widths; the test then relies on the verdict checks and the
    // budget alone.
    let horizon_check = saturating_t_term(params, gamma, cfg.eta_check, cfg.gap, m)?;
    let (phase_switch, horizon) = match cfg.mode {
        TestMode::OneSided => (usize::MAX, horizon_check),
        TestMode::TwoSidedAcceptHigh => {
            let extended = saturating_t_term(params, gamma, cfg.delta_hat, cfg.gap, m)?;
            (horizon_check, extended)
        }
        TestMode::TwoSidedRejectHigh => {
            let h = saturating_t_term(params, gamma, cfg.delta_hat, cfg.gap, m)?;
            (usize::MAX, h)
        }
    };

    let mut gp = GPState::new(gamma.kernel.clone(), params.lambda, grid.points.clone())?;
    let mut trace: Vec<(Vec<f64>, f64)> = Vec::new();
    let center = grid.cell.center();
    let first_idx = nearest_index(&grid.points, &center);

    let mut s = 1usize;
    loop {
        if s >= horizon {
            return Ok(outcome(Verdict::Positive, false, trace));
        }
        let (lcb_eta, ucb_eta) = match cfg.mode {
            TestMode::OneSided => (cfg.eta_check, cfg.eta_check),
            TestMode::TwoSidedAcceptHigh => {
                // The negative check tightens once the first horizon passes.
                let ucb = if s >= phase_switch { cfg.delta_hat } else { cfg.eta_check };
                (cfg.delta_hat, ucb)
            }
            TestMode::TwoSidedRejectHigh => (cfg.eta_check, cfg.delta_hat),
        };
        let beta_lcb = beta(params, gamma, s, lcb_eta);
        let beta_ucb = beta(params, gamma, s, ucb_eta);
        let beta_sample = beta(params, gamma, s, cfg.eta_sample);

        let mut max_lcb = f64::NEG_INFINITY;
        let mut max_ucb = f64::NEG_INFINITY;
        let mut best_sample = f64::NEG_INFINITY;
        let mut best_idx = 0usize;
        for i in 0..m {
            let (mu, sd) = gp.grid_mean_sd(i);
            let lcb = mu - beta_lcb * sd;
            let ucb = mu + beta_ucb * sd;
            if lcb > max_lcb {
                max_lcb = lcb;
            }
            if ucb > max_ucb {
                max_ucb = ucb;
            }
            let score = mu + beta_sample * sd;
            if score > best_sample {
                best_sample = score;
                best_idx = i;
            }
        }

        if max_lcb >= cfg.tau {
            return Ok(outcome(Verdict::Positive, false, trace));
        }
        if max_ucb <= cfg.tau - cfg.gap {
            return Ok(outcome(Verdict::Negative, false, trace));
        }
        if trace.len() >= budget_cap {
            return Ok(outcome(Verdict::Positive, true, trace));
        }

        let idx = if s == 1 { first_idx } else { best_idx };
        let x = grid.points[idx].clone();
        let y = oracle(&x);
        gp.observe_grid(idx, y)?;
        trace.push((x, y));
        s += 1;
    }
}

fn saturating_t_term(
    params: &AlgoParams,
    gamma: &GammaBound,
    eta: f64,
    gap: f64,
    m: usize,
) -> Result<usize> {
    match t_term(params, gamma, eta, gap, m) {
        Ok(h) => Ok(h),
        Err(Error::TerminationScanOverflow) => Ok(usize::MAX),
        Err(e) => Err(e),
    }
}

fn outcome(verdict: Verdict, by_budget: bool, trace: Vec<(Vec<f64>, f64)>) -> TestOutcome {
    TestOutcome {
        verdict,
        queries_used: trace.len(),
        terminated_by_budget: by_budget,
        trace,
    }
}

fn nearest_index(points: &[Vec<f64>], target: &[f64]) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d: f64 = p
            .iter()
            .zip(target.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}
