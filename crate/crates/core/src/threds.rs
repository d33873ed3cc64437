//! The epoch loop: thresholded domain shrinking.
//!
//! Each epoch holds a set of cells at a common depth, a threshold at the
//! midpoint of the interval believed to contain the maximum, and a fill
//! distance matched to the depth. Target leaves found below the current
//! cells become the next domain and the interval's lower end rises; an
//! empty sweep keeps the domain and shifts the interval down instead, so
//! the next threshold is lower. The loop stops exactly when the query
//! budget is spent.

use crate::error::Result;
use crate::geometry::{delta_k, Cell};
use crate::gp::AlgoParams;
use crate::kernel::{GammaBound, KernelSpec};
use crate::rwt::{self, SearchContext};

/// Interval and depth bookkeeping for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdState {
    pub low: f64,
    pub high: f64,
    pub tau: f64,
    pub rho: usize,
    pub epoch: usize,
}

impl ThresholdState {
    pub fn initial() -> Self {
        ThresholdState {
            low: 0.0,
            high: 1.0,
            tau: 0.5,
            rho: 0,
            epoch: 1,
        }
    }
}

/// Interval update at an epoch boundary. Finding no target shifts the
/// interval down a half-width at unchanged depth; finding targets raises
/// the lower end to `tau - c * 2^(-alpha (rho/d + 1) + 1)` and deepens
/// the tree by `d`.
pub fn update_interval(found: bool, st: &ThresholdState, params: &AlgoParams) -> ThresholdState {
    let d = params.domain_dim as f64;
    let (low, high, rho) = if found {
        let exponent = -params.holder_alpha * (st.rho as f64 / d + 1.0) + 1.0;
        let low = st.tau - params.shrink_c * 2f64.powf(exponent);
        (low, st.high, st.rho + params.domain_dim)
    } else {
        let shift = (st.high - st.low) / 2.0;
        (st.low - shift, st.high - shift, st.rho)
    };
    ThresholdState {
        low,
        high,
        tau: (low + high) / 2.0,
        rho,
        epoch: st.epoch + 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Rwt,
    Heuristic,
}

/// Run-level configuration. `seed`, `objective` and `noise_sd` are
/// carried for the harness (metadata, oracle construction); the epoch
/// loop itself consumes the parameters, kernel, gamma bound and strategy.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: AlgoParams,
    pub kernel: KernelSpec,
    pub gamma: GammaBound,
    pub strategy: Strategy,
    pub seed: u64,
    pub objective: String,
    pub noise_sd: f64,
    /// Optional epoch cap for diagnostics; production runs stop on budget.
    pub max_epochs: Option<usize>,
    /// Query ration per local test; see `SearchContext::test_query_cap`.
    pub test_query_cap: usize,
}

/// The oracle as seen from inside a run: observations in normalized
/// units, plus context callbacks so the harness can label trace rows.
pub trait RunOracle {
    fn observe(&mut self, x: &[f64]) -> f64;
    fn set_epoch(&mut self, epoch: usize);
    fn set_node(&mut self, path: &str);
}

/// Per-epoch record kept by the runner.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub rho: usize,
    pub low: f64,
    pub high: f64,
    pub tau: f64,
    pub cells: usize,
    pub found: usize,
    pub queries_used: usize,
    /// Largest discretization instantiated during the epoch.
    pub max_grid: usize,
    /// Walk-length samples from this epoch (node arrivals per iteration).
    pub nodes_per_iteration: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub epochs: Vec<EpochStats>,
    pub final_domain: Vec<Cell>,
    pub final_state: ThresholdState,
    pub total_queries: usize,
    /// Epochs where the index outran `2 rho / d + 2`. Local test errors
    /// can cause this, so it is recorded rather than enforced.
    pub depth_progress_violations: usize,
}

/// The full optimizer loop. Works in normalized units: the oracle must
/// present an objective whose maximum lies in `[0, 1]`, and the initial
/// interval is exactly `[0, 1]`.
pub fn run(cfg: &RunConfig, oracle: &mut dyn RunOracle) -> Result<RunReport> {
    let params = cfg.params.clone().validated()?;
    cfg.kernel.validate()?;
    let horizon = params.horizon;

    let mut st = ThresholdState::initial();
    let mut domain = vec![Cell::root(params.domain_dim)];
    let mut epochs: Vec<EpochStats> = Vec::new();
    let mut budget = horizon;

    if horizon == 0 {
        return Ok(RunReport {
            epochs,
            final_domain: domain,
            final_state: st,
            total_queries: 0,
            depth_progress_violations: 0,
        });
    }

    let search_confidence = params.delta0 / (4.0 * horizon as f64);

    // Degenerate-configuration guards. A sane run consumes queries every
    // epoch and keeps a handful of live cells; a range that never brackets
    // the maximum can cascade into zero-cost verdicts instead.
    let mut zero_query_epochs = 0usize;
    let mut depth_progress_violations = 0usize;
    const MAX_ZERO_QUERY_EPOCHS: usize = 16;
    const MAX_DOMAIN_CELLS: usize = 65_536;

    loop {
        oracle.set_epoch(st.epoch);
        if st.epoch > 2 * st.rho / params.domain_dim + 2 {
            depth_progress_violations += 1;
        }
        let delta = delta_k(&params, st.rho);
        let ctx = SearchContext {
            params: &params,
            gamma: &cfg.gamma,
            tau: st.tau,
            delta,
            test_query_cap: cfg.test_query_cap,
        };

        let mut stats = EpochStats {
            epoch: st.epoch,
            rho: st.rho,
            low: st.low,
            high: st.high,
            tau: st.tau,
            cells: domain.len(),
            found: 0,
            queries_used: 0,
            max_grid: 0,
            nodes_per_iteration: Vec::new(),
        };

        let mut next_domain: Vec<Cell> = Vec::new();
        let mut exhausted = false;
        for cell in &domain {
            if budget == 0 {
                exhausted = true;
                break;
            }
            let search = match cfg.strategy {
                Strategy::Rwt => {
                    rwt::get_target_nodes(cell, &ctx, search_confidence, oracle, budget)?
                }
                Strategy::Heuristic => {
                    rwt::heuristic_get_target_nodes(cell, &ctx, search_confidence, oracle, budget)?
                }
            };
            budget -= search.queries_used;
            stats.queries_used += search.queries_used;
            stats.max_grid = stats.max_grid.max(search.max_grid);
            stats
                .nodes_per_iteration
                .extend(search.nodes_per_iteration.iter().copied());
            next_domain.extend(search.leaves);
            if search.budget_exhausted {
                exhausted = true;
                break;
            }
        }
        stats.found = next_domain.len();
        let epoch_queries = stats.queries_used;
        epochs.push(stats);

        if exhausted || budget == 0 {
            break;
        }
        if let Some(cap) = cfg.max_epochs {
            if st.epoch >= cap {
                break;
            }
        }
        if epoch_queries == 0 {
            zero_query_epochs += 1;
            if zero_query_epochs >= MAX_ZERO_QUERY_EPOCHS {
                break;
            }
        } else {
            zero_query_epochs = 0;
        }

        let found = !next_domain.is_empty();
        if found {
            next_domain.sort_by(|a, b| a.path().cmp(b.path()));
            domain = next_domain;
            if domain.len() > MAX_DOMAIN_CELLS {
                break;
            }
        }
        st = update_interval(found, &st, &params);
    }

    Ok(RunReport {
        epochs,
        final_domain: domain,
        final_state: st,
        total_queries: horizon - budget,
        depth_progress_violations,
    })
}
