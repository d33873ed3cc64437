//! Biased random walk on a depth-`d` subtree: the per-epoch routine that
//! identifies threshold-exceeding leaves.
//!
//! Each iteration first runs a root termination test (rejecting ends the
//! search, which handles the unknown number of targets), then walks from
//! the subtree root. At a non-leaf node the two children are tested in
//! order with the one-sided local test at confidence `p`; the walk moves
//! to the first positive child, or back to the parent when both reject
//! (the root is its own parent). Reaching a leaf triggers the two-sided
//! accept-high test; a positive verdict records the leaf as a target and
//! starts the next iteration with that region excluded from every later
//! grid. Leaf and root tests at iteration `r` use the shrinking
//! per-iteration confidence [`delta_hat`].
//!
//! The walk logic is generic over a [`NodeTester`] so its statistics can
//! be exercised with stochastic stubs, independently of the GP machinery.

use crate::error::{Error, Result};
use crate::geometry::{discretize, Cell};
use crate::gp::AlgoParams;
use crate::kernel::GammaBound;
use crate::seqtest::{self, TestConfig, TestMode, Verdict};
use crate::threds::RunOracle;

/// Per-iteration confidence for the leaf and root termination tests:
/// `delta0 / (8 T r (r+1) (p - 1/2)^2) * ln(4 d T / delta0)`, clamped
/// into `(0, p]`.
pub fn delta_hat(r: usize, params: &AlgoParams, dim: usize) -> f64 {
    debug_assert!(r >= 1);
    let t = params.horizon as f64;
    let p = params.test_p;
    let r = r as f64;
    let raw = params.delta0 / (8.0 * t * r * (r + 1.0) * (p - 0.5) * (p - 0.5))
        * (4.0 * dim as f64 * t / params.delta0).ln();
    raw.min(p)
}

/// State of one multi-iteration search below a subtree root.
#[derive(Debug, Clone)]
pub struct WalkState {
    pub current: Cell,
    pub subtree_root: Cell,
    pub found: Vec<Cell>,
    pub iteration: usize,
    pub nodes_visited: usize,
    pub excluded: Vec<Cell>,
    /// Every move as (from, to) bit paths, for adjacency diagnostics.
    pub moves: Vec<(Vec<u8>, Vec<u8>)>,
    /// Ancestors of `current` up to the subtree root, innermost last.
    stack: Vec<Cell>,
}

impl WalkState {
    pub fn new(subtree_root: Cell) -> Self {
        WalkState {
            current: subtree_root.clone(),
            subtree_root,
            found: Vec::new(),
            iteration: 1,
            nodes_visited: 0,
            excluded: Vec::new(),
            moves: Vec::new(),
            stack: Vec::new(),
        }
    }

    fn reset_to_root(&mut self) {
        self.current = self.subtree_root.clone();
        self.stack.clear();
    }

    fn move_to_child(&mut self, child: Cell) {
        self.moves
            .push((self.current.path().to_vec(), child.path().to_vec()));
        let parent = std::mem::replace(&mut self.current, child);
        self.stack.push(parent);
        self.nodes_visited += 1;
    }

    fn move_to_parent(&mut self) {
        let from = self.current.path().to_vec();
        if let Some(parent) = self.stack.pop() {
            self.current = parent;
        }
        // At the root the walk stays put; the arrival still counts.
        self.moves.push((from, self.current.path().to_vec()));
        self.nodes_visited += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IterationOutcome {
    FoundLeaf(Cell),
    RootRejected,
    BudgetExhausted,
    /// The walk overran [`walk_step_cap`]; see there.
    WalkCapped,
}

/// Result of one node-level test as seen by the walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TesterResult {
    pub verdict: Verdict,
    pub exhausted: bool,
}

/// The walk's interface to node-level testing. The GP-backed
/// implementation builds a fresh grid and test per call; simulation stubs
/// answer from ground truth with injected error.
pub trait NodeTester {
    fn test_root(&mut self, cell: &Cell, delta_hat: f64) -> Result<TesterResult>;
    fn test_child(&mut self, cell: &Cell) -> Result<TesterResult>;
    fn test_leaf(&mut self, cell: &Cell, delta_hat: f64) -> Result<TesterResult>;
}

/// One iteration: root termination test, then the biased walk until a
/// leaf is accepted or the budget runs out. `state.current` must be the
/// subtree root at entry.
pub fn rwt_iteration<T: NodeTester>(
    state: &mut WalkState,
    tester: &mut T,
    params: &AlgoParams,
) -> Result<IterationOutcome> {
    let dh = delta_hat(state.iteration, params, params.domain_dim);
    let leaf_depth = state.subtree_root.depth() + params.domain_dim;

    let root = state.subtree_root.clone();
    let res = tester.test_root(&root, dh)?;
    if res.exhausted {
        return Ok(IterationOutcome::BudgetExhausted);
    }
    if res.verdict == Verdict::Negative {
        return Ok(IterationOutcome::RootRejected);
    }

    let cap = walk_step_cap(params, params.domain_dim);
    let mut arrivals = 1usize;
    state.nodes_visited += 1; // arrival at the root
    loop {
        if arrivals >= cap {
            return Ok(IterationOutcome::WalkCapped);
        }
        arrivals += 1;
        if state.current.depth() == leaf_depth {
            let leaf = state.current.clone();
            let res = tester.test_leaf(&leaf, dh)?;
            if res.exhausted {
                return Ok(IterationOutcome::BudgetExhausted);
            }
            match res.verdict {
                Verdict::Positive => {
                    state.found.push(leaf.clone());
                    state.excluded.push(leaf.clone());
                    return Ok(IterationOutcome::FoundLeaf(leaf));
                }
                Verdict::Negative => state.move_to_parent(),
            }
        } else {
            let (left, right) = state.current.split();
            let res = tester.test_child(&left)?;
            if res.exhausted {
                return Ok(IterationOutcome::BudgetExhausted);
            }
            if res.verdict == Verdict::Positive {
                state.move_to_child(left);
                continue;
            }
            let res = tester.test_child(&right)?;
            if res.exhausted {
                return Ok(IterationOutcome::BudgetExhausted);
            }
            if res.verdict == Verdict::Positive {
                state.move_to_child(right);
            } else {
                state.move_to_parent();
            }
        }
    }
}

/// Everything a GP-backed search below one subtree needs to know about
/// the current epoch.
#[derive(Debug, Clone)]
pub struct SearchContext<'a> {
    pub params: &'a AlgoParams,
    pub gamma: &'a GammaBound,
    /// Threshold of the current epoch.
    pub tau: f64,
    /// Fill distance of the current epoch.
    pub delta: f64,
    /// Query ration per local test; 0 leaves only the global guard.
    pub test_query_cap: usize,
}

impl SearchContext<'_> {
    pub fn gap(&self) -> f64 {
        self.params.holder_l * self.delta.powf(self.params.holder_alpha)
    }
}

/// Summary of a completed target search below one subtree root.
#[derive(Debug, Clone)]
pub struct TargetSearch {
    pub leaves: Vec<Cell>,
    pub queries_used: usize,
    pub budget_exhausted: bool,
    pub iterations: usize,
    pub nodes_visited: usize,
    /// Largest grid instantiated during the search.
    pub max_grid: usize,
    /// Node arrivals per walk iteration, for walk-length diagnostics.
    pub nodes_per_iteration: Vec<usize>,
    /// A walk overran the step cap and the search was cut short.
    pub walk_capped: bool,
}

/// Hard cap on node arrivals within one walk iteration, a generous
/// multiple of the high-probability walk-length bound. A walk can only
/// approach it when the node tests stop behaving like `p`-correct
/// verdicts (a mis-specified model can reject both children of an
/// accepted root deterministically, at zero query cost); cutting the
/// search short then returns the leaves found so far and lets the epoch
/// loop move on.
pub fn walk_step_cap(params: &AlgoParams, dim: usize) -> usize {
    let t = params.horizon.max(1) as f64;
    let p = params.test_p;
    let bound = (4.0 * dim as f64 * t / params.delta0).ln() / (2.0 * (p - 0.5) * (p - 0.5));
    (10.0 * bound).ceil() as usize
}

/// Identify the target leaves `d` levels below `subtree_root` by repeated
/// walk iterations. `search_confidence` is the per-call confidence budget
/// handed down by the epoch loop (`delta0 / 4T`); the node-level tests
/// themselves run at `p` and `delta_hat(r)`.
pub fn get_target_nodes(
    subtree_root: &Cell,
    ctx: &SearchContext,
    search_confidence: f64,
    oracle: &mut dyn RunOracle,
    budget: usize,
) -> Result<TargetSearch> {
    let _ = search_confidence; // consumed as the walk-length confidence budget; logged by callers
    let mut tester = GpNodeTester {
        ctx,
        oracle,
        budget_left: budget,
        queries_used: 0,
        max_grid: 0,
        excluded: Vec::new(),
    };
    let mut state = WalkState::new(subtree_root.clone());
    let mut nodes_per_iteration = Vec::new();
    let mut exhausted = false;
    let mut capped = false;
    loop {
        state.reset_to_root();
        tester.excluded = state.excluded.clone();
        let before = state.nodes_visited;
        match rwt_iteration(&mut state, &mut tester, ctx.params)? {
            IterationOutcome::FoundLeaf(_) => {
                nodes_per_iteration.push(state.nodes_visited - before);
                state.iteration += 1;
            }
            IterationOutcome::RootRejected => {
                nodes_per_iteration.push(state.nodes_visited - before);
                break;
            }
            IterationOutcome::BudgetExhausted => {
                nodes_per_iteration.push(state.nodes_visited - before);
                exhausted = true;
                break;
            }
            IterationOutcome::WalkCapped => {
                nodes_per_iteration.push(state.nodes_visited - before);
                capped = true;
                break;
            }
        }
    }
    Ok(TargetSearch {
        leaves: state.found,
        queries_used: tester.queries_used,
        budget_exhausted: exhausted,
        iterations: state.iteration,
        nodes_visited: state.nodes_visited,
        max_grid: tester.max_grid,
        nodes_per_iteration,
        walk_capped: capped,
    })
}

struct GpNodeTester<'a, 'b> {
    ctx: &'a SearchContext<'a>,
    oracle: &'b mut dyn RunOracle,
    budget_left: usize,
    queries_used: usize,
    max_grid: usize,
    excluded: Vec<Cell>,
}

impl GpNodeTester<'_, '_> {
    fn run(&mut self, cell: &Cell, mode: TestMode, delta_hat: f64) -> Result<TesterResult> {
        if self.budget_left == 0 {
            return Ok(TesterResult {
                verdict: Verdict::Positive,
                exhausted: true,
            });
        }
        let grid = match discretize(cell, self.ctx.delta, &self.excluded) {
            Ok(g) => g,
            // A region with no candidate points left cannot hold a new target.
            Err(Error::RegionFullyExcluded) => {
                return Ok(TesterResult {
                    verdict: Verdict::Negative,
                    exhausted: false,
                })
            }
            Err(e) => return Err(e),
        };
        self.max_grid = self.max_grid.max(grid.points.len());
        self.oracle.set_node(&cell.path_string());
        let cfg = TestConfig {
            tau: self.ctx.tau,
            eta_check: self.ctx.params.test_p,
            eta_sample: self.ctx.params.eta_sample(),
            gap: self.ctx.gap(),
            mode,
            delta_hat,
        };
        // Rationing schedule: tests early in the run are kept short so the
        // threshold search makes progress; the allowance grows with spent
        // budget, and a test that hits it conservatively accepts just as
        // the termination horizon would.
        let ration = if self.ctx.test_query_cap > 0 {
            let spent = self.ctx.params.horizon.saturating_sub(self.budget_left);
            let cap = self.ctx.test_query_cap.max(spent / 4);
            self.budget_left.min(cap)
        } else {
            self.budget_left
        };
        let oracle = &mut *self.oracle;
        let mut query = |x: &[f64]| oracle.observe(x);
        let out = seqtest::run_test(
            &grid,
            &cfg,
            self.ctx.params,
            self.ctx.gamma,
            &mut query,
            ration,
        )?;
        self.budget_left -= out.queries_used;
        self.queries_used += out.queries_used;
        // Hitting the ration is an ordinary conservative accept; only a
        // drained global budget ends the search.
        Ok(TesterResult {
            verdict: out.verdict,
            exhausted: out.terminated_by_budget && self.budget_left == 0,
        })
    }
}

impl NodeTester for GpNodeTester<'_, '_> {
    fn test_root(&mut self, cell: &Cell, delta_hat: f64) -> Result<TesterResult> {
        self.run(cell, TestMode::TwoSidedRejectHigh, delta_hat)
    }

    fn test_child(&mut self, cell: &Cell) -> Result<TesterResult> {
        self.run(cell, TestMode::OneSided, self.ctx.params.test_p)
    }

    fn test_leaf(&mut self, cell: &Cell, delta_hat: f64) -> Result<TesterResult> {
        self.run(cell, TestMode::TwoSidedAcceptHigh, delta_hat)
    }
}

/// Alternative search strategy that descends the whole subtree at once:
/// one grid over the root, one shared posterior, leaves peeled off as
/// their points prove threshold-exceeding or the local counter hits the
/// termination time. Selected via `search.strategy = heuristic`.
pub fn heuristic_get_target_nodes(
    subtree_root: &Cell,
    ctx: &SearchContext,
    search_confidence: f64,
    oracle: &mut dyn RunOracle,
    budget: usize,
) -> Result<TargetSearch> {
    use crate::gp::{beta, GPState};

    let params = ctx.params;
    let delta = search_confidence;
    let gap = ctx.gap();
    let grid = match discretize(subtree_root, ctx.delta, &[]) {
        Ok(g) => g,
        Err(Error::RegionFullyExcluded) => unreachable!("no exclusions supplied"),
        Err(e) => return Err(e),
    };
    let leaf_depth = subtree_root.depth() + params.domain_dim;
    let mut leaves = crate::geometry::subtree_leaves(subtree_root, params.domain_dim);
    let mut active: Vec<bool> = vec![true; grid.points.len()];
    let mut active_count = grid.points.len();
    let max_grid = grid.points.len();

    oracle.set_node(&subtree_root.path_string());
    let mut gp = GPState::new(ctx.gamma.kernel.clone(), params.lambda, grid.points.clone())?;
    let mut targets: Vec<Cell> = Vec::new();
    let mut queries = 0usize;
    let mut exhausted = false;
    let mut t = 1usize;
    let mut t_loc = 1usize;
    // The local counter's horizon is the termination time, shortened by
    // the ration schedule at desk scale so a threshold-straddling leaf is
    // peeled conservatively instead of absorbing the remaining budget.
    let spent = params.horizon.saturating_sub(budget);
    let ration = if ctx.test_query_cap > 0 {
        ctx.test_query_cap.max(spent / 4)
    } else {
        usize::MAX
    };
    let mut horizon =
        saturating_horizon(params, ctx.gamma, delta, gap, active_count)?.min(ration);

    'outer: while active_count > 0 {
        let b = beta(params, ctx.gamma, t, delta);
        let (mut max_ucb, mut best_ucb_idx) = (f64::NEG_INFINITY, usize::MAX);
        let (mut max_lcb, mut best_lcb_idx) = (f64::NEG_INFINITY, usize::MAX);
        for i in 0..grid.points.len() {
            if !active[i] {
                continue;
            }
            let (mu, sd) = gp.grid_mean_sd(i);
            let ucb = mu + b * sd;
            let lcb = mu - b * sd;
            if ucb > max_ucb {
                max_ucb = ucb;
                best_ucb_idx = i;
            }
            if lcb > max_lcb {
                max_lcb = lcb;
                best_lcb_idx = i;
            }
        }

        if max_ucb <= ctx.tau - gap {
            break;
        }
        let peel = if max_lcb >= ctx.tau {
            true
        } else {
            t_loc == horizon
        };
        if peel {
            let point = &grid.points[best_lcb_idx];
            let path = crate::geometry::locate_path(point, leaf_depth);
            let pos = leaves.iter().position(|c| c.path() == path.as_slice());
            if let Some(pos) = pos {
                let leaf = leaves.remove(pos);
                for (i, p) in grid.points.iter().enumerate() {
                    if active[i] && leaf.contains(p) {
                        active[i] = false;
                        active_count -= 1;
                    }
                }
                targets.push(leaf);
                t_loc = 0;
                if active_count == 0 {
                    break 'outer;
                }
                horizon =
                    saturating_horizon(params, ctx.gamma, delta, gap, active_count)?.min(ration);
            }
        }

        if queries >= budget {
            exhausted = true;
            break;
        }
        let x = grid.points[best_ucb_idx].clone();
        let y = oracle.observe(&x);
        gp.observe_grid(best_ucb_idx, y)?;
        queries += 1;
        t += 1;
        t_loc += 1;
    }

    Ok(TargetSearch {
        leaves: targets,
        queries_used: queries,
        budget_exhausted: exhausted,
        iterations: 1,
        nodes_visited: 0,
        max_grid,
        nodes_per_iteration: Vec::new(),
        walk_capped: false,
    })
}

fn saturating_horizon(
    params: &AlgoParams,
    gamma: &GammaBound,
    eta: f64,
    gap: f64,
    m: usize,
) -> Result<usize> {
    match seqtest::t_term(params, gamma, eta, gap, m) {
        Ok(h) => Ok(h),
        Err(Error::TerminationScanOverflow) => Ok(usize::MAX),
        Err(e) => Err(e),
    }
}
