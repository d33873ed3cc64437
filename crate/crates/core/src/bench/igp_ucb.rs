//! IGP-UCB baseline: at every step, query the point of a fixed uniform
//! grid that maximizes the upper confidence bound, with a single posterior
//! growing over the whole run. The grid is capped (`baseline.grid_max`,
//! default 6400) and the per-step cost grows with the observation count,
//! which is exactly the behavior the domain-shrinking algorithm avoids.

use crate::config::Config;
use crate::error::Result;
use crate::gp::{beta, GPState};
use crate::threds::RunOracle;

/// Uniform cell-center lattice with at most `grid_max` points.
pub fn baseline_grid(dim: usize, grid_max: usize) -> Vec<Vec<f64>> {
    let per_axis = match dim {
        1 => grid_max,
        _ => (grid_max as f64).powf(1.0 / dim as f64).floor() as usize,
    }
    .max(1);
    let mut points = Vec::with_capacity(per_axis.pow(dim as u32));
    let mut index = vec![0usize; dim];
    loop {
        points.push(
            index
                .iter()
                .map(|&i| (i as f64 + 0.5) / per_axis as f64)
                .collect(),
        );
        let mut axis = dim;
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            index[axis] += 1;
            if index[axis] < per_axis {
                break;
            }
            index[axis] = 0;
            if axis == 0 {
                break;
            }
        }
        if index.iter().all(|&v| v == 0) {
            break;
        }
    }
    points
}

/// Run the baseline for `horizon` queries against a normalized oracle.
pub fn igp_ucb_run(cfg: &Config, horizon: usize, oracle: &mut dyn RunOracle) -> Result<()> {
    let params = super::normalize_params(&cfg.algo_params(horizon)?);
    let kernel = cfg.kernel()?;
    let gamma = cfg.gamma()?;
    let grid = baseline_grid(kernel.dim, cfg.baseline_grid_max);
    let mut gp = GPState::new(kernel, params.lambda, grid)?;

    oracle.set_epoch(0);
    oracle.set_node("");
    for t in 1..=horizon {
        let width = beta(&params, &gamma, t, params.delta0);
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = 0usize;
        for i in 0..gp.grid().len() {
            let (mu, sd) = gp.grid_mean_sd(i);
            let score = mu + width * sd;
            if score > best {
                best = score;
                best_idx = i;
            }
        }
        let x = gp.grid()[best_idx].clone();
        let y = oracle.observe(&x);
        gp.observe_grid(best_idx, y)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{Objective, TraceRecorder};
    use crate::config::{Config, ObjectiveKind};

    #[test]
    fn grid_respects_cap() {
        assert_eq!(baseline_grid(2, 6400).len(), 6400);
        assert_eq!(baseline_grid(1, 64).len(), 64);
        assert!(baseline_grid(2, 6000).len() <= 6000);
    }

    #[test]
    fn first_query_is_lowest_index_grid_point() {
        // Under the pure prior all UCB scores tie; ties go to the lowest
        // index.
        let mut cfg = Config::defaults_for(ObjectiveKind::Piecewise);
        cfg.baseline_grid_max = 64;
        let objective = Objective::from_config(&cfg);
        let mut rec = TraceRecorder::new(&objective, 0.0, 0).unwrap();
        igp_ucb_run(&cfg, 1, &mut rec).unwrap();
        assert_eq!(rec.trace.rows.len(), 1);
        assert_eq!(rec.trace.rows[0].x, vec![0.5 / 64.0]);
        let f0 = objective.evaluate(&[0.5 / 64.0]).unwrap();
        let expect = objective.known_max.unwrap() - f0;
        assert!((rec.trace.rows[0].inst_regret - expect).abs() < 1e-12);
    }

    #[test]
    fn noise_free_quadratic_locks_onto_the_argmax() {
        // 1-d quadratic with known maximum at 0.6, noise-free, 64-point
        // grid: after 100 steps the queried point sits within one grid
        // cell of the true argmax.
        struct Quad {
            last: Vec<f64>,
        }
        impl crate::threds::RunOracle for Quad {
            fn observe(&mut self, x: &[f64]) -> f64 {
                self.last = x.to_vec();
                0.9 - 8.0 * (x[0] - 0.6) * (x[0] - 0.6)
            }
            fn set_epoch(&mut self, _: usize) {}
            fn set_node(&mut self, _: &str) {}
        }
        let mut cfg = Config::defaults_for(ObjectiveKind::Piecewise);
        cfg.baseline_grid_max = 64;
        cfg.range = (0.0, 1.0);
        // Noise-free observations: the assumed noise variance shrinks to a
        // jitter so the posterior trusts exact values.
        cfg.lambda = 1e-4;
        cfg.noise_sd = 0.0;
        let mut oracle = Quad { last: vec![] };
        igp_ucb_run(&cfg, 100, &mut oracle).unwrap();
        assert!(
            (oracle.last[0] - 0.6).abs() <= 1.0 / 64.0,
            "final query at {}",
            oracle.last[0]
        );
    }
}
