//! Benchmark harness: objectives on the unit cube, the noisy trace-
//! recording oracle, range normalization, the IGP-UCB baseline and the
//! experiment runner.
//!
//! Objectives are presented to the algorithms on `[0,1]^d` in normalized
//! units (maximum inside `[0,1]`); the recorded trace keeps original
//! units, with instantaneous regret measured against the known maximum.

pub mod igp_ucb;
pub mod runner;

use crate::config::{Config, ObjectiveKind};
use crate::error::{Error, Result};
use crate::gp::AlgoParams;
use crate::threds::RunOracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::time::Instant;

/// Minimum of the standard Branin function.
pub const BRANIN_MIN: f64 = 0.397_887_357_729_738_16;

fn branin_raw(x1: f64, x2: f64) -> f64 {
    let a = 1.0;
    let b = 5.1 / (4.0 * std::f64::consts::PI * std::f64::consts::PI);
    let c = 5.0 / std::f64::consts::PI;
    let r = 6.0;
    let s = 10.0;
    let t = 1.0 / (8.0 * std::f64::consts::PI);
    let inner = x2 - b * x1 * x1 + c * x1 - r;
    a * inner * inner + s * (1.0 - t) * x1.cos() + s
}

fn rosenbrock_raw(x: f64, y: f64) -> f64 {
    let a = 1.0 - x;
    let b = y - x * x;
    a * a + 100.0 * b * b
}

const PIECEWISE_KNOTS: [(f64, f64); 6] = [
    (0.0, 0.30),
    (0.30, 0.45),
    (0.60, 0.35),
    (0.75, 1.0),
    (0.90, 0.40),
    (1.0, 0.35),
];

fn piecewise_raw(x: f64) -> f64 {
    let mut prev = PIECEWISE_KNOTS[0];
    for knot in &PIECEWISE_KNOTS[1..] {
        if x <= knot.0 {
            let w = (x - prev.0) / (knot.0 - prev.0);
            return prev.1 + w * (knot.1 - prev.1);
        }
        prev = *knot;
    }
    PIECEWISE_KNOTS[PIECEWISE_KNOTS.len() - 1].1
}

/// A smooth random function drawn via random Fourier features of the SE
/// kernel; deterministic in the seed and evaluable anywhere.
#[derive(Debug, Clone)]
pub struct RffSample {
    omegas: Vec<Vec<f64>>,
    phases: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
    pub amplitude: f64,
    pub shift: f64,
}

impl RffSample {
    pub fn sample(seed: u64, dim: usize, lengthscale: f64, features: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0ff5e7);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let omegas = (0..features)
            .map(|_| {
                (0..dim)
                    .map(|_| normal.sample(&mut rng) / lengthscale)
                    .collect()
            })
            .collect();
        let phases = (0..features)
            .map(|_| rng.gen::<f64>() * std::f64::consts::TAU)
            .collect();
        let weights = (0..features).map(|_| normal.sample(&mut rng)).collect();
        RffSample {
            omegas,
            phases,
            weights,
            dim,
            amplitude: 1.0,
            shift: 0.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let scale = (2.0 / self.weights.len() as f64).sqrt();
        let mut acc = 0.0;
        for i in 0..self.weights.len() {
            let dot: f64 = self.omegas[i].iter().zip(x.iter()).map(|(o, v)| o * v).sum();
            acc += self.weights[i] * (dot + self.phases[i]).cos();
        }
        self.shift + self.amplitude * scale * acc
    }

    /// Exact bound on the gradient norm, hence a Lipschitz constant.
    pub fn gradient_bound(&self) -> f64 {
        let scale = (2.0 / self.weights.len() as f64).sqrt();
        let sum: f64 = self
            .weights
            .iter()
            .zip(self.omegas.iter())
            .map(|(w, o)| w.abs() * o.iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum();
        self.amplitude * scale * sum
    }
}

/// A benchmark objective on the unit cube, in original units.
#[derive(Debug, Clone)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub dim: usize,
    pub known_argmax: Option<Vec<f64>>,
    pub known_max: Option<f64>,
    pub range: (f64, f64),
    rff: Option<RffSample>,
}

/// Transform constants documented in run metadata.
pub const BRANIN_VALUE_SCALE: f64 = 400.0;
pub const BRANIN_TOP: f64 = 1.0;
pub const ROSENBROCK_VALUE_SCALE: f64 = 500.0;
pub const ROSENBROCK_TOP: f64 = 11.0;
pub const ROSENBROCK_BOX: f64 = 2.048;
pub const GPSAMPLE_FEATURES: usize = 256;
pub const GPSAMPLE_SCAN_POINTS: usize = 8192;
pub const GPSAMPLE_MAX_MARGIN: f64 = 0.02;

impl Objective {
    pub fn from_config(cfg: &Config) -> Objective {
        match cfg.objective {
            ObjectiveKind::Branin => Objective {
                kind: cfg.objective,
                dim: 2,
                known_argmax: Some(vec![
                    (std::f64::consts::PI + 5.0) / 15.0,
                    2.275 / 15.0,
                ]),
                known_max: Some(BRANIN_TOP),
                range: cfg.range,
                rff: None,
            },
            ObjectiveKind::Rosenbrock => Objective {
                kind: cfg.objective,
                dim: 2,
                known_argmax: Some(vec![
                    (1.0 + ROSENBROCK_BOX) / (2.0 * ROSENBROCK_BOX),
                    (1.0 + ROSENBROCK_BOX) / (2.0 * ROSENBROCK_BOX),
                ]),
                known_max: Some(ROSENBROCK_TOP),
                range: cfg.range,
                rff: None,
            },
            ObjectiveKind::Piecewise => Objective {
                kind: cfg.objective,
                dim: 1,
                known_argmax: Some(vec![0.75]),
                known_max: Some(1.0),
                range: cfg.range,
                rff: None,
            },
            ObjectiveKind::GpSample => {
                let mut rff = RffSample::sample(cfg.objective_seed, 1, cfg.kernel_lengthscale,
                    GPSAMPLE_FEATURES);
                rff.amplitude = 0.3;
                rff.shift = 0.5;
                // Dense scan for a reference maximum; the margin covers the
                // interpolation error between scan points, so no evaluation
                // can exceed the reference.
                let mut best = f64::NEG_INFINITY;
                for i in 0..GPSAMPLE_SCAN_POINTS {
                    let x = (i as f64 + 0.5) / GPSAMPLE_SCAN_POINTS as f64;
                    best = best.max(rff.eval(&[x]));
                }
                Objective {
                    kind: cfg.objective,
                    dim: 1,
                    known_argmax: None,
                    known_max: Some(best + GPSAMPLE_MAX_MARGIN),
                    range: cfg.range,
                    rff: Some(rff),
                }
            }
        }
    }

    /// All known maximizer images (Branin has three).
    pub fn known_argmaxes(&self) -> Vec<Vec<f64>> {
        match self.kind {
            ObjectiveKind::Branin => vec![
                vec![(-std::f64::consts::PI + 5.0) / 15.0, 12.275 / 15.0],
                vec![(std::f64::consts::PI + 5.0) / 15.0, 2.275 / 15.0],
                vec![(9.42478 + 5.0) / 15.0, 2.475 / 15.0],
            ],
            _ => self.known_argmax.iter().cloned().collect(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        for v in x {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::InvalidConfig(format!(
                    "objective input outside the unit cube: {v}"
                )));
            }
        }
        Ok(match self.kind {
            ObjectiveKind::Branin => {
                let raw = branin_raw(-5.0 + 15.0 * x[0], 15.0 * x[1]);
                BRANIN_TOP - (raw - BRANIN_MIN) / BRANIN_VALUE_SCALE
            }
            ObjectiveKind::Rosenbrock => {
                let raw = rosenbrock_raw(
                    -ROSENBROCK_BOX + 2.0 * ROSENBROCK_BOX * x[0],
                    -ROSENBROCK_BOX + 2.0 * ROSENBROCK_BOX * x[1],
                );
                ROSENBROCK_TOP - raw / ROSENBROCK_VALUE_SCALE
            }
            ObjectiveKind::Piecewise => piecewise_raw(x[0]),
            ObjectiveKind::GpSample => self.rff.as_ref().unwrap().eval(x),
        })
    }
}

/// Rescale parameters from original units into the normalized problem
/// with maximum range `[0, 1]`; widths, noise scales and the Lipschitz
/// constant divide by the range width, variance-like quantities by its
/// square.
pub fn normalize_params(params: &AlgoParams) -> AlgoParams {
    let width = params.range.1 - params.range.0;
    let mut p = params.clone();
    p.rkhs_bound = params.rkhs_bound / width;
    p.noise_scale = params.noise_scale / width;
    p.lambda = params.lambda / (width * width);
    p.holder_l = params.holder_l / width;
    p.range = (0.0, 1.0);
    p
}

/// One trace row, original units.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub wall_clock_ns: u128,
    pub epoch: usize,
    pub node_path: String,
}

/// Per-query record of a full run.
#[derive(Debug, Clone, Default)]
pub struct RegretTrace {
    pub dim: usize,
    pub rows: Vec<TraceRow>,
}

impl RegretTrace {
    pub fn csv_header(dim: usize) -> String {
        let xs: Vec<String> = (1..=dim).map(|i| format!("x_{i}")).collect();
        format!(
            "t,{},y,inst_regret,cum_regret,wall_clock_ns,epoch,node_path",
            xs.join(",")
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.dim);
        out.push('\n');
        for row in &self.rows {
            let xs: Vec<String> = row.x.iter().map(|v| format!("{v}")).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                row.t,
                xs.join(","),
                row.y,
                row.inst_regret,
                row.cum_regret,
                row.wall_clock_ns,
                row.epoch,
                row.node_path
            ));
        }
        out
    }

    pub fn final_cum_regret(&self) -> f64 {
        self.rows.last().map(|r| r.cum_regret).unwrap_or(0.0)
    }

    pub fn total_wall_clock_ns(&self) -> u128 {
        self.rows.last().map(|r| r.wall_clock_ns).unwrap_or(0)
    }
}

/// The harness-side oracle: evaluates the objective, adds seeded Gaussian
/// noise, records the trace in original units, and hands normalized
/// observations to the algorithm.
pub struct TraceRecorder<'a> {
    objective: &'a Objective,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
    reference_max: f64,
    range: (f64, f64),
    start: Instant,
    epoch: usize,
    node_path: String,
    cum_regret: f64,
    pub trace: RegretTrace,
}

impl<'a> TraceRecorder<'a> {
    pub fn new(objective: &'a Objective, noise_sd: f64, seed: u64) -> Result<Self> {
        let noise = if noise_sd > 0.0 {
            Some(Normal::new(0.0, noise_sd).map_err(|e| {
                Error::InvalidConfig(format!("invalid noise sd {noise_sd}: {e}"))
            })?)
        } else {
            None
        };
        let reference_max = objective.known_max.ok_or_else(|| {
            Error::InvalidConfig("objective has no reference maximum".into())
        })?;
        Ok(TraceRecorder {
            objective,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
            reference_max,
            range: objective.range,
            start: Instant::now(),
            epoch: 0,
            node_path: String::new(),
            cum_regret: 0.0,
            trace: RegretTrace {
                dim: objective.dim,
                rows: Vec::new(),
            },
        })
    }

    pub fn queries(&self) -> usize {
        self.trace.rows.len()
    }
}

impl RunOracle for TraceRecorder<'_> {
    fn observe(&mut self, x: &[f64]) -> f64 {
        let f = self
            .objective
            .evaluate(x)
            .expect("algorithms query inside the unit cube");
        let eps = match &self.noise {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        };
        let y = f + eps;
        let inst = self.reference_max - f;
        self.cum_regret += inst;
        self.trace.rows.push(TraceRow {
            t: self.trace.rows.len() + 1,
            x: x.to_vec(),
            y,
            inst_regret: inst,
            cum_regret: self.cum_regret,
            wall_clock_ns: self.start.elapsed().as_nanos(),
            epoch: self.epoch,
            node_path: self.node_path.clone(),
        });
        (y - self.range.0) / (self.range.1 - self.range.0)
    }

    fn set_epoch(&mut self, epoch: usize) {
        self.epoch = epoch;
    }

    fn set_node(&mut self, path: &str) {
        self.node_path.clear();
        self.node_path.push_str(path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn obj(kind: ObjectiveKind) -> Objective {
        Objective::from_config(&Config::defaults_for(kind))
    }

    #[test]
    fn branin_argmax_images_reach_the_top() {
        let o = obj(ObjectiveKind::Branin);
        for img in o.known_argmaxes() {
            let v = o.evaluate(&img).unwrap();
            assert!((v - BRANIN_TOP).abs() < 2e-6, "image value {v}");
        }
    }

    #[test]
    fn branin_brute_force_argmax_matches_images() {
        let o = obj(ObjectiveKind::Branin);
        let n = 1500usize;
        let mut best = f64::NEG_INFINITY;
        let mut best_pt = [0.0, 0.0];
        for i in 0..n {
            for j in 0..n {
                let x = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64];
                let v = o.evaluate(&x).unwrap();
                if v > best {
                    best = v;
                    best_pt = x;
                }
            }
        }
        assert!((best - BRANIN_TOP).abs() < 1e-4);
        let nearest = o
            .known_argmaxes()
            .iter()
            .map(|img| {
                ((img[0] - best_pt[0]).powi(2) + (img[1] - best_pt[1]).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= 1e-3, "brute-force argmax {nearest} away");
        // Values stay inside the declared knowledge range.
        assert!(best <= 1.2 && best >= 0.5);
    }

    #[test]
    fn rosenbrock_image_of_minimum_is_argmax() {
        let o = obj(ObjectiveKind::Rosenbrock);
        let img = o.known_argmax.clone().unwrap();
        let top = o.evaluate(&img).unwrap();
        assert!((top - ROSENBROCK_TOP).abs() < 1e-12);
        let n = 1200usize;
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let x = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64];
                best = best.max(o.evaluate(&x).unwrap());
            }
        }
        assert!(best <= top + 1e-9);
        assert!(top - best < 1e-4);
    }

    #[test]
    fn no_evaluation_exceeds_known_max() {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for kind in [
            ObjectiveKind::Branin,
            ObjectiveKind::Rosenbrock,
            ObjectiveKind::Piecewise,
            ObjectiveKind::GpSample,
        ] {
            let o = obj(kind);
            let cap = o.known_max.unwrap();
            for _ in 0..100_000 {
                let x: Vec<f64> = (0..o.dim).map(|_| rng.gen()).collect();
                let v = o.evaluate(&x).unwrap();
                assert!(v <= cap + 1e-9, "{kind:?} exceeded: {v} > {cap}");
                assert!(v.is_finite());
            }
        }
    }

    #[test]
    fn gpsample_deterministic() {
        let o1 = obj(ObjectiveKind::GpSample);
        let o2 = obj(ObjectiveKind::GpSample);
        for x in [[0.1], [0.5], [0.93]] {
            assert_eq!(
                o1.evaluate(&x).unwrap().to_bits(),
                o2.evaluate(&x).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn piecewise_peak() {
        let o = obj(ObjectiveKind::Piecewise);
        assert_eq!(o.evaluate(&[0.75]).unwrap(), 1.0);
        assert!(o.evaluate(&[0.74]).unwrap() < 1.0);
        assert!(o.evaluate(&[0.76]).unwrap() < 1.0);
        assert_eq!(o.evaluate(&[0.0]).unwrap(), 0.30);
        assert_eq!(o.evaluate(&[1.0]).unwrap(), 0.35);
    }

    #[test]
    fn out_of_cube_rejected() {
        let o = obj(ObjectiveKind::Branin);
        assert!(o.evaluate(&[1.5, 0.5]).is_err());
        assert!(o.evaluate(&[0.5]).is_err());
    }

    #[test]
    fn noise_sd_calibrated() {
        let o = obj(ObjectiveKind::Piecewise);
        let mut rec = TraceRecorder::new(&o, 0.1, 42).unwrap();
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let y = rec.observe(&[0.5]);
            // Undo normalization to recover the raw observation.
            let y_orig = y * (o.range.1 - o.range.0) + o.range.0;
            let eps = y_orig - o.evaluate(&[0.5]).unwrap();
            sum += eps;
            sum_sq += eps * eps;
        }
        let mean = sum / n as f64;
        let sd = (sum_sq / n as f64 - mean * mean).sqrt();
        assert!((sd - 0.1).abs() / 0.1 < 0.02, "sample sd {sd}");
    }

    #[test]
    fn trace_accounting_is_exact() {
        let o = obj(ObjectiveKind::Piecewise);
        let mut rec = TraceRecorder::new(&o, 0.01, 7).unwrap();
        for i in 0..50 {
            rec.set_epoch(i / 10 + 1);
            rec.observe(&[(i as f64 + 0.5) / 50.0]);
        }
        let rows = &rec.trace.rows;
        let mut cum = 0.0;
        let mut prev_clock = 0u128;
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.t, i + 1);
            cum += row.inst_regret;
            assert!((row.cum_regret - cum).abs() < 1e-9);
            assert!(row.inst_regret >= 0.0);
            assert!(row.wall_clock_ns >= prev_clock);
            prev_clock = row.wall_clock_ns;
        }
    }

    #[test]
    fn gpsample_gradient_bound_is_a_lipschitz_constant() {
        let o = obj(ObjectiveKind::GpSample);
        let rff = o.rff.as_ref().unwrap();
        let bound = rff.gradient_bound();
        let mut worst: f64 = 0.0;
        for i in 0..4000 {
            let x = i as f64 / 4000.0;
            let h = 1e-6;
            let slope = (rff.eval(&[x + h]) - rff.eval(&[x])) / h;
            worst = worst.max(slope.abs());
        }
        assert!(worst <= bound * (1.0 + 1e-6), "{worst} > {bound}");
    }
}
