//! Experiment orchestration: seeded runs, CSV and metadata persistence,
//! and the summary printed by the CLI.

use crate::bench::{igp_ucb, normalize_params, Objective, RegretTrace, TraceRecorder};
use crate::config::{Config, ObjectiveKind};
use crate::error::{Error, Result};
use crate::threds::{self, RunConfig, RunReport};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    GpThreds,
    IgpUcb,
}

impl Algo {
    pub fn name(&self) -> &'static str {
        match self {
            Algo::GpThreds => "gp-threds",
            Algo::IgpUcb => "igp-ucb",
        }
    }
}

/// Everything produced by a single seeded run.
pub struct RunArtifacts {
    pub trace: RegretTrace,
    pub report: Option<RunReport>,
}

/// Run one algorithm against one objective for one seed. Numeric failures
/// return the partial trace alongside the error so callers can persist a
/// flagged CSV.
pub fn run_single(
    algo: Algo,
    cfg: &Config,
    horizon: usize,
    seed: u64,
    max_epochs: Option<usize>,
) -> (std::result::Result<Option<RunReport>, Error>, RegretTrace) {
    let objective = Objective::from_config(cfg);
    let mut recorder = match TraceRecorder::new(&objective, cfg.noise_sd, seed) {
        Ok(r) => r,
        Err(e) => return (Err(e), RegretTrace::default()),
    };
    let outcome = match algo {
        Algo::GpThreds => run_gp_threds(cfg, horizon, seed, max_epochs, &mut recorder),
        Algo::IgpUcb => igp_ucb::igp_ucb_run(cfg, horizon, &mut recorder).map(|_| None),
    };
    let trace = recorder.trace;
    (outcome, trace)
}

fn run_gp_threds(
    cfg: &Config,
    horizon: usize,
    seed: u64,
    max_epochs: Option<usize>,
    recorder: &mut TraceRecorder,
) -> std::result::Result<Option<RunReport>, Error> {
    let params = normalize_params(&cfg.algo_params(horizon)?);
    let run_cfg = RunConfig {
        params,
        kernel: cfg.kernel()?,
        gamma: cfg.gamma()?,
        strategy: cfg.strategy,
        seed,
        objective: cfg.objective.name().to_string(),
        noise_sd: cfg.noise_sd,
        max_epochs,
        test_query_cap: cfg.search_test_cap,
    };
    threds::run(&run_cfg, recorder).map(Some)
}

/// CLI-facing arguments, already parsed.
#[derive(Debug, Clone)]
pub struct ExperimentArgs {
    pub algo: Algo,
    pub objective: ObjectiveKind,
    pub horizon: usize,
    pub seeds: usize,
    pub out_dir: PathBuf,
    pub config_file: Option<PathBuf>,
    pub strategy_override: Option<crate::threds::Strategy>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub seed: u64,
    pub queries: usize,
    pub final_cum_regret: f64,
    pub wall_clock_ns: u128,
    pub csv_path: PathBuf,
}

/// Run the full experiment matrix (one algorithm, one objective, all
/// seeds), writing one CSV and one metadata file per run.
pub fn run_experiment(args: &ExperimentArgs) -> Result<Vec<RunSummary>> {
    let mut cfg = Config::defaults_for(args.objective);
    if let Some(path) = &args.config_file {
        let text = std::fs::read_to_string(path)?;
        cfg.apply_overrides(&text)?;
    }
    if let Some(strategy) = args.strategy_override {
        cfg.strategy = strategy;
    }
    // Surface configuration errors before any query is issued.
    cfg.algo_params(args.horizon.max(1))?;
    cfg.kernel()?;
    std::fs::create_dir_all(&args.out_dir)?;

    let mut summaries = Vec::with_capacity(args.seeds);
    for seed in 0..args.seeds as u64 {
        let (outcome, trace) = run_single(args.algo, &cfg, args.horizon, seed, None);
        let stem = format!(
            "{}_{}_T{}_seed{}",
            args.algo.name(),
            cfg.objective.name(),
            args.horizon,
            seed
        );
        let csv_path = args.out_dir.join(format!("{stem}.csv"));
        let meta_path = args.out_dir.join(format!("{stem}.meta"));
        std::fs::write(&csv_path, trace.to_csv())?;
        let aborted = outcome.is_err();
        std::fs::write(
            &meta_path,
            metadata_text(args, &cfg, seed, aborted),
        )?;
        if let Err(e) = outcome {
            // Partial CSV is on disk and flagged; propagate for exit code 3.
            return Err(e);
        }
        summaries.push(RunSummary {
            seed,
            queries: trace.rows.len(),
            final_cum_regret: trace.final_cum_regret(),
            wall_clock_ns: trace.total_wall_clock_ns(),
            csv_path,
        });
    }
    Ok(summaries)
}

fn metadata_text(args: &ExperimentArgs, cfg: &Config, seed: u64, aborted: bool) -> String {
    let mut lines = vec![
        format!("algo={}", args.algo.name()),
        format!("T={}", args.horizon),
        format!("seed={seed}"),
        format!("aborted={aborted}"),
        format!("config_hash={}", cfg.content_hash()),
    ];
    lines.extend(cfg.canonical_lines());
    lines.extend(transform_notes(cfg.objective));
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

/// Fixed transform constants mapping each objective onto the unit cube,
/// echoed so a trace is interpretable without the source.
fn transform_notes(objective: ObjectiveKind) -> Vec<String> {
    match objective {
        ObjectiveKind::Branin => vec![
            "transform.input=x1 = -5 + 15 u1, x2 = 15 u2".to_string(),
            format!(
                "transform.value=f = {} - (branin(x1, x2) - {}) / {}",
                super::BRANIN_TOP,
                super::BRANIN_MIN,
                super::BRANIN_VALUE_SCALE
            ),
        ],
        ObjectiveKind::Rosenbrock => vec![
            format!(
                "transform.input=xi = -{b} + {w} ui",
                b = super::ROSENBROCK_BOX,
                w = 2.0 * super::ROSENBROCK_BOX
            ),
            format!(
                "transform.value=f = {} - rosenbrock(x1, x2) / {}",
                super::ROSENBROCK_TOP,
                super::ROSENBROCK_VALUE_SCALE
            ),
        ],
        ObjectiveKind::GpSample => vec![
            format!(
                "transform.value=f = 0.5 + 0.3 * rff_{}(x); reference max is a {}-point scan plus margin {}",
                super::GPSAMPLE_FEATURES,
                super::GPSAMPLE_SCAN_POINTS,
                super::GPSAMPLE_MAX_MARGIN
            ),
        ],
        ObjectiveKind::Piecewise => vec![
            "transform.value=piecewise linear through (0,0.3) (0.3,0.45) (0.6,0.35) (0.75,1) (0.9,0.4) (1,0.35)".to_string(),
        ],
    }
}

/// Default output directory: `THREDS_OUT` or the working directory.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("THREDS_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(".").to_path_buf())
}
