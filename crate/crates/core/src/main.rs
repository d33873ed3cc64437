use clap::{Parser, ValueEnum};
use gp_threds::bench::runner::{self, Algo, ExperimentArgs};
use gp_threds::config::ObjectiveKind;
use gp_threds::threds::Strategy;
use gp_threds::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgoArg {
    #[value(name = "gp-threds")]
    GpThreds,
    #[value(name = "igp-ucb")]
    IgpUcb,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Branin,
    Rosenbrock,
    Gpsample,
    Piecewise,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Rwt,
    Heuristic,
}

/// Benchmark runner for GP-ThreDS and the IGP-UCB baseline.
#[derive(Parser, Debug)]
#[command(name = "gp-threds", version, about)]
struct Cli {
    /// Algorithm to run.
    #[arg(long, value_enum, default_value = "gp-threds")]
    algo: AlgoArg,

    /// Objective function.
    #[arg(long, value_enum, default_value = "branin")]
    objective: ObjectiveArg,

    /// Query horizon.
    #[arg(long = "T", default_value_t = 1000)]
    horizon: usize,

    /// Number of seeded runs (seeds 0..N).
    #[arg(long, default_value_t = 1)]
    seeds: usize,

    /// Output directory; defaults to $THREDS_OUT or the working directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Line-oriented key=value config file overriding defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Target-search strategy.
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = ExperimentArgs {
        algo: match cli.algo {
            AlgoArg::GpThreds => Algo::GpThreds,
            AlgoArg::IgpUcb => Algo::IgpUcb,
        },
        objective: match cli.objective {
            ObjectiveArg::Branin => ObjectiveKind::Branin,
            ObjectiveArg::Rosenbrock => ObjectiveKind::Rosenbrock,
            ObjectiveArg::Gpsample => ObjectiveKind::GpSample,
            ObjectiveArg::Piecewise => ObjectiveKind::Piecewise,
        },
        horizon: cli.horizon,
        seeds: cli.seeds,
        out_dir: cli.out_dir.unwrap_or_else(runner::default_out_dir),
        config_file: cli.config,
        strategy_override: cli.strategy.map(|s| match s {
            StrategyArg::Rwt => Strategy::Rwt,
            StrategyArg::Heuristic => Strategy::Heuristic,
        }),
    };

    match runner::run_experiment(&args) {
        Ok(summaries) => {
            let mut total_ns: u128 = 0;
            for s in &summaries {
                println!(
                    "seed {}: {} queries, final cumulative regret {}, wall clock {:.3} s -> {}",
                    s.seed,
                    s.queries,
                    s.final_cum_regret,
                    s.wall_clock_ns as f64 / 1e9,
                    s.csv_path.display()
                );
                total_ns += s.wall_clock_ns;
            }
            println!(
                "{} run(s) complete, total wall clock {:.3} s",
                summaries.len(),
                total_ns as f64 / 1e9
            );
            ExitCode::SUCCESS
        }
        Err(e @ (Error::InvalidConfig(_) | Error::DimensionMismatch { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e @ (Error::Numeric(_) | Error::TerminationScanOverflow)) => {
            eprintln!("numeric failure: {e} (partial CSV flagged in metadata)");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
