//! Command-line harness: train policies, evaluate checkpoints and
//! baselines, sweep configuration axes, and run the self-check battery.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use edgetwin::config::SimConfig;
use edgetwin::harness::audit::run_all_audits;
use edgetwin::harness::run::{
    evaluate, run_sweep, run_training, EvalOptions, SweepAxis,
};
use edgetwin::harness::scheme::SchemeTag;
use edgetwin::{load_config, Result};

#[derive(Parser)]
#[command(
    name = "edgetwin",
    about = "Slot-based edge-offloading simulator with drift-plus-penalty rewards \
             and asynchronous actor-critic training",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; the built-in reference setup when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Train a learned scheme and write artifacts.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Allocation scheme: joint, no-compute-alloc, or no-radio-alloc.
        #[arg(long, default_value = "joint")]
        scheme: SchemeTag,
        /// Output directory for artifacts.
        #[arg(long, default_value = "runs/train")]
        out: PathBuf,
        /// Override the number of asynchronous workers.
        #[arg(long)]
        workers: Option<usize>,
        /// Override the total environment-step budget.
        #[arg(long)]
        steps: Option<u64>,
        /// Also record per-slot metrics to slots.csv (large).
        #[arg(long)]
        slot_metrics: bool,
    },
    /// Evaluate a checkpoint or a non-learned baseline over one episode.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Scheme to drive: learned tags need --checkpoint.
        #[arg(long, default_value = "greedy-drift")]
        scheme: SchemeTag,
        /// Trained checkpoint (for learned schemes).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Output directory for artifacts.
        #[arg(long, default_value = "runs/eval")]
        out: PathBuf,
        /// Override the evaluation episode length.
        #[arg(long)]
        slots: Option<usize>,
        /// Also write a per-entity backlog trace.
        #[arg(long)]
        queue_trace: bool,
    },
    /// Train/evaluate over a grid of one configuration axis.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Axis to vary: devices, small-cells, actor-lr, or v-weight.
        #[arg(long)]
        axis: SweepAxis,
        /// Axis values, comma separated (e.g. 10,20,30).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Schemes to run in every cell.
        #[arg(long, value_delimiter = ',', default_value = "joint,random,greedy-drift")]
        schemes: Vec<SchemeTag>,
        /// Seeds to average over.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
        /// Output directory.
        #[arg(long, default_value = "runs/sweep")]
        out: PathBuf,
    },
    /// Run the self-check battery (projection, reward identity, drift
    /// inequality, gradient check, determinism).
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Write the verdicts as JSON here as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &CommonArgs) -> Result<SimConfig> {
    match &common.config {
        Some(path) => load_config(path),
        None => Ok(SimConfig::reference()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train {
            common,
            scheme,
            out,
            workers,
            steps,
            slot_metrics,
        } => {
            let mut cfg = load(&common)?;
            if let Some(w) = workers {
                cfg.training.workers = w;
            }
            if let Some(s) = steps {
                cfg.training.total_steps = s;
            }
            let (record, _) = run_training(&cfg, scheme, common.seed, Some(&out), slot_metrics)?;
            println!(
                "trained {} for {} steps ({} updates) in {:.1}s",
                record.scheme, record.steps, record.updates, record.wall_clock_s
            );
            println!(
                "final cost/slot {:.6e}, energy {:.6e} J/bit; artifacts in {}",
                record.final_cost,
                record.final_ee_j_per_bit,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval {
            common,
            scheme,
            checkpoint,
            out,
            slots,
            queue_trace,
        } => {
            let cfg = load(&common)?;
            let opts = EvalOptions { slots, queue_trace };
            let record = evaluate(
                &cfg,
                scheme,
                checkpoint.as_deref(),
                common.seed,
                Some(&out),
                &opts,
            )?;
            println!(
                "evaluated {} over {} slots: cost/slot {:.6e}, energy {:.6e} J/bit",
                record.scheme, record.steps, record.final_cost, record.final_ee_j_per_bit
            );
            if let Some(st) = &record.stability {
                println!(
                    "backlog mean {:.3e} bits, growth {:.3e} bits/slot (95% CI {:.3e}..{:.3e})",
                    st.mean_backlog_bits,
                    st.slope_bits_per_slot,
                    st.slope_ci95.0,
                    st.slope_ci95.1
                );
            }
            println!("artifacts in {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            common,
            axis,
            values,
            schemes,
            seeds,
            out,
        } => {
            let cfg = load(&common)?;
            let rows = run_sweep(&cfg, axis, &values, &schemes, &seeds, &out)?;
            println!(
                "swept {axis} over {:?}: {} cells; results in {}",
                values,
                rows.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { common, out } => {
            let cfg = load(&common)?;
            let outcomes = run_all_audits(&cfg, common.seed)?;
            let mut all_pass = true;
            for o in &outcomes {
                println!(
                    "[{}] {}: {}",
                    if o.pass { "PASS" } else { "FAIL" },
                    o.name,
                    o.detail
                );
                all_pass &= o.pass;
            }
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&outcomes)?)?;
                println!("verdicts written to {}", path.display());
            }
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
