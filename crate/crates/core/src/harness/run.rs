//! Run orchestration: full training runs with on-disk artifacts, policy and
//! baseline evaluations, parameter sweeps, and the service-capacity probe
//! used to place arrival rates inside the drainable region.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{effective_toml, SimConfig};
use crate::env::Env;
use crate::error::{Error, Result};
use crate::harness::metrics::{
    write_episodes_csv, write_queue_trace_csv, write_slots_csv, write_summary,
    write_xy_series_csv, QueueTraceRow, RunRecord, XySeriesRow,
};
use crate::harness::scheme::{apply_scheme_mask, greedy_drift_raw, random_raw, SchemeTag};
use crate::queue::stability_metric;
use crate::rl::policy::{
    load_checkpoint, sample_action, save_checkpoint, CheckpointMeta, PolicyPair,
};
use crate::rl::train::{derive_seed, run_training_async, EpisodeRecord, TrainOutput};

/// Mean cost of each worker's last fifth of episodes, averaged over workers.
fn tail_cost(episodes: &[EpisodeRecord], episode_slots: usize) -> f64 {
    let mut per_worker: Vec<Vec<f64>> = Vec::new();
    for e in episodes {
        if per_worker.len() <= e.worker {
            per_worker.resize(e.worker + 1, Vec::new());
        }
        per_worker[e.worker].push(e.cost);
    }
    let mut means = Vec::new();
    for costs in per_worker.iter().filter(|c| !c.is_empty()) {
        let tail = (costs.len() / 5).max(1);
        let slice = &costs[costs.len() - tail..];
        means.push(slice.iter().sum::<f64>() / slice.len() as f64);
    }
    if means.is_empty() {
        f64::NAN
    } else {
        means.iter().sum::<f64>() / means.len() as f64 / episode_slots.max(1) as f64
    }
}

fn final_ee(episodes: &[EpisodeRecord]) -> f64 {
    let mut per_worker: Vec<Option<f64>> = Vec::new();
    for e in episodes {
        if per_worker.len() <= e.worker {
            per_worker.resize(e.worker + 1, None);
        }
        per_worker[e.worker] = Some(e.ee_estimate_j_per_bit);
    }
    let vals: Vec<f64> = per_worker.into_iter().flatten().collect();
    if vals.is_empty() {
        f64::NAN
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Train a learned scheme and (optionally) write the artifact set:
/// `effective_config.toml`, `state_schema.json`, `checkpoint.bin`,
/// `episodes.csv`, `slots.csv` (when slot metrics were collected), and
/// `summary.json`.
pub fn run_training(
    cfg: &SimConfig,
    scheme: SchemeTag,
    seed: u64,
    out_dir: Option<&Path>,
    collect_slots: bool,
) -> Result<(RunRecord, TrainOutput)> {
    let started = Instant::now();
    let out = run_training_async(cfg, scheme, seed, collect_slots)?;
    let record = RunRecord {
        scheme: scheme.to_string(),
        seed,
        config_hash: cfg.hash(),
        steps: out.steps,
        updates: out.updates_applied,
        episodes: out.episodes.len(),
        final_cost: tail_cost(&out.episodes, cfg.training.episode_slots),
        final_ee_j_per_bit: final_ee(&out.episodes),
        stability: None,
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("effective_config.toml"), effective_toml(cfg))?;
        let probe = Env::new(cfg.clone(), derive_seed(seed, 999))?;
        std::fs::write(
            dir.join("state_schema.json"),
            serde_json::to_string_pretty(&probe.schema())?,
        )?;
        save_checkpoint(
            &dir.join("checkpoint.bin"),
            &out.pair,
            &CheckpointMeta {
                seed,
                config_hash: cfg.hash(),
            },
        )?;
        write_episodes_csv(&dir.join("episodes.csv"), &out.episodes)?;
        if collect_slots {
            write_slots_csv(&dir.join("slots.csv"), &out.slots)?;
        }
        write_summary(&dir.join("summary.json"), &record)?;
    }
    Ok((record, out))
}

/// Evaluation settings.
#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Override `cfg.eval.slots`.
    pub slots: Option<usize>,
    /// Also write a per-entity backlog trace.
    pub queue_trace: bool,
}

/// Drive one evaluation episode with a fixed policy.
///
/// Learned schemes replay a trained checkpoint deterministically (squashed
/// means, no exploration noise) under the scheme's mask; `random` draws
/// uniform feasible allocations; `greedy-drift` runs the backpressure
/// heuristic. Writes `summary.json`, `slots.csv`, `effective_config.toml`,
/// and optionally `queue_trace.csv` into `out_dir`.
pub fn evaluate(
    cfg: &SimConfig,
    scheme: SchemeTag,
    checkpoint: Option<&Path>,
    seed: u64,
    out_dir: Option<&Path>,
    opts: &EvalOptions,
) -> Result<RunRecord> {
    cfg.validate()?;
    let started = Instant::now();
    let pair: Option<PolicyPair> = match (scheme.is_learned(), checkpoint) {
        (true, Some(path)) => {
            let (pair, meta) = load_checkpoint(path)?;
            if meta.config_hash != cfg.hash() {
                log::warn!(
                    "checkpoint was trained under a different configuration \
                     (hash {} vs {})",
                    meta.config_hash,
                    cfg.hash()
                );
            }
            Some(pair)
        }
        (true, None) => {
            return Err(Error::InvalidInput(format!(
                "scheme {scheme} needs a trained checkpoint to evaluate"
            )));
        }
        (false, _) => None,
    };

    let slots = opts.slots.unwrap_or(cfg.eval.slots);
    let mut env = Env::new(cfg.clone(), derive_seed(seed, 3000))?;
    if let Some(p) = &pair {
        if p.actor.state_dim() != env.state_dim() || p.actor.action_dim() != env.action_dim() {
            return Err(Error::DimensionMismatch {
                context: "checkpoint policy vs environment".into(),
                expected: env.state_dim(),
                got: p.actor.state_dim(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 3001));

    let mut slot_metrics = Vec::with_capacity(slots);
    let mut trace = Vec::new();
    let mut backlog = Vec::with_capacity(slots);
    let mut cost = 0.0;
    for _ in 0..slots {
        let mut raw = match (&pair, scheme) {
            (Some(p), _) => {
                let state = ndarray::Array1::from_vec(env.state().to_vec());
                sample_action(&p.actor, &state, &mut rng, false).squashed
            }
            (None, SchemeTag::Random) => random_raw(&env, &mut rng),
            (None, SchemeTag::GreedyDrift) => greedy_drift_raw(&env),
            (None, other) => unreachable!("unlearned scheme {other} handled above"),
        };
        apply_scheme_mask(scheme, &mut raw, env.topology());
        let action = env.project_action(&raw)?;
        let outcome = env.step(&action)?;
        cost -= outcome.reward;
        backlog.push(outcome.metrics.queue_device_bits + outcome.metrics.queue_edge_bits);
        if opts.queue_trace {
            for (i, &q) in env.queues().device_bits.iter().enumerate() {
                trace.push(QueueTraceRow {
                    slot: outcome.metrics.slot,
                    kind: "device",
                    index: i,
                    backlog_bits: q,
                });
            }
            for (j, &q) in env.queues().edge_bits.iter().enumerate() {
                trace.push(QueueTraceRow {
                    slot: outcome.metrics.slot,
                    kind: "station",
                    index: j,
                    backlog_bits: q,
                });
            }
        }
        slot_metrics.push(outcome.metrics);
    }

    let record = RunRecord {
        scheme: scheme.to_string(),
        seed,
        config_hash: cfg.hash(),
        steps: slots as u64,
        updates: 0,
        episodes: 1,
        final_cost: cost / slots.max(1) as f64,
        final_ee_j_per_bit: env.ee_estimate(),
        stability: Some(stability_metric(&backlog)?),
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("effective_config.toml"), effective_toml(cfg))?;
        write_slots_csv(&dir.join("slots.csv"), &slot_metrics)?;
        if opts.queue_trace {
            write_queue_trace_csv(&dir.join("queue_trace.csv"), &trace)?;
        }
        write_summary(&dir.join("summary.json"), &record)?;
    }
    Ok(record)
}

/// Configuration axis a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Devices,
    SmallCells,
    ActorLr,
    VWeight,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "devices" => Ok(SweepAxis::Devices),
            "small-cells" => Ok(SweepAxis::SmallCells),
            "actor-lr" => Ok(SweepAxis::ActorLr),
            "v-weight" => Ok(SweepAxis::VWeight),
            other => Err(Error::InvalidInput(format!(
                "unknown sweep axis '{other}' (expected devices, small-cells, \
                 actor-lr, or v-weight)"
            ))),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SweepAxis::Devices => "devices",
            SweepAxis::SmallCells => "small-cells",
            SweepAxis::ActorLr => "actor-lr",
            SweepAxis::VWeight => "v-weight",
        };
        f.write_str(s)
    }
}

/// Apply one axis value to a copy of the base configuration.
pub fn apply_axis(cfg: &SimConfig, axis: SweepAxis, value: f64) -> Result<SimConfig> {
    let mut out = cfg.clone();
    match axis {
        SweepAxis::Devices => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "device counts must be positive integers, got {value}"
                )));
            }
            out.net.n_devices = value as usize;
        }
        SweepAxis::SmallCells => {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "small-cell counts must be nonnegative integers, got {value}"
                )));
            }
            out.net.n_small_cells = value as usize;
        }
        SweepAxis::ActorLr => {
            out.training.actor_lr = value;
            out.training.critic_lr = value;
        }
        SweepAxis::VWeight => out.lyapunov.v_weight = value,
    }
    out.validate()?;
    Ok(out)
}

/// One sweep cell result.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub scheme: String,
    pub seed: u64,
    /// Cost per slot: training-tail episode cost for learned schemes, the
    /// evaluation episode for baselines.
    pub cost_per_slot: f64,
    pub final_ee_j_per_bit: f64,
}

/// Run the full grid axis-value x scheme x seed. Learned schemes train from
/// scratch in each cell; baselines evaluate directly. Writes `sweep.csv`
/// (all cells) and `sweep_plotdata.csv` (seed-averaged x/y/series rows).
pub fn run_sweep(
    cfg: &SimConfig,
    axis: SweepAxis,
    values: &[f64],
    schemes: &[SchemeTag],
    seeds: &[u64],
    out_dir: &Path,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() || schemes.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidInput(
            "sweep needs at least one value, scheme, and seed".into(),
        ));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut rows = Vec::new();
    for &value in values {
        let cell_cfg = apply_axis(cfg, axis, value)?;
        for &scheme in schemes {
            for &seed in seeds {
                let row = if scheme.is_learned() {
                    let (rec, _) = run_training(&cell_cfg, scheme, seed, None, false)?;
                    SweepRow {
                        axis: axis.to_string(),
                        value,
                        scheme: scheme.to_string(),
                        seed,
                        cost_per_slot: rec.final_cost,
                        final_ee_j_per_bit: rec.final_ee_j_per_bit,
                    }
                } else {
                    let rec = evaluate(
                        &cell_cfg,
                        scheme,
                        None,
                        seed,
                        None,
                        &EvalOptions::default(),
                    )?;
                    SweepRow {
                        axis: axis.to_string(),
                        value,
                        scheme: scheme.to_string(),
                        seed,
                        cost_per_slot: rec.final_cost,
                        final_ee_j_per_bit: rec.final_ee_j_per_bit,
                    }
                };
                log::info!(
                    "sweep {}={} scheme={} seed={}: cost/slot {:.6e}",
                    axis,
                    value,
                    scheme,
                    seed,
                    row.cost_per_slot
                );
                rows.push(row);
            }
        }
    }

    // Raw cells.
    {
        use std::io::Write as _;
        let mut f = std::fs::File::create(out_dir.join("sweep.csv"))?;
        writeln!(f, "axis,value,scheme,seed,cost_per_slot,final_ee_j_per_bit")?;
        for r in &rows {
            writeln!(
                f,
                "{},{},{},{},{},{}",
                r.axis, r.value, r.scheme, r.seed, r.cost_per_slot, r.final_ee_j_per_bit
            )?;
        }
    }
    // Seed-averaged plot data.
    let mut plot = Vec::new();
    for &value in values {
        for &scheme in schemes {
            let cell: Vec<f64> = rows
                .iter()
                .filter(|r| r.value == value && r.scheme == scheme.to_string())
                .map(|r| r.cost_per_slot)
                .collect();
            if !cell.is_empty() {
                plot.push(XySeriesRow {
                    x: value,
                    y: cell.iter().sum::<f64>() / cell.len() as f64,
                    series: scheme.to_string(),
                });
            }
        }
    }
    write_xy_series_csv(&out_dir.join("sweep_plotdata.csv"), &plot)?;
    Ok(rows)
}

/// Estimate the drainable bits per device per slot under a rotation
/// discipline: every device always has its local CPU, macro users always
/// have the uplink, and each small cell transmits one slot in M (matching
/// the one-active-cell behavior of interference-avoiding schedules). The
/// offload component is additionally capped by the total edge cycle budget.
/// Averages the nominal rates over `probe_slots` fading draws.
pub fn drainable_bits_per_device(cfg: &SimConfig, seed: u64, probe_slots: usize) -> Result<f64> {
    let mut env = Env::new(cfg.clone(), seed)?;
    let n = cfg.net.n_devices;
    let m = cfg.net.n_small_cells.max(1);
    let tau = cfg.energy.slot_s;
    let c = cfg.energy.cycles_per_bit;
    let zero_raw = vec![0.0; env.action_dim()];
    let mut mean_rate = vec![0.0; n];
    let mut duty = vec![1.0; n];
    for _ in 0..probe_slots.max(1) {
        for i in 0..n {
            let j = env.topology().association[i];
            mean_rate[i] += env.nominal_rates_bps()[(i, j)];
            duty[i] = if j == 0 { 1.0 } else { 1.0 / m as f64 };
        }
        let action = env.project_action(&zero_raw)?;
        env.step(&action)?;
    }
    for r in &mut mean_rate {
        *r /= probe_slots.max(1) as f64;
    }
    let local_total = n as f64 * tau * cfg.net.cpu_device_hz / c;
    let offload_total: f64 = (0..n).map(|i| duty[i] * mean_rate[i] * tau).sum();
    let edge_budget =
        (cfg.net.cpu_mbs_hz + cfg.net.n_small_cells as f64 * cfg.net.cpu_sbs_hz) * tau / c;
    Ok((local_total + offload_total.min(edge_budget)) / n as f64)
}

/// Resolve an output directory, creating parents as needed.
pub fn ensure_out_dir(path: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(path)?;
    Ok(path.to_path_buf())
}

// ============================================================================
// Tests
// ============================================================================
