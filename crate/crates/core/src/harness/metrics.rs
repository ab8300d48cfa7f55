//! Statistics helpers and the tabular/JSON artifact writers used by the
//! command-line harness and the evaluation suite.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::env::SlotMetrics;
use crate::error::{Error, Result};
use crate::queue::StabilityReport;
use crate::rl::train::EpisodeRecord;

/// Two-sided 95% Student-t critical value for `dof` degrees of freedom.
pub fn t_quantile_975(dof: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, dof.max(1.0)).expect("valid t distribution");
    dist.inverse_cdf(0.975)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut k = 0;
    while k < n {
        let mut j = k;
        while j + 1 < n && values[order[j + 1]] == values[order[k]] {
            j += 1;
        }
        // Tied block [k, j]: everyone gets the average 1-based rank.
        let avg = (k + j) as f64 / 2.0 + 1.0;
        for &idx in &order[k..=j] {
            ranks[idx] = avg;
        }
        k = j + 1;
    }
    ranks
}

/// Spearman rank correlation (average ranks on ties).
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            context: "spearman_rho".into(),
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidInput(
            "rank correlation needs at least two points".into(),
        ));
    }
    if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spearman_rho input".into()));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidInput(
            "rank correlation undefined for constant input".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// One-sided paired t-test p-value for the alternative mean(a - b) < 0.
pub fn paired_t_less_p(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "paired_t_less_p".into(),
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidInput("paired test needs n >= 2".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("paired_t_less_p input".into()));
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        // Degenerate: every pair moved by the same amount.
        return Ok(if mean < 0.0 {
            0.0
        } else if mean > 0.0 {
            1.0
        } else {
            0.5
        });
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("valid t distribution");
    Ok(dist.cdf(t))
}

// ============================================================================
// Artifacts
// ============================================================================

/// Summary of one training or evaluation run, written as `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub scheme: String,
    pub seed: u64,
    pub config_hash: String,
    /// Environment steps consumed.
    pub steps: u64,
    /// Gradient updates applied (0 for pure evaluations).
    pub updates: u64,
    pub episodes: usize,
    /// Mean episode cost over the last fifth of training, or the episode
    /// cost of an evaluation run.
    pub final_cost: f64,
    /// Energy-per-bit estimate at the end of the run.
    pub final_ee_j_per_bit: f64,
    /// Backlog growth statistics of the evaluation episode, when one ran.
    pub stability: Option<StabilityReport>,
    pub wall_clock_s: f64,
}

pub fn write_summary(path: &Path, record: &RunRecord) -> Result<()> {
    let file = fs::File::create(path)?;
    serde_json::to_writer_pretty(file, record)?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<RunRecord> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_episodes_csv(path: &Path, episodes: &[EpisodeRecord]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "worker,episode,cost,ee_estimate_j_per_bit,steps_at_end")?;
    for e in episodes {
        writeln!(
            f,
            "{},{},{},{},{}",
            e.worker, e.episode, e.cost, e.ee_estimate_j_per_bit, e.steps_at_end
        )?;
    }
    Ok(())
}

pub fn write_slots_csv(path: &Path, slots: &[SlotMetrics]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(
        f,
        "slot,feasible,reward,objective,drift_lhs,drift_rhs,energy_local_j,energy_edge_j,\
         energy_total_j,bits_local,bits_offloaded,bits_done,arrivals_bits,edge_service_bits,\
         slot_ee_j_per_bit,zero_bit_slot,ee_estimate_j_per_bit,queue_device_bits,\
         queue_edge_bits,beta_bits"
    )?;
    for m in slots {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            m.slot,
            m.feasible,
            m.reward,
            m.objective,
            m.drift_lhs,
            m.drift_rhs,
            m.energy_local_j,
            m.energy_edge_j,
            m.energy_total_j,
            m.bits_local,
            m.bits_offloaded,
            m.bits_done,
            m.arrivals_bits,
            m.edge_service_bits,
            m.slot_ee_j_per_bit,
            m.zero_bit_slot,
            m.ee_estimate_j_per_bit,
            m.queue_device_bits,
            m.queue_edge_bits,
            m.beta_bits
        )?;
    }
    Ok(())
}

/// Long-format per-entity backlog trace: one row per (slot, queue).
pub struct QueueTraceRow {
    pub slot: u64,
    /// "device" or "station".
    pub kind: &'static str,
    pub index: usize,
    pub backlog_bits: f64,
}

pub fn write_queue_trace_csv(path: &Path, rows: &[QueueTraceRow]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "slot,kind,index,backlog_bits")?;
    for r in rows {
        writeln!(f, "{},{},{},{}", r.slot, r.kind, r.index, r.backlog_bits)?;
    }
    Ok(())
}

/// Generic plot-data row: numeric x, numeric y, series label.
pub struct XySeriesRow {
    pub x: f64,
    pub y: f64,
    pub series: String,
}

pub fn write_xy_series_csv(path: &Path, rows: &[XySeriesRow]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "x,y,series")?;
    for r in rows {
        writeln!(f, "{},{},{}", r.x, r.y, r.series)?;
    }
    Ok(())
}

// ============================================================================
// Tests
// ============================================================================
