//! Task buffers: arrivals, per-slot service flows and queue recursions.
//!
//! Device queues evolve as Q(t+1) = max(Q(t) - psi(t), 0) + lambda(t) and
//! edge queues as Q(t+1) = max(Q(t) - psi(t), 0) + inflow(t): work offloaded
//! in slot t becomes serviceable at the edge in slot t+1. Buffers are
//! unbounded; stability is the controller's job, not the data structure's.
//!
//! Service amounts are capped at the backlog present at the start of the
//! slot, so bits leaving a queue always equal bits executed plus bits
//! offloaded, exactly.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::config::{ArrivalConfig, ArrivalProcess, EnergyConfig};
use crate::error::{Error, Result};

/// Backlogs in bits for every device and every edge server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueState {
    pub device_bits: Vec<f64>,
    pub edge_bits: Vec<f64>,
}

impl QueueState {
    pub fn zeros(n_devices: usize, n_stations: usize) -> Self {
        QueueState {
            device_bits: vec![0.0; n_devices],
            edge_bits: vec![0.0; n_stations],
        }
    }

    pub fn total_device_bits(&self) -> f64 {
        self.device_bits.iter().sum()
    }

    pub fn total_edge_bits(&self) -> f64 {
        self.edge_bits.iter().sum()
    }

    pub fn total_bits(&self) -> f64 {
        self.total_device_bits() + self.total_edge_bits()
    }
}

/// Everything that moved in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotFlows {
    /// Bits executed locally per device.
    pub local_bits: Vec<f64>,
    /// Bits offloaded per device-station pair (nonzero only on the
    /// associated column).
    pub offload_bits: Array2<f64>,
    /// Total departure per device: local + offloaded.
    pub device_service: Vec<f64>,
    /// Bits served by each edge station.
    pub edge_service: Vec<f64>,
    /// Fresh arrivals per device.
    pub arrivals: Vec<f64>,
}

impl SlotFlows {
    /// Bits accomplished this slot: local executions plus offloads.
    pub fn bits_done(&self) -> f64 {
        self.local_bits.iter().sum::<f64>() + self.offload_bits.iter().sum::<f64>()
    }

    /// Offload inflow arriving at station `j`.
    pub fn edge_inflow(&self, station: usize) -> f64 {
        self.offload_bits.column(station).sum()
    }
}

/// Draw one slot of arrivals for `n` devices: integer bits, mean
/// `cfg.mean_bits` each.
pub fn sample_arrivals(cfg: &ArrivalConfig, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n)
        .map(|_| match cfg.process {
            ArrivalProcess::Poisson { packet_bits } => {
                let mean_packets = cfg.mean_bits / packet_bits;
                let dist = Poisson::new(mean_packets).expect("validated mean");
                let packets: f64 = dist.sample(rng);
                (packets * packet_bits).round()
            }
            ArrivalProcess::Uniform => {
                let hi = (2.0 * cfg.mean_bits).round() as u64;
                rng.random_range(0..=hi) as f64
            }
        })
        .collect()
}

/// Bits a device CPU can execute this slot: tau * f / c, capped at the
/// backlog available at the start of the slot.
pub fn local_exec_amount(cpu_hz: f64, cfg: &EnergyConfig, available_bits: f64) -> f64 {
    let capacity = cfg.slot_s * cpu_hz / cfg.cycles_per_bit;
    capacity.min(available_bits)
}

/// Bits a device can push over an uplink this slot: rate * tau, capped at
/// the backlog remaining after local service.
pub fn offload_amount(rate_bps: f64, slot_s: f64, remaining_bits: f64) -> f64 {
    (rate_bps * slot_s).min(remaining_bits)
}

/// Device queue recursion: max(q - service, 0) + arrival.
pub fn step_device_queue(q_bits: f64, service_bits: f64, arrival_bits: f64) -> f64 {
    (q_bits - service_bits).max(0.0) + arrival_bits
}

/// Edge queue recursion: max(q - service, 0) + inflow, with the per-slot
/// cycle budget enforced (service * c <= f_edge * tau).
pub fn step_edge_queue(
    q_bits: f64,
    service_bits: f64,
    inflow_bits: f64,
    service_cap_bits: f64,
    station: usize,
) -> Result<f64> {
    // Tiny relative headroom forgives float dust from u * cap projections.
    if service_bits > service_cap_bits * (1.0 + 1e-9) {
        return Err(Error::EdgeServiceOverCap {
            station,
            requested_bits: service_bits,
            cap_bits: service_cap_bits,
        });
    }
    Ok((q_bits - service_bits).max(0.0) + inflow_bits)
}

/// Backlog statistics for a run: mean level plus a least-squares growth
/// slope (with a 95% confidence interval) fitted over the second half of
/// the series. A stable system has a slope interval containing zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub mean_backlog_bits: f64,
    pub slope_bits_per_slot: f64,
    pub slope_ci95: (f64, f64),
    /// Slots used for the fit (second half of the series).
    pub fit_len: usize,
}

/// Fit the second half of a total-backlog series.
pub fn stability_metric(backlog_bits: &[f64]) -> Result<StabilityReport> {
    if backlog_bits.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "stability fit needs at least 4 samples, got {}",
            backlog_bits.len()
        )));
    }
    let mean_backlog_bits = backlog_bits.iter().sum::<f64>() / backlog_bits.len() as f64;
    let tail = &backlog_bits[backlog_bits.len() / 2..];
    let n = tail.len() as f64;
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = tail.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (idx, &y) in tail.iter().enumerate() {
        let dx = idx as f64 - x_mean;
        sxx += dx * dx;
        sxy += dx * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let mut sse = 0.0;
    for (idx, &y) in tail.iter().enumerate() {
        let resid = y - (intercept + slope * idx as f64);
        sse += resid * resid;
    }
    let dof = (tail.len() as f64 - 2.0).max(1.0);
    let se = (sse / dof / sxx).sqrt();
    let t_crit = crate::harness::metrics::t_quantile_975(dof);
    Ok(StabilityReport {
        mean_backlog_bits,
        slope_bits_per_slot: slope,
        slope_ci95: (slope - t_crit * se, slope + t_crit * se),
        fit_len: tail.len(),
    })
}

// ============================================================================
// Tests
// ============================================================================
