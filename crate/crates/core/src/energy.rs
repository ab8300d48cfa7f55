//! Energy accounting: local execution, offload transmission plus edge
//! execution, and the running energy-efficiency estimate.
//!
//! Local execution costs switched_cap * tau * f^3 for the slot. An offload
//! costs the full slot's transmit energy p * tau plus the edge execution
//! energy (bits * c / f_alloc) * edge_coeff, charged when the bits are
//! handed over. Energy efficiency is a ratio of sums (joules per bit over
//! the whole horizon), not an average of per-slot ratios.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::EnergyConfig;
use crate::error::{Error, Result};

/// Energy for one device executing at `cpu_hz` for a whole slot.
pub fn local_energy(cpu_hz: f64, cfg: &EnergyConfig) -> f64 {
    cfg.switched_cap * cfg.slot_s * cpu_hz.powi(3)
}

/// Energy for one offload: transmit for the slot at `power_w`, then execute
/// `offload_bits` on an edge allocation of `edge_cpu_hz`.
///
/// Zero offloaded bits cost only the transmission; offloading actual bits
/// with no edge CPU allocated is undefined and rejected.
pub fn edge_energy(
    power_w: f64,
    offload_bits: f64,
    edge_cpu_hz: f64,
    cfg: &EnergyConfig,
) -> Result<f64> {
    if offload_bits > 0.0 && edge_cpu_hz <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "{offload_bits} bits offloaded with no edge CPU allocated"
        )));
    }
    let exec = if offload_bits > 0.0 {
        (offload_bits * cfg.cycles_per_bit / edge_cpu_hz) * cfg.edge_coeff_w
    } else {
        0.0
    };
    Ok(power_w * cfg.slot_s + exec)
}

/// One slot's energy breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotEnergy {
    /// Local execution energy per device.
    pub local_j: Vec<f64>,
    /// Offload energy per device-station pair (nonzero only on links that
    /// carried a transmission).
    pub edge_j: Array2<f64>,
    /// Sum of everything above.
    pub total_j: f64,
}

impl SlotEnergy {
    pub fn local_total_j(&self) -> f64 {
        self.local_j.iter().sum()
    }

    pub fn edge_total_j(&self) -> f64 {
        self.edge_j.iter().sum()
    }
}

/// Assemble the slot's energy from the allocations and realized flows.
///
/// `local_cpu_hz[i]` is device i's CPU allocation; `powers_w[i]` its
/// transmit power on its associated uplink `association[i]`;
/// `edge_cpu_hz[(i, j)]` the edge CPU share granted to its offload;
/// `offload_bits[(i, j)]` the bits actually pushed.
pub fn total_energy(
    local_cpu_hz: &[f64],
    powers_w: &[f64],
    edge_cpu_hz: &Array2<f64>,
    offload_bits: &Array2<f64>,
    association: &[usize],
    cfg: &EnergyConfig,
) -> Result<SlotEnergy> {
    let n = local_cpu_hz.len();
    if powers_w.len() != n || association.len() != n || offload_bits.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "total_energy".into(),
            expected: n,
            got: powers_w.len().min(association.len()).min(offload_bits.nrows()),
        });
    }
    let local_j: Vec<f64> = local_cpu_hz.iter().map(|&f| local_energy(f, cfg)).collect();
    let mut edge_j = Array2::zeros(offload_bits.raw_dim());
    for i in 0..n {
        let j = association[i];
        edge_j[(i, j)] = edge_energy(powers_w[i], offload_bits[(i, j)], edge_cpu_hz[(i, j)], cfg)?;
    }
    let total_j = local_j.iter().sum::<f64>() + edge_j.iter().sum::<f64>();
    Ok(SlotEnergy {
        local_j,
        edge_j,
        total_j,
    })
}

/// Per-slot energy efficiency: joules per accomplished bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotEe {
    pub joules_per_bit: f64,
    /// True when the slot accomplished zero bits; such slots report a ratio
    /// of 0 and are excluded from the running tracker's denominator.
    pub zero_bits: bool,
}

pub fn slot_ee(energy_j: f64, bits_done: f64) -> SlotEe {
    if bits_done <= 0.0 {
        SlotEe {
            joules_per_bit: 0.0,
            zero_bits: true,
        }
    } else {
        SlotEe {
            joules_per_bit: energy_j / bits_done,
            zero_bits: false,
        }
    }
}

/// Running ratio-of-sums energy-efficiency estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTracker {
    pub cum_energy_j: f64,
    pub cum_bits: f64,
}

impl EnergyTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fold in one slot. Zero-bit slots still contribute their energy, so
    /// wasted slots degrade the estimate rather than vanish.
    pub fn update(&mut self, energy_j: f64, bits_done: f64) {
        self.cum_energy_j += energy_j;
        self.cum_bits += bits_done;
    }

    /// Current estimate in joules per bit; 0 before any bits move.
    pub fn estimate(&self) -> f64 {
        if self.cum_bits > 0.0 {
            self.cum_energy_j / self.cum_bits
        } else {
            0.0
        }
    }
}

// ============================================================================
// Tests
// ============================================================================
