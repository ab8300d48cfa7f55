//! Drift-plus-penalty machinery: perturbation prediction, the perturbed
//! Lyapunov function, the per-slot optimization objective and its reward,
//! and a sample-path drift-bound audit.
//!
//! The Lyapunov function is L = 1/2 [sum_i (Q_i^l - beta_i)^2 + sum_j
//! (Q_j^e)^2]. Device queues are perturbed by beta_i = V * eta' + Psi_max so
//! they idle near a working level instead of draining to zero; edge queues
//! are driven to zero. The per-slot objective trades V-weighted energy
//! efficiency against queue drift, and the learning reward is its exact
//! negation.

use serde::{Deserialize, Serialize};

use crate::energy::{SlotEnergy, SlotEe};
use crate::error::{Error, Result};
use crate::queue::{QueueState, SlotFlows};

/// Per-device queue perturbation vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub beta_bits: Vec<f64>,
}

impl Perturbation {
    pub fn uniform(beta: f64, n_devices: usize) -> Self {
        Perturbation {
            beta_bits: vec![beta; n_devices],
        }
    }
}

/// Uniform perturbation beta_i = V * eta' + Psi_max, recomputed every slot
/// from the twin's current energy-efficiency estimate and its prediction of
/// the largest per-device departure achievable this slot.
pub fn predict_perturbation(
    v_weight: f64,
    ee_estimate_j_per_bit: f64,
    psi_max_bits: f64,
    n_devices: usize,
) -> Perturbation {
    Perturbation::uniform(v_weight * ee_estimate_j_per_bit + psi_max_bits, n_devices)
}

/// Perturbed quadratic Lyapunov value of a queue state.
pub fn lyapunov_value(queues: &QueueState, beta: &Perturbation) -> Result<f64> {
    if queues.device_bits.len() != beta.beta_bits.len() {
        return Err(Error::DimensionMismatch {
            context: "lyapunov_value".into(),
            expected: queues.device_bits.len(),
            got: beta.beta_bits.len(),
        });
    }
    let device: f64 = queues
        .device_bits
        .iter()
        .zip(&beta.beta_bits)
        .map(|(&q, &b)| (q - b) * (q - b))
        .sum();
    let edge: f64 = queues.edge_bits.iter().map(|&q| q * q).sum();
    Ok(0.5 * (device + edge))
}

/// Upper bounds on per-slot flow magnitudes, for the drift-bound constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftBounds {
    /// Largest possible departure per device, bits.
    pub device_service_max: Vec<f64>,
    /// Largest possible arrival per device, bits.
    pub arrival_max: Vec<f64>,
    /// Largest possible edge service per station, bits.
    pub edge_service_max: Vec<f64>,
    /// Largest possible total offload inflow per station, bits.
    pub edge_inflow_max: Vec<f64>,
}

impl DriftBounds {
    /// Check realized slot flows against the bounds; the drift inequality is
    /// only guaranteed when these hold.
    pub fn admits(&self, flows: &SlotFlows) -> bool {
        let dev_ok = flows
            .device_service
            .iter()
            .zip(&self.device_service_max)
            .all(|(&x, &m)| x <= m)
            && flows
                .arrivals
                .iter()
                .zip(&self.arrival_max)
                .all(|(&x, &m)| x <= m);
        let edge_ok = flows
            .edge_service
            .iter()
            .zip(&self.edge_service_max)
            .all(|(&x, &m)| x <= m)
            && (0..flows.edge_service.len())
                .all(|j| flows.edge_inflow(j) <= self.edge_inflow_max[j]);
        dev_ok && edge_ok
    }
}

/// The constant C that caps the quadratic part of the one-slot drift:
/// C = 1/2 { sum_i [psi_i_max^2 + lambda_i_max^2]
///         + sum_j [psi_j_max^2 + inflow_j_max^2] }.
pub fn drift_bound_constant(bounds: &DriftBounds) -> f64 {
    let device: f64 = bounds
        .device_service_max
        .iter()
        .zip(&bounds.arrival_max)
        .map(|(&s, &a)| s * s + a * a)
        .sum();
    let edge: f64 = bounds
        .edge_service_max
        .iter()
        .zip(&bounds.edge_inflow_max)
        .map(|(&s, &d)| s * s + d * d)
        .sum();
    0.5 * (device + edge)
}

/// Per-slot drift-plus-penalty objective (smaller is better):
///
/// V * [E_tot - eta' * bits_done]
///   + sum_j Q_j^e * (inflow_j - psi_j)
///   - sum_i (Q_i^l - beta_i) * (psi_i - lambda_i)
///
/// `queues` is the state at the start of the slot and `ee_estimate` the
/// running joules-per-bit estimate through the previous slot (the twin's
/// best current guess, held constant within the slot).
pub fn p2_objective(
    flows: &SlotFlows,
    energy: &SlotEnergy,
    queues: &QueueState,
    beta: &Perturbation,
    v_weight: f64,
    ee_estimate: f64,
) -> f64 {
    let penalty = v_weight * (energy.total_j - ee_estimate * flows.bits_done());
    let edge: f64 = queues
        .edge_bits
        .iter()
        .enumerate()
        .map(|(j, &q)| q * (flows.edge_inflow(j) - flows.edge_service[j]))
        .sum();
    let device: f64 = queues
        .device_bits
        .iter()
        .zip(&beta.beta_bits)
        .zip(flows.device_service.iter().zip(&flows.arrivals))
        .map(|((&q, &b), (&psi, &lam))| (q - b) * (psi - lam))
        .sum();
    penalty + edge - device
}

/// Learning reward: the exact negation of the objective for feasible slots,
/// a flat penalty otherwise.
pub fn immediate_reward(objective: f64, feasible: bool, infeasible_penalty: f64) -> f64 {
    if feasible {
        -objective
    } else {
        infeasible_penalty
    }
}

/// One-slot sample-path drift audit. Returns (lhs, rhs) of
///
/// L(t+1) - L(t) + V * eta(t)  <=  C + V * eta(t)
///     - sum_i (Q_i^l - beta_i)(psi_i - lambda_i)
///     - sum_j Q_j^e (psi_j - inflow_j)
///
/// evaluated with the slot's own beta on both sides. With bounds that
/// dominate the realized flows the inequality holds on every sample path.
pub fn drift_plus_penalty_check(
    prev: &QueueState,
    next: &QueueState,
    beta: &Perturbation,
    flows: &SlotFlows,
    slot_ee: SlotEe,
    v_weight: f64,
    bound_constant: f64,
) -> Result<(f64, f64)> {
    let l_prev = lyapunov_value(prev, beta)?;
    let l_next = lyapunov_value(next, beta)?;
    let penalty = v_weight * slot_ee.joules_per_bit;
    let lhs = l_next - l_prev + penalty;

    let device: f64 = prev
        .device_bits
        .iter()
        .zip(&beta.beta_bits)
        .zip(flows.device_service.iter().zip(&flows.arrivals))
        .map(|((&q, &b), (&psi, &lam))| (q - b) * (psi - lam))
        .sum();
    let edge: f64 = prev
        .edge_bits
        .iter()
        .enumerate()
        .map(|(j, &q)| q * (flows.edge_service[j] - flows.edge_inflow(j)))
        .sum();
    let rhs = bound_constant + penalty - device - edge;
    Ok((lhs, rhs))
}

// ============================================================================
// Tests
// ============================================================================
