//! Allocation schemes: the fully learned policy, the two ablations that pin
//! part of the action space, and the two non-learned baselines.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::env::{ActionLayout, Env};
use crate::error::Error;
use crate::net::Topology;

/// Which allocation scheme drives the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeTag {
    /// Learn every block: radio, compute, and edge service.
    Joint,
    /// Compute is pinned (devices run full tilt, edge CPU splits equally);
    /// radio and edge service are learned.
    NoComputeAlloc,
    /// Radio is pinned (full power, equal bandwidth split); compute and
    /// edge service are learned.
    NoRadioAlloc,
    /// Uniform random feasible allocations; no learning.
    Random,
    /// One-slot backpressure heuristic; no learning.
    GreedyDrift,
}

impl SchemeTag {
    /// Whether the scheme trains policy parameters.
    pub fn is_learned(self) -> bool {
        matches!(
            self,
            SchemeTag::Joint | SchemeTag::NoComputeAlloc | SchemeTag::NoRadioAlloc
        )
    }

    pub const ALL: [SchemeTag; 5] = [
        SchemeTag::Joint,
        SchemeTag::NoComputeAlloc,
        SchemeTag::NoRadioAlloc,
        SchemeTag::Random,
        SchemeTag::GreedyDrift,
    ];
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SchemeTag::Joint => "joint",
            SchemeTag::NoComputeAlloc => "no-compute-alloc",
            SchemeTag::NoRadioAlloc => "no-radio-alloc",
            SchemeTag::Random => "random",
            SchemeTag::GreedyDrift => "greedy-drift",
        };
        f.write_str(s)
    }
}

impl FromStr for SchemeTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "joint" => Ok(SchemeTag::Joint),
            "no-compute-alloc" => Ok(SchemeTag::NoComputeAlloc),
            "no-radio-alloc" => Ok(SchemeTag::NoRadioAlloc),
            "random" => Ok(SchemeTag::Random),
            "greedy-drift" => Ok(SchemeTag::GreedyDrift),
            other => Err(Error::InvalidInput(format!(
                "unknown scheme '{other}' (expected joint, no-compute-alloc, \
                 no-radio-alloc, random, or greedy-drift)"
            ))),
        }
    }
}

/// Overwrite the pinned blocks of a raw action according to the scheme.
///
/// Masks operate on the raw [0,1] coordinates before projection, so the
/// pinned blocks stay inside the feasible set by the same path as learned
/// ones. Pinned shares use an equal split over each station's associated
/// devices, which projects to an exact equal division of the budget.
pub fn apply_scheme_mask(scheme: SchemeTag, raw: &mut [f64], topo: &Topology) {
    let layout = ActionLayout::new(topo.n_devices(), topo.n_stations());
    debug_assert_eq!(raw.len(), layout.dim());
    match scheme {
        SchemeTag::Joint | SchemeTag::Random | SchemeTag::GreedyDrift => {}
        SchemeTag::NoComputeAlloc => {
            for i in 0..topo.n_devices() {
                raw[layout.local_cpu_idx(i)] = 1.0;
            }
            equal_split_block(raw, &layout, topo, BlockKind::EdgeCpu);
        }
        SchemeTag::NoRadioAlloc => {
            for i in 0..topo.n_devices() {
                raw[layout.power_idx(i)] = 1.0;
            }
            equal_split_block(raw, &layout, topo, BlockKind::Bandwidth);
        }
    }
}

enum BlockKind {
    Bandwidth,
    EdgeCpu,
}

fn equal_split_block(raw: &mut [f64], layout: &ActionLayout, topo: &Topology, kind: BlockKind) {
    for j in 0..topo.n_stations() {
        let members = topo.associated_devices(j);
        let share = if members.is_empty() {
            0.0
        } else {
            1.0 / members.len() as f64
        };
        for i in 0..topo.n_devices() {
            let idx = match kind {
                BlockKind::Bandwidth => layout.bandwidth_idx(i, j),
                BlockKind::EdgeCpu => layout.edge_cpu_idx(i, j),
            };
            raw[idx] = if topo.association[i] == j { share } else { 0.0 };
        }
    }
}

/// Uniform random raw action.
pub fn random_raw(env: &Env, rng: &mut impl Rng) -> Vec<f64> {
    (0..env.action_dim()).map(|_| rng.random::<f64>()).collect()
}

/// One-slot backpressure heuristic.
///
/// Devices run their CPUs only while their backlog sits above the
/// perturbation offset; stations always drain their edge queues. Uplinks
/// activate for devices whose device-minus-edge backpressure is positive,
/// and to avoid co-channel interference at most one small cell transmits
/// per slot: the one whose positive backpressure mass is largest (macro
/// users never interfere and are always eligible). Active devices get full
/// power and an equal split of bandwidth and edge CPU. The heuristic is
/// deliberately energy-blind: it chases queue drift only.
pub fn greedy_drift_raw(env: &Env) -> Vec<f64> {
    let topo = env.topology();
    let layout = env.action_layout();
    let beta = env.beta().beta_bits[0];
    let queues = env.queues();
    let n = topo.n_devices();
    let b = topo.n_stations();
    let mut raw = vec![0.0; layout.dim()];

    // Edge queues always drain at full tilt (projection caps by backlog).
    for j in 0..b {
        raw[layout.edge_service_idx(j)] = 1.0;
    }
    // Local CPUs run only above the perturbation offset.
    for i in 0..n {
        if queues.device_bits[i] > beta {
            raw[layout.local_cpu_idx(i)] = 1.0;
        }
    }

    // Positive-backpressure device sets per station.
    let bp = |i: usize| -> f64 {
        let j = topo.association[i];
        (queues.device_bits[i] - beta) - queues.edge_bits[j]
    };
    let mut winners: Vec<usize> = Vec::new(); // Devices that will transmit.
    for i in 0..n {
        if topo.association[i] == 0 && bp(i) > 0.0 {
            winners.push(i);
        }
    }
    // Pick the small cell with the largest positive backpressure mass.
    let mut best_cell = None;
    let mut best_mass = 0.0;
    for j in 1..b {
        let mass: f64 = topo
            .associated_devices(j)
            .iter()
            .map(|&i| bp(i).max(0.0))
            .sum();
        if mass > best_mass {
            best_mass = mass;
            best_cell = Some(j);
        }
    }
    if let Some(j) = best_cell {
        for i in topo.associated_devices(j) {
            if bp(i) > 0.0 {
                winners.push(i);
            }
        }
    }

    // Equal split of bandwidth and edge CPU among each station's winners.
    let mut counts = vec![0usize; b];
    for &i in &winners {
        counts[topo.association[i]] += 1;
    }
    for &i in &winners {
        let j = topo.association[i];
        let share = 1.0 / counts[j] as f64;
        raw[layout.power_idx(i)] = 1.0;
        raw[layout.bandwidth_idx(i, j)] = share;
        raw[layout.edge_cpu_idx(i, j)] = share;
    }
    raw
}

// ============================================================================
// Tests
// ============================================================================
