//! The slotted offloading environment: observation and action layouts, the
//! feasible-set projection, and the per-slot transition that ties the
//! channel, queue, energy, and drift models together.
//!
//! Slot order of operations:
//!   1. (begin of slot) fade the channel, draw arrivals, recompute the
//!      perturbation vector from the twin's capacity prediction, observe.
//!   2. `step(action)`: validate feasibility, realize uplink rates with
//!      co-channel interference, execute/offload under the slot-start
//!      backlog caps, charge energy, score the drift-plus-penalty
//!      objective, update queues and the efficiency tracker.
//!   3. advance mobility (if any) and start the next slot.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{Mobility, SimConfig};
use crate::energy::{slot_ee, total_energy, EnergyTracker, SlotEnergy};
use crate::error::{Error, Result};
use crate::lyapunov::{
    drift_bound_constant, drift_plus_penalty_check, immediate_reward, p2_objective,
    predict_perturbation, DriftBounds, Perturbation,
};
use crate::net::{
    build_topology, interference, sample_channel, step_mobility, uplink_rate,
    ChannelRealization, Topology,
};
use crate::queue::{
    local_exec_amount, offload_amount, sample_arrivals, step_device_queue, step_edge_queue,
    QueueState, SlotFlows,
};

/// Relative slack forgiving float dust in feasibility comparisons.
const FEAS_TOL: f64 = 1e-9;

/// Offsets of the observation blocks.
///
/// Layout (all f64, normalized):
///   [ nominal uplink rates, device-major N x (M+1) |
///     compute capacities, devices then stations      |
///     power budgets, per device                      |
///     station bandwidths                             |
///     queue backlogs, devices then stations          ]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub n_devices: usize,
    pub n_stations: usize,
}

impl StateLayout {
    pub fn new(n_devices: usize, n_stations: usize) -> Self {
        StateLayout {
            n_devices,
            n_stations,
        }
    }

    pub fn rates(&self) -> (usize, usize) {
        (0, self.n_devices * self.n_stations)
    }

    pub fn capacities(&self) -> (usize, usize) {
        let (o, l) = self.rates();
        (o + l, self.n_devices + self.n_stations)
    }

    pub fn power_budgets(&self) -> (usize, usize) {
        let (o, l) = self.capacities();
        (o + l, self.n_devices)
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        let (o, l) = self.power_budgets();
        (o + l, self.n_stations)
    }

    pub fn queues(&self) -> (usize, usize) {
        let (o, l) = self.bandwidths();
        (o + l, self.n_devices + self.n_stations)
    }

    pub fn dim(&self) -> usize {
        let (o, l) = self.queues();
        o + l
    }
}

/// Offsets of the raw action blocks (all coordinates in [0, 1]).
///
/// Layout:
///   [ bandwidth shares, device-major N x (M+1) |
///     transmit power fractions, per device      |
///     edge service fractions, per station       |
///     local CPU fractions, per device           |
///     edge CPU shares, device-major N x (M+1)   ]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionLayout {
    pub n_devices: usize,
    pub n_stations: usize,
}

impl ActionLayout {
    pub fn new(n_devices: usize, n_stations: usize) -> Self {
        ActionLayout {
            n_devices,
            n_stations,
        }
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        (0, self.n_devices * self.n_stations)
    }

    pub fn power(&self) -> (usize, usize) {
        let (o, l) = self.bandwidth();
        (o + l, self.n_devices)
    }

    pub fn edge_service(&self) -> (usize, usize) {
        let (o, l) = self.power();
        (o + l, self.n_stations)
    }

    pub fn local_cpu(&self) -> (usize, usize) {
        let (o, l) = self.edge_service();
        (o + l, self.n_devices)
    }

    pub fn edge_cpu(&self) -> (usize, usize) {
        let (o, l) = self.local_cpu();
        (o + l, self.n_devices * self.n_stations)
    }

    pub fn dim(&self) -> usize {
        let (o, l) = self.edge_cpu();
        o + l
    }

    pub fn bandwidth_idx(&self, device: usize, station: usize) -> usize {
        self.bandwidth().0 + device * self.n_stations + station
    }

    pub fn power_idx(&self, device: usize) -> usize {
        self.power().0 + device
    }

    pub fn edge_service_idx(&self, station: usize) -> usize {
        self.edge_service().0 + station
    }

    pub fn local_cpu_idx(&self, device: usize) -> usize {
        self.local_cpu().0 + device
    }

    pub fn edge_cpu_idx(&self, device: usize, station: usize) -> usize {
        self.edge_cpu().0 + device * self.n_stations + station
    }
}

/// A fully resolved allocation in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    /// Uplink bandwidth per device-station pair, hertz.
    pub bandwidth_hz: Array2<f64>,
    /// Transmit power per device, watts.
    pub power_w: Vec<f64>,
    /// Edge bits each station serves from its queue this slot.
    pub edge_service_bits: Vec<f64>,
    /// Local CPU speed per device, hertz.
    pub local_cpu_hz: Vec<f64>,
    /// Edge CPU speed per device-station pair, hertz.
    pub edge_cpu_hz: Array2<f64>,
}

/// Everything observable about one executed slot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlotMetrics {
    pub slot: u64,
    pub feasible: bool,
    /// Learning reward (unscaled).
    pub reward: f64,
    /// Drift-plus-penalty objective value of the executed allocation.
    pub objective: f64,
    pub drift_lhs: f64,
    pub drift_rhs: f64,
    pub energy_local_j: f64,
    pub energy_edge_j: f64,
    pub energy_total_j: f64,
    pub bits_local: f64,
    pub bits_offloaded: f64,
    pub bits_done: f64,
    pub arrivals_bits: f64,
    pub edge_service_bits: f64,
    /// Energy per accomplished bit this slot (0 on zero-bit slots).
    pub slot_ee_j_per_bit: f64,
    pub zero_bit_slot: bool,
    /// Running energy-per-bit estimate after this slot.
    pub ee_estimate_j_per_bit: f64,
    /// Total device backlog after the slot, bits.
    pub queue_device_bits: f64,
    /// Total edge backlog after the slot, bits.
    pub queue_edge_bits: f64,
    /// The uniform perturbation offset used this slot, bits.
    pub beta_bits: f64,
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: Vec<f64>,
    pub reward: f64,
    pub metrics: SlotMetrics,
    pub flows: SlotFlows,
}

/// The slotted network simulator.
#[derive(Debug, Clone)]
pub struct Env {
    cfg: SimConfig,
    topo: Topology,
    channel: ChannelRealization,
    queues: QueueState,
    tracker: EnergyTracker,
    pending_arrivals: Vec<f64>,
    beta: Perturbation,
    nominal_rates_bps: Array2<f64>,
    bounds: DriftBounds,
    bound_constant: f64,
    slot: u64,
    rng: ChaCha8Rng,
    state: Vec<f64>,
    layout: StateLayout,
    action_layout: ActionLayout,
}

impl Env {
    pub fn new(cfg: SimConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.net.n_devices;
        let b = cfg.net.n_small_cells + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = build_topology(&cfg.net, &mut rng)?;
        let bounds = analytic_bounds(&cfg);
        let bound_constant = drift_bound_constant(&bounds);
        let mut env = Env {
            cfg,
            topo,
            channel: ChannelRealization {
                gain: Array2::zeros((n, b)),
                distance_m: Array2::zeros((n, b)),
                path_loss_exp: 1.0,
                noise_w: 1.0,
            },
            queues: QueueState::zeros(n, b),
            tracker: EnergyTracker::new(),
            pending_arrivals: vec![0.0; n],
            beta: Perturbation::uniform(0.0, n),
            nominal_rates_bps: Array2::zeros((n, b)),
            bounds,
            bound_constant,
            slot: 0,
            rng,
            state: Vec::new(),
            layout: StateLayout::new(n, b),
            action_layout: ActionLayout::new(n, b),
        };
        env.begin_slot();
        Ok(env)
    }

    /// Redraw the topology, zero every queue and the efficiency tracker,
    /// and start a fresh slot. Returns the initial observation.
    pub fn reset(&mut self) -> Result<Vec<f64>> {
        self.topo = build_topology(&self.cfg.net, &mut self.rng)?;
        self.queues = QueueState::zeros(self.layout.n_devices, self.layout.n_stations);
        self.tracker = EnergyTracker::new();
        self.slot = 0;
        self.begin_slot();
        Ok(self.state.clone())
    }

    /// Start-of-slot randomness and twin predictions, then refresh the
    /// cached observation. RNG order is fixed: channel gains, then arrivals.
    fn begin_slot(&mut self) {
        self.channel = sample_channel(&self.topo, &self.cfg.net, &mut self.rng);
        self.pending_arrivals = sample_arrivals(
            &self.cfg.arrivals,
            self.layout.n_devices,
            &mut self.rng,
        );
        self.nominal_rates_bps = self.compute_nominal_rates();
        let psi_max = self.capacity_prediction_bits();
        self.beta = predict_perturbation(
            self.cfg.lyapunov.v_weight,
            self.tracker.estimate(),
            psi_max,
            self.layout.n_devices,
        );
        self.state = self.build_state();
    }

    /// Interference-free rate of each device on its associated station at
    /// full power and an equal split of the station's bandwidth.
    fn compute_nominal_rates(&self) -> Array2<f64> {
        let n = self.layout.n_devices;
        let b = self.layout.n_stations;
        let mut rates = Array2::zeros((n, b));
        let mut counts = vec![0usize; b];
        for i in 0..n {
            counts[self.topo.association[i]] += 1;
        }
        for i in 0..n {
            let j = self.topo.association[i];
            let share = self.topo.stations[j].bandwidth_hz / counts[j] as f64;
            rates[(i, j)] = uplink_rate(
                share,
                self.topo.devices[i].p_max_w,
                self.channel.gain[(i, j)],
                self.channel.distance_m[(i, j)],
                self.cfg.net.path_loss_exp,
                self.cfg.net.noise_w,
                0.0,
            )
            .expect("nominal rate inputs are valid by construction");
        }
        rates
    }

    /// The twin's prediction of the largest single-device departure this
    /// slot: full local execution plus a full slot at the nominal rate.
    fn capacity_prediction_bits(&self) -> f64 {
        let tau = self.cfg.energy.slot_s;
        let c = self.cfg.energy.cycles_per_bit;
        let mut best = 0.0_f64;
        for i in 0..self.layout.n_devices {
            let j = self.topo.association[i];
            let cap =
                tau * self.topo.devices[i].cpu_hz / c + self.nominal_rates_bps[(i, j)] * tau;
            best = best.max(cap);
        }
        best
    }

    fn build_state(&self) -> Vec<f64> {
        let n = self.layout.n_devices;
        let b = self.layout.n_stations;
        let mut s = Vec::with_capacity(self.layout.dim());
        let rate_scale = self.cfg.state_norm.rate_scale_bps;
        for i in 0..n {
            for j in 0..b {
                s.push(self.nominal_rates_bps[(i, j)] / rate_scale);
            }
        }
        let max_cpu = self
            .topo
            .devices
            .iter()
            .map(|d| d.cpu_hz)
            .chain(self.topo.stations.iter().map(|st| st.cpu_hz))
            .fold(0.0_f64, f64::max);
        for d in &self.topo.devices {
            s.push(d.cpu_hz / max_cpu);
        }
        for st in &self.topo.stations {
            s.push(st.cpu_hz / max_cpu);
        }
        for d in &self.topo.devices {
            s.push(d.p_max_w / self.cfg.net.p_max_w);
        }
        let max_bw = self
            .topo
            .stations
            .iter()
            .map(|st| st.bandwidth_hz)
            .fold(0.0_f64, f64::max);
        for st in &self.topo.stations {
            s.push(st.bandwidth_hz / max_bw);
        }
        let q_scale = self.cfg.state_norm.queue_scale_factor * self.cfg.arrivals.mean_bits;
        for &q in &self.queues.device_bits {
            s.push(q / q_scale);
        }
        for &q in &self.queues.edge_bits {
            s.push(q / q_scale);
        }
        s
    }

    /// Map raw policy outputs in [0,1]^A onto a feasible allocation.
    ///
    /// Per-station share blocks (bandwidth, edge CPU) are normalized only
    /// when oversubscribed; power and local CPU scale their budgets
    /// directly; edge service is the fraction of the station's cycle budget,
    /// additionally capped by its current backlog.
    pub fn project_action(&self, raw: &[f64]) -> Result<Action> {
        let al = self.action_layout;
        if raw.len() != al.dim() {
            return Err(Error::DimensionMismatch {
                context: "project_action".into(),
                expected: al.dim(),
                got: raw.len(),
            });
        }
        if let Some(v) = raw.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::InvalidInput(format!(
                "raw action coordinates must lie in [0,1], got {v}"
            )));
        }
        let n = al.n_devices;
        let b = al.n_stations;
        let tau = self.cfg.energy.slot_s;
        let c = self.cfg.energy.cycles_per_bit;

        let mut bandwidth_hz = Array2::zeros((n, b));
        let mut edge_cpu_hz = Array2::zeros((n, b));
        for j in 0..b {
            let members = self.topo.associated_devices(j);
            let w_total = self.topo.stations[j].bandwidth_hz;
            let f_total = self.topo.stations[j].cpu_hz;
            let bw_sum: f64 = members
                .iter()
                .map(|&i| raw[al.bandwidth_idx(i, j)])
                .sum();
            let bw_scale = if bw_sum > 1.0 { w_total / bw_sum } else { w_total };
            let cpu_sum: f64 = members
                .iter()
                .map(|&i| raw[al.edge_cpu_idx(i, j)])
                .sum();
            let cpu_scale = if cpu_sum > 1.0 {
                f_total / cpu_sum
            } else {
                f_total
            };
            for &i in &members {
                bandwidth_hz[(i, j)] = raw[al.bandwidth_idx(i, j)] * bw_scale;
                edge_cpu_hz[(i, j)] = raw[al.edge_cpu_idx(i, j)] * cpu_scale;
            }
        }

        let power_w = (0..n)
            .map(|i| raw[al.power_idx(i)] * self.topo.devices[i].p_max_w)
            .collect();
        let local_cpu_hz = (0..n)
            .map(|i| raw[al.local_cpu_idx(i)] * self.topo.devices[i].cpu_hz)
            .collect();
        let edge_service_bits = (0..b)
            .map(|j| {
                let cap = self.topo.stations[j].cpu_hz * tau / c;
                (raw[al.edge_service_idx(j)] * cap).min(self.queues.edge_bits[j])
            })
            .collect();

        Ok(Action {
            bandwidth_hz,
            power_w,
            edge_service_bits,
            local_cpu_hz,
            edge_cpu_hz,
        })
    }

    /// List every violated resource constraint (empty means feasible).
    pub fn feasibility_violations(&self, action: &Action) -> Vec<String> {
        let n = self.layout.n_devices;
        let b = self.layout.n_stations;
        let tau = self.cfg.energy.slot_s;
        let c = self.cfg.energy.cycles_per_bit;
        let mut out = Vec::new();

        if action.bandwidth_hz.dim() != (n, b)
            || action.edge_cpu_hz.dim() != (n, b)
            || action.power_w.len() != n
            || action.local_cpu_hz.len() != n
            || action.edge_service_bits.len() != b
        {
            out.push("allocation dimensions do not match the topology".into());
            return out;
        }
        let finite = action.bandwidth_hz.iter().all(|v| v.is_finite())
            && action.edge_cpu_hz.iter().all(|v| v.is_finite())
            && action.power_w.iter().all(|v| v.is_finite())
            && action.local_cpu_hz.iter().all(|v| v.is_finite())
            && action.edge_service_bits.iter().all(|v| v.is_finite());
        if !finite {
            out.push("allocation contains non-finite entries".into());
            return out;
        }

        for j in 0..b {
            let w_total = self.topo.stations[j].bandwidth_hz;
            let f_total = self.topo.stations[j].cpu_hz;
            let mut w_sum = 0.0;
            let mut f_sum = 0.0;
            for i in 0..n {
                let w = action.bandwidth_hz[(i, j)];
                let f = action.edge_cpu_hz[(i, j)];
                if w < 0.0 {
                    out.push(format!("negative bandwidth for device {i} at station {j}"));
                }
                if f < 0.0 {
                    out.push(format!("negative edge CPU for device {i} at station {j}"));
                }
                if self.topo.association[i] != j {
                    if w > 0.0 {
                        out.push(format!(
                            "bandwidth assigned to non-associated pair ({i}, {j})"
                        ));
                    }
                    if f > 0.0 {
                        out.push(format!(
                            "edge CPU assigned to non-associated pair ({i}, {j})"
                        ));
                    }
                }
                w_sum += w;
                f_sum += f;
            }
            if w_sum > w_total * (1.0 + FEAS_TOL) {
                out.push(format!(
                    "station {j} bandwidth oversubscribed: {w_sum} > {w_total}"
                ));
            }
            if f_sum > f_total * (1.0 + FEAS_TOL) {
                out.push(format!(
                    "station {j} edge CPU oversubscribed: {f_sum} > {f_total}"
                ));
            }
            let cap = f_total * tau / c;
            let psi = action.edge_service_bits[j];
            if psi < 0.0 {
                out.push(format!("negative edge service at station {j}"));
            }
            if psi > cap * (1.0 + FEAS_TOL) {
                out.push(format!(
                    "station {j} edge service exceeds its cycle budget: {psi} > {cap}"
                ));
            }
            if psi > self.queues.edge_bits[j] + FEAS_TOL * self.queues.edge_bits[j].max(1.0) {
                out.push(format!(
                    "station {j} edge service exceeds its backlog: {psi} > {}",
                    self.queues.edge_bits[j]
                ));
            }
        }
        for i in 0..n {
            let p = action.power_w[i];
            if p < 0.0 || p > self.topo.devices[i].p_max_w * (1.0 + FEAS_TOL) {
                out.push(format!("device {i} power outside [0, p_max]: {p}"));
            }
            let f = action.local_cpu_hz[i];
            if f < 0.0 || f > self.topo.devices[i].cpu_hz * (1.0 + FEAS_TOL) {
                out.push(format!("device {i} local CPU outside [0, budget]: {f}"));
            }
        }
        out
    }

    /// Execute one slot. Feasible allocations run the full dynamics and earn
    /// the exact negated objective; infeasible ones execute as a null
    /// allocation (arrivals still land) and earn the flat penalty.
    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        let violations = self.feasibility_violations(action);
        let feasible = violations.is_empty();
        if !feasible
            && (action.bandwidth_hz.dim() != (self.layout.n_devices, self.layout.n_stations)
                || violations
                    .iter()
                    .any(|v| v.contains("dimensions") || v.contains("non-finite")))
        {
            return Err(Error::InfeasibleAction(violations));
        }

        let n = self.layout.n_devices;
        let b = self.layout.n_stations;
        let tau = self.cfg.energy.slot_s;

        let (flows, energy) = if feasible {
            self.realize_flows(action)?
        } else {
            (
                SlotFlows {
                    local_bits: vec![0.0; n],
                    offload_bits: Array2::zeros((n, b)),
                    device_service: vec![0.0; n],
                    edge_service: vec![0.0; b],
                    arrivals: self.pending_arrivals.clone(),
                },
                SlotEnergy {
                    local_j: vec![0.0; n],
                    edge_j: Array2::zeros((n, b)),
                    total_j: 0.0,
                },
            )
        };

        let ee = slot_ee(energy.total_j, flows.bits_done());
        let objective = p2_objective(
            &flows,
            &energy,
            &self.queues,
            &self.beta,
            self.cfg.lyapunov.v_weight,
            self.tracker.estimate(),
        );
        let reward = immediate_reward(objective, feasible, self.cfg.lyapunov.infeasible_penalty);

        let prev = self.queues.clone();
        for i in 0..n {
            self.queues.device_bits[i] = step_device_queue(
                prev.device_bits[i],
                flows.device_service[i],
                flows.arrivals[i],
            );
        }
        for j in 0..b {
            let cap = self.topo.stations[j].cpu_hz * tau / self.cfg.energy.cycles_per_bit;
            self.queues.edge_bits[j] = step_edge_queue(
                prev.edge_bits[j],
                flows.edge_service[j],
                flows.edge_inflow(j),
                cap,
                j,
            )?;
        }
        let (drift_lhs, drift_rhs) = drift_plus_penalty_check(
            &prev,
            &self.queues,
            &self.beta,
            &flows,
            ee,
            self.cfg.lyapunov.v_weight,
            self.bound_constant,
        )?;
        self.tracker.update(energy.total_j, flows.bits_done());

        let metrics = SlotMetrics {
            slot: self.slot,
            feasible,
            reward,
            objective,
            drift_lhs,
            drift_rhs,
            energy_local_j: energy.local_total_j(),
            energy_edge_j: energy.edge_total_j(),
            energy_total_j: energy.total_j,
            bits_local: flows.local_bits.iter().sum(),
            bits_offloaded: flows.offload_bits.iter().sum(),
            bits_done: flows.bits_done(),
            arrivals_bits: flows.arrivals.iter().sum(),
            edge_service_bits: flows.edge_service.iter().sum(),
            slot_ee_j_per_bit: ee.joules_per_bit,
            zero_bit_slot: ee.zero_bits,
            ee_estimate_j_per_bit: self.tracker.estimate(),
            queue_device_bits: self.queues.total_device_bits(),
            queue_edge_bits: self.queues.total_edge_bits(),
            beta_bits: self.beta.beta_bits[0],
        };

        self.slot += 1;
        if !matches!(self.cfg.net.mobility, Mobility::Static) {
            step_mobility(
                &mut self.topo,
                &self.cfg.net.mobility,
                self.cfg.net.region_m,
                &mut self.rng,
            );
        }
        self.begin_slot();

        Ok(StepOutcome {
            state: self.state.clone(),
            reward,
            metrics,
            flows,
        })
    }

    /// Realize uplink rates under interference and move bits under the
    /// slot-start backlog caps.
    fn realize_flows(&self, action: &Action) -> Result<(SlotFlows, SlotEnergy)> {
        let n = self.layout.n_devices;
        let b = self.layout.n_stations;
        let tau = self.cfg.energy.slot_s;

        let mut local_bits = vec![0.0; n];
        let mut offload_bits = Array2::zeros((n, b));
        let mut device_service = vec![0.0; n];
        for i in 0..n {
            let j = self.topo.association[i];
            let q = self.queues.device_bits[i];
            let done_local =
                local_exec_amount(action.local_cpu_hz[i], &self.cfg.energy, q);
            let inter = interference(i, j, &action.power_w, &self.channel, &self.topo);
            let rate = uplink_rate(
                action.bandwidth_hz[(i, j)],
                action.power_w[i],
                self.channel.gain[(i, j)],
                self.channel.distance_m[(i, j)],
                self.cfg.net.path_loss_exp,
                self.cfg.net.noise_w,
                inter,
            )?;
            // An offload only counts for what the granted edge cycles can
            // execute within the slot (f_alloc * tau / c bits); a starved
            // allocation caps the transfer instead of charging unbounded
            // execution energy, and a zero allocation moves nothing.
            let exec_cap_bits =
                action.edge_cpu_hz[(i, j)] * tau / self.cfg.energy.cycles_per_bit;
            let done_off = offload_amount(rate, tau, (q - done_local).min(exec_cap_bits));
            local_bits[i] = done_local;
            offload_bits[(i, j)] = done_off;
            device_service[i] = done_local + done_off;
        }
        let flows = SlotFlows {
            local_bits,
            offload_bits,
            device_service,
            edge_service: action.edge_service_bits.clone(),
            arrivals: self.pending_arrivals.clone(),
        };
        let energy = total_energy(
            &action.local_cpu_hz,
            &action.power_w,
            &action.edge_cpu_hz,
            &flows.offload_bits,
            &self.topo.association,
            &self.cfg.energy,
        )?;
        Ok((flows, energy))
    }

    // ------------------------------------------------------------------
    // Getters used by the harness, baselines, and audits.
    // ------------------------------------------------------------------

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn state_dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn action_dim(&self) -> usize {
        self.action_layout.dim()
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn action_layout(&self) -> ActionLayout {
        self.action_layout
    }

    pub fn cfg(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn channel(&self) -> &ChannelRealization {
        &self.channel
    }

    pub fn queues(&self) -> &QueueState {
        &self.queues
    }

    pub fn beta(&self) -> &Perturbation {
        &self.beta
    }

    pub fn pending_arrivals(&self) -> &[f64] {
        &self.pending_arrivals
    }

    pub fn nominal_rates_bps(&self) -> &Array2<f64> {
        &self.nominal_rates_bps
    }

    pub fn ee_estimate(&self) -> f64 {
        self.tracker.estimate()
    }

    pub fn drift_bounds(&self) -> &DriftBounds {
        &self.bounds
    }

    pub fn drift_bound_constant(&self) -> f64 {
        self.bound_constant
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// JSON description of the observation and action vector layouts.
    pub fn schema(&self) -> serde_json::Value {
        let sl = self.layout;
        let al = self.action_layout;
        let block = |name: &str, (offset, len): (usize, usize), note: &str| {
            json!({"name": name, "offset": offset, "len": len, "note": note})
        };
        json!({
            "version": 1,
            "state_dim": sl.dim(),
            "state_blocks": [
                block("nominal_rates", sl.rates(),
                      "interference-free uplink rate per device-station pair, divided by rate_scale_bps; device-major"),
                block("compute_capacities", sl.capacities(),
                      "CPU budgets, devices then stations, divided by the largest budget"),
                block("power_budgets", sl.power_budgets(),
                      "per-device transmit power budget divided by p_max_w"),
                block("bandwidths", sl.bandwidths(),
                      "per-station bandwidth divided by the largest bandwidth"),
                block("queues", sl.queues(),
                      "backlogs, devices then stations, divided by queue_scale_factor * mean_bits"),
            ],
            "action_dim": al.dim(),
            "action_blocks": [
                block("bandwidth_shares", al.bandwidth(),
                      "per-pair share of the station's bandwidth; normalized when a station's shares sum past 1; device-major"),
                block("power_fractions", al.power(), "fraction of each device's power budget"),
                block("edge_service_fractions", al.edge_service(),
                      "fraction of each station's per-slot cycle budget, capped by its backlog"),
                block("local_cpu_fractions", al.local_cpu(), "fraction of each device's CPU budget"),
                block("edge_cpu_shares", al.edge_cpu(),
                      "per-pair share of the station's edge CPU; normalized when oversubscribed; also caps the pair's offload at share * tau / c bits; device-major"),
            ],
        })
    }
}

/// Analytic per-slot flow bounds implied by the configuration; valid for
/// every topology the config can generate.
fn analytic_bounds(cfg: &SimConfig) -> DriftBounds {
    let n = cfg.net.n_devices;
    let b = cfg.net.n_small_cells + 1;
    let tau = cfg.energy.slot_s;
    let c = cfg.energy.cycles_per_bit;
    let rate_cap_bits = cfg.lyapunov.max_rate_bps * tau;
    let device_service_max =
        vec![tau * cfg.net.cpu_device_hz / c + rate_cap_bits; n];
    let arrival_max = match cfg.arrivals.process {
        // The packet count is Poisson; 8 standard deviations above the mean
        // (plus one packet of rounding) is never crossed in any plausible
        // run length, and the audit double-checks realized values anyway.
        crate::config::ArrivalProcess::Poisson { packet_bits } => {
            let mean_packets = cfg.arrivals.mean_bits / packet_bits;
            vec![
                (mean_packets + 8.0 * mean_packets.sqrt() + 1.0).ceil() * packet_bits;
                n
            ]
        }
        crate::config::ArrivalProcess::Uniform => vec![2.0 * cfg.arrivals.mean_bits; n],
    };
    let mut edge_service_max = Vec::with_capacity(b);
    for j in 0..b {
        let cpu = if j == 0 { cfg.net.cpu_mbs_hz } else { cfg.net.cpu_sbs_hz };
        edge_service_max.push(cpu * tau / c);
    }
    let edge_inflow_max = vec![n as f64 * rate_cap_bits; b];
    DriftBounds {
        device_service_max,
        arrival_max,
        edge_service_max,
        edge_inflow_max,
    }
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn small_cfg() -> SimConfig {
        let mut cfg = SimConfig::reference();
        cfg.net.n_devices = 5;
        cfg.net.n_small_cells = 2;
        cfg
    }

    fn random_raw(env: &Env, rng: &mut impl Rng) -> Vec<f64> {
        (0..env.action_dim()).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn layout_dimensions_add_up() {
        let sl = StateLayout::new(20, 4);
        assert_eq!(sl.dim(), 20 * 4 + 2 * (20 + 4) + 20 + 4);
        let (qo, ql) = sl.queues();
        assert_eq!(qo + ql, sl.dim());
        let al = ActionLayout::new(20, 4);
        assert_eq!(al.dim(), 2 * 20 * 4 + 2 * 20 + 4);
        let (eo, el) = al.edge_cpu();
        assert_eq!(eo + el, al.dim());
        assert_eq!(al.bandwidth_idx(1, 2), 6);
        assert_eq!(al.edge_cpu_idx(0, 0), eo);
    }

    #[test]
    fn reference_dimensions_match_hand_count() {
        let env = Env::new(SimConfig::reference(), 0).unwrap();
        assert_eq!(env.state_dim(), 152);
        assert_eq!(env.action_dim(), 204);
        assert_eq!(env.state().len(), 152);
    }

    #[test]
    fn initial_state_has_zero_queues_and_normalized_blocks() {
        let env = Env::new(small_cfg(), 1).unwrap();
        let sl = env.layout();
        let s = env.state();
        let (qo, ql) = sl.queues();
        assert!(s[qo..qo + ql].iter().all(|&v| v == 0.0));
        let (po, pl) = sl.power_budgets();
        assert!(s[po..po + pl].iter().all(|&v| v == 1.0));
        let (co, cl) = sl.capacities();
        assert!(s[co..co + cl].iter().all(|&v| v > 0.0 && v <= 1.0));
        // The macro station has the largest CPU, so one capacity entry is 1.
        assert!(s[co..co + cl].contains(&1.0));
        assert!(s.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn projection_is_always_feasible() {
        let mut env = Env::new(small_cfg(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..200 {
            let raw = random_raw(&env, &mut rng);
            let action = env.project_action(&raw).unwrap();
            let v = env.feasibility_violations(&action);
            assert!(v.is_empty(), "violations at draw {k}: {v:?}");
            // Step occasionally so queues and topology state evolve.
            if k % 10 == 0 {
                env.step(&action).unwrap();
            }
        }
    }

    #[test]
    fn projection_normalizes_only_oversubscribed_stations() {
        let env = Env::new(small_cfg(), 4).unwrap();
        let al = env.action_layout();
        let mut raw = vec![0.0; env.action_dim()];
        // Give every associated device a 0.9 bandwidth share: a station with
        // two or more members is oversubscribed, a singleton is not.
        for i in 0..5 {
            let j = env.topology().association[i];
            raw[al.bandwidth_idx(i, j)] = 0.9;
        }
        let action = env.project_action(&raw).unwrap();
        for j in 0..3 {
            let members = env.topology().associated_devices(j);
            if members.is_empty() {
                continue;
            }
            let total: f64 = members.iter().map(|&i| action.bandwidth_hz[(i, j)]).sum();
            let w_j = env.topology().stations[j].bandwidth_hz;
            if members.len() == 1 {
                assert_relative_eq!(total, 0.9 * w_j, max_relative = 1e-12);
            } else {
                assert_relative_eq!(total, w_j, max_relative = 1e-12);
                // Equal raw shares stay equal after normalization.
                let first = action.bandwidth_hz[(members[0], j)];
                for &i in &members {
                    assert_relative_eq!(
                        action.bandwidth_hz[(i, j)],
                        first,
                        max_relative = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn projection_caps_edge_service_by_backlog() {
        let env = Env::new(small_cfg(), 5).unwrap();
        let mut raw = vec![0.0; env.action_dim()];
        let al = env.action_layout();
        for j in 0..3 {
            raw[al.edge_service_idx(j)] = 1.0;
        }
        let action = env.project_action(&raw).unwrap();
        // Queues start empty, so full service fractions project to zero.
        assert!(action.edge_service_bits.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn projection_rejects_bad_inputs() {
        let env = Env::new(small_cfg(), 6).unwrap();
        assert!(env.project_action(&[0.5; 3]).is_err());
        let mut raw = vec![0.5; env.action_dim()];
        raw[0] = 1.5;
        assert!(env.project_action(&raw).is_err());
        raw[0] = f64::NAN;
        assert!(env.project_action(&raw).is_err());
    }

    #[test]
    fn reward_is_negated_objective_on_feasible_steps() {
        let mut env = Env::new(small_cfg(), 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let action = env.project_action(&random_raw(&env, &mut rng)).unwrap();
            let out = env.step(&action).unwrap();
            assert!(out.metrics.feasible);
            assert_relative_eq!(
                out.reward,
                -out.metrics.objective,
                max_relative = 1e-12,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn infeasible_action_takes_penalty_and_null_dynamics() {
        let mut env = Env::new(small_cfg(), 9).unwrap();
        // Seed some backlog first.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..5 {
            let action = env.project_action(&random_raw(&env, &mut rng)).unwrap();
            env.step(&action).unwrap();
        }
        let before = env.queues().clone();
        let arrivals: f64 = env.pending_arrivals().iter().sum();
        let mut action = env.project_action(&vec![0.2; env.action_dim()]).unwrap();
        action.power_w[0] = env.topology().devices[0].p_max_w * 10.0;
        let out = env.step(&action).unwrap();
        assert!(!out.metrics.feasible);
        assert_eq!(out.reward, env.cfg().lyapunov.infeasible_penalty);
        // Null dynamics: no service, arrivals landed, edge queues unchanged.
        assert_relative_eq!(
            out.metrics.queue_device_bits,
            before.total_device_bits() + arrivals,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            out.metrics.queue_edge_bits,
            before.total_edge_bits(),
            max_relative = 1e-12
        );
        assert_eq!(out.metrics.energy_total_j, 0.0);
    }

    #[test]
    fn step_conserves_device_bits_exactly() {
        let mut env = Env::new(small_cfg(), 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let before = env.queues().clone();
            let action = env.project_action(&random_raw(&env, &mut rng)).unwrap();
            let out = env.step(&action).unwrap();
            for i in 0..5 {
                let expected = (before.device_bits[i] - out.flows.device_service[i]).max(0.0)
                    + out.flows.arrivals[i];
                assert_relative_eq!(
                    env.queues().device_bits[i],
                    expected,
                    max_relative = 1e-12,
                    epsilon = 1e-9
                );
                // Service never exceeds what was there.
                assert!(
                    out.flows.device_service[i]
                        <= before.device_bits[i] * (1.0 + 1e-12) + 1e-9
                );
            }
        }
    }

    #[test]
    fn offload_is_capped_by_granted_edge_cycles() {
        let cfg = small_cfg();
        let tau = cfg.energy.slot_s;
        let c = cfg.energy.cycles_per_bit;
        let coeff = cfg.energy.edge_coeff_w;
        let mut env = Env::new(cfg, 21).unwrap();

        // One idle slot so arrivals land and the device queues are nonempty.
        let idle = env.project_action(&vec![0.0; env.action_dim()]).unwrap();
        env.step(&idle).unwrap();
        assert!(env.queues().device_bits.iter().all(|&q| q > 0.0));

        // Full power and bandwidth (a fast uplink), no local execution, and
        // a starved edge-CPU grant on device 0 only.
        let al = env.action_layout();
        let mut raw = vec![0.0; env.action_dim()];
        for i in 0..5 {
            let j = env.topology().association[i];
            raw[al.power_idx(i)] = 1.0;
            raw[al.bandwidth_idx(i, j)] = 1.0;
        }
        let j0 = env.topology().association[0];
        raw[al.edge_cpu_idx(0, j0)] = 1e-6;
        let action = env.project_action(&raw).unwrap();
        let grant_hz = action.edge_cpu_hz[(0, j0)];
        assert!(grant_hz > 0.0);
        let cap_bits = grant_hz * tau / c;
        let backlog = env.queues().device_bits[0];

        let out = env.step(&action).unwrap();
        let moved = out.flows.offload_bits[(0, j0)];
        // The link and the backlog could each carry far more than the
        // grant's execution budget, so the budget is what binds.
        assert!(backlog > 10.0 * cap_bits);
        assert_relative_eq!(moved, cap_bits, max_relative = 1e-12);

        // Devices with no grant move nothing, even with a fast uplink.
        for i in 1..5 {
            let j = env.topology().association[i];
            assert_eq!(out.flows.offload_bits[(i, j)], 0.0);
        }

        // Edge energy stays bounded no matter how small the grant: each
        // pair pays at most its transmission energy plus coeff * tau for
        // execution (bits <= f * tau / c makes exec time <= tau).
        let tx_total_j: f64 = action.power_w.iter().map(|&p| p * tau).sum();
        assert!(out.metrics.energy_edge_j <= tx_total_j + coeff * tau + 1e-12);
    }

    #[test]
    fn drift_inequality_holds_on_random_rollouts() {
        let mut env = Env::new(small_cfg(), 13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..300 {
            let action = env.project_action(&random_raw(&env, &mut rng)).unwrap();
            let out = env.step(&action).unwrap();
            let tol = 1e-9 * out.metrics.drift_rhs.abs().max(1.0);
            assert!(
                out.metrics.drift_lhs <= out.metrics.drift_rhs + tol,
                "slot {}: lhs {} > rhs {}",
                out.metrics.slot,
                out.metrics.drift_lhs,
                out.metrics.drift_rhs
            );
        }
    }

    #[test]
    fn analytic_bounds_admit_realized_flows() {
        let mut env = Env::new(small_cfg(), 15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..200 {
            let action = env.project_action(&random_raw(&env, &mut rng)).unwrap();
            let out = env.step(&action).unwrap();
            assert!(env.drift_bounds().admits(&out.flows));
        }
    }

    #[test]
    fn beta_follows_capacity_prediction_and_ee() {
        let mut env = Env::new(small_cfg(), 17).unwrap();
        // Fresh env: no energy spent, so beta is exactly the capacity term.
        let tau = env.cfg().energy.slot_s;
        let c = env.cfg().energy.cycles_per_bit;
        let mut best = 0.0_f64;
        for i in 0..5 {
            let j = env.topology().association[i];
            best = best.max(
                tau * env.topology().devices[i].cpu_hz / c
                    + env.nominal_rates_bps()[(i, j)] * tau,
            );
        }
        assert_relative_eq!(env.beta().beta_bits[0], best, max_relative = 1e-12);
        assert!(env.beta().beta_bits.iter().all(|&b| b == env.beta().beta_bits[0]));
        // After burning energy on accomplished bits, beta grows by V * eta.
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let mut saw_positive_ee = false;
        for _ in 0..20 {
            let action = env.project_action(&random_raw(&env, &mut rng)).unwrap();
            env.step(&action).unwrap();
            if env.ee_estimate() > 0.0 {
                saw_positive_ee = true;
            }
        }
        assert!(saw_positive_ee);
        let v = env.cfg().lyapunov.v_weight;
        let eta = env.ee_estimate();
        // Recompute the capacity prediction for the current slot.
        let mut cap = 0.0_f64;
        for i in 0..5 {
            let j = env.topology().association[i];
            cap = cap.max(
                tau * env.topology().devices[i].cpu_hz / c
                    + env.nominal_rates_bps()[(i, j)] * tau,
            );
        }
        assert_relative_eq!(
            env.beta().beta_bits[0],
            v * eta + cap,
            max_relative = 1e-12
        );
    }

    #[test]
    fn nominal_rates_are_interference_free_equal_split() {
        let env = Env::new(small_cfg(), 19).unwrap();
        let topo = env.topology();
        let ch = env.channel();
        for i in 0..5 {
            let j = topo.association[i];
            let members = topo.associated_devices(j).len() as f64;
            let expected = uplink_rate(
                topo.stations[j].bandwidth_hz / members,
                topo.devices[i].p_max_w,
                ch.gain[(i, j)],
                ch.distance_m[(i, j)],
                env.cfg().net.path_loss_exp,
                env.cfg().net.noise_w,
                0.0,
            )
            .unwrap();
            assert_relative_eq!(
                env.nominal_rates_bps()[(i, j)],
                expected,
                max_relative = 1e-12
            );
            for jj in 0..3 {
                if jj != j {
                    assert_eq!(env.nominal_rates_bps()[(i, jj)], 0.0);
                }
            }
        }
    }

    #[test]
    fn observation_reflects_queue_growth() {
        let mut env = Env::new(small_cfg(), 20).unwrap();
        let sl = env.layout();
        let (qo, _) = sl.queues();
        // Null action: queues fill with arrivals only.
        let zero = env.project_action(&vec![0.0; env.action_dim()]).unwrap();
        let mut grew = false;
        for _ in 0..10 {
            let out = env.step(&zero).unwrap();
            let qsum: f64 = out.state[qo..qo + 5].iter().sum();
            if qsum > 0.0 {
                grew = true;
            }
        }
        assert!(grew, "device queue block never reflected arrivals");
        let q_scale = env.cfg().state_norm.queue_scale_factor * env.cfg().arrivals.mean_bits;
        assert_relative_eq!(
            env.state()[qo] * q_scale,
            env.queues().device_bits[0],
            max_relative = 1e-12
        );
    }

    #[test]
    fn reset_zeroes_queues_and_redraws_topology() {
        let mut env = Env::new(small_cfg(), 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..10 {
            let action = env.project_action(&random_raw(&env, &mut rng)).unwrap();
            env.step(&action).unwrap();
        }
        assert!(env.queues().total_bits() > 0.0);
        let pos_before = env.topology().devices[0].position_m;
        env.reset().unwrap();
        assert_eq!(env.queues().total_bits(), 0.0);
        assert_eq!(env.ee_estimate(), 0.0);
        assert_eq!(env.slot(), 0);
        let pos_after = env.topology().devices[0].position_m;
        assert_ne!(pos_before, pos_after, "reset should redraw positions");
    }

    #[test]
    fn same_seed_same_trajectory() {
        let cfg = small_cfg();
        let mut a = Env::new(cfg.clone(), 33).unwrap();
        let mut b = Env::new(cfg, 33).unwrap();
        assert_eq!(a.state(), b.state());
        let mut rng_a = ChaCha8Rng::seed_from_u64(34);
        let mut rng_b = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..20 {
            let ra = random_raw(&a, &mut rng_a);
            let rb = random_raw(&b, &mut rng_b);
            assert_eq!(ra, rb);
            let act_a = a.project_action(&ra).unwrap();
            let act_b = b.project_action(&rb).unwrap();
            let oa = a.step(&act_a).unwrap();
            let ob = b.step(&act_b).unwrap();
            assert_eq!(oa.state, ob.state);
            assert_eq!(oa.reward.to_bits(), ob.reward.to_bits());
        }
    }

    #[test]
    fn schema_document_matches_layouts() {
        let env = Env::new(small_cfg(), 35).unwrap();
        let schema = env.schema();
        assert_eq!(schema["state_dim"], env.state_dim());
        assert_eq!(schema["action_dim"], env.action_dim());
        let blocks = schema["state_blocks"].as_array().unwrap();
        let mut cursor = 0usize;
        for blk in blocks {
            assert_eq!(blk["offset"].as_u64().unwrap() as usize, cursor);
            cursor += blk["len"].as_u64().unwrap() as usize;
        }
        assert_eq!(cursor, env.state_dim());
        let blocks = schema["action_blocks"].as_array().unwrap();
        let mut cursor = 0usize;
        for blk in blocks {
            assert_eq!(blk["offset"].as_u64().unwrap() as usize, cursor);
            cursor += blk["len"].as_u64().unwrap() as usize;
        }
        assert_eq!(cursor, env.action_dim());
    }

    #[test]
    fn tracker_ratio_matches_manual_accumulation() {
        let mut env = Env::new(small_cfg(), 36).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut cum_e = 0.0;
        let mut cum_b = 0.0;
        for _ in 0..30 {
            let action = env.project_action(&random_raw(&env, &mut rng)).unwrap();
            let out = env.step(&action).unwrap();
            cum_e += out.metrics.energy_total_j;
            cum_b += out.metrics.bits_done;
            let expected = if cum_b > 0.0 { cum_e / cum_b } else { 0.0 };
            assert_relative_eq!(
                env.ee_estimate(),
                expected,
                max_relative = 1e-12,
                epsilon = 1e-300
            );
        }
    }
}
