//! Run configuration: on-disk schema, unit conversion and validation.
//!
//! The file format is versioned TOML with unit-suffixed field names
//! (`p_max_mw`, `sbs_bandwidth_mhz`, ...). Loading converts everything to SI
//! (`SimConfig` carries watts, hertz, seconds, bits) and validates. Unknown
//! keys are rejected so typos cannot silently fall back to defaults.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::error::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

// ============================================================================
// SI-unit runtime configuration
// ============================================================================

/// Device mobility across slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mobility {
    /// Positions fixed for the whole run.
    Static,
    /// Per-slot bounded random walk with reflecting region boundaries.
    RandomWalk { step_m: f64 },
}

/// Network geometry, radio parameters and compute capacities (SI units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    /// Number of devices N (>= 1).
    pub n_devices: usize,
    /// Number of small cells M (the macro cell is always present as index 0).
    pub n_small_cells: usize,
    /// Rectangular region, meters.
    pub region_m: [f64; 2],
    /// Small-cell coverage radius, meters. The macro cell covers everything.
    pub coverage_radius_m: f64,
    /// Optional explicit small-cell positions; uniform random placement when
    /// absent. Length must equal `n_small_cells`.
    pub sbs_positions_m: Option<Vec<[f64; 2]>>,
    /// Path-loss exponent alpha.
    pub path_loss_exp: f64,
    /// Receiver noise power, watts.
    pub noise_w: f64,
    /// Macro-cell uplink bandwidth, hertz.
    pub bandwidth_mbs_hz: f64,
    /// Per-small-cell uplink bandwidth, hertz.
    pub bandwidth_sbs_hz: f64,
    /// Device CPU capacity, cycles per second.
    pub cpu_device_hz: f64,
    /// Small-cell edge server CPU capacity, cycles per second.
    pub cpu_sbs_hz: f64,
    /// Macro-cell edge server CPU capacity, cycles per second.
    pub cpu_mbs_hz: f64,
    /// Per-device transmit power budget, watts.
    pub p_max_w: f64,
    /// Device-station distance floor, meters (far-field guard).
    pub min_distance_m: f64,
    pub mobility: Mobility,
}

/// Energy model constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyConfig {
    /// Effective switched capacitance of device CPUs.
    pub switched_cap: f64,
    /// Processing density c, CPU cycles per bit.
    pub cycles_per_bit: f64,
    /// Slot length tau, seconds.
    pub slot_s: f64,
    /// Edge execution power draw, watts.
    pub edge_coeff_w: f64,
}

/// Task arrival process at the devices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArrivalProcess {
    /// Packetized Poisson stream: bits = packet_bits * Poisson(mean/packet_bits).
    Poisson { packet_bits: f64 },
    /// Integer bits uniform on [0, 2*mean].
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalConfig {
    /// Mean arrival volume per device per slot, bits.
    pub mean_bits: f64,
    pub process: ArrivalProcess,
}

/// Drift-plus-penalty weights and audit caps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovConfig {
    /// Energy-efficiency weight V.
    pub v_weight: f64,
    /// Per-link uplink rate cap used for the analytic drift-bound constants,
    /// bits per second.
    pub max_rate_bps: f64,
    /// Reward handed back for an infeasible action.
    pub infeasible_penalty: f64,
}

/// Learning hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Discount factor delta in (0, 1].
    pub discount: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Rollout length per gradient accumulation.
    pub t_max: usize,
    /// Total environment steps across all workers (the shared counter budget).
    pub total_steps: u64,
    /// Number of asynchronous workers K.
    pub workers: usize,
    /// Slots per training episode (queues reset between episodes).
    pub episode_slots: usize,
    /// Entropy bonus coefficient (0 disables the bonus).
    pub entropy_coeff: f64,
    /// Global gradient-norm clip applied to each accumulated update.
    pub grad_clip: f64,
    /// Multiplier applied to rewards fed to the gradient accumulator.
    /// `None` derives a scale from the arrival/service magnitudes so critic
    /// targets land near O(1). Reported costs always use unscaled rewards.
    pub reward_scale: Option<f64>,
    /// Initial value of the state-independent log standard deviations.
    pub log_std_init: f64,
    /// Hidden layer widths of both actor and critic trunks.
    pub hidden: Vec<usize>,
}

/// Normalization constants for the observation vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateNormConfig {
    /// Divisor for the nominal-rate block, bits per second.
    pub rate_scale_bps: f64,
    /// Queue divisor as a multiple of the mean arrival volume.
    pub queue_scale_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Slots in a single evaluation episode.
    pub slots: usize,
}

/// Complete SI-unit run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub net: NetConfig,
    pub energy: EnergyConfig,
    pub arrivals: ArrivalConfig,
    pub lyapunov: LyapunovConfig,
    pub training: TrainingConfig,
    pub state_norm: StateNormConfig,
    pub eval: EvalConfig,
}

impl SimConfig {
    /// Reference configuration: 20 devices, 3 small cells in a 1 km square,
    /// 100 mW power budget, 100 ms slots, 0.5/10/50 GHz compute tiers.
    pub fn reference() -> Self {
        SimConfig {
            net: NetConfig {
                n_devices: 20,
                n_small_cells: 3,
                region_m: [1000.0, 1000.0],
                coverage_radius_m: 300.0,
                sbs_positions_m: None,
                path_loss_exp: 3.0,
                noise_w: 1e-14,
                bandwidth_mbs_hz: 10e6,
                bandwidth_sbs_hz: 5e6,
                cpu_device_hz: 0.5e9,
                cpu_sbs_hz: 10e9,
                cpu_mbs_hz: 50e9,
                p_max_w: 0.1,
                min_distance_m: 1.0,
                mobility: Mobility::Static,
            },
            energy: EnergyConfig {
                switched_cap: 1e-27,
                cycles_per_bit: 100.0,
                slot_s: 0.1,
                edge_coeff_w: 1.0,
            },
            arrivals: ArrivalConfig {
                // Above the 5e5-bit local execution cap (offloading stays
                // mandatory) yet inside what naive allocations can drain, so
                // queues are stabilizable and training compares allocation
                // quality instead of backlog blow-up rates.
                mean_bits: 6e5,
                process: ArrivalProcess::Poisson {
                    packet_bits: 1000.0,
                },
            },
            lyapunov: LyapunovConfig {
                v_weight: 1e3,
                max_rate_bps: 5e8,
                infeasible_penalty: -1e6,
            },
            training: TrainingConfig {
                discount: 0.99,
                actor_lr: 1e-3,
                critic_lr: 1e-3,
                t_max: 20,
                total_steps: 40_000,
                workers: 1,
                episode_slots: 200,
                entropy_coeff: 0.01,
                grad_clip: 40.0,
                reward_scale: None,
                log_std_init: -1.0,
                hidden: vec![128, 128, 128],
            },
            state_norm: StateNormConfig {
                rate_scale_bps: 2.5e8,
                queue_scale_factor: 10.0,
            },
            eval: EvalConfig { slots: 10_000 },
        }
    }

    /// Effective reward multiplier for gradient accumulation.
    pub fn reward_scale(&self) -> f64 {
        if let Some(s) = self.training.reward_scale {
            return s;
        }
        let lambda = self.arrivals.mean_bits;
        let tau = self.energy.slot_s;
        let local_cap = tau * self.net.cpu_device_hz / self.energy.cycles_per_bit;
        let rate_cap = self.lyapunov.max_rate_bps * tau;
        let scale_inv = self.net.n_devices as f64 * lambda * (lambda + local_cap + rate_cap);
        1.0 / scale_inv.max(1.0)
    }

    /// SHA-256 of the canonical serialized config, for provenance fields.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |field: &str, v: f64| -> Result<()> {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
            Ok(())
        };
        if self.net.n_devices == 0 {
            return Err(Error::config("net.n_devices", "at least one device"));
        }
        pos("net.region_m[0]", self.net.region_m[0])?;
        pos("net.region_m[1]", self.net.region_m[1])?;
        pos("net.coverage_radius_m", self.net.coverage_radius_m)?;
        pos("net.path_loss_exp", self.net.path_loss_exp)?;
        pos("net.noise_w", self.net.noise_w)?;
        pos("net.bandwidth_mbs_hz", self.net.bandwidth_mbs_hz)?;
        if self.net.n_small_cells > 0 {
            pos("net.bandwidth_sbs_hz", self.net.bandwidth_sbs_hz)?;
            pos("net.cpu_sbs_hz", self.net.cpu_sbs_hz)?;
        }
        pos("net.cpu_device_hz", self.net.cpu_device_hz)?;
        pos("net.cpu_mbs_hz", self.net.cpu_mbs_hz)?;
        pos("net.p_max_w", self.net.p_max_w)?;
        pos("net.min_distance_m", self.net.min_distance_m)?;
        if let Mobility::RandomWalk { step_m } = self.net.mobility {
            if !(step_m.is_finite() && step_m >= 0.0) {
                return Err(Error::config("net.mobility.step_m", "must be >= 0"));
            }
        }
        if let Some(ref ps) = self.net.sbs_positions_m {
            if ps.len() != self.net.n_small_cells {
                return Err(Error::config(
                    "net.sbs_positions_m",
                    format!(
                        "expected {} positions, got {}",
                        self.net.n_small_cells,
                        ps.len()
                    ),
                ));
            }
        }
        pos("energy.switched_cap", self.energy.switched_cap)?;
        pos("energy.cycles_per_bit", self.energy.cycles_per_bit)?;
        pos("energy.slot_s", self.energy.slot_s)?;
        pos("energy.edge_coeff_w", self.energy.edge_coeff_w)?;
        pos("arrivals.mean_bits", self.arrivals.mean_bits)?;
        if let ArrivalProcess::Poisson { packet_bits } = self.arrivals.process {
            pos("arrivals.process.packet_bits", packet_bits)?;
        }
        pos("lyapunov.v_weight", self.lyapunov.v_weight)?;
        pos("lyapunov.max_rate_bps", self.lyapunov.max_rate_bps)?;
        if !self.lyapunov.infeasible_penalty.is_finite() {
            return Err(Error::config("lyapunov.infeasible_penalty", "must be finite"));
        }
        let t = &self.training;
        if !(t.discount > 0.0 && t.discount <= 1.0) {
            return Err(Error::config("training.discount", "must lie in (0, 1]"));
        }
        pos("training.actor_lr", t.actor_lr)?;
        pos("training.critic_lr", t.critic_lr)?;
        if t.t_max == 0 {
            return Err(Error::config("training.t_max", "must be >= 1"));
        }
        if t.total_steps == 0 {
            return Err(Error::config("training.total_steps", "must be >= 1"));
        }
        if t.workers == 0 {
            return Err(Error::config("training.workers", "must be >= 1"));
        }
        if t.episode_slots == 0 {
            return Err(Error::config("training.episode_slots", "must be >= 1"));
        }
        if !(t.entropy_coeff.is_finite() && t.entropy_coeff >= 0.0) {
            return Err(Error::config("training.entropy_coeff", "must be >= 0"));
        }
        pos("training.grad_clip", t.grad_clip)?;
        if let Some(s) = t.reward_scale {
            pos("training.reward_scale", s)?;
        }
        if !t.log_std_init.is_finite() {
            return Err(Error::config("training.log_std_init", "must be finite"));
        }
        if t.hidden.is_empty() || t.hidden.contains(&0) {
            return Err(Error::config("training.hidden", "non-empty, positive widths"));
        }
        pos("state_norm.rate_scale_bps", self.state_norm.rate_scale_bps)?;
        pos("state_norm.queue_scale_factor", self.state_norm.queue_scale_factor)?;
        if self.eval.slots == 0 {
            return Err(Error::config("eval.slots", "must be >= 1"));
        }
        Ok(())
    }
}

// ============================================================================
// On-disk schema (unit-suffixed fields)
// ============================================================================

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    version: u32,
    network: FileNetwork,
    #[serde(default)]
    energy: FileEnergy,
    #[serde(default)]
    arrivals: FileArrivals,
    #[serde(default)]
    lyapunov: FileLyapunov,
    #[serde(default)]
    training: FileTraining,
    #[serde(default)]
    state: FileState,
    #[serde(default)]
    eval: FileEval,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileNetwork {
    devices: usize,
    small_cells: usize,
    #[serde(default = "d_region")]
    region_m: [f64; 2],
    #[serde(default = "d_coverage")]
    coverage_radius_m: f64,
    #[serde(default)]
    sbs_positions_m: Option<Vec<[f64; 2]>>,
    #[serde(default = "d_alpha")]
    path_loss_exp: f64,
    #[serde(default = "d_noise_mw")]
    noise_mw: f64,
    #[serde(default = "d_w0_mhz")]
    mbs_bandwidth_mhz: f64,
    #[serde(default = "d_wj_mhz")]
    sbs_bandwidth_mhz: f64,
    #[serde(default = "d_f_dev")]
    device_cpu_ghz: f64,
    #[serde(default = "d_f_sbs")]
    sbs_cpu_ghz: f64,
    #[serde(default = "d_f_mbs")]
    mbs_cpu_ghz: f64,
    #[serde(default = "d_pmax_mw")]
    p_max_mw: f64,
    #[serde(default = "d_min_dist")]
    min_distance_m: f64,
    /// "static" or "random-walk".
    #[serde(default = "d_mobility")]
    mobility: String,
    #[serde(default)]
    mobility_step_m: f64,
}

fn d_region() -> [f64; 2] {
    [1000.0, 1000.0]
}
fn d_coverage() -> f64 {
    300.0
}
fn d_alpha() -> f64 {
    3.0
}
fn d_noise_mw() -> f64 {
    1e-11
}
fn d_w0_mhz() -> f64 {
    10.0
}
fn d_wj_mhz() -> f64 {
    5.0
}
fn d_f_dev() -> f64 {
    0.5
}
fn d_f_sbs() -> f64 {
    10.0
}
fn d_f_mbs() -> f64 {
    50.0
}
fn d_pmax_mw() -> f64 {
    100.0
}
fn d_min_dist() -> f64 {
    1.0
}
fn d_mobility() -> String {
    "static".to_string()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileEnergy {
    #[serde(default = "d_switched_cap")]
    switched_cap: f64,
    #[serde(default = "d_cpb")]
    cycles_per_bit: f64,
    #[serde(default = "d_slot_ms")]
    slot_ms: f64,
    #[serde(default = "d_edge_w")]
    edge_coeff_w: f64,
}
fn d_switched_cap() -> f64 {
    1e-27
}
fn d_cpb() -> f64 {
    100.0
}
fn d_slot_ms() -> f64 {
    100.0
}
fn d_edge_w() -> f64 {
    1.0
}
impl Default for FileEnergy {
    fn default() -> Self {
        FileEnergy {
            switched_cap: d_switched_cap(),
            cycles_per_bit: d_cpb(),
            slot_ms: d_slot_ms(),
            edge_coeff_w: d_edge_w(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileArrivals {
    #[serde(default = "d_mean_bits")]
    mean_bits_per_slot: f64,
    /// "poisson" or "uniform".
    #[serde(default = "d_dist")]
    distribution: String,
    #[serde(default = "d_packet_bits")]
    packet_bits: f64,
}
fn d_mean_bits() -> f64 {
    6e5
}
fn d_dist() -> String {
    "poisson".to_string()
}
fn d_packet_bits() -> f64 {
    1000.0
}
impl Default for FileArrivals {
    fn default() -> Self {
        FileArrivals {
            mean_bits_per_slot: d_mean_bits(),
            distribution: d_dist(),
            packet_bits: d_packet_bits(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLyapunov {
    #[serde(default = "d_v")]
    v_weight: f64,
    #[serde(default = "d_max_rate")]
    max_rate_mbps: f64,
    #[serde(default = "d_penalty")]
    infeasible_penalty: f64,
}
fn d_v() -> f64 {
    1e3
}
fn d_max_rate() -> f64 {
    500.0
}
fn d_penalty() -> f64 {
    -1e6
}
impl Default for FileLyapunov {
    fn default() -> Self {
        FileLyapunov {
            v_weight: d_v(),
            max_rate_mbps: d_max_rate(),
            infeasible_penalty: d_penalty(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTraining {
    #[serde(default = "d_discount")]
    discount: f64,
    #[serde(default = "d_lr")]
    actor_lr: f64,
    #[serde(default = "d_lr")]
    critic_lr: f64,
    #[serde(default = "d_tmax")]
    t_max: usize,
    #[serde(default = "d_total_steps")]
    total_steps: u64,
    #[serde(default = "d_workers")]
    workers: usize,
    #[serde(default = "d_episode_slots")]
    episode_slots: usize,
    #[serde(default = "d_entropy")]
    entropy_coeff: f64,
    #[serde(default = "d_clip")]
    grad_clip: f64,
    #[serde(default)]
    reward_scale: Option<f64>,
    #[serde(default = "d_log_std")]
    log_std_init: f64,
    #[serde(default = "d_hidden")]
    hidden: Vec<usize>,
}
fn d_discount() -> f64 {
    0.99
}
fn d_lr() -> f64 {
    1e-3
}
fn d_tmax() -> usize {
    20
}
fn d_total_steps() -> u64 {
    40_000
}
fn d_workers() -> usize {
    1
}
fn d_episode_slots() -> usize {
    200
}
fn d_entropy() -> f64 {
    0.01
}
fn d_clip() -> f64 {
    40.0
}
fn d_log_std() -> f64 {
    -1.0
}
fn d_hidden() -> Vec<usize> {
    vec![128, 128, 128]
}
impl Default for FileTraining {
    fn default() -> Self {
        FileTraining {
            discount: d_discount(),
            actor_lr: d_lr(),
            critic_lr: d_lr(),
            t_max: d_tmax(),
            total_steps: d_total_steps(),
            workers: d_workers(),
            episode_slots: d_episode_slots(),
            entropy_coeff: d_entropy(),
            grad_clip: d_clip(),
            reward_scale: None,
            log_std_init: d_log_std(),
            hidden: d_hidden(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileState {
    #[serde(default = "d_rate_scale")]
    rate_scale_mbps: f64,
    #[serde(default = "d_queue_scale")]
    queue_scale_factor: f64,
}
fn d_rate_scale() -> f64 {
    250.0
}
fn d_queue_scale() -> f64 {
    10.0
}
impl Default for FileState {
    fn default() -> Self {
        FileState {
            rate_scale_mbps: d_rate_scale(),
            queue_scale_factor: d_queue_scale(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileEval {
    #[serde(default = "d_eval_slots")]
    slots: usize,
}
fn d_eval_slots() -> usize {
    10_000
}
impl Default for FileEval {
    fn default() -> Self {
        FileEval {
            slots: d_eval_slots(),
        }
    }
}

const MILLI: f64 = 1e-3;
const MEGA: f64 = 1e6;
const GIGA: f64 = 1e9;

fn convert(file: FileConfig) -> Result<SimConfig> {
    if file.version != CONFIG_VERSION {
        return Err(Error::config(
            "version",
            format!("unsupported version {}, expected {CONFIG_VERSION}", file.version),
        ));
    }
    let mobility = match file.network.mobility.as_str() {
        "static" => Mobility::Static,
        "random-walk" => Mobility::RandomWalk {
            step_m: file.network.mobility_step_m,
        },
        other => {
            return Err(Error::config(
                "network.mobility",
                format!("unknown mobility {other:?} (static | random-walk)"),
            ))
        }
    };
    let process = match file.arrivals.distribution.as_str() {
        "poisson" => ArrivalProcess::Poisson {
            packet_bits: file.arrivals.packet_bits,
        },
        "uniform" => ArrivalProcess::Uniform,
        other => {
            return Err(Error::config(
                "arrivals.distribution",
                format!("unknown distribution {other:?} (poisson | uniform)"),
            ))
        }
    };
    let cfg = SimConfig {
        net: NetConfig {
            n_devices: file.network.devices,
            n_small_cells: file.network.small_cells,
            region_m: file.network.region_m,
            coverage_radius_m: file.network.coverage_radius_m,
            sbs_positions_m: file.network.sbs_positions_m,
            path_loss_exp: file.network.path_loss_exp,
            noise_w: file.network.noise_mw * MILLI,
            bandwidth_mbs_hz: file.network.mbs_bandwidth_mhz * MEGA,
            bandwidth_sbs_hz: file.network.sbs_bandwidth_mhz * MEGA,
            cpu_device_hz: file.network.device_cpu_ghz * GIGA,
            cpu_sbs_hz: file.network.sbs_cpu_ghz * GIGA,
            cpu_mbs_hz: file.network.mbs_cpu_ghz * GIGA,
            p_max_w: file.network.p_max_mw * MILLI,
            min_distance_m: file.network.min_distance_m,
            mobility,
        },
        energy: EnergyConfig {
            switched_cap: file.energy.switched_cap,
            cycles_per_bit: file.energy.cycles_per_bit,
            slot_s: file.energy.slot_ms * MILLI,
            edge_coeff_w: file.energy.edge_coeff_w,
        },
        arrivals: ArrivalConfig {
            mean_bits: file.arrivals.mean_bits_per_slot,
            process,
        },
        lyapunov: LyapunovConfig {
            v_weight: file.lyapunov.v_weight,
            max_rate_bps: file.lyapunov.max_rate_mbps * MEGA,
            infeasible_penalty: file.lyapunov.infeasible_penalty,
        },
        training: TrainingConfig {
            discount: file.training.discount,
            actor_lr: file.training.actor_lr,
            critic_lr: file.training.critic_lr,
            t_max: file.training.t_max,
            total_steps: file.training.total_steps,
            workers: file.training.workers,
            episode_slots: file.training.episode_slots,
            entropy_coeff: file.training.entropy_coeff,
            grad_clip: file.training.grad_clip,
            reward_scale: file.training.reward_scale,
            log_std_init: file.training.log_std_init,
            hidden: file.training.hidden,
        },
        state_norm: StateNormConfig {
            rate_scale_bps: file.state.rate_scale_mbps * MEGA,
            queue_scale_factor: file.state.queue_scale_factor,
        },
        eval: EvalConfig {
            slots: file.eval.slots,
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Parse a unit-suffixed TOML config string into an SI `SimConfig`.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let file: FileConfig = toml::from_str(text)?;
    convert(file)
}

/// Load and validate a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Serialize the effective SI config (what the run actually used).
pub fn effective_toml(cfg: &SimConfig) -> String {
    toml::to_string_pretty(cfg).expect("config serializes")
}

// ============================================================================
// Tests
// ============================================================================
