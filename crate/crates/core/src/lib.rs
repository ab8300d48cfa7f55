//! Slot-based simulator and learning stack for energy-efficient computation
//! offloading in a two-tier edge network.
//!
//! A digital-twin layer mirrors the physical network each slot (channel
//! fading, queue backlogs, compute budgets), a drift-plus-penalty objective
//! scores every allocation against queue stability and energy per bit, and
//! an asynchronous actor-critic learns joint radio/compute allocations over
//! the resulting reward. Non-learned baselines (uniform random, one-slot
//! backpressure) and ablations that pin the radio or compute blocks share
//! the same environment and projection path.
//!
//! Module map:
//! - [`config`]: SI-unit configuration, the TOML file schema, validation.
//! - [`net`]: topology, association, fading, interference, uplink rates.
//! - [`queue`]: arrivals, service caps, the two queue recursions, stability
//!   statistics.
//! - [`energy`]: local/edge energy, per-slot efficiency, the running
//!   energy-per-bit tracker.
//! - [`lyapunov`]: the perturbation vector, drift bounds, the per-slot
//!   objective, and the drift-inequality audit.
//! - [`env`]: observation/action layouts, feasibility projection, the slot
//!   transition.
//! - [`rl`]: dense network, squashed-Gaussian actor-critic, asynchronous
//!   training.
//! - [`harness`]: schemes, run orchestration and artifacts, statistics, and
//!   the self-check battery.

pub mod config;
pub mod energy;
pub mod env;
pub mod error;
pub mod harness;
pub mod lyapunov;
pub mod net;
pub mod queue;
pub mod rl;

pub use config::{load_config, parse_config, SimConfig};
pub use env::{Action, ActionLayout, Env, SlotMetrics, StateLayout, StepOutcome};
pub use error::{Error, Result};
pub use harness::scheme::SchemeTag;
