//! Asynchronous training: worker threads roll out the environment and push
//! accumulated gradients to a single global parameter owner, which applies
//! them strictly in arrival order and acknowledges each one before the
//! worker continues.
//!
//! With one worker the acknowledgment protocol makes the whole run
//! bit-for-bit deterministic and identical to the bundled synchronous
//! reference loop (`run_synchronous`), which reuses the exact same rollout
//! code through the `ParamServer` trait.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc, RwLock};

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::SimConfig;
use crate::env::{ActionLayout, Env, SlotMetrics};
use crate::error::{Error, Result};
use crate::harness::scheme::{apply_scheme_mask, SchemeTag};
use crate::rl::policy::{
    accumulate_gradients, apply_update, sample_action, GradAccum, PolicyPair, Trajectory,
};

/// Pre-squash bias given to the compute and edge-service outputs of a fresh
/// actor, putting their initial squashed means near 0.9 instead of 0.5.
///
/// An actor that starts half-throttle on every block under-serves the
/// arrival process, so each episode is dominated by the backlog it builds
/// rather than by the allocation trade-offs the policy should be learning.
/// Starting the service-side blocks near their budgets gives every learned
/// scheme the same drain-capable operating point that the pinned baselines
/// enjoy by construction; the radio blocks stay neutral and schemes that pin
/// a block overwrite the bias through their mask anyway.
const SERVE_BIAS_PRE_SQUASH: f64 = 1.1;

fn bias_toward_service(pair: &mut PolicyPair, layout: &ActionLayout) {
    for (start, len) in [layout.edge_service(), layout.local_cpu(), layout.edge_cpu()] {
        for d in start..start + len {
            pair.actor.mean_head.b[d] = SERVE_BIAS_PRE_SQUASH;
        }
    }
}

/// Mix a base seed with a stream tag so every consumer gets an independent,
/// reproducible stream (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Where a worker reads parameters from and submits gradients to.
///
/// `snapshot` returns the current parameters; `submit` hands over one
/// accumulated gradient and only returns once it has been applied (false
/// means training is shutting down); `add_steps` advances the shared step
/// counter and returns its new value.
pub trait ParamServer {
    fn snapshot(&mut self) -> PolicyPair;
    fn submit(&mut self, grad: GradAccum) -> bool;
    fn add_steps(&mut self, n: u64) -> u64;
    fn step_budget(&self) -> u64;
}

/// One finished training episode (fixed number of slots).
#[derive(Debug, Clone, serde::Serialize)]
pub struct EpisodeRecord {
    pub worker: usize,
    pub episode: u64,
    /// Sum of unscaled per-slot costs (-reward) over the episode.
    pub cost: f64,
    /// Energy-per-bit estimate of the worker's tracker at episode end.
    pub ee_estimate_j_per_bit: f64,
    /// Global step count when the episode finished.
    pub steps_at_end: u64,
}

/// Everything a worker produced.
#[derive(Debug, Default)]
pub struct WorkerReport {
    pub episodes: Vec<EpisodeRecord>,
    pub slots: Vec<SlotMetrics>,
    pub steps_done: u64,
    pub updates_submitted: u64,
}

/// Roll out `cfg.training`-shaped episodes until the shared step budget is
/// exhausted, submitting a gradient every `t_max` steps (or at an episode
/// boundary). Used verbatim by both the async workers and the synchronous
/// reference path.
pub fn worker_phase<S: ParamServer>(
    worker_id: usize,
    cfg: &SimConfig,
    scheme: SchemeTag,
    base_seed: u64,
    server: &mut S,
    collect_slots: bool,
) -> Result<WorkerReport> {
    let t_max = cfg.training.t_max.max(1);
    let episode_slots = cfg.training.episode_slots.max(1);
    let discount = cfg.training.discount;
    let entropy = cfg.training.entropy_coeff;
    let grad_clip = cfg.training.grad_clip;
    let reward_scale = cfg.reward_scale();

    let mut env = Env::new(cfg.clone(), derive_seed(base_seed, 1000 + worker_id as u64))?;
    let mut policy_rng =
        ChaCha8Rng::seed_from_u64(derive_seed(base_seed, 2000 + worker_id as u64));

    let mut report = WorkerReport::default();
    let mut state = Array1::from_vec(env.state().to_vec());
    let mut episode_cost = 0.0;
    let mut episode_idx: u64 = 0;
    let mut slot_in_episode: u64 = 0;
    let mut total_steps_seen: u64 = 0;

    'outer: loop {
        let snap = server.snapshot();
        let mut traj = Trajectory::default();
        let mut boundary = false;

        for _ in 0..t_max {
            let sample = sample_action(&snap.actor, &state, &mut policy_rng, true);
            let mut raw = sample.squashed.clone();
            apply_scheme_mask(scheme, &mut raw, env.topology());
            let action = env.project_action(&raw)?;
            let outcome = env.step(&action)?;

            traj.push(
                state,
                Array1::from_vec(sample.pre_squash),
                outcome.reward * reward_scale,
            );
            episode_cost -= outcome.reward;
            if collect_slots {
                report.slots.push(outcome.metrics.clone());
            }
            state = Array1::from_vec(outcome.state);
            report.steps_done += 1;
            total_steps_seen = server.add_steps(1);
            slot_in_episode += 1;

            if slot_in_episode == episode_slots as u64 {
                report.episodes.push(EpisodeRecord {
                    worker: worker_id,
                    episode: episode_idx,
                    cost: episode_cost,
                    ee_estimate_j_per_bit: env.ee_estimate(),
                    steps_at_end: total_steps_seen,
                });
                episode_idx += 1;
                episode_cost = 0.0;
                slot_in_episode = 0;
                // Bootstrap from the state the process actually reached;
                // the reset below is a reporting boundary, not a terminal.
                traj.bootstrap_state = Some(state.clone());
                state = Array1::from_vec(env.reset()?);
                boundary = true;
                break;
            }
        }

        if !boundary {
            traj.bootstrap_state = Some(state.clone());
        }

        let mut accum = accumulate_gradients(&snap, &traj, discount, entropy)?;
        accum.grad.clip_global_norm(grad_clip);
        report.updates_submitted += 1;
        if !server.submit(accum.grad) {
            break 'outer;
        }
        if total_steps_seen > server.step_budget() {
            break 'outer;
        }
    }

    Ok(report)
}

// ============================================================================
// Synchronous reference server
// ============================================================================

/// Single-threaded parameter owner: applies every submitted gradient
/// immediately.
pub struct SyncServer {
    pub pair: PolicyPair,
    pub steps: u64,
    pub updates_applied: u64,
    budget: u64,
    actor_lr: f64,
    critic_lr: f64,
    pub error: Option<Error>,
}

impl SyncServer {
    pub fn new(pair: PolicyPair, budget: u64, actor_lr: f64, critic_lr: f64) -> Self {
        SyncServer {
            pair,
            steps: 0,
            updates_applied: 0,
            budget,
            actor_lr,
            critic_lr,
            error: None,
        }
    }
}

impl ParamServer for SyncServer {
    fn snapshot(&mut self) -> PolicyPair {
        self.pair.clone()
    }

    fn submit(&mut self, grad: GradAccum) -> bool {
        match apply_update(&mut self.pair, &grad, self.actor_lr, self.critic_lr) {
            Ok(()) => {
                self.updates_applied += 1;
                true
            }
            Err(e) => {
                self.error = Some(e);
                false
            }
        }
    }

    fn add_steps(&mut self, n: u64) -> u64 {
        self.steps += n;
        self.steps
    }

    fn step_budget(&self) -> u64 {
        self.budget
    }
}

// ============================================================================
// Asynchronous server
// ============================================================================

struct UpdateMsg {
    grad: GradAccum,
    ack: mpsc::SyncSender<bool>,
}

/// Worker-side handle onto the shared parameter owner.
pub struct AsyncHandle {
    params: Arc<RwLock<PolicyPair>>,
    tx: mpsc::Sender<UpdateMsg>,
    steps: Arc<AtomicU64>,
    budget: u64,
}

impl ParamServer for AsyncHandle {
    fn snapshot(&mut self) -> PolicyPair {
        self.params.read().expect("parameter lock poisoned").clone()
    }

    fn submit(&mut self, grad: GradAccum) -> bool {
        let (ack_tx, ack_rx) = mpsc::sync_channel(1);
        if self
            .tx
            .send(UpdateMsg {
                grad,
                ack: ack_tx,
            })
            .is_err()
        {
            return false;
        }
        // Wait until the global owner has actually applied this gradient.
        ack_rx.recv().unwrap_or(false)
    }

    fn add_steps(&mut self, n: u64) -> u64 {
        self.steps.fetch_add(n, Ordering::SeqCst) + n
    }

    fn step_budget(&self) -> u64 {
        self.budget
    }
}

/// Final artifacts of a training run.
pub struct TrainOutput {
    pub pair: PolicyPair,
    pub episodes: Vec<EpisodeRecord>,
    pub slots: Vec<SlotMetrics>,
    pub steps: u64,
    pub updates_applied: u64,
}

/// Train with `cfg.training.workers` asynchronous workers. Returns the final
/// parameters and the merged, deterministically ordered per-worker records.
pub fn run_training_async(
    cfg: &SimConfig,
    scheme: SchemeTag,
    seed: u64,
    collect_slots: bool,
) -> Result<TrainOutput> {
    cfg.validate()?;
    if !scheme.is_learned() {
        return Err(Error::InvalidInput(format!(
            "scheme {scheme} has no trainable parameters"
        )));
    }
    let n_workers = cfg.training.workers.max(1);
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let probe = Env::new(cfg.clone(), derive_seed(seed, 999))?;
    let mut init = PolicyPair::new(
        probe.state_dim(),
        probe.action_dim(),
        &cfg.training.hidden,
        cfg.training.log_std_init,
        &mut init_rng,
    );
    bias_toward_service(&mut init, &probe.action_layout());
    drop(probe);

    let params = Arc::new(RwLock::new(init));
    let steps = Arc::new(AtomicU64::new(0));
    let (tx, rx) = mpsc::channel::<UpdateMsg>();
    let actor_lr = cfg.training.actor_lr;
    let critic_lr = cfg.training.critic_lr;
    let budget = cfg.training.total_steps;

    let global_params = Arc::clone(&params);
    let global = std::thread::spawn(move || -> (u64, Option<Error>) {
        let mut applied = 0u64;
        let mut error = None;
        while let Ok(msg) = rx.recv() {
            let ok = {
                let mut p = global_params.write().expect("parameter lock poisoned");
                match apply_update(&mut p, &msg.grad, actor_lr, critic_lr) {
                    Ok(()) => true,
                    Err(e) => {
                        error = Some(e);
                        false
                    }
                }
            };
            if ok {
                applied += 1;
            }
            let _ = msg.ack.send(ok);
            if !ok {
                break;
            }
        }
        (applied, error)
    });

    let mut reports: Vec<Result<WorkerReport>> = Vec::with_capacity(n_workers);
    std::thread::scope(|scope| {
        let mut joins = Vec::with_capacity(n_workers);
        for w in 0..n_workers {
            let mut handle = AsyncHandle {
                params: Arc::clone(&params),
                tx: tx.clone(),
                steps: Arc::clone(&steps),
                budget,
            };
            let cfg_ref = &cfg;
            joins.push(scope.spawn(move || {
                worker_phase(w, cfg_ref, scheme, seed, &mut handle, collect_slots)
            }));
        }
        for j in joins {
            reports.push(j.join().expect("worker thread panicked"));
        }
    });
    drop(tx); // Closes the channel once all worker handles are gone.
    let (updates_applied, global_error) = global.join().expect("global thread panicked");
    if let Some(e) = global_error {
        return Err(e);
    }

    let mut episodes = Vec::new();
    let mut slots = Vec::new();
    let mut total_steps = 0;
    for r in reports {
        let r = r?;
        total_steps += r.steps_done;
        episodes.extend(r.episodes);
        slots.extend(r.slots);
    }
    episodes.sort_by_key(|e| (e.worker, e.episode));

    let pair = Arc::try_unwrap(params)
        .map_err(|_| Error::InvalidInput("parameter owner still shared".into()))?
        .into_inner()
        .expect("parameter lock poisoned");

    Ok(TrainOutput {
        pair,
        episodes,
        slots,
        steps: total_steps,
        updates_applied,
    })
}

/// Single-threaded reference run: identical rollout logic, gradients applied
/// inline. With `cfg.training.workers == 1` this produces bit-identical
/// parameters to `run_training_async`.
pub fn run_synchronous(
    cfg: &SimConfig,
    scheme: SchemeTag,
    seed: u64,
    collect_slots: bool,
) -> Result<TrainOutput> {
    cfg.validate()?;
    if !scheme.is_learned() {
        return Err(Error::InvalidInput(format!(
            "scheme {scheme} has no trainable parameters"
        )));
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let probe = Env::new(cfg.clone(), derive_seed(seed, 999))?;
    let mut init = PolicyPair::new(
        probe.state_dim(),
        probe.action_dim(),
        &cfg.training.hidden,
        cfg.training.log_std_init,
        &mut init_rng,
    );
    bias_toward_service(&mut init, &probe.action_layout());
    drop(probe);

    let mut server = SyncServer::new(
        init,
        cfg.training.total_steps,
        cfg.training.actor_lr,
        cfg.training.critic_lr,
    );
    let report = worker_phase(0, cfg, scheme, seed, &mut server, collect_slots)?;
    if let Some(e) = server.error {
        return Err(e);
    }
    Ok(TrainOutput {
        pair: server.pair,
        episodes: report.episodes,
        slots: report.slots,
        steps: server.steps,
        updates_applied: server.updates_applied,
    })
}

// ============================================================================
// Tests
// ============================================================================
