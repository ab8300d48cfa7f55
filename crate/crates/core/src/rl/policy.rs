//! Actor-critic parameterization, action sampling, and gradient math.
//!
//! The actor maps a state through a ReLU trunk to a mean vector (one entry
//! per action coordinate) and keeps a state-independent log-std vector.
//! Actions are drawn from the diagonal Gaussian and squashed through a
//! sigmoid so every coordinate lands in (0, 1); the log-density accounts for
//! the squashing by the change-of-variables term. The critic is a separate
//! trunk with a scalar linear head.
//!
//! Gradients are accumulated over an n-step trajectory exactly as the
//! backward pass dictates: the actor ascends sum_t log pi(z_t|s_t) * A_t
//! plus an entropy bonus, the critic descends sum_t (R_t - v(s_t))^2, with
//! n-step returns bootstrapped from the critic value of the state following
//! the last transition.

use std::fs;
use std::io::{Read as _, Write as _};
use std::path::Path;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rl::mlp::{Layer, Mlp, MlpGrad, TrunkCache};

/// Bounds applied to the log standard deviation after every update.
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 1.0;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Policy parameters: trunk, linear mean head, global log-std vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorParams {
    pub trunk: Mlp,
    pub mean_head: Layer,
    pub log_std: Array1<f64>,
}

/// Value-function parameters: trunk plus scalar linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticParams {
    pub trunk: Mlp,
    pub value_head: Layer,
}

/// Actor and critic bundled together (they always travel as a pair).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyPair {
    pub actor: ActorParams,
    pub critic: CriticParams,
}

impl ActorParams {
    pub fn state_dim(&self) -> usize {
        self.trunk.in_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.mean_head.out_dim()
    }

    /// Trunk + head forward pass; returns pre-squash means and the trunk
    /// cache needed for backprop.
    pub fn forward(&self, state: &Array1<f64>) -> (Array1<f64>, TrunkCache) {
        let cache = self.trunk.forward(state);
        let logits = self.mean_head.forward(cache.output());
        (logits, cache)
    }

    pub fn param_count(&self) -> usize {
        self.trunk.param_count() + self.mean_head.param_count() + self.log_std.len()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.trunk.push_params(&mut out);
        self.mean_head.push_params(&mut out);
        out.extend(self.log_std.iter());
        out
    }

    pub fn load_flat(&mut self, src: &[f64]) -> usize {
        let mut k = self.trunk.load_params(src);
        k += self.mean_head.load_params(&src[k..]);
        for v in self.log_std.iter_mut() {
            *v = src[k];
            k += 1;
        }
        k
    }

    pub fn is_finite(&self) -> bool {
        self.trunk.is_finite()
            && self.mean_head.is_finite()
            && self.log_std.iter().all(|v| v.is_finite())
    }
}

impl CriticParams {
    pub fn state_dim(&self) -> usize {
        self.trunk.in_dim()
    }

    /// Scalar state value.
    pub fn value(&self, state: &Array1<f64>) -> f64 {
        let cache = self.trunk.forward(state);
        self.value_head.forward(cache.output())[0]
    }

    fn value_with_cache(&self, state: &Array1<f64>) -> (f64, TrunkCache) {
        let cache = self.trunk.forward(state);
        let v = self.value_head.forward(cache.output())[0];
        (v, cache)
    }

    pub fn param_count(&self) -> usize {
        self.trunk.param_count() + self.value_head.param_count()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.trunk.push_params(&mut out);
        self.value_head.push_params(&mut out);
        out
    }

    pub fn load_flat(&mut self, src: &[f64]) -> usize {
        let mut k = self.trunk.load_params(src);
        k += self.value_head.load_params(&src[k..]);
        k
    }

    pub fn is_finite(&self) -> bool {
        self.trunk.is_finite() && self.value_head.is_finite()
    }
}

impl PolicyPair {
    /// Fresh parameters. RNG draw order is fixed: actor trunk, actor mean
    /// head, critic trunk, critic value head (log-std is a constant fill).
    pub fn new(
        state_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        log_std_init: f64,
        rng: &mut impl Rng,
    ) -> Self {
        assert!(!hidden.is_empty(), "need at least one hidden layer");
        let mut dims = Vec::with_capacity(hidden.len() + 1);
        dims.push(state_dim);
        dims.extend_from_slice(hidden);
        let actor_trunk = Mlp::new(&dims, rng);
        let mean_head = Layer::new(*hidden.last().expect("non-empty"), action_dim, rng);
        let critic_trunk = Mlp::new(&dims, rng);
        let value_head = Layer::new(*hidden.last().expect("non-empty"), 1, rng);
        PolicyPair {
            actor: ActorParams {
                trunk: actor_trunk,
                mean_head,
                log_std: Array1::from_elem(action_dim, log_std_init),
            },
            critic: CriticParams {
                trunk: critic_trunk,
                value_head,
            },
        }
    }

    pub fn hidden_dims(&self) -> Vec<usize> {
        self.actor.trunk.layers.iter().map(Layer::out_dim).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite() && self.critic.is_finite()
    }
}

/// Numerically stable softplus: ln(1 + e^x).
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log density of the squashed coordinate-wise Gaussian at pre-squash `z`.
///
/// log pi(u) = sum_d [ -log_std_d - ln(2 pi)/2 - ((z_d - m_d)/s_d)^2 / 2
///                     + ln |dz/du| ]  with u = sigmoid(z), so
/// ln |dz/du| = -ln(u(1-u)) = softplus(z) + softplus(-z).
pub fn squashed_log_prob(mean: &Array1<f64>, log_std: &Array1<f64>, z: &Array1<f64>) -> f64 {
    let mut lp = 0.0;
    for d in 0..mean.len() {
        let s = log_std[d].exp();
        let t = (z[d] - mean[d]) / s;
        lp += -log_std[d] - 0.5 * LN_2PI - 0.5 * t * t;
        lp += softplus(z[d]) + softplus(-z[d]);
    }
    lp
}

/// One sampled action: squashed coordinates in (0,1), the Gaussian draw
/// before squashing, and the log density.
#[derive(Debug, Clone)]
pub struct ActionSample {
    pub squashed: Vec<f64>,
    pub pre_squash: Vec<f64>,
    pub log_prob: f64,
}

/// Draw an action from the current policy. With `explore = false` the
/// Gaussian noise is skipped and the mean is squashed directly.
pub fn sample_action(
    actor: &ActorParams,
    state: &Array1<f64>,
    rng: &mut impl Rng,
    explore: bool,
) -> ActionSample {
    let (mean, _) = actor.forward(state);
    let mut z = mean.clone();
    if explore {
        for d in 0..z.len() {
            let eps: f64 = StandardNormal.sample(rng);
            z[d] += actor.log_std[d].exp() * eps;
        }
    }
    let squashed = z.iter().map(|&v| sigmoid(v)).collect();
    let log_prob = squashed_log_prob(&mean, &actor.log_std, &z);
    ActionSample {
        squashed,
        pre_squash: z.to_vec(),
        log_prob,
    }
}

/// One-step advantage estimate r + gamma v(s') - v(s).
pub fn advantage(reward: f64, discount: f64, v_next: f64, v_now: f64) -> f64 {
    reward + discount * v_next - v_now
}

/// An n-step rollout segment: states, the pre-squash actions taken, the
/// (already scaled) rewards, and the state after the final transition used
/// to bootstrap the tail return (`None` treats the tail as zero).
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub states: Vec<Array1<f64>>,
    pub pre_squash: Vec<Array1<f64>>,
    pub rewards: Vec<f64>,
    pub bootstrap_state: Option<Array1<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn push(&mut self, state: Array1<f64>, pre_squash: Array1<f64>, reward: f64) {
        self.states.push(state);
        self.pre_squash.push(pre_squash);
        self.rewards.push(reward);
    }
}

/// Accumulated gradients for every parameter block of a `PolicyPair`.
#[derive(Debug, Clone)]
pub struct GradAccum {
    pub actor_trunk: MlpGrad,
    pub actor_head: Layer,
    pub log_std: Array1<f64>,
    pub critic_trunk: MlpGrad,
    pub critic_head: Layer,
    /// Number of environment steps that contributed.
    pub steps: usize,
}

impl GradAccum {
    pub fn zeros_like(pair: &PolicyPair) -> Self {
        GradAccum {
            actor_trunk: MlpGrad::zeros_like(&pair.actor.trunk),
            actor_head: Layer::zeros_like(&pair.actor.mean_head),
            log_std: Array1::zeros(pair.actor.log_std.len()),
            critic_trunk: MlpGrad::zeros_like(&pair.critic.trunk),
            critic_head: Layer::zeros_like(&pair.critic.value_head),
            steps: 0,
        }
    }

    pub fn add(&mut self, other: &GradAccum) {
        self.actor_trunk.add(&other.actor_trunk);
        self.actor_head.add_scaled(&other.actor_head, 1.0);
        self.log_std.scaled_add(1.0, &other.log_std);
        self.critic_trunk.add(&other.critic_trunk);
        self.critic_head.add_scaled(&other.critic_head, 1.0);
        self.steps += other.steps;
    }

    pub fn actor_norm(&self) -> f64 {
        (self.actor_trunk.sq_norm()
            + self.actor_head.sq_norm()
            + self.log_std.iter().map(|v| v * v).sum::<f64>())
        .sqrt()
    }

    pub fn critic_norm(&self) -> f64 {
        (self.critic_trunk.sq_norm() + self.critic_head.sq_norm()).sqrt()
    }

    /// Rescale the actor block and the critic block independently so each
    /// global norm is at most `max_norm`.
    pub fn clip_global_norm(&mut self, max_norm: f64) {
        let an = self.actor_norm();
        if an > max_norm {
            let f = max_norm / an;
            self.actor_trunk.scale(f);
            self.actor_head.scale(f);
            self.log_std.mapv_inplace(|v| v * f);
        }
        let cn = self.critic_norm();
        if cn > max_norm {
            let f = max_norm / cn;
            self.critic_trunk.scale(f);
            self.critic_head.scale(f);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.actor_trunk.is_finite()
            && self.actor_head.is_finite()
            && self.log_std.iter().all(|v| v.is_finite())
            && self.critic_trunk.is_finite()
            && self.critic_head.is_finite()
    }

    /// Actor gradient flattened in the same order as `ActorParams::flatten`.
    pub fn actor_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.actor_trunk.layers {
            layer.push_params(&mut out);
        }
        self.actor_head.push_params(&mut out);
        out.extend(self.log_std.iter());
        out
    }

    /// Critic gradient flattened in the same order as `CriticParams::flatten`.
    pub fn critic_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.critic_trunk.layers {
            layer.push_params(&mut out);
        }
        self.critic_head.push_params(&mut out);
        out
    }
}

/// Gradients plus the frozen targets they were computed against.
#[derive(Debug, Clone)]
pub struct AccumOutput {
    pub grad: GradAccum,
    pub returns: Vec<f64>,
    pub advantages: Vec<f64>,
}

/// Run the full backward pass over one trajectory.
///
/// Returns the accumulated (unclipped) gradients together with the n-step
/// returns R_t and advantages A_t = R_t - v(s_t) used as frozen targets.
/// The actor gradient is the ascent direction of
///   sum_t log pi(z_t|s_t) A_t + entropy_coeff * sum_t H(pi),
/// the critic gradient is the descent direction of sum_t (R_t - v(s_t))^2,
/// i.e. d/dtheta sum_t (R_t - v(s_t))^2 with R_t held constant.
pub fn accumulate_gradients(
    pair: &PolicyPair,
    traj: &Trajectory,
    discount: f64,
    entropy_coeff: f64,
) -> Result<AccumOutput> {
    if traj.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    let t_len = traj.len();
    let mut grad = GradAccum::zeros_like(pair);
    grad.steps = t_len;

    // Critic values and caches for every visited state.
    let mut values = Vec::with_capacity(t_len);
    let mut critic_caches = Vec::with_capacity(t_len);
    for s in &traj.states {
        let (v, cache) = pair.critic.value_with_cache(s);
        values.push(v);
        critic_caches.push(cache);
    }

    // n-step returns, backward from the bootstrap value.
    let mut tail = match &traj.bootstrap_state {
        Some(s) => pair.critic.value(s),
        None => 0.0,
    };
    let mut returns = vec![0.0; t_len];
    for t in (0..t_len).rev() {
        tail = traj.rewards[t] + discount * tail;
        returns[t] = tail;
    }
    let advantages: Vec<f64> = returns
        .iter()
        .zip(&values)
        .map(|(r, v)| r - v)
        .collect();

    // Actor backward pass.
    for (t, &a) in advantages.iter().enumerate() {
        let (mean, cache) = pair.actor.forward(&traj.states[t]);
        let z = &traj.pre_squash[t];
        // d/d mean_d [log pi * A] = A (z_d - mean_d) / sigma_d^2
        let mut d_logits = Array1::zeros(mean.len());
        for d in 0..mean.len() {
            let s2 = (2.0 * pair.actor.log_std[d]).exp();
            let diff = z[d] - mean[d];
            d_logits[d] = a * diff / s2;
            // d/d log_std_d [log pi * A] = A ((z-m)^2 / sigma^2 - 1);
            // entropy bonus adds +entropy_coeff per step per coordinate.
            grad.log_std[d] += a * (diff * diff / s2 - 1.0) + entropy_coeff;
        }
        let d_hidden = pair
            .actor
            .mean_head
            .backward_into(cache.output(), &d_logits, &mut grad.actor_head);
        pair.actor
            .trunk
            .backward_into(&cache, d_hidden, &mut grad.actor_trunk);
    }

    // Critic backward pass: d/dv (R - v)^2 = -2 (R - v) = -2 A.
    for (t, &a) in advantages.iter().enumerate() {
        let d_v = Array1::from_elem(1, -2.0 * a);
        let d_hidden = pair.critic.value_head.backward_into(
            critic_caches[t].output(),
            &d_v,
            &mut grad.critic_head,
        );
        pair.critic
            .trunk
            .backward_into(&critic_caches[t], d_hidden, &mut grad.critic_trunk);
    }

    if !grad.is_finite() {
        return Err(Error::NonFinite("gradient accumulation".into()));
    }
    Ok(AccumOutput {
        grad,
        returns,
        advantages,
    })
}

/// Apply one accumulated update: the actor ascends, the critic descends,
/// then the log-std is clamped to its bounds. Errors if any parameter goes
/// non-finite.
pub fn apply_update(
    pair: &mut PolicyPair,
    grad: &GradAccum,
    actor_lr: f64,
    critic_lr: f64,
) -> Result<()> {
    pair.actor.trunk.add_scaled_grad(&grad.actor_trunk, actor_lr);
    pair.actor.mean_head.add_scaled(&grad.actor_head, actor_lr);
    pair.actor.log_std.scaled_add(actor_lr, &grad.log_std);
    pair.actor
        .log_std
        .mapv_inplace(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX));
    pair.critic
        .trunk
        .add_scaled_grad(&grad.critic_trunk, -critic_lr);
    pair.critic
        .value_head
        .add_scaled(&grad.critic_head, -critic_lr);
    if !pair.is_finite() {
        return Err(Error::NonFinite("parameter update".into()));
    }
    Ok(())
}

/// Actor objective with frozen advantages; used by finite-difference checks.
pub fn actor_surrogate(
    actor: &ActorParams,
    traj: &Trajectory,
    advantages: &[f64],
    entropy_coeff: f64,
) -> f64 {
    let mut total = 0.0;
    for (t, &a) in advantages.iter().enumerate().take(traj.len()) {
        let (mean, _) = actor.forward(&traj.states[t]);
        total += squashed_log_prob(&mean, &actor.log_std, &traj.pre_squash[t]) * a;
        // Gaussian entropy per coordinate: log_std + ln(2 pi e)/2.
        for d in 0..actor.log_std.len() {
            total += entropy_coeff * (actor.log_std[d] + 0.5 * (LN_2PI + 1.0));
        }
    }
    total
}

/// Critic objective with frozen returns; used by finite-difference checks.
pub fn critic_surrogate(critic: &CriticParams, states: &[Array1<f64>], returns: &[f64]) -> f64 {
    states
        .iter()
        .zip(returns)
        .map(|(s, r)| {
            let v = critic.value(s);
            (r - v) * (r - v)
        })
        .sum()
}

/// Result of a finite-difference gradient audit.
#[derive(Debug, Clone)]
pub struct FdReport {
    pub max_rel_err_actor: f64,
    pub max_rel_err_critic: f64,
    pub coords_checked: usize,
}

/// Compare analytic gradients against central finite differences of the
/// surrogate objectives on `traj`. Checks `coords` randomly chosen
/// coordinates of each network (all coordinates if `None`).
pub fn finite_difference_check(
    pair: &PolicyPair,
    traj: &Trajectory,
    discount: f64,
    entropy_coeff: f64,
    coords: Option<usize>,
    rng: &mut impl Rng,
) -> Result<FdReport> {
    let out = accumulate_gradients(pair, traj, discount, entropy_coeff)?;
    let actor_grad = out.grad.actor_flat();
    let critic_grad = out.grad.critic_flat();
    let h = 1e-5;

    let pick = |n: usize, want: Option<usize>, rng: &mut dyn rand::RngCore| -> Vec<usize> {
        match want {
            None => (0..n).collect(),
            Some(k) if k >= n => (0..n).collect(),
            Some(k) => {
                let mut idx: Vec<usize> = Vec::with_capacity(k);
                while idx.len() < k {
                    let c = (rng.next_u64() % n as u64) as usize;
                    if !idx.contains(&c) {
                        idx.push(c);
                    }
                }
                idx
            }
        }
    };

    let rel_err = |analytic: f64, numeric: f64| -> f64 {
        let denom = analytic.abs().max(numeric.abs());
        if denom < 1e-8 {
            0.0
        } else {
            (analytic - numeric).abs() / denom
        }
    };

    let mut max_actor = 0.0_f64;
    {
        let base = pair.actor.flatten();
        let mut probe = pair.actor.clone();
        for k in pick(base.len(), coords, rng) {
            let mut v = base.clone();
            v[k] += h;
            probe.load_flat(&v);
            let lp = actor_surrogate(&probe, traj, &out.advantages, entropy_coeff);
            v[k] = base[k] - h;
            probe.load_flat(&v);
            let lm = actor_surrogate(&probe, traj, &out.advantages, entropy_coeff);
            let numeric = (lp - lm) / (2.0 * h);
            max_actor = max_actor.max(rel_err(actor_grad[k], numeric));
        }
    }

    let mut max_critic = 0.0_f64;
    {
        let base = pair.critic.flatten();
        let mut probe = pair.critic.clone();
        for k in pick(base.len(), coords, rng) {
            let mut v = base.clone();
            v[k] += h;
            probe.load_flat(&v);
            let lp = critic_surrogate(&probe, &traj.states, &out.returns);
            v[k] = base[k] - h;
            probe.load_flat(&v);
            let lm = critic_surrogate(&probe, &traj.states, &out.returns);
            // The stored critic gradient is the descent direction of the
            // squared error, i.e. +d/dtheta sum (R - v)^2.
            let numeric = (lp - lm) / (2.0 * h);
            max_critic = max_critic.max(rel_err(critic_grad[k], numeric));
        }
    }

    let checked = match coords {
        None => pair.actor.param_count() + pair.critic.param_count(),
        Some(k) => {
            k.min(pair.actor.param_count()) + k.min(pair.critic.param_count())
        }
    };
    Ok(FdReport {
        max_rel_err_actor: max_actor,
        max_rel_err_critic: max_critic,
        coords_checked: checked,
    })
}

// ============================================================================
// Checkpoints
// ============================================================================

const CKPT_MAGIC: &[u8; 8] = b"ACCKPT01";

/// Metadata stored alongside the parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub config_hash: String,
}

/// Write `pair` and `meta` to a binary checkpoint. All floats are stored as
/// little-endian f64 bit patterns, so a load restores them bit-exactly.
pub fn save_checkpoint(path: &Path, pair: &PolicyPair, meta: &CheckpointMeta) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(CKPT_MAGIC);
    let state_dim = pair.actor.state_dim() as u32;
    let action_dim = pair.actor.action_dim() as u32;
    let hidden = pair.hidden_dims();
    buf.extend_from_slice(&state_dim.to_le_bytes());
    buf.extend_from_slice(&action_dim.to_le_bytes());
    buf.extend_from_slice(&(hidden.len() as u32).to_le_bytes());
    for h in &hidden {
        buf.extend_from_slice(&(*h as u32).to_le_bytes());
    }
    buf.extend_from_slice(&meta.seed.to_le_bytes());
    let hash_bytes = meta.config_hash.as_bytes();
    buf.extend_from_slice(&(hash_bytes.len() as u32).to_le_bytes());
    buf.extend_from_slice(hash_bytes);

    let actor_flat = pair.actor.flatten();
    let critic_flat = pair.critic.flatten();
    buf.extend_from_slice(&(actor_flat.len() as u64).to_le_bytes());
    for v in &actor_flat {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&(critic_flat.len() as u64).to_le_bytes());
    for v in &critic_flat {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::BadCheckpoint("truncated checkpoint".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

/// Load a checkpoint written by `save_checkpoint`.
pub fn load_checkpoint(path: &Path) -> Result<(PolicyPair, CheckpointMeta)> {
    let mut data = Vec::new();
    fs::File::open(path)?.read_to_end(&mut data)?;
    let mut r = ByteReader { data: &data, pos: 0 };
    if r.take(8)? != CKPT_MAGIC {
        return Err(Error::BadCheckpoint("bad magic".into()));
    }
    let state_dim = r.u32()? as usize;
    let action_dim = r.u32()? as usize;
    let n_hidden = r.u32()? as usize;
    if state_dim == 0 || action_dim == 0 || n_hidden == 0 || n_hidden > 64 {
        return Err(Error::BadCheckpoint("implausible dimensions".into()));
    }
    let mut hidden = Vec::with_capacity(n_hidden);
    for _ in 0..n_hidden {
        hidden.push(r.u32()? as usize);
    }
    let seed = r.u64()?;
    let hash_len = r.u32()? as usize;
    let config_hash = String::from_utf8(r.take(hash_len)?.to_vec())
        .map_err(|_| Error::BadCheckpoint("non-utf8 config hash".into()))?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let mut pair = PolicyPair::new(state_dim, action_dim, &hidden, 0.0, &mut rng);

    let n_actor = r.u64()? as usize;
    if n_actor != pair.actor.param_count() {
        return Err(Error::BadCheckpoint(format!(
            "actor parameter count {} does not match dimensions (expected {})",
            n_actor,
            pair.actor.param_count()
        )));
    }
    let actor_flat = r.f64_vec(n_actor)?;
    let n_critic = r.u64()? as usize;
    if n_critic != pair.critic.param_count() {
        return Err(Error::BadCheckpoint(format!(
            "critic parameter count {} does not match dimensions (expected {})",
            n_critic,
            pair.critic.param_count()
        )));
    }
    let critic_flat = r.f64_vec(n_critic)?;
    pair.actor.load_flat(&actor_flat);
    pair.critic.load_flat(&critic_flat);
    if !pair.is_finite() {
        return Err(Error::BadCheckpoint("non-finite parameters".into()));
    }
    Ok((pair, CheckpointMeta { seed, config_hash }))
}

// ============================================================================
// Tests
// ============================================================================
