//! Learning stack: a hand-written dense network, the squashed-Gaussian
//! actor-critic with its exact gradient accumulation, and the asynchronous
//! multi-worker training loop.

pub mod mlp;
pub mod policy;
pub mod train;
