//! Minimal dense network with hand-written forward and backward passes.
//!
//! A trunk is a stack of fully connected layers with ReLU after every one;
//! output heads are plain linear layers applied on top. Everything is f64.
//! Weights initialize uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].

use ndarray::{Array1, Array2};
use rand::Rng;

/// One dense layer: `w` is out x in, `b` is out.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Layer {
    /// Fresh layer with uniform +-1/sqrt(fan_in) weights and biases.
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let mut w = Array2::zeros((out_dim, in_dim));
        for v in w.iter_mut() {
            *v = rng.random_range(-bound..=bound);
        }
        let mut b = Array1::zeros(out_dim);
        for v in b.iter_mut() {
            *v = rng.random_range(-bound..=bound);
        }
        Layer { w, b }
    }

    pub fn zeros_like(other: &Layer) -> Self {
        Layer {
            w: Array2::zeros(other.w.raw_dim()),
            b: Array1::zeros(other.b.raw_dim()),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.nrows()
    }

    /// Affine map w x + b.
    pub fn forward(&self, x: &Array1<f64>) -> Array1<f64> {
        self.w.dot(x) + &self.b
    }

    /// Accumulate d(loss)/d(params) for this layer given the upstream
    /// gradient `d_out` and the input `x` seen in the forward pass; returns
    /// d(loss)/d(x).
    pub fn backward_into(
        &self,
        x: &Array1<f64>,
        d_out: &Array1<f64>,
        grad: &mut Layer,
    ) -> Array1<f64> {
        for (r, &g) in d_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let mut row = grad.w.row_mut(r);
            for (c, &xv) in x.iter().enumerate() {
                row[c] += g * xv;
            }
            grad.b[r] += g;
        }
        self.w.t().dot(d_out)
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }

    pub fn push_params(&self, out: &mut Vec<f64>) {
        out.extend(self.w.iter());
        out.extend(self.b.iter());
    }

    pub fn load_params(&mut self, src: &[f64]) -> usize {
        let mut k = 0;
        for v in self.w.iter_mut() {
            *v = src[k];
            k += 1;
        }
        for v in self.b.iter_mut() {
            *v = src[k];
            k += 1;
        }
        k
    }

    pub fn add_scaled(&mut self, other: &Layer, scale: f64) {
        self.w.scaled_add(scale, &other.w);
        self.b.scaled_add(scale, &other.b);
    }

    pub fn scale(&mut self, factor: f64) {
        self.w.mapv_inplace(|v| v * factor);
        self.b.mapv_inplace(|v| v * factor);
    }

    pub fn sq_norm(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum::<f64>() + self.b.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|v| v.is_finite()) && self.b.iter().all(|v| v.is_finite())
    }
}

/// Stack of ReLU layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Forward-pass activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct TrunkCache {
    /// acts[l] is the input to layer l; acts[len] is the trunk output.
    pub acts: Vec<Array1<f64>>,
    /// Pre-activations per layer (before ReLU).
    pub pre: Vec<Array1<f64>>,
}

impl TrunkCache {
    pub fn output(&self) -> &Array1<f64> {
        self.acts.last().expect("non-empty cache")
    }
}

impl Mlp {
    /// `dims = [input, h1, h2, ...]`; every layer ends in ReLU.
    pub fn new(dims: &[usize], rng: &mut impl Rng) -> Self {
        assert!(dims.len() >= 2, "trunk needs at least one layer");
        let layers = dims
            .windows(2)
            .map(|w| Layer::new(w[0], w[1], rng))
            .collect();
        Mlp { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty trunk").out_dim()
    }

    pub fn forward(&self, x: &Array1<f64>) -> TrunkCache {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        acts.push(x.clone());
        for layer in &self.layers {
            let z = layer.forward(acts.last().expect("non-empty"));
            let h = z.mapv(|v| v.max(0.0));
            pre.push(z);
            acts.push(h);
        }
        TrunkCache { acts, pre }
    }

    /// Backpropagate `d_out` (gradient at the trunk output) and accumulate
    /// parameter gradients; returns the gradient at the trunk input.
    pub fn backward_into(
        &self,
        cache: &TrunkCache,
        d_out: Array1<f64>,
        grad: &mut MlpGrad,
    ) -> Array1<f64> {
        let mut d = d_out;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            // Through the ReLU.
            let mut dz = d;
            for (v, &z) in dz.iter_mut().zip(cache.pre[l].iter()) {
                if z <= 0.0 {
                    *v = 0.0;
                }
            }
            d = layer.backward_into(&cache.acts[l], &dz, &mut grad.layers[l]);
        }
        d
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn push_params(&self, out: &mut Vec<f64>) {
        for layer in &self.layers {
            layer.push_params(out);
        }
    }

    pub fn load_params(&mut self, src: &[f64]) -> usize {
        let mut k = 0;
        for layer in &mut self.layers {
            k += layer.load_params(&src[k..]);
        }
        k
    }

    pub fn add_scaled_grad(&mut self, grad: &MlpGrad, scale: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grad.layers) {
            layer.add_scaled(g, scale);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Layer::is_finite)
    }
}

/// Gradient accumulator shaped like an `Mlp`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub layers: Vec<Layer>,
}

impl MlpGrad {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        MlpGrad {
            layers: mlp.layers.iter().map(Layer::zeros_like).collect(),
        }
    }

    pub fn add(&mut self, other: &MlpGrad) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.add_scaled(b, 1.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            layer.scale(factor);
        }
    }

    pub fn sq_norm(&self) -> f64 {
        self.layers.iter().map(Layer::sq_norm).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Layer::is_finite)
    }
}

// ============================================================================
// Tests
// ============================================================================
