//! Dense network with SiLU activations, manual backpropagation, and Adam.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `in x out`, so a batch forward is `x.dot(&w)`.
    pub w: Array2<f32>,
    pub b: Array1<f32>,
}

impl Linear {
    pub fn init<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f32).sqrt();
        let w = Array2::from_shape_fn((inputs, outputs), |_| rng.random_range(-bound..bound));
        let b = Array1::from_shape_fn(outputs, |_| rng.random_range(-bound..bound));
        Self { w, b }
    }

    pub fn inputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w.ncols()
    }

    fn forward(&self, x: &ArrayView2<f32>) -> Array2<f32> {
        x.dot(&self.w) + &self.b
    }
}

#[inline]
fn sigmoid(z: f32) -> f32 {
    1.0 / (1.0 + (-z).exp())
}

#[inline]
pub(crate) fn silu(z: f32) -> f32 {
    z * sigmoid(z)
}

#[inline]
fn silu_grad(z: f32) -> f32 {
    let s = sigmoid(z);
    s * (1.0 + z * (1.0 - s))
}

/// Multi-layer perceptron; SiLU between layers, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

/// Activations kept for the backward pass.
pub struct ForwardCache {
    inputs: Vec<Array2<f32>>,
    pre: Vec<Array2<f32>>,
}

pub struct Gradients {
    pub w: Vec<Array2<f32>>,
    pub b: Vec<Array1<f32>>,
}

impl Mlp {
    pub fn new<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        let layers = sizes.windows(2).map(|w| Linear::init(w[0], w[1], rng)).collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs()
    }

    pub fn forward(&self, x: &ArrayView2<f32>) -> Array2<f32> {
        let first = self.layers[0].forward(x);
        self.forward_from_hidden(first)
    }

    /// Continues the forward pass from the first layer's pre-activation.
    pub fn forward_from_hidden(&self, mut z: Array2<f32>) -> Array2<f32> {
        for layer in &self.layers[1..] {
            z.mapv_inplace(silu);
            z = layer.forward(&z.view());
        }
        z
    }

    pub fn forward_train(&self, x: &ArrayView2<f32>) -> (Array2<f32>, ForwardCache) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a.view());
            inputs.push(a);
            if i + 1 == self.layers.len() {
                return (z, ForwardCache { inputs, pre });
            }
            a = z.mapv(silu);
            pre.push(z);
        }
        unreachable!("mlp has at least one layer")
    }

    pub fn backward(&self, cache: &ForwardCache, d_out: Array2<f32>) -> Gradients {
        let n = self.layers.len();
        let mut gw = vec![Array2::zeros((0, 0)); n];
        let mut gb = vec![Array1::zeros(0); n];
        let mut delta = d_out;
        for i in (0..n).rev() {
            gw[i] = cache.inputs[i].t().dot(&delta);
            gb[i] = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut d_in = delta.dot(&self.layers[i].w.t());
                d_in.zip_mut_with(&cache.pre[i - 1], |d, &z| *d *= silu_grad(z));
                delta = d_in;
            }
        }
        Gradients { w: gw, b: gb }
    }
}

impl Gradients {
    pub fn global_norm(&self) -> f32 {
        let s: f32 = self.w.iter().map(|g| g.iter().map(|v| v * v).sum::<f32>()).sum::<f32>()
            + self.b.iter().map(|g| g.iter().map(|v| v * v).sum::<f32>()).sum::<f32>();
        s.sqrt()
    }

    pub fn scale(&mut self, k: f32) {
        self.w.iter_mut().for_each(|g| g.mapv_inplace(|v| v * k));
        self.b.iter_mut().for_each(|g| g.mapv_inplace(|v| v * k));
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

pub struct Adam {
    cfg: AdamConfig,
    t: i32,
    mw: Vec<Array2<f32>>,
    vw: Vec<Array2<f32>>,
    mb: Vec<Array1<f32>>,
    vb: Vec<Array1<f32>>,
}

impl Adam {
    pub fn new(net: &Mlp, cfg: AdamConfig) -> Self {
        Self {
            cfg,
            t: 0,
            mw: net.layers.iter().map(|l| Array2::zeros(l.w.raw_dim())).collect(),
            vw: net.layers.iter().map(|l| Array2::zeros(l.w.raw_dim())).collect(),
            mb: net.layers.iter().map(|l| Array1::zeros(l.b.raw_dim())).collect(),
            vb: net.layers.iter().map(|l| Array1::zeros(l.b.raw_dim())).collect(),
        }
    }

    pub fn set_lr(&mut self, lr: f32) {
        self.cfg.lr = lr;
    }

    pub fn step(&mut self, net: &mut Mlp, g: &Gradients) {
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (i, layer) in net.layers.iter_mut().enumerate() {
            ndarray::Zip::from(&mut layer.w)
                .and(&mut self.mw[i])
                .and(&mut self.vw[i])
                .and(&g.w[i])
                .for_each(|p, m, v, &gr| {
                    *m = beta1 * *m + (1.0 - beta1) * gr;
                    *v = beta2 * *v + (1.0 - beta2) * gr * gr;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
            ndarray::Zip::from(&mut layer.b)
                .and(&mut self.mb[i])
                .and(&mut self.vb[i])
                .and(&g.b[i])
                .for_each(|p, m, v, &gr| {
                    *m = beta1 * *m + (1.0 - beta1) * gr;
                    *v = beta2 * *v + (1.0 - beta2) * gr * gr;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
        }
    }
}
