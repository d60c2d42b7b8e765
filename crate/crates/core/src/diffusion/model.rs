use std::path::Path;

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use super::network::{Linear, Mlp};
use super::schedule::{make_cosine_schedule, DiffusionSchedule};
use crate::metrics::DrivingProfileHistogram;
use crate::scene::{ActionInput, CONTEXT_DIM};
use crate::{Error, Result};

pub const STEP_EMBED_DIM: usize = 32;
pub const HORIZON: usize = 32;
pub const HIDDEN_WIDTH: usize = 256;
pub const NUM_LAYERS: usize = 4;

const FORMAT: &str = "safesim-denoiser";
const VERSION: u32 = 1;

/// Per-channel z-score statistics for (accel, yaw_rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionNormalizer {
    pub mean: [f64; 2],
    pub std: [f64; 2],
}

impl ActionNormalizer {
    pub fn fit(actions: impl Iterator<Item = ActionInput>) -> Self {
        let mut n: f64 = 0.0;
        let mut sum = [0.0; 2];
        let mut sq = [0.0; 2];
        for a in actions {
            n += 1.0;
            for (c, v) in [a.accel, a.yaw_rate].into_iter().enumerate() {
                sum[c] += v;
                sq[c] += v * v;
            }
        }
        let mean = sum.map(|s| s / n.max(1.0));
        let std = [0, 1].map(|c| ((sq[c] / n.max(1.0) - mean[c] * mean[c]).max(0.0)).sqrt().max(1e-3));
        Self { mean, std }
    }

    pub fn normalize(&self, actions: &[ActionInput]) -> Vec<f64> {
        actions
            .iter()
            .flat_map(|a| [(a.accel - self.mean[0]) / self.std[0], (a.yaw_rate - self.mean[1]) / self.std[1]])
            .collect()
    }

    pub fn denormalize(&self, z: &[f64]) -> Vec<ActionInput> {
        z.chunks_exact(2)
            .map(|c| ActionInput::new(c[0] * self.std[0] + self.mean[0], c[1] * self.std[1] + self.mean[1]))
            .collect()
    }
}

/// Sinusoidal embedding of the diffusion step index.
pub fn step_embedding(k: usize) -> [f32; STEP_EMBED_DIM] {
    let half = STEP_EMBED_DIM / 2;
    let mut e = [0.0f32; STEP_EMBED_DIM];
    for i in 0..half {
        let freq = (-(10000f64.ln()) * i as f64 / half as f64).exp();
        let arg = k as f64 * freq;
        e[i] = arg.sin() as f32;
        e[half + i] = arg.cos() as f32;
    }
    e
}

/// Dense denoiser predicting the clean normalized action sequence from the
/// noisy one, the step embedding, and context features.
#[derive(Debug, Clone)]
pub struct DenoiserModel {
    pub horizon: usize,
    pub dt: f64,
    pub schedule: DiffusionSchedule,
    pub action_norm: ActionNormalizer,
    pub context_mean: Vec<f32>,
    pub context_std: Vec<f32>,
    pub net: Mlp,
    pub final_loss: f64,
    pub reference: Option<DrivingProfileHistogram>,
}

impl DenoiserModel {
    pub fn tau_dim(&self) -> usize {
        2 * self.horizon
    }

    pub fn input_dim(horizon: usize) -> usize {
        2 * horizon + STEP_EMBED_DIM + CONTEXT_DIM
    }

    pub fn layer_sizes(horizon: usize, hidden: usize, layers: usize) -> Vec<usize> {
        let mut sizes = vec![Self::input_dim(horizon)];
        sizes.extend(std::iter::repeat_n(hidden, layers - 1));
        sizes.push(2 * horizon);
        sizes
    }

    pub fn normalize_context(&self, raw: &[f32]) -> Vec<f32> {
        raw.iter()
            .zip(self.context_mean.iter().zip(&self.context_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// Batch input rows `[tau | step embedding | context]`.
    pub fn assemble_inputs(&self, tau: &Array2<f32>, ks: &[usize], ctx: &Array2<f32>) -> Array2<f32> {
        let n = tau.nrows();
        let td = self.tau_dim();
        let mut x = Array2::zeros((n, Self::input_dim(self.horizon)));
        x.slice_mut(s![.., 0..td]).assign(tau);
        for (r, &k) in ks.iter().enumerate() {
            let e = step_embedding(k);
            for (j, v) in e.iter().enumerate() {
                x[[r, td + j]] = *v;
            }
        }
        x.slice_mut(s![.., td + STEP_EMBED_DIM..]).assign(ctx);
        x
    }

    pub fn predict(&self, tau: &Array2<f32>, ks: &[usize], ctx: &Array2<f32>) -> Array2<f32> {
        self.net.forward(&self.assemble_inputs(tau, ks, ctx).view())
    }

    /// First-layer contribution of normalized context rows (no bias).
    pub fn project_context(&self, ctx: &Array2<f32>) -> Array2<f32> {
        let off = self.tau_dim() + STEP_EMBED_DIM;
        ctx.dot(&self.net.layers[0].w.slice(s![off.., ..]))
    }

    /// First-layer contribution of step `k`'s embedding plus the bias.
    pub fn project_step(&self, k: usize) -> Array1<f32> {
        let td = self.tau_dim();
        let e = Array1::from(step_embedding(k).to_vec());
        e.dot(&self.net.layers[0].w.slice(s![td..td + STEP_EMBED_DIM, ..])) + &self.net.layers[0].b
    }

    /// Forward pass using precomputed context and step projections.
    pub fn predict_projected(&self, tau: &Array2<f32>, ctx_proj: &Array2<f32>, step_proj: &Array1<f32>) -> Array2<f32> {
        let td = self.tau_dim();
        let h = tau.dot(&self.net.layers[0].w.slice(s![0..td, ..])) + ctx_proj + step_proj;
        self.net.forward_from_hidden(h)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&ModelFile::from_model(self))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_model()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile::from_model(self))?)
    }
}

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    inputs: usize,
    outputs: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
}

#[derive(Serialize, Deserialize)]
struct ScheduleRecord {
    steps: usize,
    betas: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    horizon: usize,
    dt: f64,
    context_dim: usize,
    step_embed_dim: usize,
    schedule: ScheduleRecord,
    action_norm: ActionNormalizer,
    context_mean: Vec<f32>,
    context_std: Vec<f32>,
    layers: Vec<LayerRecord>,
    final_loss: f64,
    #[serde(default)]
    reference: Option<DrivingProfileHistogram>,
}

impl ModelFile {
    fn from_model(m: &DenoiserModel) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            horizon: m.horizon,
            dt: m.dt,
            context_dim: CONTEXT_DIM,
            step_embed_dim: STEP_EMBED_DIM,
            schedule: ScheduleRecord {
                steps: m.schedule.steps(),
                betas: m.schedule.betas().to_vec(),
            },
            action_norm: m.action_norm,
            context_mean: m.context_mean.clone(),
            context_std: m.context_std.clone(),
            layers: m
                .net
                .layers
                .iter()
                .map(|l| LayerRecord {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    weights: l.w.iter().copied().collect(),
                    bias: l.b.to_vec(),
                })
                .collect(),
            final_loss: m.final_loss,
            reference: m.reference.clone(),
        }
    }

    fn into_model(self) -> Result<DenoiserModel> {
        let bad = |msg: String| Err(Error::ModelShape(msg));
        if self.format != FORMAT {
            return bad(format!("unknown format {:?}", self.format));
        }
        if self.version != VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        if self.context_dim != CONTEXT_DIM || self.step_embed_dim != STEP_EMBED_DIM {
            return bad(format!(
                "feature layout {}+{} does not match this build ({}+{})",
                self.context_dim, self.step_embed_dim, CONTEXT_DIM, STEP_EMBED_DIM
            ));
        }
        if self.context_mean.len() != CONTEXT_DIM || self.context_std.len() != CONTEXT_DIM {
            return bad("context statistics have wrong length".into());
        }
        if self.schedule.betas.len() != self.schedule.steps {
            return bad("schedule length mismatch".into());
        }
        let expected = make_cosine_schedule(self.schedule.steps)?;
        if expected.betas() != self.schedule.betas.as_slice() {
            return bad("schedule constants differ from the cosine schedule".into());
        }
        if self.layers.is_empty() {
            return bad("no layers".into());
        }
        if self.layers[0].inputs != DenoiserModel::input_dim(self.horizon) {
            return bad(format!("first layer takes {} inputs", self.layers[0].inputs));
        }
        if self.layers.last().unwrap().outputs != 2 * self.horizon {
            return bad("output layer width does not match horizon".into());
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.into_iter().enumerate() {
            if i > 0 && layers.last().is_some_and(|p: &Linear| p.outputs() != l.inputs) {
                return bad(format!("layer {i} input width mismatch"));
            }
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return bad(format!("layer {i} parameter count mismatch"));
            }
            layers.push(Linear {
                w: Array2::from_shape_vec((l.inputs, l.outputs), l.weights).expect("checked length"),
                b: Array1::from(l.bias),
            });
        }
        Ok(DenoiserModel {
            horizon: self.horizon,
            dt: self.dt,
            schedule: expected,
            action_norm: self.action_norm,
            context_mean: self.context_mean,
            context_std: self.context_std,
            net: Mlp { layers },
            final_loss: self.final_loss,
            reference: self.reference,
        })
    }
}
