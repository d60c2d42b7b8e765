use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::model::{ActionNormalizer, DenoiserModel, HIDDEN_WIDTH, NUM_LAYERS};
use super::network::{Adam, AdamConfig, Mlp};
use super::schedule::{make_cosine_schedule, DEFAULT_STEPS};
use crate::scene::{ActionInput, AgentState, CONTEXT_DIM};
use crate::{Error, Result};

/// One (context, clean action sequence) training pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub context: Vec<f32>,
    pub initial_state: AgentState,
    pub actions: Vec<ActionInput>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub hidden: usize,
    pub layers: usize,
    pub diffusion_steps: usize,
    pub dt: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 6000,
            batch_size: 64,
            learning_rate: 1e-3,
            hidden: HIDDEN_WIDTH,
            layers: NUM_LAYERS,
            diffusion_steps: DEFAULT_STEPS,
            dt: crate::dynamics::DT,
            seed: 0,
        }
    }
}

/// Per-iteration loss values recorded during training.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub losses: Vec<f64>,
}

impl TrainLog {
    /// Mean of the last `n` recorded losses.
    pub fn tail_mean(&self, n: usize) -> f64 {
        let n = n.min(self.losses.len()).max(1);
        self.losses[self.losses.len() - n..].iter().sum::<f64>() / n as f64
    }
}

fn context_stats(corpus: &[TrainingSample]) -> (Vec<f32>, Vec<f32>) {
    let n = corpus.len() as f64;
    let mut mean = vec![0.0f64; CONTEXT_DIM];
    let mut sq = vec![0.0f64; CONTEXT_DIM];
    for s in corpus {
        for (j, &v) in s.context.iter().enumerate() {
            mean[j] += v as f64;
            sq[j] += (v as f64) * (v as f64);
        }
    }
    let mut std = vec![0.0f32; CONTEXT_DIM];
    for j in 0..CONTEXT_DIM {
        mean[j] /= n;
        let var = (sq[j] / n - mean[j] * mean[j]).max(0.0);
        std[j] = if var.sqrt() < 1e-3 { 1.0 } else { var.sqrt() as f32 };
    }
    (mean.into_iter().map(|m| m as f32).collect(), std)
}

/// Regresses the clean trajectory from noised copies under the squared-error
/// objective with Adam updates.
pub fn train(corpus: &[TrainingSample], cfg: &TrainConfig) -> Result<(DenoiserModel, TrainLog)> {
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("training corpus is empty".into()));
    }
    let horizon = corpus[0].actions.len();
    if horizon == 0 || corpus.iter().any(|s| s.actions.len() != horizon || s.context.len() != CONTEXT_DIM) {
        return Err(Error::InvalidArgument("training samples must share horizon and context size".into()));
    }
    if cfg.batch_size == 0 || cfg.layers < 2 {
        return Err(Error::InvalidConfig("batch size must be positive and the network needs 2+ layers".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let schedule = make_cosine_schedule(cfg.diffusion_steps)?;
    let action_norm = ActionNormalizer::fit(corpus.iter().flat_map(|s| s.actions.iter().copied()));
    let (context_mean, context_std) = context_stats(corpus);
    let net = Mlp::new(&DenoiserModel::layer_sizes(horizon, cfg.hidden, cfg.layers), &mut rng);
    let mut model = DenoiserModel {
        horizon,
        dt: cfg.dt,
        schedule,
        action_norm,
        context_mean,
        context_std,
        net,
        final_loss: f64::NAN,
        reference: None,
    };

    let td = 2 * horizon;
    let targets: Vec<Vec<f32>> = corpus
        .iter()
        .map(|s| action_norm.normalize(&s.actions).into_iter().map(|v| v as f32).collect())
        .collect();
    let contexts: Vec<Vec<f32>> = corpus.iter().map(|s| model.normalize_context(&s.context)).collect();

    let mut adam = Adam::new(&model.net, AdamConfig { lr: cfg.learning_rate, ..Default::default() });
    let mut log = TrainLog::default();
    let b = cfg.batch_size;
    let k_max = model.schedule.steps();
    for it in 0..cfg.iterations {
        let mut tau = Array2::<f32>::zeros((b, td));
        let mut clean = Array2::<f32>::zeros((b, td));
        let mut ctx = Array2::<f32>::zeros((b, CONTEXT_DIM));
        let mut ks = Vec::with_capacity(b);
        for r in 0..b {
            let i = rng.random_range(0..corpus.len());
            let k = rng.random_range(1..=k_max);
            let ab = model.schedule.alpha_bar(k);
            let (ca, cb) = (ab.sqrt() as f32, (1.0 - ab).sqrt() as f32);
            for j in 0..td {
                let e: f64 = StandardNormal.sample(&mut rng);
                clean[[r, j]] = targets[i][j];
                tau[[r, j]] = ca * targets[i][j] + cb * e as f32;
            }
            for (j, v) in contexts[i].iter().enumerate() {
                ctx[[r, j]] = *v;
            }
            ks.push(k);
        }
        let x = model.assemble_inputs(&tau, &ks, &ctx);
        let (out, cache) = model.net.forward_train(&x.view());
        let diff = &out - &clean;
        let loss = diff.iter().map(|v| (*v as f64).powi(2)).sum::<f64>() / (b * td) as f64;
        if !loss.is_finite() {
            return Err(Error::Divergence { iteration: it, loss });
        }
        log.losses.push(loss);
        let mut grads = model.net.backward(&cache, diff * (2.0 / (b * td) as f32));
        let norm = grads.global_norm();
        if norm > 1.0 {
            grads.scale(1.0 / norm);
        }
        // Cosine decay to a tenth of the base rate.
        let frac = it as f32 / cfg.iterations.max(1) as f32;
        adam.set_lr(cfg.learning_rate * (0.1 + 0.45 * (1.0 + (std::f32::consts::PI * frac).cos())));
        adam.step(&mut model.net, &grads);
        if it % 500 == 0 {
            log::debug!("iter {it}: loss {loss:.5}");
        }
    }
    model.final_loss = log.tail_mean(100);
    Ok((model, log))
}
