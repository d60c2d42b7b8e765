//! Trajectory diffusion: variance schedule, forward noising, the dense
//! denoiser, training, and (partial) reverse sampling.

mod model;
pub mod network;
mod sampler;
mod schedule;
mod train;

pub use model::{step_embedding, ActionNormalizer, DenoiserModel, HIDDEN_WIDTH, HORIZON, NUM_LAYERS, STEP_EMBED_DIM};
pub use sampler::{partial_sample, partial_start_step, run_chains, sample, Chain, ChainStart, GuidanceHook};
pub use schedule::{
    add_noise, make_cosine_schedule, posterior_mean, DiffusionSchedule, BETA_MAX, BETA_MIN, COSINE_OFFSET,
    DEFAULT_STEPS,
};
pub use train::{train, TrainConfig, TrainLog, TrainingSample};

/// Small untrained model for unit tests of the sampling machinery.
#[cfg(test)]
pub(crate) fn untrained_model(horizon: usize, steps: usize, seed: u64) -> DenoiserModel {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    DenoiserModel {
        horizon,
        dt: crate::dynamics::DT,
        schedule: make_cosine_schedule(steps).unwrap(),
        action_norm: ActionNormalizer {
            mean: [0.0, 0.0],
            std: [1.0, 0.1],
        },
        context_mean: vec![0.0; crate::scene::CONTEXT_DIM],
        context_std: vec![10.0; crate::scene::CONTEXT_DIM],
        net: network::Mlp::new(&DenoiserModel::layer_sizes(horizon, 32, 3), &mut rng),
        final_loss: f64::NAN,
        reference: None,
    }
}
