//! Reverse-chain sampling, batched across independent chains.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::model::DenoiserModel;
use super::schedule::{add_noise, posterior_mean};
use crate::dynamics::{rollout, Trajectory};
use crate::scene::{ActionInput, AgentState, DecisionContext};
use crate::{Error, Result};

/// Where a chain enters the reverse process.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainStart {
    /// Pure noise at step K.
    Full,
    /// A proposal noised to `step`; step 0 returns the proposal untouched and
    /// step K discards it in favour of pure noise.
    Partial { proposal: Trajectory, step: usize },
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub context: Vec<f32>,
    pub initial_state: AgentState,
    pub start: ChainStart,
    /// Random stream id; chains with equal (seed, stream) draw identical noise.
    pub stream: u64,
}

/// Clean-guidance callback invoked once per reverse step.
pub trait GuidanceHook {
    /// `predictions[i]` is chain `i`'s current clean estimate (proposal for
    /// chains that have not started yet). Returns, per chain, the step-scaled
    /// action-space gradient `alpha * dJ/da`, or `None` to leave it alone.
    fn gradients(&mut self, k: usize, predictions: &[Trajectory], active: &[bool]) -> Vec<Option<Vec<ActionInput>>>;
}

fn draw(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Runs every chain from its start step down to step 1 and returns the final
/// rolled-out trajectories. Non-finite model output fails only that chain.
pub fn run_chains(
    model: &DenoiserModel,
    chains: &[Chain],
    seed: u64,
    mut hook: Option<&mut dyn GuidanceHook>,
) -> Vec<Result<Trajectory>> {
    let n = chains.len();
    let td = model.tau_dim();
    let k_max = model.schedule.steps();
    let norm = model.action_norm;
    let dt = model.dt;
    if n == 0 {
        return Vec::new();
    }

    let mut ctx = Array2::<f32>::zeros((n, crate::scene::CONTEXT_DIM));
    for (i, c) in chains.iter().enumerate() {
        for (j, v) in model.normalize_context(&c.context).into_iter().enumerate() {
            ctx[[i, j]] = v;
        }
    }
    let ctx_proj = model.project_context(&ctx);

    let mut rngs: Vec<ChaCha8Rng> = chains
        .iter()
        .map(|c| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(c.stream);
            r
        })
        .collect();
    let mut start = vec![0usize; n];
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut predictions: Vec<Trajectory> = Vec::with_capacity(n);
    let mut failed: Vec<Option<Error>> = (0..n).map(|_| None).collect();
    for (i, c) in chains.iter().enumerate() {
        let eps = draw(&mut rngs[i], td);
        match &c.start {
            ChainStart::Full => {
                start[i] = k_max;
                predictions.push(rollout(&c.initial_state, &vec![ActionInput::default(); model.horizon], dt));
                z.push(eps);
            }
            ChainStart::Partial { proposal, step } => {
                let step = (*step).min(k_max);
                start[i] = step;
                predictions.push(proposal.clone());
                if step == k_max {
                    z.push(eps);
                } else {
                    z.push(add_noise(&norm.normalize(&proposal.actions), step, &eps, &model.schedule));
                }
            }
        }
    }

    for k in (1..=k_max).rev() {
        let active: Vec<bool> = (0..n).map(|i| start[i] >= k && failed[i].is_none()).collect();
        let rows: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
        if rows.is_empty() {
            continue;
        }
        let mut tau = Array2::<f32>::zeros((rows.len(), td));
        let mut cp = Array2::<f32>::zeros((rows.len(), ctx_proj.ncols()));
        for (r, &i) in rows.iter().enumerate() {
            for j in 0..td {
                tau[[r, j]] = z[i][j] as f32;
            }
            cp.row_mut(r).assign(&ctx_proj.row(i));
        }
        let step_proj: Array1<f32> = model.project_step(k);
        let out = model.predict_projected(&tau, &cp, &step_proj);

        let mut clean: Vec<Vec<f64>> = vec![Vec::new(); n];
        for (r, &i) in rows.iter().enumerate() {
            let row: Vec<f64> = out.row(r).iter().map(|&v| v as f64).collect();
            if row.iter().any(|v| !v.is_finite()) {
                failed[i] = Some(Error::NonFinite(format!("denoiser output at step {k}")));
                continue;
            }
            predictions[i] = rollout(&chains[i].initial_state, &norm.denormalize(&row), dt);
            clean[i] = row;
        }
        let active: Vec<bool> = (0..n).map(|i| active[i] && failed[i].is_none()).collect();

        let var = model.schedule.posterior_variance(k);
        if let Some(h) = hook.as_deref_mut() {
            let grads = h.gradients(k, &predictions, &active);
            for (i, g) in grads.into_iter().enumerate() {
                let Some(g) = g else { continue };
                if !active[i] || g.iter().all(|a| a.accel == 0.0 && a.yaw_rate == 0.0) {
                    continue;
                }
                for (t, a) in g.iter().enumerate() {
                    clean[i][2 * t] -= var * norm.std[0] * a.accel;
                    clean[i][2 * t + 1] -= var * norm.std[1] * a.yaw_rate;
                }
            }
        }

        for &i in &rows {
            if !active[i] {
                continue;
            }
            let mut mu = posterior_mean(&z[i], &clean[i], k, &model.schedule).expect("k in range");
            if k > 1 {
                let sd = var.sqrt();
                let noise = draw(&mut rngs[i], td);
                for (m, e) in mu.iter_mut().zip(noise) {
                    *m += sd * e;
                }
            }
            z[i] = mu;
        }
    }

    chains
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if let Some(e) = failed[i].take() {
                return Err(e);
            }
            if let ChainStart::Partial { proposal, step: 0 } = &c.start {
                return Ok(proposal.clone());
            }
            let traj = rollout(&c.initial_state, &norm.denormalize(&z[i]), dt);
            if traj.is_finite() {
                Ok(traj)
            } else {
                Err(Error::NonFinite("sampled trajectory".into()))
            }
        })
        .collect()
}

/// Draws `num_samples` trajectories for one agent from pure noise.
pub fn sample(
    model: &DenoiserModel,
    context: &DecisionContext,
    num_samples: usize,
    seed: u64,
    hook: Option<&mut dyn GuidanceHook>,
) -> Vec<Result<Trajectory>> {
    let features = context.features();
    let chains: Vec<Chain> = (0..num_samples)
        .map(|m| Chain {
            context: features.clone(),
            initial_state: context.origin,
            start: ChainStart::Full,
            stream: m as u64,
        })
        .collect();
    run_chains(model, &chains, seed, hook)
}

/// Diffusion step at which a proposal enters the reverse chain.
pub fn partial_start_step(gamma: f64, steps: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("partial diffusion ratio {gamma} outside [0, 1]")));
    }
    Ok((gamma * steps as f64).round() as usize)
}

/// Noises `proposal` to step `round(gamma K)` and denoises from there.
pub fn partial_sample(
    model: &DenoiserModel,
    context: &DecisionContext,
    proposal: &Trajectory,
    gamma: f64,
    num_samples: usize,
    seed: u64,
    hook: Option<&mut dyn GuidanceHook>,
) -> Result<Vec<Result<Trajectory>>> {
    let step = partial_start_step(gamma, model.schedule.steps())?;
    if proposal.horizon() != model.horizon {
        return Err(Error::InvalidArgument(format!(
            "proposal horizon {} does not match model horizon {}",
            proposal.horizon(),
            model.horizon
        )));
    }
    let features = context.features();
    let chains: Vec<Chain> = (0..num_samples)
        .map(|m| Chain {
            context: features.clone(),
            initial_state: context.origin,
            start: ChainStart::Partial {
                proposal: proposal.clone(),
                step,
            },
            stream: m as u64,
        })
        .collect();
    Ok(run_chains(model, &chains, seed, hook))
}
