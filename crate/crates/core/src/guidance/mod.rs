//! Guidance costs, adversary weighting, clean-guidance perturbation, and
//! sample filtering.

mod config;
mod costs;

pub use config::{GuidanceConfig, RhoMode};
pub use costs::{cost_coll, cost_gauss, cost_route, cost_ttc, cost_v, gauss_pair, ttc_point, ttc_step_value, CostGrad, TtcPoint};

use crate::diffusion::DiffusionSchedule;
use crate::dynamics::{pullback, rollout, StateGrad, Trajectory};
use crate::scene::{ActionInput, AgentState, Role, Route};
use crate::{Error, Result};

/// Candidate futures for every agent; `agents[i][m]` is agent `i`'s sample `m`.
/// Sample `m` across agents forms one joint scene hypothesis.
#[derive(Debug, Clone)]
pub struct SceneSamples {
    pub agents: Vec<Vec<Trajectory>>,
    pub ego: usize,
}

impl SceneSamples {
    pub fn num_samples(&self) -> usize {
        self.agents.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// State sequences of every agent in joint sample `m`.
    pub fn scene(&self, m: usize) -> Vec<&[AgentState]> {
        self.agents.iter().map(|a| a[m].states.as_slice()).collect()
    }
}

/// Adversarial weights for agents at the given distances to the ego.
/// Dynamic mode returns a softmax over `-d`; fixed mode marks `listed` indices.
pub fn select_adversary_weights(distances: &[f64], mode: RhoMode, listed: &[usize]) -> Vec<f64> {
    match mode {
        RhoMode::Fixed => (0..distances.len()).map(|i| if listed.contains(&i) { 1.0 } else { 0.0 }).collect(),
        RhoMode::Dynamic => {
            let dmin = distances.iter().copied().fold(f64::INFINITY, f64::min);
            let e: Vec<f64> = distances.iter().map(|d| (-(d - dmin)).exp()).collect();
            let z: f64 = e.iter().sum();
            e.into_iter().map(|v| v / z).collect()
        }
    }
}

/// Value breakdown of the composite cost for one agent in one scene sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTerms {
    pub coll: f64,
    pub v: f64,
    pub ttc: f64,
    pub route: f64,
    pub gauss: f64,
    /// `w_coll * coll + w_v * v + w_ttc * ttc`, before the adversarial weight.
    pub adv: f64,
    pub rho: f64,
    pub total: f64,
    /// Partials of `total` with respect to the subject's states.
    pub grad: Vec<StateGrad>,
}

/// Composite cost `rho * J_adv + w_route * J_route + w_gauss * J_Gauss` for
/// agent `subject` in the joint scene `scene`. The adversarial block is
/// evaluated against `scene[ego]` and vanishes when `subject == ego`.
pub fn total_cost(
    scene: &[&[AgentState]],
    ego: usize,
    subject: usize,
    route: &Route,
    cfg: &GuidanceConfig,
    rho: f64,
) -> CostTerms {
    let me = scene[subject];
    let n = me.len();
    let mut acc = CostGrad::zeros(n);
    let (mut coll, mut v, mut ttc) = (0.0, 0.0, 0.0);
    let mut adv = 0.0;
    if subject != ego {
        let e = scene[ego];
        let c = cost_coll(e, me);
        let s = cost_v(e, me, cfg.v_diff, cfg.d_col);
        let t = cost_ttc(e, me, cfg.lambda_t, cfg.lambda_d);
        coll = c.value;
        v = s.value;
        ttc = t.value;
        // `cost_coll` is the negated distance sum; descending it would push
        // the pair apart, so the adversarial block uses the distance sum.
        adv = -cfg.w_coll * coll + cfg.w_v * v + cfg.w_ttc * ttc;
        if rho != 0.0 {
            acc.add_scaled(&c, -rho * cfg.w_coll);
            acc.add_scaled(&s, rho * cfg.w_v);
            acc.add_scaled(&t, rho * cfg.w_ttc);
        }
    }
    let r = cost_route(me, route, cfg.d_m);
    acc.add_scaled(&r, cfg.w_route);
    let others: Vec<&[AgentState]> = scene.iter().enumerate().filter(|&(j, _)| j != subject).map(|(_, s)| *s).collect();
    let g = cost_gauss(me, &others, cfg.sigma, cfg.lambda_tangential);
    acc.add_scaled(&g, cfg.w_gauss);
    CostTerms {
        coll,
        v,
        ttc,
        route: r.value,
        gauss: g.value,
        adv,
        rho,
        total: rho * adv + cfg.w_route * r.value + cfg.w_gauss * g.value,
        grad: acc.grad,
    }
}

/// Step-scaled action-space gradient `alpha_step * dJ/da` of the subject's
/// composite cost, where the subject's states in `scene` are `traj.states`.
pub fn guidance_gradient(
    traj: &Trajectory,
    scene: &[&[AgentState]],
    ego: usize,
    subject: usize,
    route: &Route,
    cfg: &GuidanceConfig,
    rho: f64,
) -> Result<(CostTerms, Vec<ActionInput>)> {
    let terms = total_cost(scene, ego, subject, route, cfg, rho);
    let g = pullback(&traj.initial_state, &traj.actions, traj.dt, &terms.grad)?;
    let scaled = g
        .d_actions
        .iter()
        .map(|a| ActionInput::new(cfg.alpha_step * a.accel, cfg.alpha_step * a.yaw_rate))
        .collect();
    Ok((terms, scaled))
}

/// One clean-guidance perturbation of the predicted clean trajectory at
/// reverse step `k`. `action_std` is the per-channel scale of the denoiser's
/// normalized action space, in which the step is taken. Returns `tau0_hat`
/// unchanged when the gradient is non-finite.
#[allow(clippy::too_many_arguments)]
pub fn guided_step(
    tau0_hat: &Trajectory,
    k: usize,
    scene: &[&[AgentState]],
    ego: usize,
    subject: usize,
    route: &Route,
    cfg: &GuidanceConfig,
    rho: f64,
    sched: &DiffusionSchedule,
    action_std: [f64; 2],
) -> Result<Trajectory> {
    if k == 0 || k > sched.steps() {
        return Err(Error::InvalidArgument(format!("step {k} outside 1..={}", sched.steps())));
    }
    let mut scene = scene.to_vec();
    scene[subject] = &tau0_hat.states;
    let grad = match guidance_gradient(tau0_hat, &scene, ego, subject, route, cfg, rho) {
        Ok((_, g)) if g.iter().all(ActionInput::is_finite) => g,
        Ok(_) | Err(_) => {
            log::warn!("non-finite guidance gradient at step {k}; perturbation skipped");
            return Ok(tau0_hat.clone());
        }
    };
    let var = sched.posterior_variance(k);
    let [sa, sy] = action_std;
    let actions: Vec<ActionInput> = tau0_hat
        .actions
        .iter()
        .zip(&grad)
        .map(|(a, g)| ActionInput::new(a.accel - var * sa * sa * g.accel, a.yaw_rate - var * sy * sy * g.yaw_rate))
        .collect();
    Ok(rollout(&tau0_hat.initial_state, &actions, tau0_hat.dt))
}

/// Index of the preferred sample: the lowest adversarial block for
/// adversaries, the lowest total cost otherwise. Non-finite costs rank last;
/// ties go to the lowest index.
pub fn filter_samples(costs: &[CostTerms], role: Role) -> usize {
    assert!(!costs.is_empty(), "filter_samples needs at least one sample");
    let key = |c: &CostTerms| {
        let v = if role == Role::Adversary { c.adv } else { c.total };
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    argmin(costs.iter().map(key))
}

/// First index of the minimum; NaN never wins.
pub fn argmin(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}
