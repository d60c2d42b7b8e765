//! Unicycle transition, horizon rollout, inverse dynamics, and exact
//! reverse-mode gradients of state-sequence costs with respect to actions.

use serde::{Deserialize, Serialize};

use crate::scene::{wrap_angle, ActionInput, AgentState};
use crate::{Error, Result};

pub const V_MAX: f64 = 30.0;
pub const ACCEL_MAX: f64 = 8.0;
pub const YAW_RATE_MAX: f64 = 1.5;
pub const DT: f64 = 0.1;

pub fn clamp_action(a: ActionInput) -> ActionInput {
    ActionInput::new(
        a.accel.clamp(-ACCEL_MAX, ACCEL_MAX),
        a.yaw_rate.clamp(-YAW_RATE_MAX, YAW_RATE_MAX),
    )
}

/// One forward-Euler unicycle step. Position advances with the pre-update
/// speed and heading; the action is clamped to the actuator limits.
pub fn step(s: &AgentState, a: ActionInput, dt: f64) -> AgentState {
    let a = clamp_action(a);
    let (sin, cos) = s.theta.sin_cos();
    AgentState {
        x: s.x + s.v * cos * dt,
        y: s.y + s.v * sin * dt,
        v: (s.v + a.accel * dt).clamp(0.0, V_MAX),
        theta: wrap_angle(s.theta + a.yaw_rate * dt),
    }
}

/// Action sequence plus the states it produces; `states[t]` follows `actions[t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial_state: AgentState,
    pub actions: Vec<ActionInput>,
    pub states: Vec<AgentState>,
    pub dt: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    /// Re-derives states from actions and checks they match bit-exactly.
    pub fn is_consistent(&self) -> bool {
        rollout(&self.initial_state, &self.actions, self.dt).states == self.states
    }

    pub fn is_finite(&self) -> bool {
        self.actions.iter().all(ActionInput::is_finite) && self.states.iter().all(AgentState::is_finite)
    }
}

/// Iterates [`step`] over `actions`. Stored actions are the clamped ones.
pub fn rollout(s0: &AgentState, actions: &[ActionInput], dt: f64) -> Trajectory {
    let actions: Vec<ActionInput> = actions.iter().copied().map(clamp_action).collect();
    let mut states = Vec::with_capacity(actions.len());
    let mut s = *s0;
    for a in &actions {
        s = step(&s, *a, dt);
        states.push(s);
    }
    Trajectory {
        initial_state: *s0,
        actions,
        states,
        dt,
    }
}

/// Actions that map each state onto the next: finite-difference speed and
/// wrapped heading change.
pub fn inverse_dynamics(states: &[AgentState], dt: f64) -> Vec<ActionInput> {
    states
        .windows(2)
        .map(|w| ActionInput::new((w[1].v - w[0].v) / dt, wrap_angle(w[1].theta - w[0].theta) / dt))
        .collect()
}

/// Partial derivatives of a scalar with respect to one state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateGrad {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub theta: f64,
}

impl StateGrad {
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.v.is_finite() && self.theta.is_finite()
    }

    pub fn scaled(self, k: f64) -> Self {
        Self {
            x: self.x * k,
            y: self.y * k,
            v: self.v * k,
            theta: self.theta * k,
        }
    }
}

impl std::ops::AddAssign for StateGrad {
    fn add_assign(&mut self, o: StateGrad) {
        self.x += o.x;
        self.y += o.y;
        self.v += o.v;
        self.theta += o.theta;
    }
}

/// Gradient of a cost with respect to each action channel.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutGradient {
    pub d_actions: Vec<ActionInput>,
}

/// Pulls state-space partials `d_states[t] = dC/d states[t]` back to the
/// actions by reverse accumulation through the Euler recurrence. Clamped
/// channels (including exact clamp boundaries) contribute zero.
pub fn pullback(s0: &AgentState, actions: &[ActionInput], dt: f64, d_states: &[StateGrad]) -> Result<RolloutGradient> {
    assert_eq!(actions.len(), d_states.len(), "gradient length must match horizon");
    if let Some(t) = d_states.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("cost partials at step {t}")));
    }
    let n = actions.len();
    // Pre-step states: pre[t] is the state that actions[t] is applied to.
    let mut pre = Vec::with_capacity(n);
    let mut s = *s0;
    for a in actions {
        pre.push(s);
        s = step(&s, *a, dt);
    }
    let mut d_actions = vec![ActionInput::default(); n];
    let mut lam = StateGrad::default();
    for t in (0..n).rev() {
        lam += d_states[t];
        let p = &pre[t];
        let a = actions[t];
        let raw_v = p.v + a.accel * dt;
        let v_free = raw_v > 0.0 && raw_v < V_MAX;
        let accel_free = a.accel.abs() < ACCEL_MAX;
        let yaw_free = a.yaw_rate.abs() < YAW_RATE_MAX;
        d_actions[t] = ActionInput::new(
            if v_free && accel_free { lam.v * dt } else { 0.0 },
            if yaw_free { lam.theta * dt } else { 0.0 },
        );
        let (sin, cos) = p.theta.sin_cos();
        lam = StateGrad {
            x: lam.x,
            y: lam.y,
            v: lam.x * cos * dt + lam.y * sin * dt + if v_free { lam.v } else { 0.0 },
            theta: lam.x * (-p.v * sin * dt) + lam.y * (p.v * cos * dt) + lam.theta,
        };
    }
    Ok(RolloutGradient { d_actions })
}

/// Rolls out `actions`, evaluates `cost` on the state sequence, and returns
/// the cost value with its action-space gradient.
pub fn rollout_grad<F>(s0: &AgentState, actions: &[ActionInput], dt: f64, cost: F) -> Result<(f64, RolloutGradient)>
where
    F: FnOnce(&[AgentState]) -> (f64, Vec<StateGrad>),
{
    let traj = rollout(s0, actions, dt);
    let (value, d_states) = cost(&traj.states);
    let grad = pullback(s0, actions, dt, &d_states)?;
    Ok((value, grad))
}
