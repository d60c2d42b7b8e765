//! Ego planners: IDM car following, lane-graph candidate search, and a
//! constant-velocity baseline. Each emits a rolled-out plan of `horizon` steps.

use serde::{Deserialize, Serialize};

use crate::dynamics::{rollout, step, Trajectory, ACCEL_MAX, YAW_RATE_MAX};
use crate::scene::{wrap_angle, ActionInput, AgentState, DecisionContext, Point, Polyline, Route, VehicleShape};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    #[default]
    Idm,
    LaneGraph,
    ConstantVelocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdmParams {
    pub v0: f64,
    pub t_headway: f64,
    pub s0: f64,
    pub a_max: f64,
    pub b_comf: f64,
    pub delta: f64,
    /// Lateral distance from the route within which an agent can lead (m).
    pub leader_gate: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            v0: 10.0,
            t_headway: 1.5,
            s0: 2.0,
            a_max: 2.0,
            b_comf: 2.0,
            delta: 4.0,
            leader_gate: 1.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaneGraphParams {
    pub accels: Vec<f64>,
    pub offsets: Vec<f64>,
    /// Steps of each candidate scored for collisions.
    pub collision_horizon: usize,
    pub collision_weight: f64,
    pub progress_weight: f64,
    /// Speed cap for accelerating candidates (m/s).
    pub v_cap: f64,
    /// Inflation of the vehicle disks (m).
    pub inflation: f64,
}

impl Default for LaneGraphParams {
    fn default() -> Self {
        Self {
            accels: vec![-4.0, -2.0, 0.0, 1.0, 2.0],
            offsets: vec![-2.0, 0.0, 2.0],
            collision_horizon: 32,
            collision_weight: 10.0,
            progress_weight: 0.1,
            v_cap: 10.0,
            inflation: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub kind: PlannerKind,
    pub idm: IdmParams,
    pub lane_graph: LaneGraphParams,
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let i = &self.idm;
        for (name, v) in [
            ("v0", i.v0),
            ("t_headway", i.t_headway),
            ("s0", i.s0),
            ("a_max", i.a_max),
            ("b_comf", i.b_comf),
            ("delta", i.delta),
            ("leader_gate", i.leader_gate),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("IDM {name} must be positive, got {v}")));
            }
        }
        let g = &self.lane_graph;
        if g.accels.is_empty() || g.offsets.is_empty() {
            return Err(Error::InvalidConfig("lane-graph candidate sets must be nonempty".into()));
        }
        if g.accels.iter().chain(&g.offsets).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("lane-graph candidates must be finite".into()));
        }
        if g.collision_horizon == 0 || !(g.v_cap > 0.0) || g.collision_weight < 0.0 || g.progress_weight < 0.0 {
            return Err(Error::InvalidConfig("lane-graph weights, horizon and speed cap must be positive".into()));
        }
        Ok(())
    }
}

/// Yaw rate steering `s` toward the point `lookahead` meters ahead of its
/// projection on `path`.
pub(crate) fn pursuit_yaw(s: &AgentState, path: &Polyline) -> f64 {
    let lookahead = (s.v * 1.0).max(5.0);
    let arc = path.project(s.position()).arc_length + lookahead;
    let target = path.point_at(arc);
    let alpha = wrap_angle((target - s.position()).heading() - s.theta);
    let ld = target.distance(s.position()).max(1e-3);
    (2.0 * s.v.max(0.5) * alpha.sin() / ld).clamp(-YAW_RATE_MAX, YAW_RATE_MAX)
}

/// IDM acceleration for speed `v` behind a leader at bumper gap `gap` with
/// closing speed `dv`; `None` for free road.
pub fn idm_accel(p: &IdmParams, v: f64, leader: Option<(f64, f64)>) -> f64 {
    let free = 1.0 - (v / p.v0).powf(p.delta);
    let interaction = match leader {
        Some((gap, dv)) => {
            let s_star = (p.s0 + v * p.t_headway + v * dv / (2.0 * (p.a_max * p.b_comf).sqrt())).max(0.0);
            (s_star / gap.max(1e-3)).powi(2)
        }
        None => 0.0,
    };
    let bound = p.a_max.max(p.b_comf);
    (p.a_max * (free - interaction)).clamp(-bound, bound)
}

/// Leader among `others` (world state, shape) at time `t` under constant
/// velocity: nearest ahead along `route` within the lateral gate. Returns
/// bumper gap and closing speed.
pub(crate) fn find_leader(
    ego: &AgentState,
    shape: &VehicleShape,
    others: &[(AgentState, VehicleShape)],
    t: f64,
    route: &Route,
    gate: f64,
) -> Option<(f64, f64)> {
    let me = route.project(ego.position());
    let mut best: Option<(f64, f64)> = None;
    for (o, os) in others {
        let p = o.position() + o.velocity() * t;
        let pr = route.project(p);
        let ahead = pr.arc_length - me.arc_length;
        if ahead <= 0.0 || pr.normal_offset.abs() > gate {
            continue;
        }
        let gap = ahead - 0.5 * (shape.length + os.length);
        let v_along = o.v * wrap_angle(o.theta - pr.tangent_heading).cos();
        if best.is_none_or(|(g, _)| gap < g) {
            best = Some((gap, ego.v - v_along));
        }
    }
    best
}

fn neighbors_of(ctx: &DecisionContext) -> Vec<(AgentState, VehicleShape)> {
    ctx.neighbors.iter().flatten().map(|n| (n.world, n.shape)).collect()
}

/// IDM longitudinal control with pure-pursuit steering along the route.
/// Neighbors from the context are propagated at constant velocity.
pub fn plan_idm(ctx: &DecisionContext, route: &Route, cfg: &IdmParams, horizon: usize, dt: f64) -> Trajectory {
    let others = neighbors_of(ctx);
    let mut s = ctx.origin;
    let mut actions = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let leader = find_leader(&s, &ctx.shape, &others, t as f64 * dt, route, cfg.leader_gate);
        let a = ActionInput::new(idm_accel(cfg, s.v, leader), pursuit_yaw(&s, &route.polyline));
        actions.push(a);
        s = step(&s, a, dt);
    }
    rollout(&ctx.origin, &actions, dt)
}

/// A lane-graph candidate: constant acceleration toward a lateral offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub accel: f64,
    pub offset: f64,
    pub plan: Trajectory,
}

/// Enumerates candidates in tie-break order: ascending accel, then
/// ascending |offset| (negative first on equal magnitude).
pub fn lane_graph_candidates(
    origin: &AgentState,
    route: &Route,
    cfg: &LaneGraphParams,
    horizon: usize,
    dt: f64,
) -> Vec<Candidate> {
    let mut accels = cfg.accels.clone();
    accels.sort_by(f64::total_cmp);
    let mut offsets = cfg.offsets.clone();
    offsets.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    let mut out = Vec::with_capacity(accels.len() * offsets.len());
    for &accel in &accels {
        for &offset in &offsets {
            let path = if offset == 0.0 {
                route.polyline.clone()
            } else {
                route.polyline.offset(offset).unwrap_or_else(|_| route.polyline.clone())
            };
            let mut s = *origin;
            let mut actions = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                let mut a = accel.clamp(-ACCEL_MAX, ACCEL_MAX);
                if a > 0.0 {
                    a = a.min(((cfg.v_cap - s.v) / dt).max(0.0));
                }
                let act = ActionInput::new(a, pursuit_yaw(&s, &path));
                actions.push(act);
                s = step(&s, act, dt);
            }
            out.push(Candidate {
                accel,
                offset,
                plan: rollout(origin, &actions, dt),
            });
        }
    }
    out
}

/// Disk centers covering a vehicle footprint (front, middle, rear).
fn disks(s: &AgentState, shape: &VehicleShape) -> [Point; 3] {
    let h = Point::from_heading(s.theta) * (0.5 * (shape.length - shape.width).max(0.0));
    let c = s.position();
    [c + h, c, c - h]
}

/// Candidate score: weighted disk overlap with constant-velocity neighbors
/// minus the route-progress bonus.
pub fn score_candidate(
    plan: &Trajectory,
    shape: &VehicleShape,
    route: &Route,
    others: &[(AgentState, VehicleShape)],
    cfg: &LaneGraphParams,
) -> f64 {
    let mut overlap = 0.0;
    let r_me = 0.5 * shape.width + cfg.inflation;
    for (t, s) in plan.states.iter().enumerate().take(cfg.collision_horizon) {
        let time = (t + 1) as f64 * plan.dt;
        let mine = disks(s, shape);
        for (o, os) in others {
            let p = o.position() + o.velocity() * time;
            let moved = AgentState::new(p.x, p.y, o.v, o.theta);
            let r = r_me + 0.5 * os.width + cfg.inflation;
            for a in &mine {
                for b in &disks(&moved, os) {
                    overlap += (r - a.distance(*b)).max(0.0);
                }
            }
        }
    }
    let start = route.project(plan.initial_state.position()).arc_length;
    let end = plan.states.last().map_or(start, |s| route.project(s.position()).arc_length);
    cfg.collision_weight * overlap - cfg.progress_weight * (end - start)
}

/// Lowest-scoring candidate; ties keep the earliest in enumeration order.
pub fn plan_lane_graph(
    ctx: &DecisionContext,
    route: &Route,
    others: &[(AgentState, VehicleShape)],
    cfg: &LaneGraphParams,
    horizon: usize,
    dt: f64,
) -> Trajectory {
    let mut best: Option<(f64, Trajectory)> = None;
    for c in lane_graph_candidates(&ctx.origin, route, cfg, horizon, dt) {
        let score = score_candidate(&c.plan, &ctx.shape, route, others, cfg);
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, c.plan));
        }
    }
    best.expect("candidate sets are nonempty").1
}

/// Zero actions: hold speed and heading.
pub fn plan_constant_velocity(ctx: &DecisionContext, horizon: usize, dt: f64) -> Trajectory {
    rollout(&ctx.origin, &vec![ActionInput::default(); horizon], dt)
}

/// Dispatches on the configured planner kind.
pub fn plan(
    cfg: &PlannerConfig,
    ctx: &DecisionContext,
    route: &Route,
    others: &[(AgentState, VehicleShape)],
    horizon: usize,
    dt: f64,
) -> Trajectory {
    match cfg.kind {
        PlannerKind::Idm => plan_idm(ctx, route, &cfg.idm, horizon, dt),
        PlannerKind::LaneGraph => plan_lane_graph(ctx, route, others, &cfg.lane_graph, horizon, dt),
        PlannerKind::ConstantVelocity => plan_constant_velocity(ctx, horizon, dt),
    }
}
