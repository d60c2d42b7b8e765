//! The closed loop: plan the ego, sample guided futures for every other
//! agent, execute a few steps, detect events, log, repeat.

mod events;
mod log;
mod overrides;

pub use self::log::{AgentInfo, SimLog, StepRecord, Termination, TickRecord, LOG_FORMAT, LOG_VERSION};
pub use events::{collision_event, detect_events, CollisionEvent, CollisionKind, Event, EventTracker, OffroadEvent};
pub use overrides::{apply_param, Overrides, RhoOverride};

use serde::{Deserialize, Serialize};

use crate::diffusion::{partial_start_step, run_chains, Chain, ChainStart, DenoiserModel, GuidanceHook};
use crate::dynamics::{step, Trajectory};
use crate::guidance::{filter_samples, guidance_gradient, select_adversary_weights, total_cost, GuidanceConfig, RhoMode};
use crate::planners;
use crate::proposals::{find_conflict, proposal_path, proposal_set};
use crate::scene::{ActionInput, AgentState, DecisionContext, Role, Route, ScenarioSpec, T_HIST};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    /// Plan length in steps.
    pub horizon: usize,
    /// Executed steps between replanning ticks.
    pub replan_stride: usize,
    /// Run length (s); the scenario's horizon when absent.
    pub max_duration: Option<f64>,
    /// Samples per agent per tick.
    pub num_samples: usize,
    /// Seed; the scenario's seed when absent.
    pub seed: Option<u64>,
    /// Seed partial diffusion from proposals where agents configure them.
    pub use_proposals: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: crate::dynamics::DT,
            horizon: crate::diffusion::HORIZON,
            replan_stride: 5,
            max_duration: None,
            num_samples: 20,
            seed: None,
            use_proposals: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || self.horizon == 0 || self.replan_stride == 0 || self.num_samples == 0 {
            return Err(Error::InvalidConfig("dt, horizon, replan_stride and num_samples must be positive".into()));
        }
        if self.replan_stride > self.horizon {
            return Err(Error::InvalidConfig("replan_stride must not exceed the horizon".into()));
        }
        if let Some(d) = self.max_duration {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::InvalidConfig("max_duration must be positive".into()));
            }
        }
        Ok(())
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Joint-scene guidance: chain `slot * m_count + m` belongs to agent `slot`
/// and sample `m`; the ego slot holds the ego future prediction.
struct SceneHook<'a> {
    m_count: usize,
    ego: usize,
    routes: Vec<&'a Route>,
    cfgs: Vec<GuidanceConfig>,
    rho: Vec<f64>,
}

impl GuidanceHook for SceneHook<'_> {
    fn gradients(&mut self, _k: usize, predictions: &[Trajectory], active: &[bool]) -> Vec<Option<Vec<ActionInput>>> {
        let n = self.routes.len();
        let m_count = self.m_count;
        (0..predictions.len())
            .map(|c| {
                if !active[c] {
                    return None;
                }
                let (slot, m) = (c / m_count, c % m_count);
                let scene: Vec<&[AgentState]> = (0..n).map(|j| predictions[j * m_count + m].states.as_slice()).collect();
                guidance_gradient(&predictions[c], &scene, self.ego, slot, self.routes[slot], &self.cfgs[slot], self.rho[slot])
                    .ok()
                    .map(|(_, g)| g)
            })
            .collect()
    }
}

/// Adversarial weight of every agent from current distances to the ego.
/// The ego gets 0.
fn adversary_weights(spec: &ScenarioSpec, states: &[AgentState]) -> Vec<f64> {
    let ego = spec.ego_index();
    let mut rho = vec![0.0; states.len()];
    let dynamic: Vec<usize> = (0..states.len())
        .filter(|&i| i != ego && spec.agents[i].params.guidance.rho_mode == RhoMode::Dynamic)
        .collect();
    if !dynamic.is_empty() {
        let d: Vec<f64> = dynamic
            .iter()
            .map(|&i| states[i].position().distance(states[ego].position()))
            .collect();
        for (w, &i) in select_adversary_weights(&d, RhoMode::Dynamic, &[]).into_iter().zip(&dynamic) {
            rho[i] = w;
        }
    }
    for (i, a) in spec.agents.iter().enumerate() {
        if i != ego && a.params.guidance.rho_mode == RhoMode::Fixed && a.params.guidance.lists(a.id) {
            rho[i] = 1.0;
        }
    }
    rho
}

/// Runs one closed-loop simulation.
pub fn run(spec: &ScenarioSpec, cfg: &SimConfig, model: &DenoiserModel) -> Result<SimLog> {
    cfg.validate()?;
    spec.validate()?;
    if model.horizon != cfg.horizon || (model.dt - cfg.dt).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "model horizon {} / dt {} do not match the simulation ({}, {})",
            model.horizon, model.dt, cfg.horizon, cfg.dt
        )));
    }
    let n = spec.agents.len();
    let ego = spec.ego_index();
    let m_count = cfg.num_samples;
    let seed = cfg.seed.unwrap_or(spec.seed);
    let duration = cfg.max_duration.unwrap_or(spec.horizon_seconds);
    let max_steps = (duration / cfg.dt).round() as usize;
    let ids: Vec<_> = spec.agents.iter().map(|a| a.id).collect();
    let shapes: Vec<_> = spec.agents.iter().map(|a| a.shape).collect();
    let roles: Vec<_> = spec.agents.iter().map(|a| a.role).collect();

    let initial: Vec<AgentState> = spec.agents.iter().map(|a| a.initial).collect();
    let mut histories: Vec<Vec<AgentState>> = initial.iter().map(|s| vec![*s]).collect();
    let mut log = SimLog {
        scenario: spec.name.clone(),
        seed,
        dt: cfg.dt,
        agents: spec
            .agents
            .iter()
            .map(|a| AgentInfo {
                id: a.id,
                role: a.role,
                shape: a.shape,
            })
            .collect(),
        steps: vec![StepRecord {
            step: 0,
            time: 0.0,
            states: initial.clone(),
            actions: Vec::new(),
        }],
        ticks: Vec::new(),
        events: Vec::new(),
        termination: Termination::MaxDuration,
        message: None,
    };
    let mut tracker = EventTracker::default();
    log.events
        .extend(detect_events(0.0, 0, &initial, &shapes, &roles, &ids, &spec.map, &mut tracker));
    let mut step_idx = 0usize;
    let mut tick = 0u64;

    'outer: while step_idx < max_steps {
        let current: Vec<AgentState> = histories.iter().map(|h| *h.last().unwrap()).collect();
        let hist_refs: Vec<&[AgentState]> = histories.iter().map(|h| h.as_slice()).collect();
        let ego_ctx = DecisionContext::build(ego, &ids, &hist_refs, &shapes, &spec.agents[ego].route);
        let others: Vec<_> = (0..n).filter(|&j| j != ego).map(|j| (current[j], shapes[j])).collect();
        let plan = planners::plan(&spec.planner, &ego_ctx, &spec.agents[ego].route, &others, cfg.horizon, cfg.dt);
        let rho = adversary_weights(spec, &current);

        // Proposals and the path each agent is guided along.
        let mut paths: Vec<Route> = spec.agents.iter().map(|a| a.route.clone()).collect();
        let mut proposals: Vec<Vec<Trajectory>> = vec![Vec::new(); n];
        if cfg.use_proposals {
            // Proposals seed adversarial agents only.
            for i in (0..n).filter(|&i| i != ego && rho[i] > 0.0) {
                let a = &spec.agents[i];
                let Some(pc) = &a.params.proposal else { continue };
                let Some(path) = proposal_path(&spec.map, &a.route, &a.route_lanes, &current[i], pc.lane) else {
                    continue;
                };
                let conflict = find_conflict(
                    &spec.agents[ego].route,
                    &path,
                    &current[ego],
                    &current[i],
                    Some(&plan),
                );
                let set = proposal_set(&current[i], &path, conflict.as_ref(), pc, cfg.horizon, cfg.dt);
                if !set.is_empty() {
                    proposals[i] = set;
                    paths[i] = path;
                }
            }
        }

        // Agents see the path they are guided along.
        let contexts: Vec<DecisionContext> = (0..n)
            .map(|i| if i == ego { ego_ctx.clone() } else { DecisionContext::build(i, &ids, &hist_refs, &shapes, &paths[i]) })
            .collect();
        let mut chains = Vec::with_capacity(n * m_count);
        for (i, ctx) in contexts.iter().enumerate() {
            // A proposal chain sees its path shifted by the proposal's
            // lateral offset, so the denoiser keeps the offset.
            let features: Vec<Vec<f32>> = if proposals[i].is_empty() {
                vec![ctx.features()]
            } else {
                let offsets = &spec.agents[i].params.proposal.as_ref().expect("proposal config").offsets;
                offsets
                    .iter()
                    .map(|&o| {
                        let shifted = paths[i].polyline.offset(o).and_then(|p| Route::new(p.points().to_vec()));
                        match shifted {
                            Ok(r) => DecisionContext::build(i, &ids, &hist_refs, &shapes, &r).features(),
                            Err(_) => ctx.features(),
                        }
                    })
                    .collect()
            };
            let start_step = partial_start_step(spec.agents[i].params.guidance.gamma, model.schedule.steps())?;
            for m in 0..m_count {
                let start = if proposals[i].is_empty() {
                    ChainStart::Full
                } else {
                    ChainStart::Partial {
                        proposal: proposals[i][m % proposals[i].len()].clone(),
                        step: start_step,
                    }
                };
                chains.push(Chain {
                    context: features[m % features.len()].clone(),
                    initial_state: current[i],
                    start,
                    stream: (i * m_count + m) as u64,
                });
            }
        }
        let cfgs: Vec<GuidanceConfig> = spec.agents.iter().map(|a| a.params.guidance.clone()).collect();
        let mut hook = SceneHook {
            m_count,
            ego,
            routes: paths.iter().collect(),
            cfgs: cfgs.clone(),
            rho: rho.clone(),
        };
        let results = run_chains(model, &chains, splitmix(seed ^ splitmix(tick)), Some(&mut hook));
        let mut samples = Vec::with_capacity(results.len());
        for (c, r) in results.into_iter().enumerate() {
            match r {
                Ok(t) => samples.push(t),
                Err(e) => {
                    log.termination = Termination::Aborted;
                    log.message = Some(format!("agent {} sample {}: {e}", ids[c / m_count], c % m_count));
                    break 'outer;
                }
            }
        }

        let mut record = TickRecord {
            step: step_idx,
            time: step_idx as f64 * cfg.dt,
            plans: Vec::with_capacity(n),
            sample_costs: vec![Vec::new(); n],
            chosen: vec![None; n],
            rho: rho.clone(),
            proposal: vec![None; n],
            diagnostics: Vec::new(),
        };
        for i in 0..n {
            if i == ego {
                record.plans.push(plan.clone());
                continue;
            }
            let terms: Vec<_> = (0..m_count)
                .map(|m| {
                    let scene: Vec<&[AgentState]> = (0..n).map(|j| samples[j * m_count + m].states.as_slice()).collect();
                    total_cost(&scene, ego, i, &paths[i], &cfgs[i], rho[i])
                })
                .collect();
            // Only agents with adversarial weight rank samples adversarially.
            let role = if rho[i] > 0.0 { Role::Adversary } else { Role::Reactive };
            let pick = filter_samples(&terms, role);
            record.sample_costs[i] = terms
                .iter()
                .map(|t| if role == Role::Adversary { t.adv } else { t.total })
                .collect();
            record.chosen[i] = Some(pick);
            if !proposals[i].is_empty() {
                record.proposal[i] = Some(pick % proposals[i].len());
            }
            record.plans.push(samples[i * m_count + pick].clone());
        }
        let executed = cfg.replan_stride.min(max_steps - step_idx);
        let plans = record.plans.clone();
        log.ticks.push(record);
        tick += 1;

        for s in 0..executed {
            let actions: Vec<ActionInput> = plans.iter().map(|p| p.actions[s]).collect();
            let states: Vec<AgentState> = histories
                .iter()
                .zip(&actions)
                .map(|(h, a)| step(h.last().unwrap(), *a, cfg.dt))
                .collect();
            step_idx += 1;
            let time = step_idx as f64 * cfg.dt;
            for (h, s) in histories.iter_mut().zip(&states) {
                h.push(*s);
                if h.len() > T_HIST + 1 {
                    h.remove(0);
                }
            }
            let ev = detect_events(time, step_idx, &states, &shapes, &roles, &ids, &spec.map, &mut tracker);
            let stop = ev
                .iter()
                .any(|e| matches!(e, Event::Collision(c) if c.kind == CollisionKind::EgoAdversary));
            log.events.extend(ev);
            log.steps.push(StepRecord {
                step: step_idx,
                time,
                states,
                actions,
            });
            if stop {
                log.termination = Termination::EgoAdversaryCollision;
                break 'outer;
            }
        }
    }
    Ok(log)
}

/// Runs every (scenario, seed) pair in parallel; results are in
/// scenario-major order and independent of thread scheduling.
pub fn run_batch(specs: &[ScenarioSpec], seeds: &[u64], cfg: &SimConfig, model: &DenoiserModel) -> Vec<Result<SimLog>> {
    use rayon::prelude::*;
    let jobs: Vec<(usize, u64)> = (0..specs.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
    jobs.par_iter()
        .map(|&(i, seed)| {
            let cfg = SimConfig {
                seed: Some(seed),
                ..cfg.clone()
            };
            run(&specs[i], &cfg, model)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::untrained_model;
    use crate::planners::{PlannerConfig, PlannerKind};
    use crate::scene::{AgentParams, AgentSpec, Lane, LaneMap, Point, Polyline, VehicleShape};

    fn straight_map() -> LaneMap {
        LaneMap::new(vec![Lane {
            id: 1,
            centerline: Polyline::new(vec![Point::new(-50.0, 0.0), Point::new(500.0, 0.0)]).unwrap(),
            width: 3.5,
            successors: vec![],
            left: None,
            right: None,
        }])
        .unwrap()
    }

    fn agent(id: u32, role: Role, s: AgentState, map: &LaneMap) -> AgentSpec {
        AgentSpec {
            id,
            role,
            initial: s,
            shape: VehicleShape::car(),
            route_lanes: vec![1],
            route: Route::from_lanes(map, &[1]).unwrap(),
            params: AgentParams::default(),
        }
    }

    fn cv_planner() -> PlannerConfig {
        PlannerConfig {
            kind: PlannerKind::ConstantVelocity,
            ..Default::default()
        }
    }

    fn small_cfg() -> SimConfig {
        SimConfig {
            horizon: 8,
            replan_stride: 5,
            num_samples: 2,
            max_duration: Some(2.0),
            ..Default::default()
        }
    }

    #[test]
    fn lone_ego_constant_velocity() {
        let map = straight_map();
        let spec = ScenarioSpec::new(
            "lone",
            map.clone(),
            vec![agent(0, Role::Ego, AgentState::new(0.0, 0.0, 5.0, 0.0), &map)],
            2.0,
            3,
            cv_planner(),
        )
        .unwrap();
        let model = untrained_model(8, 10, 1);
        let log = run(&spec, &small_cfg(), &model).unwrap();
        assert!(log.events.is_empty());
        assert_eq!(log.termination, Termination::MaxDuration);
        assert_eq!(log.steps.len(), 21);
        assert!((log.steps.last().unwrap().states[0].x - 10.0).abs() < 1e-6);
        assert!(log.is_consistent());
        // Exactly one tick per stride.
        let ticks: Vec<usize> = log.ticks.iter().map(|t| t.step).collect();
        assert_eq!(ticks, vec![0, 5, 10, 15]);
    }

    #[test]
    fn deterministic_and_round_trips() {
        let map = straight_map();
        let spec = ScenarioSpec::new(
            "pair",
            map.clone(),
            vec![
                agent(0, Role::Ego, AgentState::new(0.0, 0.0, 5.0, 0.0), &map),
                agent(1, Role::Reactive, AgentState::new(30.0, 0.0, 4.0, 0.0), &map),
            ],
            2.0,
            3,
            cv_planner(),
        )
        .unwrap();
        let model = untrained_model(8, 10, 2);
        let a = run(&spec, &small_cfg(), &model).unwrap();
        let b = run(&spec, &small_cfg(), &model).unwrap();
        assert_eq!(a, b);
        assert!(a.is_consistent());
        let mut buf = Vec::new();
        a.write_jsonl(&mut buf).unwrap();
        let back = SimLog::read_jsonl(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn rejects_mismatched_model() {
        let map = straight_map();
        let spec = ScenarioSpec::new(
            "lone",
            map.clone(),
            vec![agent(0, Role::Ego, AgentState::new(0.0, 0.0, 5.0, 0.0), &map)],
            2.0,
            3,
            cv_planner(),
        )
        .unwrap();
        let model = untrained_model(16, 10, 1);
        assert!(run(&spec, &small_cfg(), &model).is_err());
        let bad = SimConfig {
            replan_stride: 9,
            ..small_cfg()
        };
        assert!(bad.validate().is_err());
    }
}
