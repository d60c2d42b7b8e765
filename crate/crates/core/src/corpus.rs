//! Synthetic naturalistic driving data: IDM car following with pure-pursuit
//! steering, randomized desired speeds, acceleration noise, lateral drift
//! and occasional lane changes on the library maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::diffusion::TrainingSample;
use crate::dynamics::{step, DT};
use crate::library::{curved_map, intersection_map, multilane_map};
use crate::metrics::{DrivingProfileHistogram, ProfileMode, ProfileSamples};
use crate::planners::{find_leader, idm_accel, pursuit_yaw, IdmParams};
use crate::scene::{ActionInput, AgentId, AgentState, DecisionContext, LaneId, LaneMap, Polyline, Route, VehicleShape, T_HIST};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    /// Episodes, cycling through the intersection, multilane and curved maps.
    pub episodes: usize,
    /// Episode length (s).
    pub duration: f64,
    /// Steps between extracted windows.
    pub stride: usize,
    /// Window length in steps.
    pub horizon: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            episodes: 60,
            duration: 20.0,
            stride: 5,
            horizon: crate::diffusion::HORIZON,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub samples: Vec<TrainingSample>,
    /// Driving profile of every executed episode track.
    pub reference: DrivingProfileHistogram,
}

const LANE_CHANGE_RATE: f64 = 0.003;
const NOISE_DECAY: f64 = 0.9;
const NOISE_SCALE: f64 = 0.15;
const SPAWN_SPACING: f64 = 14.0;
/// Look-ahead (s) used to yield to crossing traffic.
const YIELD_LOOKAHEAD: f64 = 1.5;

struct Driver {
    lane: LaneId,
    route: Route,
    path: Polyline,
    idm: IdmParams,
    noise: f64,
    lateral: f64,
    next_drift: usize,
}

impl Driver {
    fn retarget(&mut self, lateral: f64) {
        self.lateral = lateral;
        self.path = if lateral.abs() < 1e-9 {
            self.route.polyline.clone()
        } else {
            self.route.polyline.offset(lateral).unwrap_or_else(|_| self.route.polyline.clone())
        };
    }
}

fn spawn_arc(map_kind: usize, rng: &mut ChaCha8Rng) -> f64 {
    match map_kind {
        // Keep clear of the junction box centered at 200 m.
        0 => loop {
            let s = rng.random_range(110.0..270.0);
            if !(185.0..215.0).contains(&s) {
                break s;
            }
        },
        1 => rng.random_range(40.0..220.0),
        _ => rng.random_range(0.0..150.0),
    }
}

fn episode(map: &LaneMap, map_kind: usize, cfg: &CorpusConfig, rng: &mut ChaCha8Rng, out: &mut Corpus, profile: &mut ProfileSamples) -> Result<()> {
    let lanes: Vec<LaneId> = map.lanes().iter().map(|l| l.id).collect();
    let n_target = rng.random_range(3..=6usize);
    let mut drivers = Vec::new();
    let mut states: Vec<AgentState> = Vec::new();
    for _ in 0..50 {
        if drivers.len() == n_target {
            break;
        }
        let lane = lanes[rng.random_range(0..lanes.len())];
        let route = Route::from_lanes(map, &[lane])?;
        let arc = spawn_arc(map_kind, rng);
        let pos = route.polyline.point_at(arc);
        if states.iter().any(|s| s.position().distance(pos) < SPAWN_SPACING) {
            continue;
        }
        let v = rng.random_range(3.0..12.0);
        states.push(AgentState::new(pos.x, pos.y, v, route.polyline.heading_at(arc)));
        let idm = IdmParams {
            v0: rng.random_range(6.0..14.0),
            t_headway: rng.random_range(1.0..2.0),
            a_max: rng.random_range(1.5..3.0),
            ..Default::default()
        };
        let mut d = Driver {
            lane,
            path: route.polyline.clone(),
            route,
            idm,
            noise: 0.0,
            lateral: 0.0,
            next_drift: 0,
        };
        d.retarget(rng.random_range(-0.4..0.4));
        d.next_drift = rng.random_range(40..100);
        drivers.push(d);
    }
    let n = drivers.len();
    let ids: Vec<AgentId> = (0..n as AgentId).collect();
    let shapes = vec![VehicleShape::car(); n];
    let steps = (cfg.duration / DT).round() as usize;

    // tracks[i][t]: state at step t; lanes_at[t][i]: route lane at step t.
    let mut tracks: Vec<Vec<AgentState>> = states.iter().map(|s| vec![*s]).collect();
    let mut actions: Vec<Vec<ActionInput>> = vec![Vec::new(); n];
    let mut lanes_at: Vec<Vec<LaneId>> = Vec::with_capacity(steps + 1);
    for t in 0..steps {
        lanes_at.push(drivers.iter().map(|d| d.lane).collect());
        let cur: Vec<AgentState> = tracks.iter().map(|tr| tr[t]).collect();
        for i in 0..n {
            let others: Vec<(AgentState, VehicleShape)> =
                (0..n).filter(|&j| j != i).map(|j| (cur[j], shapes[j])).collect();
            let d = &mut drivers[i];
            if t >= d.next_drift {
                d.retarget(rng.random_range(-0.4..0.4));
                d.next_drift = t + rng.random_range(40..100);
            }
            if rng.random::<f64>() < LANE_CHANGE_RATE {
                let lane = map.lane(d.lane).expect("driver lanes exist");
                let choices: Vec<LaneId> = [lane.left, lane.right].into_iter().flatten().collect();
                if !choices.is_empty() {
                    let target = choices[rng.random_range(0..choices.len())];
                    let route = Route::from_lanes(map, &[target])?;
                    let me = route.project(cur[i].position()).arc_length;
                    let clear = others.iter().all(|(o, _)| {
                        let p = route.project(o.position());
                        p.normal_offset.abs() > 1.75 || (p.arc_length - me).abs() > 15.0
                    });
                    if clear {
                        d.lane = target;
                        d.route = route;
                        d.retarget(0.0);
                    }
                }
            }
            let gate = d.idm.leader_gate;
            let near = find_leader(&cur[i], &shapes[i], &others, 0.0, &d.route, gate);
            let soon = find_leader(&cur[i], &shapes[i], &others, YIELD_LOOKAHEAD, &d.route, gate)
                .map(|(g, _)| (g, cur[i].v));
            let leader = match (near, soon) {
                (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
                (a, b) => a.or(b),
            };
            let e: f64 = StandardNormal.sample(rng);
            d.noise = NOISE_DECAY * d.noise + NOISE_SCALE * e;
            let accel = (idm_accel(&d.idm, cur[i].v, leader) + d.noise).clamp(-6.0, 3.0);
            let a = ActionInput::new(accel, pursuit_yaw(&cur[i], &d.path));
            let next = step(&cur[i], a, DT);
            actions[i].push(a);
            tracks[i].push(next);
        }
    }
    lanes_at.push(drivers.iter().map(|d| d.lane).collect());

    for i in 0..n {
        profile.push(&tracks[i], &actions[i], DT, ProfileMode::PerStep);
    }
    let mut t0 = T_HIST;
    while t0 + cfg.horizon <= steps {
        let windows: Vec<&[AgentState]> = tracks.iter().map(|tr| &tr[t0 - T_HIST..=t0]).collect();
        for i in 0..n {
            let route = Route::from_lanes(map, &[lanes_at[t0][i]])?;
            let ctx = DecisionContext::build(i, &ids, &windows, &shapes, &route);
            out.samples.push(TrainingSample {
                context: ctx.features(),
                initial_state: tracks[i][t0],
                actions: actions[i][t0..t0 + cfg.horizon].to_vec(),
            });
        }
        t0 += cfg.stride;
    }
    Ok(())
}

/// Generates the training corpus and its reference driving profile.
pub fn generate(cfg: &CorpusConfig) -> Result<Corpus> {
    if cfg.episodes == 0 || cfg.stride == 0 || cfg.horizon == 0 {
        return Err(Error::InvalidConfig("episodes, stride and horizon must be positive".into()));
    }
    if !(cfg.duration / DT >= (cfg.horizon + T_HIST) as f64) {
        return Err(Error::InvalidConfig("episodes are shorter than one training window".into()));
    }
    let maps = [intersection_map(), multilane_map(), curved_map()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut profile = ProfileSamples::default();
    let mut corpus = Corpus {
        samples: Vec::new(),
        reference: DrivingProfileHistogram::from_samples(&profile),
    };
    for e in 0..cfg.episodes {
        let kind = e % maps.len();
        episode(&maps[kind], kind, cfg, &mut rng, &mut corpus, &mut profile)?;
    }
    corpus.reference = DrivingProfileHistogram::from_samples(&profile);
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rollout;
    use crate::scene::CONTEXT_DIM;

    fn small() -> CorpusConfig {
        CorpusConfig {
            episodes: 3,
            duration: 6.0,
            horizon: 16,
            ..Default::default()
        }
    }

    #[test]
    fn windows_are_well_formed() {
        let c = generate(&small()).unwrap();
        assert!(!c.samples.is_empty());
        for s in &c.samples {
            assert_eq!(s.context.len(), CONTEXT_DIM);
            assert_eq!(s.actions.len(), 16);
            assert!(s.context.iter().all(|v| v.is_finite()));
            let t = rollout(&s.initial_state, &s.actions, DT);
            assert!(t.is_finite());
        }
        let sum: f64 = c.reference.lon.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = generate(&CorpusConfig { seed: 1, ..small() }).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn rejects_short_episodes() {
        assert!(generate(&CorpusConfig { duration: 1.0, ..small() }).is_err());
        assert!(generate(&CorpusConfig { episodes: 0, ..small() }).is_err());
    }
}
