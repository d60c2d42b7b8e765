//! Evaluation statistics over simulation logs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::guidance::cost_ttc;
use crate::scene::{wrap_angle, ActionInput, AgentState, Role};
use crate::sim::{CollisionEvent, CollisionKind, SimLog};
use crate::{Error, Result};

pub const NUM_BINS: usize = 41;
pub const ACCEL_RANGE: f64 = 8.0;
pub const JERK_RANGE: f64 = 20.0;

/// Which values enter the driving-profile histograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileMode {
    /// Every step contributes one value per property.
    #[default]
    PerStep,
    /// Each trajectory contributes its mean per property.
    PerTrajectoryMean,
}

/// Per-step longitudinal acceleration, lateral acceleration and jerk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileSamples {
    pub lon: Vec<f64>,
    pub lat: Vec<f64>,
    pub jerk: Vec<f64>,
}

impl ProfileSamples {
    /// Adds one executed sequence: `states[t]` is the state `actions[t]` is
    /// applied to.
    pub fn push(&mut self, states: &[AgentState], actions: &[ActionInput], dt: f64, mode: ProfileMode) {
        let n = actions.len().min(states.len());
        if n == 0 {
            return;
        }
        let lon: Vec<f64> = actions[..n].iter().map(|a| a.accel).collect();
        let lat: Vec<f64> = (0..n).map(|t| states[t].v * actions[t].yaw_rate).collect();
        let jerk: Vec<f64> = lon.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
        match mode {
            ProfileMode::PerStep => {
                self.lon.extend(lon);
                self.lat.extend(lat);
                self.jerk.extend(jerk);
            }
            ProfileMode::PerTrajectoryMean => {
                let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
                self.lon.push(mean(&lon));
                self.lat.push(mean(&lat));
                if !jerk.is_empty() {
                    self.jerk.push(mean(&jerk));
                }
            }
        }
    }

    pub fn push_trajectory(&mut self, t: &Trajectory, mode: ProfileMode) {
        let mut pre = Vec::with_capacity(t.horizon());
        pre.push(t.initial_state);
        pre.extend_from_slice(&t.states[..t.horizon().saturating_sub(1)]);
        self.push(&pre, &t.actions, t.dt, mode);
    }
}

/// Normalized histograms over fixed shared bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingProfileHistogram {
    pub bins: usize,
    pub accel_range: f64,
    pub jerk_range: f64,
    pub lon: Vec<f64>,
    pub lat: Vec<f64>,
    pub jerk: Vec<f64>,
}

/// Normalized counts over `bins` equal bins on `[-range, range]`; values
/// outside fall into the end bins.
pub fn histogram(values: &[f64], bins: usize, range: f64) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    let width = 2.0 * range / bins as f64;
    let mut n = 0usize;
    for &v in values.iter().filter(|v| v.is_finite()) {
        let idx = ((v + range) / width).floor().clamp(0.0, (bins - 1) as f64) as usize;
        h[idx] += 1.0;
        n += 1;
    }
    if n > 0 {
        h.iter_mut().for_each(|c| *c /= n as f64);
    }
    h
}

/// Wasserstein-1 distance between two normalized histograms on the same
/// uniform bins: L1 distance of the CDFs times the bin width.
pub fn wasserstein_hist(a: &[f64], b: &[f64], width: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument("histograms have different bin counts".into()));
    }
    let (mut ca, mut cb, mut acc) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ca += x;
        cb += y;
        acc += (ca - cb).abs();
    }
    Ok(acc * width)
}

impl DrivingProfileHistogram {
    pub fn from_samples(s: &ProfileSamples) -> Self {
        Self {
            bins: NUM_BINS,
            accel_range: ACCEL_RANGE,
            jerk_range: JERK_RANGE,
            lon: histogram(&s.lon, NUM_BINS, ACCEL_RANGE),
            lat: histogram(&s.lat, NUM_BINS, ACCEL_RANGE),
            jerk: histogram(&s.jerk, NUM_BINS, JERK_RANGE),
        }
    }

    pub fn from_trajectories<'a>(trajs: impl IntoIterator<Item = &'a Trajectory>, mode: ProfileMode) -> Self {
        let mut s = ProfileSamples::default();
        for t in trajs {
            s.push_trajectory(t, mode);
        }
        Self::from_samples(&s)
    }

    /// Profiles of every non-ego agent's executed motion.
    pub fn from_logs(logs: &[SimLog], mode: ProfileMode) -> Self {
        let mut s = ProfileSamples::default();
        for log in logs {
            for (i, a) in log.agents.iter().enumerate() {
                if a.role == Role::Ego {
                    continue;
                }
                let track = log.track(i);
                s.push(&track, &log.actions(i), log.dt, mode);
            }
        }
        Self::from_samples(&s)
    }

    /// Mean of the three per-property W1 distances.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.bins != other.bins || self.accel_range != other.accel_range || self.jerk_range != other.jerk_range {
            return Err(Error::InvalidArgument("histogram bin edges differ".into()));
        }
        let wa = 2.0 * self.accel_range / self.bins as f64;
        let wj = 2.0 * self.jerk_range / self.bins as f64;
        Ok((wasserstein_hist(&self.lon, &other.lon, wa)?
            + wasserstein_hist(&self.lat, &other.lat, wa)?
            + wasserstein_hist(&self.jerk, &other.jerk, wj)?)
            / 3.0)
    }
}

/// Realism of a batch of logs against the reference profile.
pub fn realism(logs: &[SimLog], reference: &DrivingProfileHistogram) -> Result<f64> {
    if logs.is_empty() {
        return Err(Error::InvalidArgument("realism needs at least one log".into()));
    }
    DrivingProfileHistogram::from_logs(logs, ProfileMode::PerStep).distance(reference)
}

/// Mean per-step TTC cost between the event's two agents over the executed
/// steps in the half second before the collision.
pub fn ttc_cost_window(log: &SimLog, event: &CollisionEvent, lambda_t: f64, lambda_d: f64) -> Result<f64> {
    let (Some(i), Some(j)) = (log.agent_index(event.agents.0), log.agent_index(event.agents.1)) else {
        return Err(Error::InvalidArgument("event references unknown agents".into()));
    };
    let width = (0.5 / log.dt).round() as usize;
    let lo = event.step.saturating_sub(width);
    let window: Vec<_> = log.steps.iter().filter(|s| s.step >= lo && s.step < event.step).collect();
    if window.is_empty() {
        return Err(Error::InvalidArgument("no executed steps precede the collision".into()));
    }
    let a: Vec<AgentState> = window.iter().map(|s| s.states[i]).collect();
    let b: Vec<AgentState> = window.iter().map(|s| s.states[j]).collect();
    Ok(cost_ttc(&a, &b, lambda_t, lambda_d).value / window.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diversity {
    /// Sample variance of wrapped collision angle (rad^2).
    pub angle: f64,
    /// Sample variance of relative speed ((m/s)^2).
    pub rel_speed: f64,
    /// Trace of the sample covariance of collision points (m^2).
    pub point: f64,
}

fn sample_var(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Variance of collision geometry across events of one scenario.
pub fn collision_diversity(events: &[CollisionEvent]) -> Result<Diversity> {
    if events.len() < 2 {
        return Err(Error::InvalidArgument("collision diversity needs at least two events".into()));
    }
    let (s, c) = events
        .iter()
        .fold((0.0, 0.0), |(s, c), e| (s + e.angle.sin(), c + e.angle.cos()));
    let center = s.atan2(c);
    let angles: Vec<f64> = events.iter().map(|e| wrap_angle(e.angle - center)).collect();
    let speeds: Vec<f64> = events.iter().map(|e| e.rel_speed).collect();
    let xs: Vec<f64> = events.iter().map(|e| e.point.x).collect();
    let ys: Vec<f64> = events.iter().map(|e| e.point.y).collect();
    Ok(Diversity {
        angle: sample_var(&angles),
        rel_speed: sample_var(&speeds),
        point: sample_var(&xs) + sample_var(&ys),
    })
}

/// One row per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub scenario: String,
    pub seed: u64,
    pub collided: bool,
    pub collision_time: Option<f64>,
    pub rel_speed: Option<f64>,
    pub ttc_cost: Option<f64>,
    pub ego_other_collisions: usize,
    pub adversaries: usize,
    pub adversaries_offroad: usize,
    pub others: usize,
    pub others_offroad: usize,
    /// Non-adversarial, non-ego agents that hit another non-ego agent.
    pub others_colliding: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub runs: usize,
    /// Percentage of runs with an ego-adversary collision.
    pub collision_rate: f64,
    /// Percentage of non-adversarial agents that hit the ego.
    pub ego_other_collision: f64,
    pub adv_offroad: f64,
    pub other_offroad: f64,
    /// Percentage of non-adversarial agents that hit another non-ego agent.
    pub other_collision: f64,
    /// Mean ego-minus-adversary speed at collision over colliding runs.
    pub collision_rel_speed: Option<f64>,
    pub ttc_cost_pre_collision: Option<f64>,
    pub realism: Option<f64>,
    /// Mean per-scenario diversity over scenarios with two or more collisions.
    pub diversity: Option<Diversity>,
    pub rows: Vec<RunRow>,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn run_row(log: &SimLog, lambda_t: f64, lambda_d: f64) -> RunRow {
    let role = |id| log.agent_index(id).map(|i| log.agents[i].role);
    let hit = log.ego_adversary_collision();
    let mut others_hit = std::collections::BTreeSet::new();
    for c in log.collisions() {
        match c.kind {
            CollisionKind::AdversaryOther => {
                others_hit.insert(c.agents.1);
            }
            CollisionKind::OtherOther => {
                others_hit.insert(c.agents.0);
                others_hit.insert(c.agents.1);
            }
            _ => {}
        }
    }
    let offroad_of = |r: Role| log.offroads().filter(|o| o.role == r).count();
    RunRow {
        scenario: log.scenario.clone(),
        seed: log.seed,
        collided: hit.is_some(),
        collision_time: hit.map(|c| c.time),
        rel_speed: hit.map(|c| c.rel_speed),
        ttc_cost: hit.and_then(|c| ttc_cost_window(log, c, lambda_t, lambda_d).ok()),
        ego_other_collisions: log.collisions().filter(|c| c.kind == CollisionKind::EgoOther).count(),
        adversaries: log.agents.iter().filter(|a| a.role == Role::Adversary).count(),
        adversaries_offroad: offroad_of(Role::Adversary),
        others: log.agents.iter().filter(|a| a.role == Role::Reactive).count(),
        others_offroad: offroad_of(Role::Reactive),
        others_colliding: others_hit.iter().filter(|&&id| role(id) == Some(Role::Reactive)).count(),
    }
}

/// Batch statistics. `lambda_t`/`lambda_d` shape the TTC window cost.
pub fn aggregate(
    logs: &[SimLog],
    reference: Option<&DrivingProfileHistogram>,
    lambda_t: f64,
    lambda_d: f64,
) -> Result<MetricsReport> {
    if logs.is_empty() {
        return Err(Error::InvalidArgument("cannot aggregate an empty batch".into()));
    }
    let rows: Vec<RunRow> = logs.iter().map(|l| run_row(l, lambda_t, lambda_d)).collect();
    let sum = |f: fn(&RunRow) -> usize| rows.iter().map(f).sum::<usize>();
    let others = sum(|r| r.others);

    let mut by_scenario: BTreeMap<&str, Vec<CollisionEvent>> = BTreeMap::new();
    for log in logs {
        if let Some(c) = log.ego_adversary_collision() {
            by_scenario.entry(log.scenario.as_str()).or_default().push(*c);
        }
    }
    let divs: Vec<Diversity> = by_scenario.values().filter_map(|e| collision_diversity(e).ok()).collect();
    let diversity = (!divs.is_empty()).then(|| {
        let n = divs.len() as f64;
        Diversity {
            angle: divs.iter().map(|d| d.angle).sum::<f64>() / n,
            rel_speed: divs.iter().map(|d| d.rel_speed).sum::<f64>() / n,
            point: divs.iter().map(|d| d.point).sum::<f64>() / n,
        }
    });

    Ok(MetricsReport {
        runs: rows.len(),
        collision_rate: pct(rows.iter().filter(|r| r.collided).count(), rows.len()),
        ego_other_collision: pct(sum(|r| r.ego_other_collisions), others),
        adv_offroad: pct(sum(|r| r.adversaries_offroad), sum(|r| r.adversaries)),
        other_offroad: pct(sum(|r| r.others_offroad), others),
        other_collision: pct(sum(|r| r.others_colliding), others),
        collision_rel_speed: mean(rows.iter().filter_map(|r| r.rel_speed)),
        ttc_cost_pre_collision: mean(rows.iter().filter_map(|r| r.ttc_cost)),
        realism: reference.map(|h| realism(logs, h)).transpose()?,
        diversity,
        rows,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsReport {
    /// One row per run followed by a `summary` row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "scenario,seed,collided,collision_time,rel_speed,ttc_cost,ego_other_collisions,adversaries_offroad,others_offroad,others_colliding\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.scenario,
                r.seed,
                r.collided as u8,
                opt(r.collision_time),
                opt(r.rel_speed),
                opt(r.ttc_cost),
                r.ego_other_collisions,
                r.adversaries_offroad,
                r.others_offroad,
                r.others_colliding
            );
        }
        let _ = writeln!(
            s,
            "summary,,{},,{},{},{},{},{},{}",
            self.collision_rate,
            opt(self.collision_rel_speed),
            opt(self.ttc_cost_pre_collision),
            self.ego_other_collision,
            self.adv_offroad,
            self.other_offroad,
            self.other_collision
        );
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Point, VehicleShape};
    use crate::sim::{AgentInfo, Event, OffroadEvent, StepRecord, Termination};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn w1_examples() {
        let a = histogram(&[0.0, 1.0, -2.0], NUM_BINS, ACCEL_RANGE);
        assert_eq!(wasserstein_hist(&a, &a, 0.4).unwrap(), 0.0);
        let mut p = vec![0.0; 5];
        let mut q = vec![0.0; 5];
        p[1] = 1.0;
        q[2] = 1.0;
        assert!((wasserstein_hist(&p, &q, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(wasserstein_hist(&p, &q[..4], 0.5).is_err());
    }

    /// Transport between equal-size weighted point sets on bin centers by
    /// sorted matching of unit quanta.
    fn transport_oracle(a: &[f64], b: &[f64], width: f64, quanta: usize) -> f64 {
        let expand = |h: &[f64]| {
            let mut pts = Vec::new();
            for (i, w) in h.iter().enumerate() {
                for _ in 0..(w * quanta as f64).round() as usize {
                    pts.push(i as f64 * width);
                }
            }
            pts
        };
        let (pa, pb) = (expand(a), expand(b));
        assert_eq!(pa.len(), pb.len());
        pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum::<f64>() / quanta as f64
    }

    #[test]
    fn w1_matches_sorted_transport() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let quanta = 1000;
        for _ in 0..50 {
            let draw = |rng: &mut ChaCha8Rng| {
                let mut counts = vec![0usize; 9];
                for _ in 0..quanta {
                    counts[rng.random_range(0..9)] += 1;
                }
                counts.iter().map(|&c| c as f64 / quanta as f64).collect::<Vec<_>>()
            };
            let (a, b) = (draw(&mut rng), draw(&mut rng));
            let w = wasserstein_hist(&a, &b, 0.3).unwrap();
            assert!((w - transport_oracle(&a, &b, 0.3, quanta)).abs() < 1e-9);
            assert!((w - wasserstein_hist(&b, &a, 0.3).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn histograms_are_normalized() {
        let h = histogram(&[-100.0, 0.0, 3.3, 100.0], NUM_BINS, ACCEL_RANGE);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(h[0], 0.25);
        assert_eq!(h[NUM_BINS - 1], 0.25);
    }

    fn ev(rel: f64, angle: f64, x: f64, y: f64) -> CollisionEvent {
        CollisionEvent {
            time: 1.0,
            step: 10,
            agents: (0, 1),
            kind: CollisionKind::EgoAdversary,
            rel_speed: rel,
            angle,
            point: Point::new(x, y),
        }
    }

    #[test]
    fn diversity_examples() {
        let same = [ev(1.0, 0.3, 1.0, 2.0); 3];
        let d = collision_diversity(&same).unwrap();
        assert!(d.angle.abs() < 1e-15 && d.rel_speed == 0.0 && d.point == 0.0);
        let d = collision_diversity(&[ev(1.0, 0.0, 0.0, 0.0), ev(3.0, 0.0, 0.0, 0.0)]).unwrap();
        assert_eq!(d.rel_speed, 2.0);
        assert!(collision_diversity(&same[..1]).is_err());
    }

    #[test]
    fn diversity_matches_one_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let events: Vec<CollisionEvent> = (0..30)
            .map(|_| ev(rng.random_range(-5.0..5.0), rng.random_range(-1.0..1.0), rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0)))
            .collect();
        let d = collision_diversity(&events).unwrap();
        // Welford one-pass.
        let welford = |v: &mut dyn Iterator<Item = f64>| {
            let (mut n, mut m, mut m2) = (0.0, 0.0, 0.0);
            for x in v {
                n += 1.0;
                let delta = x - m;
                m += delta / n;
                m2 += delta * (x - m);
            }
            m2 / (n - 1.0)
        };
        assert!((d.rel_speed - welford(&mut events.iter().map(|e| e.rel_speed))).abs() < 1e-9);
        let pt = welford(&mut events.iter().map(|e| e.point.x)) + welford(&mut events.iter().map(|e| e.point.y));
        assert!((d.point - pt).abs() < 1e-9);
        // Angles well inside (-pi, pi) around zero: plain variance applies.
        assert!((d.angle - welford(&mut events.iter().map(|e| e.angle))).abs() < 1e-9);
    }

    fn log_with(states: Vec<Vec<AgentState>>, events: Vec<Event>, name: &str) -> SimLog {
        let n = states[0].len();
        SimLog {
            scenario: name.into(),
            seed: 0,
            dt: 0.1,
            agents: (0..n)
                .map(|i| AgentInfo {
                    id: i as u32,
                    role: [Role::Ego, Role::Adversary, Role::Reactive][i.min(2)],
                    shape: VehicleShape::car(),
                })
                .collect(),
            steps: states
                .into_iter()
                .enumerate()
                .map(|(k, s)| StepRecord {
                    step: k,
                    time: k as f64 * 0.1,
                    actions: if k == 0 { vec![] } else { vec![ActionInput::default(); s.len()] },
                    states: s,
                })
                .collect(),
            ticks: vec![],
            events,
            termination: Termination::MaxDuration,
            message: None,
        }
    }

    #[test]
    fn ttc_window_examples() {
        // Stationary pair in contact for 101 steps; collision at step 100.
        let s = vec![vec![AgentState::new(0.0, 0.0, 0.0, 0.0), AgentState::new(0.0, 0.0, 0.0, 0.0)]; 101];
        let e = ev(0.0, 0.0, 0.0, 0.0);
        let e = CollisionEvent { step: 100, time: 10.0, ..e };
        let log = log_with(s, vec![], "x");
        assert_eq!(ttc_cost_window(&log, &e, 4.0, 4.0).unwrap(), -1.0);

        // Head-on closing: ego at 0 moving +x at 2, adversary at 20 - 2t moving -x at 2.
        let states: Vec<Vec<AgentState>> = (0..=50)
            .map(|k| {
                let t = k as f64 * 0.1;
                vec![AgentState::new(2.0 * t, 0.0, 2.0, 0.0), AgentState::new(20.0 - 2.0 * t, 0.0, 2.0, std::f64::consts::PI)]
            })
            .collect();
        let log = log_with(states, vec![], "y");
        let e = CollisionEvent { step: 50, time: 5.0, ..ev(0.0, 0.0, 0.0, 0.0) };
        let got = ttc_cost_window(&log, &e, 4.0, 4.0).unwrap();
        let want = (45..50)
            .map(|k| {
                let gap = 20.0 - 4.0 * k as f64 * 0.1;
                let t = gap / 4.0;
                -(-t * t / 8.0f64).exp()
            })
            .sum::<f64>()
            / 5.0;
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn aggregate_tallies() {
        let base = vec![vec![AgentState::new(0.0, 0.0, 1.0, 0.0), AgentState::new(10.0, 0.0, 0.0, 0.0), AgentState::new(30.0, 0.0, 0.0, 0.0)]; 12];
        let hit = |rel| Event::Collision(CollisionEvent { step: 11, ..ev(rel, 0.0, 1.0, 0.0) });
        let off = |agent: u32, role| {
            Event::Offroad(OffroadEvent {
                time: 0.5,
                step: 5,
                agent,
                role,
                position: Point::new(0.0, 9.0),
            })
        };
        let logs = vec![
            log_with(base.clone(), vec![hit(2.0)], "a"),
            log_with(base.clone(), vec![hit(4.0), off(1, Role::Adversary)], "a"),
            log_with(base.clone(), vec![off(2, Role::Reactive)], "b"),
            log_with(base.clone(), vec![], "b"),
            log_with(base, vec![hit(-1.0)], "c"),
        ];
        let r = aggregate(&logs, None, 4.0, 4.0).unwrap();
        assert_eq!(r.runs, 5);
        assert_eq!(r.collision_rate, 60.0);
        assert_eq!(r.adv_offroad, 20.0);
        assert_eq!(r.other_offroad, 20.0);
        assert_eq!(r.ego_other_collision, 0.0);
        assert!((r.collision_rel_speed.unwrap() - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.diversity.unwrap().rel_speed, 2.0);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 7);
        let all_hit: Vec<SimLog> = logs.iter().take(2).cloned().collect();
        assert_eq!(aggregate(&all_hit, None, 4.0, 4.0).unwrap().collision_rate, 100.0);
        // Reordering records within a run does not change rates.
        let mut shuffled = logs.clone();
        shuffled[1].events.reverse();
        let r2 = aggregate(&shuffled, None, 4.0, 4.0).unwrap();
        assert_eq!(r2.collision_rate, r.collision_rate);
        assert_eq!(r2.adv_offroad, r.adv_offroad);
    }

    #[test]
    fn realism_of_identical_batch_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trajs: Vec<Trajectory> = (0..10)
            .map(|_| {
                let a: Vec<ActionInput> = (0..32).map(|_| ActionInput::new(rng.random_range(-3.0..3.0), rng.random_range(-0.5..0.5))).collect();
                crate::dynamics::rollout(&AgentState::new(0.0, 0.0, 5.0, 0.0), &a, 0.1)
            })
            .collect();
        let h = DrivingProfileHistogram::from_trajectories(&trajs, ProfileMode::PerStep);
        assert_eq!(h.distance(&h).unwrap(), 0.0);
        let mut other = h.clone();
        other.bins = 11;
        assert!(h.distance(&other).is_err());
    }
}
