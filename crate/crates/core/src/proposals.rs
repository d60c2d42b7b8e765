//! Rule-built trajectory proposals that seed partial diffusion with a chosen
//! collision geometry: crossing, rear-end, or lane-change side-swipe.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::{rollout, step, Trajectory, ACCEL_MAX, DT, V_MAX};
use crate::scene::{polyline_intersections, wrap_angle, ActionInput, AgentState, LaneId, LaneMap, Point, Route};
use crate::{Error, Result};

/// Lateral gate (m) for treating the ego as sharing the adversary's lane.
const SAME_LANE_GATE: f64 = 2.0;
/// Earliest and latest time (s) at which a rear-end proposal meets the ego.
const REAR_END_ETA: f64 = 2.5;
const REAR_END_MAX_ETA: f64 = 8.0;
/// Catch-up acceleration (m/s^2) a rear-end proposal aims not to exceed.
const CATCH_UP_ACCEL: f64 = 3.0;
const MIN_ETA_SPEED: f64 = 0.5;

/// Longitudinal acceleration request for a proposal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub enum TargetAccel {
    /// Solve for arrival at the conflict point together with the ego.
    Auto,
    Fixed(f64),
}

impl TryFrom<Value> for TargetAccel {
    type Error = String;

    fn try_from(v: Value) -> std::result::Result<Self, String> {
        match &v {
            Value::String(s) if s == "auto" => Ok(TargetAccel::Auto),
            Value::Number(n) => n.as_f64().map(TargetAccel::Fixed).ok_or_else(|| "invalid accel".into()),
            _ => Err(format!("accel must be \"auto\" or a number, got {v}")),
        }
    }
}

impl From<TargetAccel> for Value {
    fn from(a: TargetAccel) -> Value {
        match a {
            TargetAccel::Auto => Value::String("auto".into()),
            TargetAccel::Fixed(x) => serde_json::json!(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaneChoice {
    #[default]
    Current,
    Left,
    Right,
}

/// Proposal block of an agent's parameters: one proposal per offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProposalConfig {
    pub offsets: Vec<f64>,
    pub accel: TargetAccel,
    pub lane: LaneChoice,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self {
            offsets: vec![-2.0, 0.0, 2.0],
            accel: TargetAccel::Auto,
            lane: LaneChoice::Current,
        }
    }
}

impl ProposalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.offsets.is_empty() {
            return Err(Error::InvalidConfig("proposal offsets must be nonempty".into()));
        }
        if self.offsets.iter().any(|o| !o.is_finite() || o.abs() > 10.0) {
            return Err(Error::InvalidConfig("proposal offsets must be finite and within 10 m".into()));
        }
        if let TargetAccel::Fixed(a) = self.accel {
            if !a.is_finite() || a.abs() > ACCEL_MAX {
                return Err(Error::InvalidConfig(format!("proposal accel {a} outside the action limits")));
            }
        }
        Ok(())
    }

    pub fn specs(&self) -> Vec<ProposalSpec> {
        self.offsets
            .iter()
            .map(|&o| ProposalSpec {
                target_accel: self.accel,
                lateral_offset: o,
                lane_choice: self.lane,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalSpec {
    pub target_accel: TargetAccel,
    pub lateral_offset: f64,
    pub lane_choice: LaneChoice,
}

/// Where the ego and the adversary paths meet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictPoint {
    pub point: Point,
    /// Remaining ego travel to the conflict (m).
    pub arc_ego: f64,
    /// Remaining adversary travel along its path to the conflict (m).
    pub arc_adv: f64,
    /// Ego arrival time (s).
    pub ego_eta: f64,
}

/// Time for the ego to cover `dist` meters: from its plan when available,
/// else at constant speed.
fn ego_arrival(ego_route: &Route, ego: &AgentState, plan: Option<&Trajectory>, dist: f64) -> f64 {
    if let Some(plan) = plan {
        let start = ego_route.project(ego.position()).arc_length;
        let mut prev = 0.0;
        for (t, s) in plan.states.iter().enumerate() {
            let d = ego_route.project(s.position()).arc_length - start;
            if d >= dist {
                let frac = if d > prev { (dist - prev) / (d - prev) } else { 1.0 };
                return (t as f64 + frac) * plan.dt;
            }
            prev = d;
        }
        let last = plan.states.last().map_or(ego.v, |s| s.v);
        return plan.horizon() as f64 * plan.dt + (dist - prev).max(0.0) / last.max(MIN_ETA_SPEED);
    }
    dist / ego.v.max(MIN_ETA_SPEED)
}

/// First meeting point of the two paths ahead of both agents. Crossing
/// centerlines give a crossing conflict; otherwise an ego ahead in the
/// adversary's lane gives a rear-end conflict where the adversary can catch
/// it without hard acceleration.
pub fn find_conflict(
    ego_route: &Route,
    adv_path: &Route,
    ego: &AgentState,
    adv: &AgentState,
    ego_plan: Option<&Trajectory>,
) -> Option<ConflictPoint> {
    let e0 = ego_route.project(ego.position()).arc_length;
    let a0 = adv_path.project(adv.position()).arc_length;
    let hit = polyline_intersections(&ego_route.polyline, &adv_path.polyline)
        .into_iter()
        .find(|h| h.arc_a >= e0 - 1e-9 && h.arc_b >= a0 - 1e-9);
    if let Some(h) = hit {
        let arc_ego = (h.arc_a - e0).max(0.0);
        return Some(ConflictPoint {
            point: h.point,
            arc_ego,
            arc_adv: (h.arc_b - a0).max(0.0),
            ego_eta: ego_arrival(ego_route, ego, ego_plan, arc_ego),
        });
    }
    let on_adv = adv_path.project(ego.position());
    if on_adv.normal_offset.abs() <= SAME_LANE_GATE && on_adv.arc_length > a0 + 1.0 {
        // Ego travel after `t` seconds: along its plan, then at the plan's
        // final speed.
        let travel = |t: f64| -> f64 {
            match ego_plan {
                Some(p) if !p.states.is_empty() => {
                    let k = ((t / p.dt).round() as usize).clamp(1, p.horizon());
                    let s = &p.states[k - 1];
                    let along = adv_path.project(s.position()).arc_length - on_adv.arc_length;
                    (along + s.v * (t - k as f64 * p.dt).max(0.0)).max(0.0)
                }
                _ => ego.v * t,
            }
        };
        // The first meeting time whose catch-up stays gentle, else the latest.
        let dt = ego_plan.map_or(DT, |p| p.dt);
        let (first, last) = ((REAR_END_ETA / dt).round() as usize, (REAR_END_MAX_ETA / dt).round() as usize);
        let eta = (first..=last)
            .map(|k| k as f64 * dt)
            .find(|&t| arrival_accel(on_adv.arc_length + travel(t) - a0, adv.v, t, dt) <= CATCH_UP_ACCEL)
            .unwrap_or(REAR_END_MAX_ETA);
        let arc = on_adv.arc_length + travel(eta);
        if arc <= adv_path.length() {
            return Some(ConflictPoint {
                point: adv_path.polyline.point_at(arc),
                arc_ego: travel(eta),
                arc_adv: arc - a0,
                ego_eta: eta,
            });
        }
    }
    None
}

/// Constant acceleration that brings an agent at speed `v` across `dist`
/// meters in `t` seconds under forward-Euler position updates.
pub fn arrival_accel(dist: f64, v: f64, t: f64, dt: f64) -> f64 {
    if t > 2.0 * dt {
        2.0 * (dist - v * t) / (t * (t - dt))
    } else {
        2.0 * (dist - v * t) / (t * t)
    }
}

/// Builds the proposal trajectory: the adversary path with a lateral offset
/// ramped in by the conflict point, traversed at constant acceleration.
pub fn make_proposal(
    adv: &AgentState,
    adv_path: &Route,
    conflict: &ConflictPoint,
    spec: &ProposalSpec,
    horizon: usize,
    dt: f64,
) -> Trajectory {
    let accel = match spec.target_accel {
        TargetAccel::Fixed(a) => a,
        TargetAccel::Auto => {
            let t = conflict.ego_eta;
            let d = conflict.arc_adv;
            if !(t > 0.0) {
                // The ego is already there: close in as fast as allowed.
                if d > 0.0 {
                    ACCEL_MAX
                } else {
                    0.0
                }
            } else {
                let a = arrival_accel(d, adv.v, t, dt);
                if adv.v + a * t < 0.0 && d > 0.0 {
                    // Cannot arrive that late without reversing: stop at the point.
                    (-adv.v * adv.v / (2.0 * d)).max(-ACCEL_MAX)
                } else {
                    // Unreachable timing gets the closest feasible profile.
                    a.clamp(-ACCEL_MAX, ACCEL_MAX)
                }
            }
        }
    };

    let proj = adv_path.project(adv.position());
    let a0 = proj.arc_length;
    let c0 = proj.normal_offset;
    let target = spec.lateral_offset;
    let ramp = conflict.arc_adv;
    let reference = |s: f64| {
        let arc = a0 + s;
        let frac = if ramp > 1e-6 { (s / ramp).clamp(0.0, 1.0) } else { 1.0 };
        let off = c0 + (target - c0) * frac;
        adv_path.polyline.point_at(arc) + Point::from_heading(adv_path.polyline.heading_at(arc)).perp() * off
    };

    // Arc-length profile under the Euler recurrence, one step past the end.
    let mut arcs = Vec::with_capacity(horizon + 2);
    let (mut v, mut s) = (adv.v, 0.0);
    for _ in 0..horizon + 2 {
        arcs.push(s);
        s += v * dt;
        v = (v + accel * dt).clamp(0.0, V_MAX);
    }
    let pts: Vec<Point> = arcs.iter().map(|&a| reference(a)).collect();

    // Closed-loop chase: the action at step t sets the heading and speed
    // that carry the next position onto the reference two steps ahead.
    let mut cur = *adv;
    let mut actions = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let next = cur.position() + cur.velocity() * dt;
        let d = pts[t + 2] - next;
        let (v_des, th_des) = if d.norm() > 1e-6 { (d.norm() / dt, d.heading()) } else { (0.0, cur.theta) };
        let a = ActionInput::new((v_des - cur.v) / dt, wrap_angle(th_des - cur.theta) / dt);
        cur = step(&cur, a, dt);
        actions.push(a);
    }
    rollout(adv, &actions, dt)
}

/// One proposal per configured offset; empty when there is no conflict.
pub fn proposal_set(
    adv: &AgentState,
    adv_path: &Route,
    conflict: Option<&ConflictPoint>,
    cfg: &ProposalConfig,
    horizon: usize,
    dt: f64,
) -> Vec<Trajectory> {
    let Some(c) = conflict else { return Vec::new() };
    cfg.specs()
        .iter()
        .map(|spec| make_proposal(adv, adv_path, c, spec, horizon, dt))
        .collect()
}

/// Lane of `route_lanes` whose centerline passes closest to `p`.
fn current_lane(map: &LaneMap, route_lanes: &[LaneId], p: Point) -> Option<LaneId> {
    route_lanes
        .iter()
        .filter_map(|id| map.lane(*id))
        .map(|l| {
            let pr = l.centerline.project(p);
            (p.distance(pr.point), l.id)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, id)| id)
}

/// Path the adversary follows for a proposal. `Current` keeps its route;
/// `Left`/`Right` merges from the current position into the neighbor lane
/// over `max(15, 2 v)` meters and follows that lane's first successors.
/// Returns `None` when the requested neighbor does not exist.
pub fn proposal_path(
    map: &LaneMap,
    route: &Route,
    route_lanes: &[LaneId],
    adv: &AgentState,
    choice: LaneChoice,
) -> Option<Route> {
    if choice == LaneChoice::Current {
        return Some(route.clone());
    }
    let lane = map.lane(current_lane(map, route_lanes, adv.position())?)?;
    let neighbor = match choice {
        LaneChoice::Left => lane.left,
        LaneChoice::Right => lane.right,
        LaneChoice::Current => unreachable!(),
    }?;
    let mut chain = vec![neighbor];
    for _ in 0..5 {
        let last = map.lane(*chain.last().unwrap())?;
        match last.successors.first() {
            Some(&n) if !chain.contains(&n) => chain.push(n),
            _ => break,
        }
    }
    let target = Route::from_lanes(map, &chain).ok()?;
    let start = route.project(adv.position());
    let join_arc = target.project(start.point).arc_length + (2.0 * adv.v).max(15.0);
    if join_arc >= target.length() {
        return None;
    }
    let mut pts = vec![start.point];
    pts.push(target.polyline.point_at(join_arc));
    for &p in target.polyline.points() {
        if target.project(p).arc_length > join_arc + 1e-6 {
            pts.push(p);
        }
    }
    Route::new(pts).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DT;

    fn line(a: (f64, f64), b: (f64, f64)) -> Route {
        Route::new(vec![Point::new(a.0, a.1), Point::new(b.0, b.1)]).unwrap()
    }

    #[test]
    fn crossing_conflict() {
        let ego_route = line((-50.0, 0.0), (50.0, 0.0));
        let adv_route = line((0.0, -50.0), (0.0, 50.0));
        let ego = AgentState::new(-10.0, 0.0, 5.0, 0.0);
        let adv = AgentState::new(0.0, -20.0, 5.0, std::f64::consts::FRAC_PI_2);
        let c = find_conflict(&ego_route, &adv_route, &ego, &adv, None).unwrap();
        assert!(c.point.distance(Point::new(0.0, 0.0)) < 1e-9);
        assert!((c.arc_ego - 10.0).abs() < 1e-9);
        assert!((c.arc_adv - 20.0).abs() < 1e-9);
        assert!((c.ego_eta - 2.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_routes_have_no_conflict() {
        let ego_route = line((0.0, 0.0), (100.0, 0.0));
        let adv_route = line((0.0, 3.5), (100.0, 3.5));
        let ego = AgentState::new(10.0, 0.0, 5.0, 0.0);
        let adv = AgentState::new(0.0, 3.5, 5.0, 0.0);
        assert!(find_conflict(&ego_route, &adv_route, &ego, &adv, None).is_none());
        assert!(proposal_set(&adv, &adv_route, None, &ProposalConfig::default(), 32, DT).is_empty());
    }

    #[test]
    fn conflict_behind_is_ignored() {
        let ego_route = line((-50.0, 0.0), (50.0, 0.0));
        let adv_route = line((0.0, -50.0), (0.0, 50.0));
        let ego = AgentState::new(10.0, 0.0, 5.0, 0.0);
        let adv = AgentState::new(0.0, -20.0, 5.0, 1.0);
        assert!(find_conflict(&ego_route, &adv_route, &ego, &adv, None).is_none());
    }

    #[test]
    fn rear_end_conflict() {
        let route = line((0.0, 0.0), (200.0, 0.0));
        // Closing at 4 m/s covers the 10 m gap by the earliest meeting time.
        let ego = AgentState::new(20.0, 0.0, 4.0, 0.0);
        let adv = AgentState::new(10.0, 0.0, 8.0, 0.0);
        let c = find_conflict(&route, &route, &ego, &adv, None).unwrap();
        assert!((c.ego_eta - REAR_END_ETA).abs() < 1e-12);
        assert!((c.point.x - 30.0).abs() < 1e-9);
        assert!((c.arc_adv - 20.0).abs() < 1e-9);

        // A 30 m gap waits until the catch-up needs at most 3 m/s^2:
        // 3t^2 + 7.7t - 60 >= 0 first holds at t = 3.4 s.
        let ego = AgentState::new(40.0, 0.0, 4.0, 0.0);
        let c = find_conflict(&route, &route, &ego, &adv, None).unwrap();
        assert!((c.ego_eta - 3.4).abs() < 1e-9, "{}", c.ego_eta);
        assert!((c.point.x - 53.6).abs() < 1e-9);
        assert!(arrival_accel(c.arc_adv, adv.v, c.ego_eta, DT) <= CATCH_UP_ACCEL);
    }

    #[test]
    fn auto_accel_zero_when_in_phase() {
        assert_eq!(arrival_accel(10.0, 5.0, 2.0, DT), 0.0);
    }

    #[test]
    fn straight_constant_speed_proposal() {
        let route = line((0.0, 0.0), (200.0, 0.0));
        let adv = AgentState::new(0.0, 0.0, 5.0, 0.0);
        let c = ConflictPoint {
            point: Point::new(50.0, 0.0),
            arc_ego: 10.0,
            arc_adv: 50.0,
            ego_eta: 10.0,
        };
        let spec = ProposalSpec {
            target_accel: TargetAccel::Fixed(0.0),
            lateral_offset: 0.0,
            lane_choice: LaneChoice::Current,
        };
        let p = make_proposal(&adv, &route, &c, &spec, 32, DT);
        assert!(p.is_consistent());
        for (t, s) in p.states.iter().enumerate() {
            assert!((s.x - 0.5 * (t + 1) as f64).abs() < 1e-9);
            assert!(s.y.abs() < 1e-9 && (s.v - 5.0).abs() < 1e-9);
        }
    }

    /// Simulated arrival time at `arc` along a straight x-axis route.
    fn arrival(p: &Trajectory, arc: f64) -> Option<f64> {
        let mut prev = p.initial_state.x;
        for (t, s) in p.states.iter().enumerate() {
            if s.x >= arc {
                return Some(t as f64 * p.dt + (arc - prev) / (s.x - prev) * p.dt);
            }
            prev = s.x;
        }
        None
    }

    #[test]
    fn auto_accel_meets_the_ego() {
        let route = line((0.0, 0.0), (300.0, 0.0));
        for (v, d, eta) in [(5.0, 20.0, 2.0), (8.0, 15.0, 2.5), (3.0, 12.0, 2.2), (10.0, 40.0, 3.0)] {
            let adv = AgentState::new(0.0, 0.0, v, 0.0);
            let c = ConflictPoint {
                point: Point::new(d, 0.0),
                arc_ego: 0.0,
                arc_adv: d,
                ego_eta: eta,
            };
            let spec = ProposalSpec {
                target_accel: TargetAccel::Auto,
                lateral_offset: 0.0,
                lane_choice: LaneChoice::Current,
            };
            let p = make_proposal(&adv, &route, &c, &spec, 32, DT);
            let t = arrival(&p, d).expect("reaches the conflict");
            assert!((t - eta).abs() <= DT, "v={v} d={d}: arrival {t} vs {eta}");
        }
    }

    #[test]
    fn unreachable_timing_clamps_to_the_limit() {
        let route = line((0.0, 0.0), (300.0, 0.0));
        let adv = AgentState::new(0.0, 0.0, 7.0, 0.0);
        let c = ConflictPoint {
            point: Point::new(60.0, 0.0),
            arc_ego: 15.0,
            arc_adv: 60.0,
            ego_eta: 2.5,
        };
        let spec = ProposalSpec {
            target_accel: TargetAccel::Auto,
            lateral_offset: 0.0,
            lane_choice: LaneChoice::Current,
        };
        let p = make_proposal(&adv, &route, &c, &spec, 32, DT);
        // Full throttle: the speed gain over the first second is 8 m/s.
        assert!((p.states[9].v - (7.0 + ACCEL_MAX)).abs() < 1e-6, "{}", p.states[9].v);
        assert!(p.actions.iter().all(|a| a.accel <= ACCEL_MAX + 1e-9));
    }

    #[test]
    fn offsets_are_met_and_ordered() {
        let ego_route = line((-60.0, 0.0), (60.0, 0.0));
        let adv_route = line((0.0, -60.0), (0.0, 60.0));
        // Conflict reached well inside the horizon.
        let ego = AgentState::new(-15.0, 0.0, 6.0, 0.0);
        let adv = AgentState::new(0.0, -16.0, 6.0, std::f64::consts::FRAC_PI_2);
        let c = find_conflict(&ego_route, &adv_route, &ego, &adv, None).unwrap();
        let cfg = ProposalConfig::default();
        let props = proposal_set(&adv, &adv_route, Some(&c), &cfg, 32, DT);
        assert_eq!(props.len(), 3);
        let mut measured = Vec::new();
        for (p, want) in props.iter().zip(&cfg.offsets) {
            assert!(p.is_consistent());
            // Normal offset where the path passes the conflict arc.
            let target_arc = adv_route.project(adv.position()).arc_length + c.arc_adv;
            let mut best = (f64::INFINITY, 0.0);
            for w in p.states.windows(2) {
                let (pa, pb) = (adv_route.project(w[0].position()), adv_route.project(w[1].position()));
                if pa.arc_length <= target_arc && pb.arc_length >= target_arc {
                    let f = (target_arc - pa.arc_length) / (pb.arc_length - pa.arc_length);
                    best = (0.0, pa.normal_offset + f * (pb.normal_offset - pa.normal_offset));
                }
            }
            assert!(best.0 == 0.0, "proposal must pass the conflict");
            assert!((best.1 - want).abs() <= 0.1, "offset {} vs {want}", best.1);
            measured.push(best.1);
        }
        assert!(measured.windows(2).all(|w| w[0] < w[1]));
        let again = proposal_set(&adv, &adv_route, Some(&c), &cfg, 32, DT);
        assert_eq!(props, again);
    }

    #[test]
    fn accel_serde() {
        let c: ProposalConfig = serde_json::from_str(r#"{"offsets":[1.0],"accel":"auto","lane":"left"}"#).unwrap();
        assert_eq!(c.accel, TargetAccel::Auto);
        assert_eq!(c.lane, LaneChoice::Left);
        let c: ProposalConfig = serde_json::from_str(r#"{"accel":1.5}"#).unwrap();
        assert_eq!(c.accel, TargetAccel::Fixed(1.5));
        assert_eq!(c.offsets, vec![-2.0, 0.0, 2.0]);
        assert!(serde_json::from_str::<ProposalConfig>(r#"{"accel":"fast"}"#).is_err());
        let back: ProposalConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
