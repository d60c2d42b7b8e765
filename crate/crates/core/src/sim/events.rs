use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::scene::{obb_overlap, point_offroad, wrap_angle, AgentId, AgentState, LaneMap, Point, Role, VehicleShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionKind {
    EgoAdversary,
    EgoOther,
    AdversaryOther,
    OtherOther,
}

/// First overlap of a pair. `agents.0` is the reference agent (the ego when
/// involved), `agents.1` the other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub time: f64,
    pub step: usize,
    pub agents: (AgentId, AgentId),
    pub kind: CollisionKind,
    /// Reference speed minus other speed (m/s).
    pub rel_speed: f64,
    /// Other heading minus reference heading, wrapped (rad).
    pub angle: f64,
    /// Other centroid in the reference body frame (m).
    pub point: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffroadEvent {
    pub time: f64,
    pub step: usize,
    pub agent: AgentId,
    pub role: Role,
    pub position: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum Event {
    Collision(CollisionEvent),
    Offroad(OffroadEvent),
}

/// Remembers which pairs and agents already produced events.
#[derive(Debug, Clone, Default)]
pub struct EventTracker {
    pairs: BTreeSet<(usize, usize)>,
    offroad: BTreeSet<usize>,
}

fn rank(r: Role) -> u8 {
    match r {
        Role::Ego => 0,
        Role::Adversary => 1,
        Role::Reactive => 2,
    }
}

fn kind_of(a: Role, b: Role) -> CollisionKind {
    match (a, b) {
        (Role::Ego, Role::Adversary) => CollisionKind::EgoAdversary,
        (Role::Ego, _) => CollisionKind::EgoOther,
        (Role::Adversary, _) => CollisionKind::AdversaryOther,
        _ => CollisionKind::OtherOther,
    }
}

/// Collision geometry of `other` relative to `reference`.
pub fn collision_event(
    time: f64,
    step: usize,
    ids: (AgentId, AgentId),
    kind: CollisionKind,
    reference: &AgentState,
    other: &AgentState,
) -> CollisionEvent {
    CollisionEvent {
        time,
        step,
        agents: ids,
        kind,
        rel_speed: reference.v - other.v,
        angle: wrap_angle(other.theta - reference.theta),
        point: reference.local_point(other.position()),
    }
}

/// Events of one executed step with first-occurrence semantics per pair and
/// per agent.
#[allow(clippy::too_many_arguments)]
pub fn detect_events(
    time: f64,
    step: usize,
    states: &[AgentState],
    shapes: &[VehicleShape],
    roles: &[Role],
    ids: &[AgentId],
    map: &LaneMap,
    tracker: &mut EventTracker,
) -> Vec<Event> {
    let n = states.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if tracker.pairs.contains(&(i, j)) || !obb_overlap(&states[i], &shapes[i], &states[j], &shapes[j]) {
                continue;
            }
            tracker.pairs.insert((i, j));
            // Order so the ego, then an adversary, is the reference.
            let (a, b) = if rank(roles[j]) < rank(roles[i]) { (j, i) } else { (i, j) };
            out.push(Event::Collision(collision_event(
                time,
                step,
                (ids[a], ids[b]),
                kind_of(roles[a], roles[b]),
                &states[a],
                &states[b],
            )));
        }
    }
    for i in 0..n {
        if !tracker.offroad.contains(&i) && point_offroad(states[i].position(), map) {
            tracker.offroad.insert(i);
            out.push(Event::Offroad(OffroadEvent {
                time,
                step,
                agent: ids[i],
                role: roles[i],
                position: states[i].position(),
            }));
        }
    }
    out
}
