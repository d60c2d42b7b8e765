//! Built-in maps and the fixed scenario library: four-way intersections,
//! a straight three-lane road, and a curved two-lane road.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use crate::guidance::GuidanceConfig;
use crate::planners::PlannerConfig;
use crate::proposals::{find_conflict, proposal_path, LaneChoice, ProposalConfig};
use crate::scene::{AgentId, AgentParams, AgentSpec, AgentState, Lane, LaneId, LaneMap, Point, Polyline, Role, Route, ScenarioSpec, VehicleShape};
use crate::{Error, Result};

pub const LANE_WIDTH: f64 = 3.5;

fn lane(id: LaneId, pts: Vec<Point>, left: Option<LaneId>, right: Option<LaneId>) -> Lane {
    Lane {
        id,
        centerline: Polyline::new(pts).expect("library centerlines are valid"),
        width: LANE_WIDTH,
        successors: Vec::new(),
        left,
        right,
    }
}

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

/// Two crossing two-way roads. Lanes: 1 eastbound, 2 westbound,
/// 3 northbound, 4 southbound; each 400 m long, centered on the junction.
pub fn intersection_map() -> LaneMap {
    let h = LANE_WIDTH / 2.0;
    LaneMap::new(vec![
        lane(1, vec![p(-200.0, -h), p(200.0, -h)], None, None),
        lane(2, vec![p(200.0, h), p(-200.0, h)], None, None),
        lane(3, vec![p(h, -200.0), p(h, 200.0)], None, None),
        lane(4, vec![p(-h, 200.0), p(-h, -200.0)], None, None),
    ])
    .expect("valid map")
}

/// Three eastbound lanes: 1 (y = 0, rightmost), 2, 3.
pub fn multilane_map() -> LaneMap {
    let w = LANE_WIDTH;
    LaneMap::new(vec![
        lane(1, vec![p(-100.0, 0.0), p(500.0, 0.0)], Some(2), None),
        lane(2, vec![p(-100.0, w), p(500.0, w)], Some(3), Some(1)),
        lane(3, vec![p(-100.0, 2.0 * w), p(500.0, 2.0 * w)], None, Some(2)),
    ])
    .expect("valid map")
}

/// Straight approach, a 90-degree left bend of radius 60 m, straight exit.
/// Lane 1 is the outer lane, lane 2 the inner one.
pub fn curved_map() -> LaneMap {
    let r = 60.0;
    let mut pts = vec![p(-80.0, 0.0)];
    for k in 0..=30 {
        let a = -FRAC_PI_2 + FRAC_PI_2 * k as f64 / 30.0;
        pts.push(p(r * a.cos(), r + r * a.sin()));
    }
    pts.push(p(r, 320.0));
    let outer = Polyline::new(pts).expect("valid");
    let inner = outer.offset(LANE_WIDTH).expect("valid");
    LaneMap::new(vec![
        lane(1, outer.points().to_vec(), Some(2), None),
        lane(2, inner.points().to_vec(), None, Some(1)),
    ])
    .expect("valid map")
}

/// Agent placed `arc` meters along `lane` with speed `v`.
fn place(map: &LaneMap, id: AgentId, role: Role, lane_id: LaneId, arc: f64, v: f64) -> AgentSpec {
    let route = Route::from_lanes(map, &[lane_id]).expect("library lanes exist");
    let pos = route.polyline.point_at(arc);
    let heading = route.polyline.heading_at(arc);
    let params = match role {
        Role::Adversary => AgentParams {
            guidance: GuidanceConfig {
                adversary_ids: Some(vec![id]),
                ..Default::default()
            },
            proposal: Some(ProposalConfig::default()),
        },
        _ => AgentParams::default(),
    };
    AgentSpec {
        id,
        role,
        initial: AgentState::new(pos.x, pos.y, v, heading),
        shape: VehicleShape::car(),
        route_lanes: vec![lane_id],
        route,
        params,
    }
}

fn with_lane(mut a: AgentSpec, choice: LaneChoice) -> AgentSpec {
    if let Some(p) = &mut a.params.proposal {
        p.lane = choice;
    }
    a
}

/// Agent tuple: (role, lane, arc, speed, proposal lane for the adversary).
type Row = (Role, LaneId, f64, f64, LaneChoice);

fn scenario(name: &str, map: LaneMap, rows: &[Row], seed: u64) -> ScenarioSpec {
    let agents = rows
        .iter()
        .enumerate()
        .map(|(i, &(role, l, arc, v, choice))| with_lane(place(&map, i as AgentId, role, l, arc, v), choice))
        .collect();
    ScenarioSpec::new(name, map, agents, 10.0, seed, PlannerConfig::default()).expect("library scenarios are valid")
}

/// The fixed library of twelve scenarios.
pub fn scenario_library() -> Vec<ScenarioSpec> {
    use LaneChoice::{Current as C, Left as L, Right as R};
    use Role::{Adversary as A, Ego as E, Reactive as X};
    let i = intersection_map;
    let s = multilane_map;
    let c = curved_map;
    vec![
        scenario("intersection-late-crosser", i(), &[(E, 1, 160.0, 8.0, C), (A, 3, 140.0, 8.0, C), (X, 1, 185.0, 8.0, C), (X, 4, 130.0, 6.0, C)], 101),
        scenario("intersection-early-crosser", i(), &[(E, 1, 160.0, 8.0, C), (A, 3, 186.0, 6.0, C), (X, 2, 130.0, 7.0, C), (X, 4, 110.0, 6.0, C)], 102),
        scenario("intersection-side-approach", i(), &[(E, 3, 165.0, 7.0, C), (A, 2, 145.0, 9.0, C), (X, 1, 120.0, 8.0, C), (X, 3, 145.0, 7.0, C)], 103),
        scenario(
            "intersection-busy",
            i(),
            &[(E, 4, 160.0, 8.0, C), (A, 1, 130.0, 8.0, C), (X, 2, 110.0, 8.0, C), (X, 4, 180.0, 8.0, C), (X, 3, 110.0, 6.0, C)],
            104,
        ),
        scenario("straight-rear-end", s(), &[(E, 1, 100.0, 6.0, C), (A, 1, 70.0, 7.0, C), (X, 2, 110.0, 8.0, C), (X, 3, 85.0, 8.0, C)], 201),
        scenario("straight-swipe-from-left", s(), &[(E, 1, 100.0, 7.0, C), (A, 2, 90.0, 8.0, R), (X, 3, 105.0, 8.0, C), (X, 1, 135.0, 8.0, C)], 202),
        scenario(
            "straight-swipe-from-right",
            s(),
            &[(E, 2, 100.0, 7.0, C), (A, 1, 88.0, 8.0, L), (X, 3, 80.0, 7.0, C), (X, 2, 140.0, 8.0, C), (X, 1, 150.0, 6.0, C)],
            203,
        ),
        scenario("straight-cut-in", s(), &[(E, 1, 100.0, 8.0, C), (A, 2, 115.0, 7.0, R), (X, 3, 90.0, 8.0, C)], 204),
        scenario("curve-rear-end", c(), &[(E, 1, 70.0, 6.0, C), (A, 1, 40.0, 7.0, C), (X, 2, 80.0, 7.0, C)], 301),
        scenario("curve-swipe-from-inner", c(), &[(E, 1, 60.0, 7.0, C), (A, 2, 50.0, 8.0, R), (X, 2, 90.0, 7.0, C), (X, 1, 20.0, 6.0, C)], 302),
        scenario(
            "curve-swipe-from-outer",
            c(),
            &[(E, 2, 60.0, 7.0, C), (A, 1, 48.0, 8.0, L), (X, 1, 100.0, 7.0, C), (X, 2, 25.0, 7.0, C), (X, 1, 15.0, 6.0, C)],
            303,
        ),
        scenario("curve-cut-in", c(), &[(E, 1, 50.0, 8.0, C), (A, 2, 65.0, 7.0, R), (X, 2, 20.0, 8.0, C)], 304),
    ]
}

/// True when some lane choice gives the adversary a conflict with the ego.
pub fn has_resolvable_conflict(spec: &ScenarioSpec, adversary: usize) -> bool {
    let ego = &spec.agents[spec.ego_index()];
    let adv = &spec.agents[adversary];
    [LaneChoice::Current, LaneChoice::Left, LaneChoice::Right].into_iter().any(|choice| {
        proposal_path(&spec.map, &adv.route, &adv.route_lanes, &adv.initial, choice)
            .and_then(|path| find_conflict(&ego.route, &path, &ego.initial, &adv.initial, None))
            .is_some()
    })
}

/// Writes every library scenario as `NN-name.json` and returns the paths.
pub fn write_library(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    scenario_library()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let path = dir.join(format!("{:02}-{}.json", k + 1, s.name));
            std::fs::write(&path, s.to_json()?).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// Loads every `*.json` scenario in `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<ScenarioSpec>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| ScenarioSpec::load(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{obb_overlap, point_offroad};

    #[test]
    fn library_shape() {
        let lib = scenario_library();
        assert_eq!(lib.len(), 12);
        for s in &lib {
            s.validate().unwrap();
            assert!((3..=6).contains(&s.agents.len()), "{}", s.name);
            for a in &s.agents {
                assert!(!point_offroad(a.initial.position(), &s.map), "{} agent {}", s.name, a.id);
            }
            for i in 0..s.agents.len() {
                for j in i + 1..s.agents.len() {
                    let (a, b) = (&s.agents[i], &s.agents[j]);
                    assert!(!obb_overlap(&a.initial, &a.shape, &b.initial, &b.shape), "{}", s.name);
                }
            }
        }
    }

    #[test]
    fn every_adversary_has_a_conflict() {
        for s in scenario_library() {
            for (i, a) in s.agents.iter().enumerate() {
                if a.role == Role::Adversary {
                    assert!(has_resolvable_conflict(&s, i), "{}", s.name);
                }
            }
        }
    }

    #[test]
    fn json_round_trip_is_stable() {
        for s in scenario_library() {
            let text = s.to_json().unwrap();
            let back = ScenarioSpec::from_json(&text).unwrap();
            assert_eq!(back.to_json().unwrap(), text);
        }
    }
}
