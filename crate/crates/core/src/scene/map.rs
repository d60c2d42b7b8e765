use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Point, Polyline, Projection};
use crate::{Error, Result};

pub type LaneId = u32;

/// One lane: a centerline polyline with constant width and lane-graph links.
#[derive(Debug, Clone)]
pub struct Lane {
    pub id: LaneId,
    pub centerline: Polyline,
    pub width: f64,
    pub successors: Vec<LaneId>,
    pub left: Option<LaneId>,
    pub right: Option<LaneId>,
}

impl Lane {
    /// Corridor membership: within width/2 of a segment (perpendicular foot
    /// inside the segment) or of an interior vertex.
    pub fn contains(&self, p: Point) -> bool {
        let half = self.width / 2.0;
        let pts = self.centerline.points();
        for i in 0..self.centerline.num_segments() {
            let (a, b) = (pts[i], pts[i + 1]);
            let ab = b - a;
            let t = (p - a).dot(ab) / ab.norm_sq();
            if (0.0..=1.0).contains(&t) && (p - (a + ab * t)).norm() <= half {
                return true;
            }
        }
        pts[1..pts.len() - 1].iter().any(|&v| v.distance(p) <= half)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct LaneRecord {
    pub id: LaneId,
    pub centerline: Vec<[f64; 2]>,
    pub width: f64,
    #[serde(default)]
    pub successors: Vec<LaneId>,
    #[serde(default)]
    pub left: Option<LaneId>,
    #[serde(default)]
    pub right: Option<LaneId>,
}

/// Lane graph; the drivable area is the union of its lane corridors.
#[derive(Debug, Clone)]
pub struct LaneMap {
    lanes: Vec<Lane>,
    index: HashMap<LaneId, usize>,
}

impl LaneMap {
    pub fn new(lanes: Vec<Lane>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, lane) in lanes.iter().enumerate() {
            if index.insert(lane.id, i).is_some() {
                return Err(Error::InvalidMap(format!("duplicate lane id {}", lane.id)));
            }
            if !(lane.width > 0.0) || !lane.width.is_finite() {
                return Err(Error::InvalidMap(format!("lane {} has invalid width {}", lane.id, lane.width)));
            }
        }
        for lane in &lanes {
            let refs = lane.successors.iter().chain(lane.left.iter()).chain(lane.right.iter());
            for r in refs {
                if !index.contains_key(r) {
                    return Err(Error::InvalidMap(format!("lane {} references unknown lane {r}", lane.id)));
                }
            }
        }
        Ok(Self { lanes, index })
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    pub fn lane(&self, id: LaneId) -> Option<&Lane> {
        self.index.get(&id).map(|&i| &self.lanes[i])
    }

    /// Lane whose centerline is closest to `p`.
    pub fn nearest_lane(&self, p: Point) -> Option<(&Lane, Projection)> {
        self.lanes
            .iter()
            .map(|l| (l, l.centerline.project(p)))
            .min_by(|a, b| a.1.normal_offset.abs().total_cmp(&b.1.normal_offset.abs()))
    }

    pub(crate) fn from_records(records: &[LaneRecord]) -> Result<Self> {
        let lanes = records
            .iter()
            .map(|r| {
                let centerline = Polyline::new(r.centerline.iter().map(|&p| p.into()).collect())
                    .map_err(|e| Error::InvalidMap(format!("lane {}: {e}", r.id)))?;
                Ok(Lane {
                    id: r.id,
                    centerline,
                    width: r.width,
                    successors: r.successors.clone(),
                    left: r.left,
                    right: r.right,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LaneMap::new(lanes)
    }

    pub(crate) fn to_records(&self) -> Vec<LaneRecord> {
        self.lanes
            .iter()
            .map(|l| LaneRecord {
                id: l.id,
                centerline: l.centerline.points().iter().map(|&p| p.into()).collect(),
                width: l.width,
                successors: l.successors.clone(),
                left: l.left,
                right: l.right,
            })
            .collect()
    }
}

/// An agent's intended path: lane centerlines concatenated start to destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub polyline: Polyline,
}

impl Route {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        Ok(Self {
            polyline: Polyline::new(points)?,
        })
    }

    /// Concatenates lane centerlines, dropping a lane's first point when it
    /// coincides with the previous lane's last point.
    pub fn from_lanes(map: &LaneMap, ids: &[LaneId]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::InvalidScenario("route has no lanes".into()));
        }
        let mut pts: Vec<Point> = Vec::new();
        for (k, id) in ids.iter().enumerate() {
            let lane = map
                .lane(*id)
                .ok_or_else(|| Error::InvalidScenario(format!("route references unknown lane {id}")))?;
            if k > 0 {
                let prev = map.lane(ids[k - 1]).unwrap();
                if !prev.successors.contains(id) {
                    return Err(Error::InvalidScenario(format!("lane {id} is not a successor of {}", prev.id)));
                }
            }
            for &p in lane.centerline.points() {
                if pts.last().is_some_and(|l| l.distance(p) < 1e-9) {
                    continue;
                }
                pts.push(p);
            }
        }
        Route::new(pts).map_err(|e| Error::InvalidScenario(format!("route: {e}")))
    }

    pub fn project(&self, p: Point) -> Projection {
        self.polyline.project(p)
    }

    pub fn length(&self) -> f64 {
        self.polyline.length()
    }
}
