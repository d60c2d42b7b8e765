//! Domain types shared by every other module: agent kinematic state, control
//! input, vehicle footprint, lane maps, routes, scenarios, and the polyline
//! geometry they are built on.

mod context;
mod geometry;
mod map;
mod scenario;

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

pub use context::{
    DecisionContext, Neighbor, CONTEXT_DIM, NUM_NEIGHBORS, ROUTE_LOOKAHEAD, T_HIST,
};
pub use geometry::{
    obb_overlap, polyline_intersection, polyline_intersections, Intersection, Polyline,
    Projection,
};
pub use map::{Lane, LaneId, LaneMap, Route};
pub use scenario::{AgentId, AgentParams, AgentSpec, ProposalConfig, Role, ScenarioSpec};

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product; positive when `o` lies to the left of `self`.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn heading(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn from_heading(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Kinematic state of one vehicle: position (m), speed (m/s), heading (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub theta: f64,
}

impl AgentState {
    pub const fn new(x: f64, y: f64, v: f64, theta: f64) -> Self {
        Self { x, y, v, theta }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Point {
        Point::from_heading(self.theta) * self.v
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.v.is_finite() && self.theta.is_finite()
    }

    /// Expresses `other` in this state's body frame (x forward, y left).
    pub fn to_local(&self, other: &AgentState) -> AgentState {
        let p = self.local_point(other.position());
        AgentState::new(p.x, p.y, other.v, wrap_angle(other.theta - self.theta))
    }

    pub fn local_point(&self, p: Point) -> Point {
        let d = p - self.position();
        let (s, c) = self.theta.sin_cos();
        Point::new(c * d.x + s * d.y, -s * d.x + c * d.y)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.y, self.v, self.theta]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

/// Control input: longitudinal acceleration (m/s^2) and yaw rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActionInput {
    pub accel: f64,
    pub yaw_rate: f64,
}

impl ActionInput {
    pub const fn new(accel: f64, yaw_rate: f64) -> Self {
        Self { accel, yaw_rate }
    }

    pub fn is_finite(&self) -> bool {
        self.accel.is_finite() && self.yaw_rate.is_finite()
    }
}

/// Rectangular vehicle footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleShape {
    pub length: f64,
    pub width: f64,
}

impl VehicleShape {
    pub fn new(length: f64, width: f64) -> crate::Result<Self> {
        if !(length > 0.0 && width > 0.0) || !length.is_finite() || !width.is_finite() {
            return Err(crate::Error::InvalidArgument(format!(
                "vehicle shape must be positive, got {length} x {width}"
            )));
        }
        Ok(Self { length, width })
    }

    /// Typical passenger car.
    pub const fn car() -> Self {
        Self {
            length: 4.5,
            width: 1.9,
        }
    }
}

impl Default for VehicleShape {
    fn default() -> Self {
        Self::car()
    }
}

/// True when the point lies outside every lane corridor of `map`.
pub fn point_offroad(p: Point, map: &LaneMap) -> bool {
    !map.lanes().iter().any(|lane| lane.contains(p))
}
