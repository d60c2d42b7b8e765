use super::{AgentState, Point, VehicleShape};
use crate::{Error, Result};

/// An ordered 2-D point sequence with cached cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point>,
    arc: Vec<f64>,
}

/// Closest-point query result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub arc_length: f64,
    /// Signed distance, positive to the left of the direction of travel.
    pub normal_offset: f64,
    pub tangent_heading: f64,
    pub point: Point,
    pub segment: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intersection {
    pub arc_a: f64,
    pub arc_b: f64,
    pub point: Point,
}

impl Polyline {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "polyline needs at least 2 points, got {}",
                points.len()
            )));
        }
        let mut arc = Vec::with_capacity(points.len());
        arc.push(0.0);
        for w in points.windows(2) {
            if !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::InvalidArgument("non-finite polyline point".into()));
            }
            let d = w[0].distance(w[1]);
            if d <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "consecutive polyline points coincide at ({}, {})",
                    w[0].x, w[0].y
                )));
            }
            arc.push(arc.last().unwrap() + d);
        }
        Ok(Self { points, arc })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().unwrap()
    }

    pub fn num_segments(&self) -> usize {
        self.points.len() - 1
    }

    pub fn segment(&self, i: usize) -> (Point, Point) {
        (self.points[i], self.points[i + 1])
    }

    /// Arc length at the start of segment `i`.
    pub fn segment_start_arc(&self, i: usize) -> f64 {
        self.arc[i]
    }

    fn segment_index_at(&self, s: f64) -> usize {
        let n = self.num_segments();
        match self.arc.partition_point(|&a| a <= s) {
            0 => 0,
            i => (i - 1).min(n - 1),
        }
    }

    /// Point at arc length `s`, extrapolating linearly past either end.
    pub fn point_at(&self, s: f64) -> Point {
        let i = self.segment_index_at(s);
        let (a, b) = self.segment(i);
        let len = self.arc[i + 1] - self.arc[i];
        a + (b - a) * ((s - self.arc[i]) / len)
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let (a, b) = self.segment(self.segment_index_at(s));
        (b - a).heading()
    }

    /// Closest point on the polyline. Ties resolve to the earliest segment.
    pub fn project(&self, p: Point) -> Projection {
        let mut best_d2 = f64::INFINITY;
        let mut best = (0usize, 0.0f64, self.points[0]);
        for i in 0..self.num_segments() {
            let (a, b) = self.segment(i);
            let ab = b - a;
            let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
            let q = a + ab * t;
            let d2 = (p - q).norm_sq();
            if d2 < best_d2 {
                best_d2 = d2;
                best = (i, t, q);
            }
        }
        let (i, t, q) = best;
        let (a, b) = self.segment(i);
        let dir = b - a;
        let dist = best_d2.sqrt();
        let side = dir.cross(p - q);
        let normal_offset = if side < 0.0 { -dist } else { dist };
        Projection {
            arc_length: self.arc[i] + t * (self.arc[i + 1] - self.arc[i]),
            normal_offset,
            tangent_heading: dir.heading(),
            point: q,
            segment: i,
        }
    }

    /// Copy of this polyline with each vertex moved `offset` meters along its
    /// left normal (average of adjacent segment normals at interior vertices).
    pub fn offset(&self, offset: f64) -> Result<Polyline> {
        let n = self.points.len();
        let seg_normal = |i: usize| {
            let (a, b) = self.segment(i);
            let d = b - a;
            d.perp() * (1.0 / d.norm())
        };
        let pts = (0..n)
            .map(|i| {
                let nrm = if i == 0 {
                    seg_normal(0)
                } else if i == n - 1 {
                    seg_normal(n - 2)
                } else {
                    let m = seg_normal(i - 1) + seg_normal(i);
                    let len = m.norm();
                    if len < 1e-9 {
                        seg_normal(i)
                    } else {
                        m * (1.0 / len)
                    }
                };
                self.points[i] + nrm * offset
            })
            .collect();
        Polyline::new(pts)
    }

    /// Resamples into points spaced at most `step` meters apart.
    pub fn densify(&self, step: f64) -> Vec<Point> {
        let mut out = vec![self.points[0]];
        for i in 0..self.num_segments() {
            let (a, b) = self.segment(i);
            let n = ((a.distance(b) / step).ceil() as usize).max(1);
            for k in 1..=n {
                out.push(a + (b - a) * (k as f64 / n as f64));
            }
        }
        out
    }
}

/// Intersection point of segments `p0p1` and `q0q1` as (t, u) parameters.
/// Parallel or collinear segments report no intersection.
fn segment_intersection(p0: Point, p1: Point, q0: Point, q1: Point) -> Option<(f64, f64)> {
    let r = p1 - p0;
    let s = q1 - q0;
    let denom = r.cross(s);
    let scale = r.norm() * s.norm();
    if denom.abs() <= 1e-12 * scale {
        return None;
    }
    let qp = q0 - p0;
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    const EPS: f64 = 1e-12;
    if (-EPS..=1.0 + EPS).contains(&t) && (-EPS..=1.0 + EPS).contains(&u) {
        Some((t.clamp(0.0, 1.0), u.clamp(0.0, 1.0)))
    } else {
        None
    }
}

/// All crossings of two polylines ordered by arc length along `a`.
pub fn polyline_intersections(a: &Polyline, b: &Polyline) -> Vec<Intersection> {
    let mut out = Vec::new();
    for i in 0..a.num_segments() {
        let (p0, p1) = a.segment(i);
        let len_a = a.arc[i + 1] - a.arc[i];
        let mut local: Vec<Intersection> = Vec::new();
        for j in 0..b.num_segments() {
            let (q0, q1) = b.segment(j);
            if let Some((t, u)) = segment_intersection(p0, p1, q0, q1) {
                let len_b = b.arc[j + 1] - b.arc[j];
                local.push(Intersection {
                    arc_a: a.arc[i] + t * len_a,
                    arc_b: b.arc[j] + u * len_b,
                    point: p0 + (p1 - p0) * t,
                });
            }
        }
        local.sort_by(|x, y| x.arc_a.total_cmp(&y.arc_a).then(x.arc_b.total_cmp(&y.arc_b)));
        for x in local {
            // Shared vertices show up once per adjacent segment.
            let dup = out
                .last()
                .is_some_and(|l: &Intersection| (l.arc_a - x.arc_a).abs() < 1e-9 && (l.arc_b - x.arc_b).abs() < 1e-9);
            if !dup {
                out.push(x);
            }
        }
    }
    out
}

/// First crossing of `a` and `b` by arc length along `a`.
pub fn polyline_intersection(a: &Polyline, b: &Polyline) -> Option<Intersection> {
    polyline_intersections(a, b).into_iter().next()
}

fn obb_corners(s: &AgentState, shape: &VehicleShape) -> [Point; 4] {
    let f = Point::from_heading(s.theta) * (shape.length / 2.0);
    let l = Point::from_heading(s.theta).perp() * (shape.width / 2.0);
    let c = s.position();
    [c + f + l, c + f - l, c - f - l, c - f + l]
}

/// Separating-axis test between two oriented vehicle rectangles.
/// Touching boundaries count as overlap.
pub fn obb_overlap(a: &AgentState, shape_a: &VehicleShape, b: &AgentState, shape_b: &VehicleShape) -> bool {
    let ca = obb_corners(a, shape_a);
    let cb = obb_corners(b, shape_b);
    let axes = [
        Point::from_heading(a.theta),
        Point::from_heading(a.theta).perp(),
        Point::from_heading(b.theta),
        Point::from_heading(b.theta).perp(),
    ];
    for axis in axes {
        let (mut amin, mut amax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &ca {
            let d = p.dot(axis);
            amin = amin.min(d);
            amax = amax.max(d);
        }
        let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &cb {
            let d = p.dot(axis);
            bmin = bmin.min(d);
            bmax = bmax.max(d);
        }
        if amax < bmin || bmax < amin {
            return false;
        }
    }
    true
}
