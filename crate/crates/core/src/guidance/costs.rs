//! Guidance cost terms. Each returns its value and the partial derivatives
//! with respect to the subject agent's state sequence.

use crate::dynamics::StateGrad;
use crate::scene::{AgentState, Route};

/// Value of a cost together with its state-space gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct CostGrad {
    pub value: f64,
    pub grad: Vec<StateGrad>,
}

impl CostGrad {
    pub fn zeros(n: usize) -> Self {
        Self {
            value: 0.0,
            grad: vec![StateGrad::default(); n],
        }
    }

    pub fn add_scaled(&mut self, other: &CostGrad, w: f64) {
        self.value += w * other.value;
        for (g, o) in self.grad.iter_mut().zip(&other.grad) {
            *g += o.scaled(w);
        }
    }
}

/// Negative summed center distance between ego and adversary; gradient with
/// respect to the adversary. Coincident centers contribute zero gradient.
pub fn cost_coll(ego: &[AgentState], adv: &[AgentState]) -> CostGrad {
    assert_eq!(ego.len(), adv.len(), "horizons must match");
    let mut out = CostGrad::zeros(adv.len());
    for (t, (e, a)) in ego.iter().zip(adv).enumerate() {
        let d = a.position() - e.position();
        let dist = d.norm();
        out.value -= dist;
        if dist > 0.0 {
            out.grad[t].x = -d.x / dist;
            out.grad[t].y = -d.y / dist;
        }
    }
    out
}

/// Gated relative-speed deviation `sum |v_ego - v_adv - v_diff| * 1{d < d_col}`.
/// The gate is held constant when differentiating.
pub fn cost_v(ego: &[AgentState], adv: &[AgentState], v_diff: f64, d_col: f64) -> CostGrad {
    assert_eq!(ego.len(), adv.len(), "horizons must match");
    let mut out = CostGrad::zeros(adv.len());
    for (t, (e, a)) in ego.iter().zip(adv).enumerate() {
        if e.position().distance(a.position()) >= d_col {
            continue;
        }
        let dev = e.v - a.v - v_diff;
        out.value += dev.abs();
        out.grad[t].v = if dev > 0.0 {
            -1.0
        } else if dev < 0.0 {
            1.0
        } else {
            0.0
        };
    }
    out
}

/// Closest approach under constant relative velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtcPoint {
    /// Time to closest approach (s), zero when receding or static.
    pub t_col: f64,
    /// Squared distance at closest approach (m^2).
    pub d_col2: f64,
    /// True when the approaching branch is active.
    pub approaching: bool,
}

const DV_EPS: f64 = 1e-12;

pub fn ttc_point(dx: f64, dy: f64, dvx: f64, dvy: f64) -> TtcPoint {
    let q = dvx * dvx + dvy * dvy;
    if q >= DV_EPS {
        let t = -(dvx * dx + dvy * dy) / q;
        if t >= 0.0 {
            let cr = dvx * dy - dvy * dx;
            return TtcPoint {
                t_col: t,
                d_col2: cr * cr / q,
                approaching: true,
            };
        }
    }
    TtcPoint {
        t_col: 0.0,
        d_col2: dx * dx + dy * dy,
        approaching: false,
    }
}

/// Partials of `(t_col, d_col2)` with respect to `(dx, dy, dvx, dvy)`, with
/// the branch held fixed at the evaluation point.
fn ttc_point_partials(dx: f64, dy: f64, dvx: f64, dvy: f64, approaching: bool) -> ([f64; 4], [f64; 4]) {
    if !approaching {
        return ([0.0; 4], [2.0 * dx, 2.0 * dy, 0.0, 0.0]);
    }
    let q = dvx * dvx + dvy * dvy;
    let p = dvx * dx + dvy * dy;
    let cr = dvx * dy - dvy * dx;
    let dt = [
        -dvx / q,
        -dvy / q,
        -dx / q + 2.0 * p * dvx / (q * q),
        -dy / q + 2.0 * p * dvy / (q * q),
    ];
    let dd = [
        -2.0 * cr * dvy / q,
        2.0 * cr * dvx / q,
        2.0 * cr * dy / q - 2.0 * cr * cr * dvx / (q * q),
        -2.0 * cr * dx / q - 2.0 * cr * cr * dvy / (q * q),
    ];
    (dt, dd)
}

/// Per-step TTC contribution `-exp(-t^2 / (2 lt) - d^2 / (2 ld))` between two states.
pub fn ttc_step_value(ego: &AgentState, adv: &AgentState, lambda_t: f64, lambda_d: f64) -> f64 {
    let d = adv.position() - ego.position();
    let dv = adv.velocity() - ego.velocity();
    let p = ttc_point(d.x, d.y, dv.x, dv.y);
    -(-p.t_col * p.t_col / (2.0 * lambda_t) - p.d_col2 / (2.0 * lambda_d)).exp()
}

/// Summed TTC cost; gradient with respect to the adversary.
pub fn cost_ttc(ego: &[AgentState], adv: &[AgentState], lambda_t: f64, lambda_d: f64) -> CostGrad {
    assert_eq!(ego.len(), adv.len(), "horizons must match");
    let mut out = CostGrad::zeros(adv.len());
    for (t, (e, a)) in ego.iter().zip(adv).enumerate() {
        let d = a.position() - e.position();
        let dv = a.velocity() - e.velocity();
        let p = ttc_point(d.x, d.y, dv.x, dv.y);
        let ex = (-p.t_col * p.t_col / (2.0 * lambda_t) - p.d_col2 / (2.0 * lambda_d)).exp();
        out.value -= ex;
        let (pt, pd) = ttc_point_partials(d.x, d.y, dv.x, dv.y, p.approaching);
        // d(-exp(E)) = -exp(E) dE, dE = -t dt / lt - dd / (2 ld)
        let g: [f64; 4] = std::array::from_fn(|i| ex * (p.t_col * pt[i] / lambda_t + pd[i] / (2.0 * lambda_d)));
        let (s, c) = a.theta.sin_cos();
        out.grad[t] = StateGrad {
            x: g[0],
            y: g[1],
            v: g[2] * c + g[3] * s,
            theta: g[2] * (-a.v * s) + g[3] * (a.v * c),
        };
    }
    out
}

/// Hinge on normal deviation beyond the margin: `sum max(0, |d_n| - d_m)`.
pub fn cost_route(states: &[AgentState], route: &Route, d_m: f64) -> CostGrad {
    let mut out = CostGrad::zeros(states.len());
    for (t, s) in states.iter().enumerate() {
        let p = s.position();
        let proj = route.project(p);
        let excess = proj.normal_offset.abs() - d_m;
        if excess > 0.0 {
            out.value += excess;
            let r = p - proj.point;
            let n = r.norm();
            if n > 0.0 {
                out.grad[t].x = r.x / n;
                out.grad[t].y = r.y / n;
            }
        }
    }
    out
}

/// Gaussian proximity of `j`'s position in `i`'s heading frame, with partials
/// with respect to both states.
pub fn gauss_pair(si: &AgentState, sj: &AgentState, sigma: f64, lambda: f64) -> (f64, StateGrad, StateGrad) {
    let r = sj.position() - si.position();
    let (s, c) = si.theta.sin_cos();
    let d_t = c * r.x + s * r.y;
    let d_n = -s * r.x + c * r.y;
    let s2 = sigma * sigma;
    let val = (-(lambda * d_t * d_t + d_n * d_n) / (2.0 * s2)).exp();
    // dval/dr = -val / s2 * (lambda d_t h + d_n n), h = (c, s), n = (-s, c)
    let gx = -val / s2 * (lambda * d_t * c - d_n * s);
    let gy = -val / s2 * (lambda * d_t * s + d_n * c);
    let gth = -val / s2 * (lambda - 1.0) * d_t * d_n;
    (
        val,
        StateGrad {
            x: -gx,
            y: -gy,
            v: 0.0,
            theta: gth,
        },
        StateGrad {
            x: gx,
            y: gy,
            v: 0.0,
            theta: 0.0,
        },
    )
}

/// Gaussian collision cost over every ordered pair involving `subject`.
/// `others` are the other agents' state sequences in the same scene sample.
pub fn cost_gauss(subject: &[AgentState], others: &[&[AgentState]], sigma: f64, lambda: f64) -> CostGrad {
    let mut out = CostGrad::zeros(subject.len());
    for o in others {
        assert_eq!(o.len(), subject.len(), "horizons must match");
        for (t, (me, them)) in subject.iter().zip(o.iter()).enumerate() {
            let (v1, gi, _) = gauss_pair(me, them, sigma, lambda);
            let (v2, _, gj) = gauss_pair(them, me, sigma, lambda);
            out.value += v1 + v2;
            out.grad[t] += gi;
            out.grad[t] += gj;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Point;

    fn at(x: f64, y: f64, v: f64, th: f64) -> AgentState {
        AgentState::new(x, y, v, th)
    }

    #[test]
    fn coll_examples() {
        let ego = [at(0.0, 0.0, 0.0, 0.0), at(0.0, 0.0, 0.0, 0.0)];
        let adv = [at(2.0, 0.0, 0.0, 0.0), at(0.0, 3.0, 0.0, 0.0)];
        assert_eq!(cost_coll(&ego, &adv).value, -5.0);
        let c = cost_coll(&ego, &ego);
        assert_eq!(c.value, 0.0);
        assert!(c.grad.iter().all(|g| *g == StateGrad::default()));
    }

    #[test]
    fn v_examples() {
        let e = [at(0.0, 0.0, 5.0, 0.0)];
        let a = [at(1.0, 0.0, 3.0, 0.0)];
        assert_eq!(cost_v(&e, &a, 0.0, 5.0).value, 2.0);
        assert_eq!(cost_v(&e, &[at(6.0, 0.0, 3.0, 0.0)], 0.0, 5.0).value, 0.0);
        assert_eq!(cost_v(&e, &a, 2.0, 5.0).value, 0.0);
    }

    #[test]
    fn ttc_point_examples() {
        let p = ttc_point(3.0, 0.0, -1.0, 0.0);
        assert_eq!((p.t_col, p.d_col2), (3.0, 0.0));
        let p = ttc_point(3.0, 0.0, 1.0, 0.0);
        assert_eq!((p.t_col, p.d_col2), (0.0, 9.0));
        let p = ttc_point(3.0, 4.0, 0.0, 0.0);
        assert_eq!((p.t_col, p.d_col2), (0.0, 25.0));
    }

    #[test]
    fn ttc_cost_examples() {
        // Coincident and static: exponent 0.
        let s = [at(1.0, 1.0, 0.0, 0.0)];
        assert_eq!(cost_ttc(&s, &s, 4.0, 4.0).value, -1.0);
        // Receding and far.
        let e = [at(0.0, 0.0, 5.0, std::f64::consts::PI)];
        let a = [at(60.0, 0.0, 5.0, 0.0)];
        assert!(cost_ttc(&e, &a, 4.0, 4.0).value.abs() < 1e-12);
    }

    #[test]
    fn route_examples() {
        let route = Route::new(vec![Point::new(0.0, 0.0), Point::new(100.0, 0.0)]).unwrap();
        let on = [at(1.0, 0.0, 1.0, 0.0), at(50.0, 0.0, 1.0, 0.0)];
        assert_eq!(cost_route(&on, &route, 0.5).value, 0.0);
        let states = [at(10.0, 0.0, 0.0, 0.0), at(20.0, 1.0, 0.0, 0.0), at(30.0, -3.0, 0.0, 0.0)];
        assert_eq!(cost_route(&states, &route, 2.0).value, 1.0);
    }

    #[test]
    fn gauss_examples() {
        let a = at(0.0, 0.0, 0.0, 0.3);
        assert_eq!(gauss_pair(&a, &a, 1.0, 1.0).0, 1.0);
        let b = at(0.3f64.cos(), 0.3f64.sin(), 0.0, 0.3);
        assert!((gauss_pair(&a, &b, 1.0, 1.0).0 - (-0.5f64).exp()).abs() < 1e-12);
        // Equal headings, lambda = 1: both orderings agree.
        let c = at(0.7, -1.1, 0.0, 0.3);
        assert!((gauss_pair(&a, &c, 1.3, 1.0).0 - gauss_pair(&c, &a, 1.3, 1.0).0).abs() < 1e-12);
    }
}
