use super::{wrap_angle, AgentId, AgentState, Point, Route, VehicleShape};

/// History length in steps; the context holds `T_HIST + 1` states.
pub const T_HIST: usize = 10;
pub const NUM_NEIGHBORS: usize = 4;
/// Arc-length offsets (m) ahead of the agent at which route points are sampled.
pub const ROUTE_LOOKAHEAD: [f64; 7] = [2.0, 5.0, 10.0, 15.0, 20.0, 30.0, 40.0];

const SELF_FEATURES: usize = 4 * (T_HIST + 1);
const NEIGHBOR_FEATURES: usize = 10;
const ROUTE_FEATURES: usize = 3 + 2 * ROUTE_LOOKAHEAD.len();
pub const CONTEXT_DIM: usize = SELF_FEATURES + NUM_NEIGHBORS * NEIGHBOR_FEATURES + ROUTE_FEATURES;

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub id: AgentId,
    pub shape: VehicleShape,
    /// Agent-frame history, oldest first.
    pub history: Vec<AgentState>,
    /// Current world-frame state.
    pub world: AgentState,
}

/// Agent-centric observation used by the denoiser and the planners.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionContext {
    pub agent_id: AgentId,
    /// Current world-frame state; the origin of the agent frame.
    pub origin: AgentState,
    pub shape: VehicleShape,
    /// Agent-frame history, oldest first, `T_HIST + 1` entries.
    pub history: Vec<AgentState>,
    /// Nearest neighbors by Euclidean distance; `None` marks an absent slot.
    pub neighbors: Vec<Option<Neighbor>>,
    pub route_progress: f64,
    pub route_remaining: f64,
    pub route_offset: f64,
    pub heading_error: f64,
    /// Route points ahead in the agent frame, one per `ROUTE_LOOKAHEAD` entry.
    pub route_ahead: Vec<Point>,
}

/// Last `T_HIST + 1` states, padded at the front by repeating the earliest.
fn padded_window(states: &[AgentState]) -> Vec<AgentState> {
    let n = T_HIST + 1;
    if states.len() >= n {
        states[states.len() - n..].to_vec()
    } else {
        let mut out = vec![states[0]; n - states.len()];
        out.extend_from_slice(states);
        out
    }
}

impl DecisionContext {
    /// Builds the context of agent `subject` from every agent's executed
    /// history (oldest first, last entry = current state).
    pub fn build(
        subject: usize,
        ids: &[AgentId],
        histories: &[&[AgentState]],
        shapes: &[VehicleShape],
        route: &Route,
    ) -> Self {
        let own = padded_window(histories[subject]);
        let origin = *own.last().unwrap();
        let history = own.iter().map(|s| origin.to_local(s)).collect();

        let mut others: Vec<(f64, usize)> = (0..histories.len())
            .filter(|&j| j != subject)
            .map(|j| (histories[j].last().unwrap().position().distance(origin.position()), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut neighbors: Vec<Option<Neighbor>> = others
            .iter()
            .take(NUM_NEIGHBORS)
            .map(|&(_, j)| {
                let win = padded_window(histories[j]);
                Some(Neighbor {
                    id: ids[j],
                    shape: shapes[j],
                    world: *win.last().unwrap(),
                    history: win.iter().map(|s| origin.to_local(s)).collect(),
                })
            })
            .collect();
        neighbors.resize(NUM_NEIGHBORS, None);

        let proj = route.project(origin.position());
        let route_ahead = ROUTE_LOOKAHEAD
            .iter()
            .map(|&d| origin.local_point(route.polyline.point_at(proj.arc_length + d)))
            .collect();
        Self {
            agent_id: ids[subject],
            origin,
            shape: shapes[subject],
            history,
            neighbors,
            route_progress: proj.arc_length,
            route_remaining: route.length() - proj.arc_length,
            route_offset: proj.normal_offset,
            heading_error: wrap_angle(origin.theta - proj.tangent_heading),
            route_ahead,
        }
    }

    /// Fixed-size feature vector fed to the denoiser.
    pub fn features(&self) -> Vec<f32> {
        let mut f = Vec::with_capacity(CONTEXT_DIM);
        for s in &self.history {
            f.extend([s.x, s.y, s.v, s.theta].map(|v| v as f32));
        }
        for n in &self.neighbors {
            match n {
                Some(n) => {
                    let cur = n.history[T_HIST];
                    let past = n.history[T_HIST / 2];
                    f.extend(
                        [
                            1.0,
                            cur.x,
                            cur.y,
                            cur.theta.cos(),
                            cur.theta.sin(),
                            cur.v,
                            past.x,
                            past.y,
                            n.shape.length,
                            n.shape.width,
                        ]
                        .map(|v| v as f32),
                    );
                }
                None => f.extend([0.0f32; NEIGHBOR_FEATURES]),
            }
        }
        f.push(self.route_remaining.min(100.0) as f32);
        f.push(self.route_offset as f32);
        f.push(self.heading_error as f32);
        for p in &self.route_ahead {
            f.push(p.x as f32);
            f.push(p.y as f32);
        }
        debug_assert_eq!(f.len(), CONTEXT_DIM);
        f
    }
}
