use std::path::Path;

use serde::{Deserialize, Serialize};

use super::map::LaneRecord;
use super::{wrap_angle, AgentState, LaneId, LaneMap, Route, VehicleShape};
use crate::guidance::GuidanceConfig;
use crate::planners::PlannerConfig;
pub use crate::proposals::ProposalConfig;
use crate::{Error, Result};

pub type AgentId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Ego,
    Adversary,
    Reactive,
}

/// Per-agent control parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    #[serde(default)]
    pub guidance: GuidanceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal: Option<ProposalConfig>,
}

#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub id: AgentId,
    pub role: Role,
    pub initial: AgentState,
    pub shape: VehicleShape,
    pub route_lanes: Vec<LaneId>,
    pub route: Route,
    pub params: AgentParams,
}

/// A complete simulation setup: map, agents, duration, and seed.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub map: LaneMap,
    pub agents: Vec<AgentSpec>,
    pub horizon_seconds: f64,
    pub seed: u64,
    pub planner: PlannerConfig,
}

#[derive(Debug, Serialize, Deserialize)]
struct MapRecord {
    lanes: Vec<LaneRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AgentRecord {
    id: AgentId,
    role: Role,
    state: [f64; 4],
    shape: [f64; 2],
    route: Vec<LaneId>,
    #[serde(default)]
    psi: AgentParams,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioRecord {
    #[serde(default)]
    name: String,
    map: MapRecord,
    agents: Vec<AgentRecord>,
    horizon_s: f64,
    seed: u64,
    #[serde(default)]
    planner: PlannerConfig,
}

impl ScenarioSpec {
    pub fn new(
        name: impl Into<String>,
        map: LaneMap,
        agents: Vec<AgentSpec>,
        horizon_seconds: f64,
        seed: u64,
        planner: PlannerConfig,
    ) -> Result<Self> {
        let s = Self {
            name: name.into(),
            map,
            agents,
            horizon_seconds,
            seed,
            planner,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let egos = self.agents.iter().filter(|a| a.role == Role::Ego).count();
        if egos != 1 {
            return Err(Error::InvalidScenario(format!("expected exactly one ego, found {egos}")));
        }
        if !(self.horizon_seconds > 0.0) || !self.horizon_seconds.is_finite() {
            return Err(Error::InvalidScenario("horizon_s must be positive".into()));
        }
        let mut ids: Vec<AgentId> = self.agents.iter().map(|a| a.id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.agents.len() {
            return Err(Error::InvalidScenario("duplicate agent id".into()));
        }
        for a in &self.agents {
            if !a.initial.is_finite() || a.initial.v < 0.0 {
                return Err(Error::InvalidScenario(format!("agent {} has invalid state", a.id)));
            }
            a.params
                .guidance
                .validate()
                .map_err(|e| Error::InvalidScenario(format!("agent {}: {e}", a.id)))?;
        }
        self.planner
            .validate()
            .map_err(|e| Error::InvalidScenario(format!("planner: {e}")))?;
        Ok(())
    }

    pub fn ego_index(&self) -> usize {
        self.agents.iter().position(|a| a.role == Role::Ego).expect("validated")
    }

    pub fn agent_index(&self, id: AgentId) -> Option<usize> {
        self.agents.iter().position(|a| a.id == id)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: ScenarioRecord = serde_json::from_str(text)?;
        let map = LaneMap::from_records(&rec.map.lanes)?;
        let agents = rec
            .agents
            .into_iter()
            .map(|a| {
                let shape = VehicleShape::new(a.shape[0], a.shape[1])
                    .map_err(|e| Error::InvalidScenario(format!("agent {}: {e}", a.id)))?;
                let route = Route::from_lanes(&map, &a.route)?;
                let [x, y, v, th] = a.state;
                Ok(AgentSpec {
                    id: a.id,
                    role: a.role,
                    initial: AgentState::new(x, y, v, wrap_angle(th)),
                    shape,
                    route_lanes: a.route,
                    route,
                    params: a.psi,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ScenarioSpec::new(rec.name, map, agents, rec.horizon_s, rec.seed, rec.planner)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        let rec = ScenarioRecord {
            name: self.name.clone(),
            map: MapRecord {
                lanes: self.map.to_records(),
            },
            agents: self
                .agents
                .iter()
                .map(|a| AgentRecord {
                    id: a.id,
                    role: a.role,
                    state: a.initial.to_array(),
                    shape: [a.shape.length, a.shape.width],
                    route: a.route_lanes.clone(),
                    psi: a.params.clone(),
                })
                .collect(),
            horizon_s: self.horizon_seconds,
            seed: self.seed,
            planner: self.planner.clone(),
        };
        Ok(serde_json::to_string_pretty(&rec)?)
    }
}
