use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::events::{CollisionEvent, CollisionKind, Event, OffroadEvent};
use crate::dynamics::{step, Trajectory};
use crate::scene::{ActionInput, AgentId, AgentState, Role, VehicleShape};
use crate::{Error, Result};

pub const LOG_FORMAT: &str = "safesim-log";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentInfo {
    pub id: AgentId,
    pub role: Role,
    pub shape: VehicleShape,
}

/// States after executing `actions` from the previous record's states.
/// Step 0 holds the initial states and no actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub states: Vec<AgentState>,
    pub actions: Vec<ActionInput>,
}

/// One replanning tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub step: usize,
    pub time: f64,
    /// Chosen plan per agent.
    pub plans: Vec<Trajectory>,
    /// Filtering criterion of every sample per agent; empty for the ego.
    pub sample_costs: Vec<Vec<f64>>,
    pub chosen: Vec<Option<usize>>,
    pub rho: Vec<f64>,
    /// Proposal that seeded each agent's chosen sample.
    pub proposal: Vec<Option<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    MaxDuration,
    EgoAdversaryCollision,
    Aborted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub scenario: String,
    pub seed: u64,
    pub dt: f64,
    pub agents: Vec<AgentInfo>,
    pub steps: Vec<StepRecord>,
    pub ticks: Vec<TickRecord>,
    pub events: Vec<Event>,
    pub termination: Termination,
    pub message: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Record {
    Header {
        format: String,
        version: u32,
        scenario: String,
        seed: u64,
        dt: f64,
        agents: Vec<AgentInfo>,
    },
    Tick(TickRecord),
    Step(StepRecord),
    Summary {
        events: Vec<Event>,
        termination: Termination,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        message: Option<String>,
    },
}

impl SimLog {
    pub fn agent_index(&self, id: AgentId) -> Option<usize> {
        self.agents.iter().position(|a| a.id == id)
    }

    pub fn collisions(&self) -> impl Iterator<Item = &CollisionEvent> {
        self.events.iter().filter_map(|e| match e {
            Event::Collision(c) => Some(c),
            Event::Offroad(_) => None,
        })
    }

    pub fn offroads(&self) -> impl Iterator<Item = &OffroadEvent> {
        self.events.iter().filter_map(|e| match e {
            Event::Offroad(o) => Some(o),
            Event::Collision(_) => None,
        })
    }

    /// The first ego-adversary collision, if any.
    pub fn ego_adversary_collision(&self) -> Option<&CollisionEvent> {
        self.collisions().find(|c| c.kind == CollisionKind::EgoAdversary)
    }

    /// Executed state sequence of agent `i`, initial state first.
    pub fn track(&self, i: usize) -> Vec<AgentState> {
        self.steps.iter().map(|s| s.states[i]).collect()
    }

    /// Executed actions of agent `i`.
    pub fn actions(&self, i: usize) -> Vec<ActionInput> {
        self.steps.iter().skip(1).map(|s| s.actions[i]).collect()
    }

    /// Re-executes every logged action and checks the logged states match.
    pub fn is_consistent(&self) -> bool {
        self.steps.windows(2).all(|w| {
            w[0].states.len() == w[1].states.len()
                && w[1].actions.len() == w[1].states.len()
                && w[0]
                    .states
                    .iter()
                    .zip(&w[1].actions)
                    .zip(&w[1].states)
                    .all(|((s, a), next)| step(s, *a, self.dt) == *next)
        })
    }

    /// Writes JSON lines in step order: header, ticks and steps
    /// interleaved, then the summary.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let mut line = |r: &Record| -> Result<()> {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| Error::io("<log>", e))
        };
        line(&Record::Header {
            format: LOG_FORMAT.into(),
            version: LOG_VERSION,
            scenario: self.scenario.clone(),
            seed: self.seed,
            dt: self.dt,
            agents: self.agents.clone(),
        })?;
        let mut ticks = self.ticks.iter().peekable();
        for s in &self.steps {
            while let Some(t) = ticks.next_if(|t| t.step <= s.step) {
                line(&Record::Tick(t.clone()))?;
            }
            line(&Record::Step(s.clone()))?;
        }
        for t in ticks {
            line(&Record::Tick(t.clone()))?;
        }
        line(&Record::Summary {
            events: self.events.clone(),
            termination: self.termination,
            message: self.message.clone(),
        })
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut header = None;
        let mut steps = Vec::new();
        let mut ticks = Vec::new();
        let mut summary = None;
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<log>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Record>(&line)? {
                Record::Header {
                    format,
                    version,
                    scenario,
                    seed,
                    dt,
                    agents,
                } => {
                    if format != LOG_FORMAT || version != LOG_VERSION {
                        return Err(Error::InvalidArgument(format!("unsupported log format {format} v{version}")));
                    }
                    header = Some((scenario, seed, dt, agents));
                }
                Record::Tick(t) => ticks.push(t),
                Record::Step(s) => steps.push(s),
                Record::Summary {
                    events,
                    termination,
                    message,
                } => summary = Some((events, termination, message)),
            }
            if n == 0 && header.is_none() {
                return Err(Error::InvalidArgument("log does not start with a header".into()));
            }
        }
        let (scenario, seed, dt, agents) = header.ok_or_else(|| Error::InvalidArgument("empty log".into()))?;
        let (events, termination, message) =
            summary.ok_or_else(|| Error::InvalidArgument("log has no summary record".into()))?;
        Ok(Self {
            scenario,
            seed,
            dt,
            agents,
            steps,
            ticks,
            events,
            termination,
            message,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_jsonl(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(std::io::BufReader::new(f))
    }
}
