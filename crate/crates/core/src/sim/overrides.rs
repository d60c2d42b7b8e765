use serde::{Deserialize, Serialize};

use crate::guidance::RhoMode;
use crate::planners::PlannerKind;
use crate::scene::{Role, ScenarioSpec};
use crate::{Error, Result};

/// Sets a named guidance or proposal parameter on every non-ego agent.
/// `proposal_offset` replaces the offsets of agents that carry a proposal.
pub fn apply_param(spec: &mut ScenarioSpec, path: &str, value: f64) -> Result<()> {
    for a in spec.agents.iter_mut().filter(|a| a.role != Role::Ego) {
        let g = &mut a.params.guidance;
        let slot = match path {
            "w_coll" => &mut g.w_coll,
            "w_v" => &mut g.w_v,
            "w_ttc" => &mut g.w_ttc,
            "w_route" => &mut g.w_route,
            "w_gauss" => &mut g.w_gauss,
            "v_diff" => &mut g.v_diff,
            "d_col" => &mut g.d_col,
            "lambda_t" => &mut g.lambda_t,
            "lambda_d" => &mut g.lambda_d,
            "d_m" => &mut g.d_m,
            "sigma" => &mut g.sigma,
            "lambda_tangential" => &mut g.lambda_tangential,
            "alpha_step" => &mut g.alpha_step,
            "gamma" => &mut g.gamma,
            "proposal_offset" => {
                if let Some(p) = &mut a.params.proposal {
                    p.offsets = vec![value];
                }
                continue;
            }
            other => return Err(Error::InvalidArgument(format!("unknown parameter path '{other}'"))),
        };
        *slot = value;
    }
    spec.validate()?;
    for a in &spec.agents {
        if let Some(p) = &a.params.proposal {
            p.validate()?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoOverride {
    /// Keep each agent's fixed adversary assignment.
    Fixed,
    /// Softmax over every non-ego agent.
    Dynamic,
    /// No adversarial weight anywhere.
    Off,
}

/// Scenario-wide adjustments shared by the command line and sweeps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Overrides {
    pub planner: Option<PlannerKind>,
    pub rho_mode: Option<RhoOverride>,
    pub gamma: Option<f64>,
    pub w_ttc: Option<f64>,
    pub v_diff: Option<f64>,
    pub proposal_offset: Option<f64>,
    /// Zero the route and Gaussian regularization weights.
    pub no_regularization: bool,
}

impl Overrides {
    pub fn apply(&self, spec: &mut ScenarioSpec) -> Result<()> {
        if let Some(k) = self.planner {
            spec.planner.kind = k;
        }
        if let Some(mode) = self.rho_mode {
            for a in spec.agents.iter_mut().filter(|a| a.role != Role::Ego) {
                let g = &mut a.params.guidance;
                match mode {
                    RhoOverride::Fixed => {
                        g.rho_mode = RhoMode::Fixed;
                        g.adversary_ids.get_or_insert_with(Vec::new);
                    }
                    RhoOverride::Dynamic => g.rho_mode = RhoMode::Dynamic,
                    RhoOverride::Off => {
                        g.rho_mode = RhoMode::Fixed;
                        g.adversary_ids = Some(Vec::new());
                    }
                }
            }
        }
        let params = [("gamma", self.gamma), ("w_ttc", self.w_ttc), ("v_diff", self.v_diff), ("proposal_offset", self.proposal_offset)];
        for (path, v) in params {
            if let Some(v) = v {
                apply_param(spec, path, v)?;
            }
        }
        if self.no_regularization {
            apply_param(spec, "w_route", 0.0)?;
            apply_param(spec, "w_gauss", 0.0)?;
        }
        spec.validate()
    }
}
