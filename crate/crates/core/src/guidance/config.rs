use serde::{Deserialize, Serialize};

use crate::scene::AgentId;
use crate::{Error, Result};

/// How an agent's adversarial weight is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoMode {
    /// Weight 1 for agents listed in `adversary_ids`, 0 otherwise.
    Fixed,
    /// Softmax of negative distance to the ego across dynamic-mode agents.
    Dynamic,
}

/// Per-agent guidance parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuidanceConfig {
    pub rho_mode: RhoMode,
    pub w_coll: f64,
    pub w_v: f64,
    pub w_ttc: f64,
    pub w_route: f64,
    pub w_gauss: f64,
    /// Desired ego-minus-adversary speed difference (m/s).
    pub v_diff: f64,
    /// Distance gate for the speed term (m).
    pub d_col: f64,
    /// Time bandwidth (s^2).
    pub lambda_t: f64,
    /// Distance bandwidth (m^2).
    pub lambda_d: f64,
    /// Route deviation margin (m).
    pub d_m: f64,
    pub sigma: f64,
    pub lambda_tangential: f64,
    pub alpha_step: f64,
    /// Partial-diffusion ratio used when a proposal is active.
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adversary_ids: Option<Vec<AgentId>>,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            rho_mode: RhoMode::Fixed,
            w_coll: 1.0,
            w_v: 1.0,
            w_ttc: 1.0,
            w_route: 1.0,
            w_gauss: 1.0,
            v_diff: 0.0,
            d_col: 10.0,
            lambda_t: 4.0,
            lambda_d: 4.0,
            d_m: 1.5,
            sigma: 1.0,
            lambda_tangential: 1.0,
            alpha_step: 1.0,
            gamma: 0.5,
            adversary_ids: Some(Vec::new()),
        }
    }
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("w_coll", self.w_coll),
            ("w_v", self.w_v),
            ("w_ttc", self.w_ttc),
            ("w_route", self.w_route),
            ("w_gauss", self.w_gauss),
            ("alpha_step", self.alpha_step),
            ("d_m", self.d_m),
            ("d_col", self.d_col),
            ("lambda_tangential", self.lambda_tangential),
        ];
        for (name, w) in weights {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite and nonnegative, got {w}")));
            }
        }
        for (name, w) in [("lambda_t", self.lambda_t), ("lambda_d", self.lambda_d), ("sigma", self.sigma)] {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {w}")));
            }
        }
        if !self.v_diff.is_finite() {
            return Err(Error::InvalidConfig("v_diff must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if self.rho_mode == RhoMode::Fixed && self.adversary_ids.is_none() {
            return Err(Error::InvalidConfig("fixed rho mode requires adversary_ids".into()));
        }
        Ok(())
    }

    /// True when this agent is a listed adversary in fixed mode.
    pub fn lists(&self, id: AgentId) -> bool {
        self.adversary_ids.as_ref().is_some_and(|ids| ids.contains(&id))
    }
}
