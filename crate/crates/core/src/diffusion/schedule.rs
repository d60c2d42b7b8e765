use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const COSINE_OFFSET: f64 = 0.008;
pub const BETA_MIN: f64 = 1e-4;
pub const BETA_MAX: f64 = 0.05;
pub const DEFAULT_STEPS: usize = 100;

/// Variance schedule indexed by diffusion step `k` in `1..=K`.
///
/// `alpha_bar(0)` is defined as 1 so that step 0 is the clean signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSchedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

fn cosine_g(u: f64) -> f64 {
    let c = ((u + COSINE_OFFSET) / (1.0 + COSINE_OFFSET) * FRAC_PI_2).cos();
    c * c
}

/// Cosine schedule with betas clipped to `[BETA_MIN, BETA_MAX]`. The first
/// beta is the lower bound and the last the upper bound.
pub fn make_cosine_schedule(k: usize) -> Result<DiffusionSchedule> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("diffusion needs at least 2 steps, got {k}")));
    }
    let g0 = cosine_g(0.0);
    let ab = |i: usize| cosine_g(i as f64 / k as f64) / g0;
    let mut betas: Vec<f64> = (1..=k)
        .map(|i| (1.0 - ab(i) / ab(i - 1)).clamp(BETA_MIN, BETA_MAX))
        .collect();
    betas[0] = BETA_MIN;
    betas[k - 1] = BETA_MAX;
    DiffusionSchedule::from_betas(betas)
}

impl DiffusionSchedule {
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.len() < 2 || betas.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::InvalidArgument("betas must lie in (0, 1)".into()));
        }
        let mut alpha_bars = Vec::with_capacity(betas.len() + 1);
        alpha_bars.push(1.0);
        for b in &betas {
            let prev = *alpha_bars.last().unwrap();
            alpha_bars.push(prev * (1.0 - b));
        }
        Ok(Self { betas, alpha_bars })
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.betas[k - 1]
    }

    pub fn alpha(&self, k: usize) -> f64 {
        1.0 - self.beta(k)
    }

    pub fn alpha_bar(&self, k: usize) -> f64 {
        self.alpha_bars[k]
    }

    /// Fixed reverse-step variance `beta_k (1 - abar_{k-1}) / (1 - abar_k)`.
    pub fn posterior_variance(&self, k: usize) -> f64 {
        self.beta(k) * (1.0 - self.alpha_bar(k - 1)) / (1.0 - self.alpha_bar(k))
    }

    /// Coefficients `(c_clean, c_noisy)` of the posterior mean.
    pub fn posterior_coefficients(&self, k: usize) -> (f64, f64) {
        let ab = self.alpha_bar(k);
        let ab_prev = self.alpha_bar(k - 1);
        (
            ab_prev.sqrt() * self.beta(k) / (1.0 - ab),
            self.alpha(k).sqrt() * (1.0 - ab_prev) / (1.0 - ab),
        )
    }
}

/// Closed-form forward marginal `sqrt(abar_k) tau0 + sqrt(1 - abar_k) eps`.
/// Step 0 returns `tau0` unchanged.
pub fn add_noise(tau0: &[f64], k: usize, eps: &[f64], sched: &DiffusionSchedule) -> Vec<f64> {
    assert_eq!(tau0.len(), eps.len());
    if k == 0 {
        return tau0.to_vec();
    }
    let ab = sched.alpha_bar(k);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    tau0.iter().zip(eps).map(|(t, e)| a * t + b * e).collect()
}

/// Mean of `q(tau_{k-1} | tau_k, tau0_hat)`.
pub fn posterior_mean(tau_k: &[f64], tau0_hat: &[f64], k: usize, sched: &DiffusionSchedule) -> Result<Vec<f64>> {
    if k == 0 || k > sched.steps() {
        return Err(Error::InvalidArgument(format!("posterior step must be in 1..={}, got {k}", sched.steps())));
    }
    let (c0, ck) = sched.posterior_coefficients(k);
    Ok(tau0_hat.iter().zip(tau_k).map(|(x0, xk)| c0 * x0 + ck * xk).collect())
}
