//! Controllability sweeps: one simulation per (value, seed, scenario) cell,
//! metrics per cell and per value.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::DenoiserModel;
use crate::guidance::GuidanceConfig;
use crate::library::load_dir;
use crate::metrics::{aggregate, MetricsReport};
use crate::scene::ScenarioSpec;
use crate::sim::{apply_param, run, Overrides, SimConfig, SimLog};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Parameter path, e.g. `w_ttc`, `v_diff`, `gamma`, `proposal_offset`.
    pub param: String,
    pub values: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Scenario files or directories of them, relative to the spec file.
    pub scenarios: Vec<PathBuf>,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub value: f64,
    pub seed: u64,
    pub scenario: String,
    pub log: SimLog,
    pub report: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub param: String,
    /// Value-major, then seed, then scenario.
    pub cells: Vec<SweepCell>,
    /// Batch metrics per value over all its seeds and scenarios.
    pub marginals: Vec<(f64, MetricsReport)>,
}

impl SweepSpec {
    fn load_scenarios(&self, base: &Path) -> Result<Vec<ScenarioSpec>> {
        let mut out = Vec::new();
        for p in &self.scenarios {
            let p = if p.is_absolute() { p.clone() } else { base.join(p) };
            if p.is_dir() {
                out.extend(load_dir(&p)?);
            } else {
                out.push(ScenarioSpec::load(&p)?);
            }
        }
        Ok(out)
    }

    /// Resolves the scenarios and checks the sweep is well formed.
    pub fn prepare(&self, base: &Path) -> Result<Vec<ScenarioSpec>> {
        if self.values.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one value and one seed".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("sweep values must be finite".into()));
        }
        self.sim.validate()?;
        let mut specs = self.load_scenarios(base)?;
        if specs.is_empty() {
            return Err(Error::InvalidConfig("sweep has no scenarios".into()));
        }
        for s in &mut specs {
            self.overrides.apply(s)?;
            apply_param(&mut s.clone(), &self.param, self.values[0])?;
        }
        Ok(specs)
    }
}

fn lambdas() -> (f64, f64) {
    let g = GuidanceConfig::default();
    (g.lambda_t, g.lambda_d)
}

/// Runs every cell in parallel; results are ordered independently of the
/// thread schedule.
pub fn run_sweep(spec: &SweepSpec, base: &Path, model: &DenoiserModel) -> Result<SweepResult> {
    let scenarios = spec.prepare(base)?;
    let n = scenarios.len();
    let jobs: Vec<(f64, u64, usize)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.seeds.iter().flat_map(move |&s| (0..n).map(move |i| (v, s, i))))
        .collect();
    let (lt, ld) = lambdas();
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(value, seed, i)| {
            let mut s = scenarios[i].clone();
            apply_param(&mut s, &spec.param, value)?;
            let cfg = SimConfig {
                seed: Some(seed),
                ..spec.sim.clone()
            };
            let log = run(&s, &cfg, model)?;
            let report = aggregate(std::slice::from_ref(&log), None, lt, ld)?;
            Ok(SweepCell {
                value,
                seed,
                scenario: s.name.clone(),
                log,
                report,
            })
        })
        .collect::<Result<_>>()?;
    let marginals = spec
        .values
        .iter()
        .map(|&v| {
            let logs: Vec<SimLog> = cells.iter().filter(|c| c.value == v).map(|c| c.log.clone()).collect();
            Ok((v, aggregate(&logs, None, lt, ld)?))
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        param: spec.param.clone(),
        cells,
        marginals,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn row(out: &mut String, param: &str, value: f64, seed: &str, scenario: &str, r: &MetricsReport) {
    let _ = writeln!(
        out,
        "{param},{value},{seed},{scenario},{},{},{},{},{},{},{},{}",
        r.runs,
        r.collision_rate,
        opt(r.collision_rel_speed),
        opt(r.ttc_cost_pre_collision),
        r.ego_other_collision,
        r.adv_offroad,
        r.other_offroad,
        r.other_collision
    );
}

impl SweepResult {
    pub fn row_count(&self) -> usize {
        self.cells.len() + self.marginals.len()
    }

    /// One row per cell, then one `all`/`all` marginal row per value.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "param,value,seed,scenario,runs,collision_rate,collision_rel_speed,ttc_cost_pre_collision,ego_other_collision,adv_offroad,other_offroad,other_collision\n",
        );
        for c in &self.cells {
            row(&mut s, &self.param, c.value, &c.seed.to_string(), &c.scenario, &c.report);
        }
        for (v, r) in &self.marginals {
            row(&mut s, &self.param, *v, "all", "all", r);
        }
        s
    }
}
