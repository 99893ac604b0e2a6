//! Run configuration (TOML). Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bgw_core::eigen::EigenOptions;
use bgw_core::experiments::ExperimentSpec;
use bgw_core::model::ModelSpec;
use bgw_core::operator::MOptions;
use bgw_core::{Extension, MatingFunction, RowLaw, SimOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Optional cross-checks of the dimensions implied by `mating`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    pub mating: MatingFunction,
    /// One row law per couple type.
    pub offspring: Vec<RowLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sex_split: Option<(usize, usize)>,
}

impl ModelConfig {
    pub fn to_spec(&self) -> Result<ModelSpec> {
        let mut spec = ModelSpec::new(
            self.mating.clone(),
            bgw_core::OffspringLaw::new(self.offspring.clone()),
        );
        if self.sex_split.is_some() {
            spec.sex_split = self.sex_split;
        }
        if let Some(p) = self.p.filter(|&p| p != spec.p()) {
            bail!(
                "dimension consistency fails: model.p = {p} but the mating function has p = {}",
                spec.p()
            );
        }
        if let Some(q) = self.q.filter(|&q| q != spec.q()) {
            bail!(
                "dimension consistency fails: model.q = {q} but the mating function has q = {}",
                spec.q()
            );
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub r_max: f64,
    pub max_iter: usize,
    pub starts: usize,
    pub diverge_cap: f64,
    pub critical_band: f64,
    pub primitivity_n_max: usize,
    pub finiteness_samples: usize,
    pub extension: Extension,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let e = EigenOptions::default();
        Self {
            tol: e.tol,
            r_max: e.m.r_max,
            max_iter: e.max_iter,
            starts: e.starts,
            diverge_cap: e.m.diverge_cap,
            critical_band: e.critical_band,
            primitivity_n_max: e.primitivity_n_max,
            finiteness_samples: e.finiteness_samples,
            extension: e.m.extension,
        }
    }
}

impl SolverConfig {
    pub fn eigen_options(&self, seed: u64) -> EigenOptions {
        EigenOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            starts: self.starts,
            seed,
            primitivity_n_max: self.primitivity_n_max,
            finiteness_samples: self.finiteness_samples,
            critical_band: self.critical_band,
            m: MOptions {
                tol: self.tol,
                r_max: self.r_max,
                diverge_cap: self.diverge_cap,
                extension: self.extension,
                ..MOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub z0: Vec<u64>,
    pub horizon: usize,
    pub trials: u64,
    /// Trial index whose path is written to `trajectory.csv`.
    pub trial: u64,
    pub exact_threshold: u64,
    pub allow_normal_approx: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_cap: Option<u64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            z0: Vec::new(),
            horizon: 50,
            trials: 1_000,
            trial: 0,
            exact_threshold: SimOptions::default().exact_threshold,
            allow_normal_approx: false,
            escape_cap: None,
        }
    }
}

impl SimulateConfig {
    pub fn options(&self) -> SimOptions {
        SimOptions {
            exact_threshold: self.exact_threshold,
            allow_normal_approx: self.allow_normal_approx,
            escape_cap: self.escape_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSpec>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
