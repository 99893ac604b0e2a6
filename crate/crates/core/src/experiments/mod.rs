//! Monte Carlo checks of the limit theorems.
//!
//! Every experiment is a pure function of the model, its parameter block
//! and a seed. Pass/fail thresholds are fields of the parameter blocks.

mod corridor;
mod domination;
mod extinction_sweep;
mod lln;
mod profile;
mod report;
mod supermartingale;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::{solve_eigen, Criticality, EigenError, EigenOptions, EigenOutcome, EigenResult};
use crate::model::{ValidatedModel, ValidationReport};
use crate::operator::OperatorError;
use crate::sim::{simulate, SimError, SimOptions, Trajectory};

pub use corridor::{corridor_experiment, CorridorParams};
pub use domination::{domination_experiment, DominationCase, DominationParams};
pub use extinction_sweep::{extinction_sweep, ExtinctionSweepParams, ModelFamily};
pub use lln::{lln_experiment, LlnParams};
pub use profile::{profile_experiment, ProfileParams};
pub use report::{Cell, ExperimentReport};
pub use supermartingale::{supermartingale_experiment, SupermartingaleParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("model is invalid: {0}")]
    Validation(ValidationReport),
    #[error("invalid experiment parameter: {0}")]
    BadParameter(String),
    #[error("experiment needs a finite eigenpair but the model is {0}")]
    NoEigenpair(Criticality),
    #[error("experiment `{0}` needs a model block")]
    MissingModel(String),
}

/// Experiment name and parameter block, as read from a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ExperimentSpec {
    Lln(LlnParams),
    Profile(ProfileParams),
    Corridor(CorridorParams),
    Supermartingale(SupermartingaleParams),
    Domination(DominationParams),
    ExtinctionSweep(ExtinctionSweepParams),
}

impl ExperimentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentSpec::Lln(_) => "lln",
            ExperimentSpec::Profile(_) => "profile",
            ExperimentSpec::Corridor(_) => "corridor",
            ExperimentSpec::Supermartingale(_) => "supermartingale",
            ExperimentSpec::Domination(_) => "domination",
            ExperimentSpec::ExtinctionSweep(_) => "extinction_sweep",
        }
    }

    pub fn needs_model(&self) -> bool {
        !matches!(self, ExperimentSpec::ExtinctionSweep(_))
    }
}

pub const EXPERIMENT_NAMES: [&str; 6] = [
    "lln",
    "profile",
    "corridor",
    "supermartingale",
    "domination",
    "extinction_sweep",
];

/// Runs the experiment named by `spec`.
///
/// `eigen` governs every eigenpair solve; its seed is replaced by `seed`.
pub fn run_experiment(
    spec: &ExperimentSpec,
    model: Option<&ValidatedModel>,
    eigen: &EigenOptions,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    let need = || model.ok_or_else(|| ExperimentError::MissingModel(spec.name().to_string()));
    match spec {
        ExperimentSpec::Lln(p) => lln_experiment(need()?, p, seed),
        ExperimentSpec::Profile(p) => {
            let m = need()?;
            let pair = finite_eigen(m, eigen, seed)?;
            profile_experiment(m, p, &pair, seed)
        }
        ExperimentSpec::Corridor(p) => corridor_experiment(need()?, p, seed),
        ExperimentSpec::Supermartingale(p) => {
            let m = need()?;
            let pair = finite_eigen(m, eigen, seed)?;
            supermartingale_experiment(m, p, &pair, seed)
        }
        ExperimentSpec::Domination(p) => domination_experiment(need()?, p, seed),
        ExperimentSpec::ExtinctionSweep(p) => extinction_sweep(p, eigen, seed),
    }
}

/// Solves for `(lambda*, z*)`, failing when `M` is infinite.
pub fn finite_eigen(
    model: &ValidatedModel,
    opts: &EigenOptions,
    seed: u64,
) -> Result<EigenResult, ExperimentError> {
    let opts = EigenOptions { seed, ..*opts };
    match solve_eigen(model, &opts)? {
        EigenOutcome::Finite(r) => Ok(r),
        EigenOutcome::InfiniteOperator { .. } => Err(ExperimentError::NoEigenpair(
            Criticality::SurvivalFromLargeStates,
        )),
    }
}

fn check_len(what: &str, v: usize, p: usize) -> Result<(), ExperimentError> {
    if v != p {
        return Err(ExperimentError::BadParameter(format!(
            "{what} has length {v}, expected p={p}"
        )));
    }
    Ok(())
}

/// Full paths of `trials` independent trials, without an escape cap.
fn paths(
    model: &ValidatedModel,
    z0: &[u64],
    horizon: usize,
    trials: u64,
    seed: u64,
    sim: &SimOptions,
) -> Result<Vec<Trajectory>, SimError> {
    let opts = SimOptions {
        escape_cap: None,
        ..*sim
    };
    (0..trials)
        .into_par_iter()
        .map(|t| simulate(model, z0, horizon, seed, t, &opts))
        .collect()
}

/// `Z_0..Z_horizon`, continued by zeros after absorption.
fn padded(t: &Trajectory, horizon: usize) -> Vec<Vec<u64>> {
    let p = t.z_path[0].len();
    let mut z = t.z_path.clone();
    z.resize(horizon + 1, vec![0; p]);
    z
}

fn to_real(z: &[u64]) -> Vec<f64> {
    z.iter().map(|&v| v as f64).collect()
}
