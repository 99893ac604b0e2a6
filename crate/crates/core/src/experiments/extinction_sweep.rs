use serde::{Deserialize, Serialize};

use super::{Cell, ExperimentError, ExperimentReport};
use crate::catalog::spec;
use crate::eigen::{classify, solve_eigen, Criticality, EigenOptions, EigenOutcome};
use crate::model::{fingerprint_json, validate_model, ModelSpec};
use crate::rng::derive_seed;
use crate::sim::{batch_extinction, SimOptions};

/// A one-parameter family of models; the swept parameter is named by
/// [`ModelFamily::parameter_name`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelFamily {
    /// Poisson means `(mu, male_mean)`, sweeping `mu`; `lambda* = min(mu, male_mean)`.
    SingleTypePerfectFidelity { male_mean: f64 },
    /// Classical Galton-Watson with Poisson(`mu`) offspring.
    AsexualPoisson,
    /// `X = alpha I + beta J`, `Y = alpha' I + beta' J`, sweeping `beta`.
    SymmetricPerfectFidelity {
        p: usize,
        alpha: f64,
        alpha_prime: f64,
        beta_prime: f64,
    },
    /// Promiscuous single type with female mean `mu` swept.
    PromiscuousSingle { male_mean: f64 },
}

impl ModelFamily {
    pub fn parameter_name(&self) -> &'static str {
        match self {
            ModelFamily::SymmetricPerfectFidelity { .. } => "beta",
            _ => "mu",
        }
    }

    pub fn spec(&self, x: f64) -> ModelSpec {
        match *self {
            ModelFamily::SingleTypePerfectFidelity { male_mean } => {
                spec::single_type_perfect_fidelity(x, male_mean)
            }
            ModelFamily::AsexualPoisson => spec::asexual_poisson(x),
            ModelFamily::SymmetricPerfectFidelity {
                p,
                alpha,
                alpha_prime,
                beta_prime,
            } => spec::symmetric_perfect_fidelity(p, alpha, x, alpha_prime, beta_prime),
            ModelFamily::PromiscuousSingle { male_mean } => spec::promiscuous_single(x, male_mean),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtinctionSweepParams {
    pub family: ModelFamily,
    pub grid: Vec<f64>,
    /// Start state; a single entry is repeated over all `p` types.
    pub z0: Vec<u64>,
    pub horizon: usize,
    pub trials: u64,
    /// Cells with `lambda* <= sub_lambda` must have `q_hat >= sub_min_q`.
    pub sub_lambda: f64,
    pub sub_min_q: f64,
    /// Cells with `lambda* >= super_lambda` must have `q_hat <= super_max_q`.
    pub super_lambda: f64,
    pub super_max_q: f64,
    pub sim: SimOptions,
}

impl Default for ExtinctionSweepParams {
    fn default() -> Self {
        Self {
            family: ModelFamily::SingleTypePerfectFidelity { male_mean: 2.0 },
            grid: vec![0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6],
            z0: vec![50],
            horizon: 50,
            trials: 1_000,
            sub_lambda: 0.9,
            sub_min_q: 0.99,
            super_lambda: 1.2,
            super_max_q: 0.9,
            sim: SimOptions::default(),
        }
    }
}

/// Solves for `lambda*` and estimates `q_hat` at every grid point. A cell
/// that fails to build, solve or simulate is recorded as failed and the
/// sweep continues.
pub fn extinction_sweep(
    params: &ExtinctionSweepParams,
    eigen: &EigenOptions,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new(
        "extinction_sweep",
        fingerprint_json(&(&params.family, &params.grid)),
        seed,
        serde_json::to_value(params).expect("parameters serialise"),
    );
    let name = params.family.parameter_name();
    for (k, &x) in params.grid.iter().enumerate() {
        let cell_seed = derive_seed(seed, k as u64);
        let mut cell = Cell::new(format!("{name}={x}"), params.trials);
        cell.set(name, x);
        if let Err(e) = sweep_cell(params, eigen, x, cell_seed, &mut cell) {
            cell.set("error", e.to_string());
            cell.pass = Some(false);
        }
        report.cells.push(cell);
    }
    Ok(report.finish())
}

fn sweep_cell(
    params: &ExtinctionSweepParams,
    eigen: &EigenOptions,
    x: f64,
    seed: u64,
    cell: &mut Cell,
) -> Result<(), ExperimentError> {
    let model = validate_model(params.family.spec(x)).map_err(ExperimentError::Validation)?;
    let z0 = match params.z0.as_slice() {
        [v] => vec![*v; model.p()],
        v => v.to_vec(),
    };
    super::check_len("z0", z0.len(), model.p())?;
    let outcome = solve_eigen(&model, &EigenOptions { seed, ..*eigen })?;
    let class = classify(&outcome, eigen.critical_band);
    match &outcome {
        EigenOutcome::Finite(r) => cell.set("lambda_star", r.lambda_star),
        EigenOutcome::InfiniteOperator { .. } => cell.set("lambda_star", "inf"),
    }
    cell.set("class", class.to_string());
    let s = batch_extinction(
        &model,
        &z0,
        params.horizon,
        params.trials,
        seed,
        &params.sim,
    )?;
    cell.set_f64("q_hat", s.q_hat);
    cell.set_f64("ci95_lo", s.ci95.lo);
    cell.set_f64("ci95_hi", s.ci95.hi);
    cell.set("extinct", s.extinct_count);
    cell.set("escaped", s.escaped_count);
    if let Some(q) = s.survivor_mass {
        cell.set_f64("survivor_mass_median", q.median);
    }
    let lambda = outcome.finite().map_or(f64::INFINITY, |r| r.lambda_star);
    let expect = if lambda <= params.sub_lambda {
        cell.pass = Some(s.q_hat >= params.sub_min_q);
        "extinction"
    } else if lambda >= params.super_lambda || class == Criticality::SurvivalFromLargeStates {
        cell.pass = Some(s.q_hat <= params.super_max_q);
        "survival"
    } else {
        "none"
    };
    cell.set("asserted", expect);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_crosses_the_boundary() {
        let params = ExtinctionSweepParams {
            grid: vec![0.6, 1.0, 1.6],
            z0: vec![20],
            horizon: 100,
            trials: 200,
            sim: SimOptions {
                escape_cap: Some(500),
                ..SimOptions::default()
            },
            ..ExtinctionSweepParams::default()
        };
        let r = extinction_sweep(&params, &EigenOptions::default(), 2).unwrap();
        assert!(r.passed, "{}", r.to_csv());
        assert_eq!(r.cells[1].values["class"], "Critical");
        assert_eq!(r.cells[1].pass, None);
        assert_eq!(r.cells[0].values["asserted"], "extinction");
        assert_eq!(r.cells[2].values["asserted"], "survival");
    }

    #[test]
    fn broken_cell_is_recorded() {
        let params = ExtinctionSweepParams {
            family: ModelFamily::AsexualPoisson,
            grid: vec![0.0, 0.5],
            z0: vec![1],
            trials: 20,
            ..ExtinctionSweepParams::default()
        };
        let r = extinction_sweep(&params, &EigenOptions::default(), 0).unwrap();
        assert!(!r.passed);
        assert!(r.cells[0].values.contains_key("error"));
        assert_eq!(r.cells[1].pass, Some(true));
    }
}
