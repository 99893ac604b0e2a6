use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_len, Cell, ExperimentError, ExperimentReport};
use crate::linalg::dist1;
use crate::model::ValidatedModel;
use crate::operator::{iterate_m, MOptions};
use crate::rng::derive_seed;
use crate::sim::{final_state, SimOptions};
use crate::stats::Moments;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlnParams {
    /// Direction `z_inf`; trials start from `floor(m z_inf)`.
    pub z_inf: Vec<f64>,
    pub n: usize,
    pub m_grid: Vec<u64>,
    pub trials: u64,
    /// An increase between consecutive `m` is tolerated up to this many
    /// combined standard errors.
    pub se_multiplier: f64,
    pub m_options: MOptions,
    pub sim: SimOptions,
}

impl Default for LlnParams {
    fn default() -> Self {
        Self {
            z_inf: vec![1.0],
            n: 3,
            m_grid: vec![10, 100, 1_000, 10_000],
            trials: 1_000,
            se_multiplier: 2.0,
            m_options: MOptions::default(),
            sim: SimOptions::default(),
        }
    }
}

/// `E |Z_n^m / m - M^n(z_inf)|_1` for each `m`, which should decrease in `m`.
pub fn lln_experiment(
    model: &ValidatedModel,
    params: &LlnParams,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    check_len("z_inf", params.z_inf.len(), model.p())?;
    if params.z_inf.iter().all(|&v| v == 0.0) {
        return Err(ExperimentError::BadParameter(
            "z_inf must be nonzero".into(),
        ));
    }
    let target = iterate_m(model, &params.z_inf, params.n, &params.m_options)?.into_inner();
    let sim = SimOptions {
        escape_cap: None,
        ..params.sim
    };

    let mut report = ExperimentReport::new(
        "lln",
        model.fingerprint().to_string(),
        seed,
        serde_json::to_value(params).expect("parameters serialise"),
    );
    let mut prev: Option<(f64, f64)> = None;
    for (k, &m) in params.m_grid.iter().enumerate() {
        let z0: Vec<u64> = params
            .z_inf
            .iter()
            .map(|&v| (m as f64 * v).floor() as u64)
            .collect();
        let cell_seed = derive_seed(seed, k as u64);
        let errors: Vec<f64> = (0..params.trials)
            .into_par_iter()
            .map(|t| {
                final_state(model, &z0, params.n, cell_seed, t, &sim).map(|(z, _)| {
                    let scaled: Vec<f64> = z.iter().map(|&v| v as f64 / m as f64).collect();
                    dist1(&scaled, &target)
                })
            })
            .collect::<Result<_, _>>()?;
        let stats: Moments = errors.iter().copied().collect();
        let (mean, se) = (stats.mean(), stats.std_error());
        let mut cell = Cell::new(format!("m={m}"), params.trials);
        cell.set("m", m);
        cell.set_f64("mean_l1_error", mean);
        cell.set_f64("std_error", se);
        cell.set_f64("sqrt_m_times_error", mean * (m as f64).sqrt());
        if let Some((pm, pse)) = prev {
            let slack = params.se_multiplier * (pse * pse + se * se).sqrt();
            cell.pass = Some(
                mean < pm || (mean == 0.0 && pm == 0.0) || (slack > 0.0 && mean - pm <= slack),
            );
        }
        prev = Some((mean, se));
        report.cells.push(cell);
    }
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn deterministic_model_has_zero_error() {
        let m = catalog::deterministic_fidelity(2, 2);
        let params = LlnParams {
            z_inf: vec![1.0],
            m_grid: vec![1, 10, 100],
            trials: 20,
            ..LlnParams::default()
        };
        let r = lln_experiment(&m, &params, 1).unwrap();
        assert!(r.passed);
        for c in &r.cells {
            assert_eq!(c.num("mean_l1_error"), Some(0.0));
        }
    }

    #[test]
    fn identity_error_decays() {
        let m = catalog::identity_poisson(&[vec![0.6, 0.5], vec![0.4, 0.7]]);
        let params = LlnParams {
            z_inf: vec![0.5, 0.5],
            n: 1,
            m_grid: vec![10, 100, 1_000],
            trials: 300,
            ..LlnParams::default()
        };
        let r = lln_experiment(&m, &params, 3).unwrap();
        assert!(r.passed, "{}", r.to_csv());
    }
}
