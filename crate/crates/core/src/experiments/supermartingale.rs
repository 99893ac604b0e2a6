use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_len, padded, paths, to_real, Cell, ExperimentError, ExperimentReport};
use crate::eigen::EigenResult;
use crate::model::ValidatedModel;
use crate::operator::{eval_p, POptions};
use crate::sim::SimOptions;
use crate::stats::Moments;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SupermartingaleParams {
    pub z0: Vec<u64>,
    pub horizon: usize,
    pub trials: u64,
    /// A positive mean increment is tolerated up to this many standard errors.
    pub se_multiplier: f64,
    /// Also stratify survivors by the decade of `|Z_n|`.
    pub decade_bins: bool,
    /// Decade bins with fewer samples are reported but not asserted.
    pub min_bin_samples: u64,
    pub p_options: POptions,
    pub sim: SimOptions,
}

impl Default for SupermartingaleParams {
    fn default() -> Self {
        Self {
            z0: vec![1],
            horizon: 50,
            trials: 1_000,
            se_multiplier: 3.0,
            decade_bins: false,
            min_bin_samples: 30,
            p_options: POptions::default(),
            sim: SimOptions::default(),
        }
    }
}

fn decade(z: &[u64]) -> u32 {
    let total: u64 = z.iter().sum();
    total.checked_ilog10().unwrap_or(0)
}

/// Mean of `C_{n+1} - C_n`, `C_n = P(Z_n) / lambda*^n`, for each `n`.
pub fn supermartingale_experiment(
    model: &ValidatedModel,
    params: &SupermartingaleParams,
    eigen: &EigenResult,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    check_len("z0", params.z0.len(), model.p())?;
    let lambda = eigen.lambda_star;
    let h = params.horizon;
    let runs = paths(model, &params.z0, h, params.trials, seed, &params.sim)?;
    // (C_0..C_h, Z_0..Z_h) per trial
    let series: Vec<(Vec<f64>, Vec<Vec<u64>>)> = runs
        .par_iter()
        .map(|t| {
            let z = padded(t, h);
            let c = z
                .iter()
                .enumerate()
                .map(|(n, zn)| {
                    eval_p(
                        model,
                        &to_real(zn),
                        lambda,
                        &eigen.z_star,
                        &params.p_options,
                    )
                    .map(|p| p.value / lambda.powi(n as i32))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            Ok((c, z))
        })
        .collect::<Result<_, ExperimentError>>()?;

    let mut report = ExperimentReport::new(
        "supermartingale",
        model.fingerprint().to_string(),
        seed,
        serde_json::to_value(params).expect("parameters serialise"),
    );
    let judge = |cell: &mut Cell, m: &Moments| {
        let (mean, se) = (m.mean(), m.std_error());
        cell.set_f64("mean_increment", mean);
        cell.set_f64("std_error", se);
        cell.set_f64("z_score", if se > 0.0 { mean / se } else { 0.0 });
        cell.pass = Some(mean <= params.se_multiplier * se);
    };
    for n in 0..h {
        let m: Moments = series.iter().map(|(c, _)| c[n + 1] - c[n]).collect();
        let mean_c: Moments = series.iter().map(|(c, _)| c[n]).collect();
        let mut cell = Cell::new(format!("n={n}"), m.count());
        cell.set("n", n as u64);
        cell.set_f64("mean_c_n", mean_c.mean());
        judge(&mut cell, &m);
        report.cells.push(cell);
    }
    if params.decade_bins {
        for n in 0..h {
            let mut bins: BTreeMap<u32, Moments> = BTreeMap::new();
            for (c, z) in &series {
                if z[n].iter().any(|&v| v > 0) {
                    bins.entry(decade(&z[n])).or_default().push(c[n + 1] - c[n]);
                }
            }
            for (d, m) in bins {
                let mut cell = Cell::new(format!("n={n},decade={d}"), m.count());
                cell.set("n", n as u64);
                cell.set("decade", d);
                judge(&mut cell, &m);
                if m.count() < params.min_bin_samples {
                    cell.pass = None;
                }
                report.cells.push(cell);
            }
        }
    }
    Ok(report.finish())
}
