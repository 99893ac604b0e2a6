use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_len, paths, to_real, Cell, ExperimentError, ExperimentReport};
use crate::eigen::EigenResult;
use crate::linalg::{dist1, norm1};
use crate::model::ValidatedModel;
use crate::operator::{eval_p, POptions};
use crate::sim::SimOptions;
use crate::stats::Quantiles;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileParams {
    pub z0: Vec<u64>,
    pub horizon: usize,
    pub trials: u64,
    /// Largest accepted median of `|Z_N/|Z_N| - z*|_1` among survivors.
    pub max_direction_median: f64,
    /// Accepted range of the median of `|Z_N| / |Z_{N-1}|` among survivors.
    pub norm_ratio_range: [f64; 2],
    /// Survivors with `C_N` below this count as collapsed.
    pub c_floor: f64,
    /// A collapsed fraction above this is flagged (not asserted).
    pub collapse_warning: f64,
    pub p_options: POptions,
    pub sim: SimOptions,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self {
            z0: vec![1],
            horizon: 50,
            trials: 1_000,
            max_direction_median: 0.05,
            norm_ratio_range: [1.05, 1.15],
            c_floor: 1e-3,
            collapse_warning: 0.05,
            p_options: POptions::default(),
            sim: SimOptions::default(),
        }
    }
}

fn quantile_cell(label: &str, values: &[f64], samples: u64) -> Cell {
    let mut c = Cell::new(label, samples);
    if let Some(q) = Quantiles::of(values) {
        c.set_f64("min", q.min);
        c.set_f64("q25", q.q25);
        c.set_f64("median", q.median);
        c.set_f64("q75", q.q75);
        c.set_f64("max", q.max);
    }
    c
}

/// Direction, growth ratio and `C_N = P(Z_N) / lambda*^N` among trials
/// alive at the horizon.
pub fn profile_experiment(
    model: &ValidatedModel,
    params: &ProfileParams,
    eigen: &EigenResult,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    check_len("z0", params.z0.len(), model.p())?;
    if params.horizon == 0 {
        return Err(ExperimentError::BadParameter(
            "horizon must be at least 1".into(),
        ));
    }
    let n = params.horizon;
    let lambda = eigen.lambda_star;
    let runs = paths(model, &params.z0, n, params.trials, seed, &params.sim)?;
    let survivors: Vec<&Vec<Vec<u64>>> = runs
        .iter()
        .filter(|t| t.absorbed_at.is_none())
        .map(|t| &t.z_path)
        .collect();

    let mut report = ExperimentReport::new(
        "profile",
        model.fingerprint().to_string(),
        seed,
        serde_json::to_value(params).expect("parameters serialise"),
    );
    let alive = survivors.len() as u64;
    report.cells.push(
        Cell::new("survivors", params.trials)
            .with("survivors", alive)
            .with(
                "survival_fraction",
                alive as f64 / params.trials.max(1) as f64,
            )
            .with("lambda_star", lambda),
    );
    if survivors.is_empty() {
        report.fail("no survivors at the horizon");
        return Ok(report.finish());
    }

    let direction: Vec<f64> = survivors
        .iter()
        .map(|path| {
            let z = to_real(&path[n]);
            let s = norm1(&z);
            let u: Vec<f64> = z.iter().map(|v| v / s).collect();
            dist1(&u, &eigen.z_star)
        })
        .collect();
    let ratio: Vec<f64> = survivors
        .iter()
        .map(|path| norm1(&to_real(&path[n])) / norm1(&to_real(&path[n - 1])))
        .collect();
    let scale = lambda.powi(n as i32);
    let c_n: Vec<f64> = survivors
        .par_iter()
        .map(|path| {
            eval_p(
                model,
                &to_real(&path[n]),
                lambda,
                &eigen.z_star,
                &params.p_options,
            )
            .map(|p| p.value / scale)
        })
        .collect::<Result<_, _>>()?;

    let mut dir_cell = quantile_cell("direction_l1", &direction, alive);
    let dir_median = dir_cell.num("median").unwrap_or(f64::INFINITY);
    dir_cell.pass = Some(dir_median < params.max_direction_median);
    let mut ratio_cell = quantile_cell("norm_ratio", &ratio, alive);
    let ratio_median = ratio_cell.num("median").unwrap_or(f64::NAN);
    let [lo, hi] = params.norm_ratio_range;
    ratio_cell.pass = Some(lo <= ratio_median && ratio_median <= hi);
    let mut c_cell = quantile_cell("c_n", &c_n, alive);
    let collapsed = c_n.iter().filter(|&&c| c < params.c_floor).count() as f64 / alive as f64;
    c_cell.set_f64("fraction_below_floor", collapsed);
    c_cell.set(
        "finite_vlogv",
        model
            .offspring()
            .rows
            .iter()
            .map(|r| r.has_finite_vlogv())
            .try_fold(true, |acc, f| f.map(|f| acc && f))
            .map_or("unknown", |f| if f { "yes" } else { "no" }),
    );
    if collapsed > params.collapse_warning {
        report.notes.push(format!(
            "{:.1}% of survivors have C_N below {}; the limit may be degenerate",
            100.0 * collapsed,
            params.c_floor
        ));
    }
    report.cells.extend([dir_cell, ratio_cell, c_cell]);
    Ok(report.finish())
}
