use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_len, padded, paths, to_real, Cell, ExperimentError, ExperimentReport};
use crate::model::ValidatedModel;
use crate::operator::{eval_finite, MOptions};
use crate::sim::SimOptions;
use crate::stats::{wilson, Quantiles, Z95};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorridorParams {
    pub z0: Vec<u64>,
    pub horizon: usize,
    pub trials: u64,
    pub eps: f64,
    /// Required fraction of trials whose corridor onset `N` is below
    /// `onset_limit` (defaults to the horizon).
    pub required_fraction: f64,
    pub onset_limit: Option<usize>,
    pub m_options: MOptions,
    pub sim: SimOptions,
}

impl Default for CorridorParams {
    fn default() -> Self {
        Self {
            z0: vec![1],
            horizon: 50,
            trials: 1_000,
            eps: 0.2,
            required_fraction: 0.95,
            onset_limit: None,
            m_options: MOptions::default(),
            sim: SimOptions::default(),
        }
    }
}

/// Smallest `N` such that `(1 - eps) M(Z_n) <= Z_{n+1} <= (1 + eps) M(Z_n)`
/// componentwise for every `N <= n < horizon`.
fn onset(
    model: &ValidatedModel,
    z: &[Vec<u64>],
    eps: f64,
    m: &MOptions,
) -> Result<usize, ExperimentError> {
    let horizon = z.len() - 1;
    for n in (0..horizon).rev() {
        let mz = eval_finite(model, &to_real(&z[n]), m, 1)?;
        let inside = z[n + 1].iter().zip(&mz).all(|(&next, &centre)| {
            (1.0 - eps) * centre <= next as f64 && next as f64 <= (1.0 + eps) * centre
        });
        if !inside {
            return Ok(n + 1);
        }
    }
    Ok(0)
}

pub fn corridor_experiment(
    model: &ValidatedModel,
    params: &CorridorParams,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    check_len("z0", params.z0.len(), model.p())?;
    if !(params.eps > 0.0 && params.eps < 1.0) {
        return Err(ExperimentError::BadParameter(format!(
            "eps must lie in (0, 1), got {}",
            params.eps
        )));
    }
    let limit = params.onset_limit.unwrap_or(params.horizon);
    let runs = paths(
        model,
        &params.z0,
        params.horizon,
        params.trials,
        seed,
        &params.sim,
    )?;
    let onsets: Vec<(usize, bool)> = runs
        .par_iter()
        .map(|t| {
            onset(
                model,
                &padded(t, params.horizon),
                params.eps,
                &params.m_options,
            )
            .map(|n| (n, t.absorbed_at.is_some()))
        })
        .collect::<Result<_, _>>()?;

    let mut report = ExperimentReport::new(
        "corridor",
        model.fingerprint().to_string(),
        seed,
        serde_json::to_value(params).expect("parameters serialise"),
    );
    let within = onsets.iter().filter(|(n, _)| *n < limit).count() as u64;
    let fraction = within as f64 / params.trials.max(1) as f64;
    let ci = wilson(within, params.trials, Z95);
    let mut summary = Cell::new("onset_below_limit", params.trials)
        .with("onset_limit", limit as u64)
        .with("fraction", fraction)
        .with("ci95_lo", ci.lo)
        .with("ci95_hi", ci.hi)
        .with("required_fraction", params.required_fraction);
    summary.pass = Some(fraction >= params.required_fraction);
    report.cells.push(summary);

    for (label, extinct) in [("onset_extinct", true), ("onset_surviving", false)] {
        let ns: Vec<f64> = onsets
            .iter()
            .filter(|(_, e)| *e == extinct)
            .map(|(n, _)| *n as f64)
            .collect();
        let mut c = Cell::new(label, ns.len() as u64);
        if let Some(q) = Quantiles::of(&ns) {
            c.set_f64("min", q.min);
            c.set_f64("median", q.median);
            c.set_f64("q75", q.q75);
            c.set_f64("max", q.max);
        }
        report.cells.push(c);
    }
    Ok(report.finish())
}
