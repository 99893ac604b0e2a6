//! Concave Perron-Frobenius eigenpair `M(z*) = lambda* z*` by normalised
//! iteration, and the criticality classification that follows from it.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dist1, norm1};
use crate::model::ValidatedModel;
use crate::operator::{eval_finite, eval_m, primitivity_index, MOptions, OperatorError};
use crate::rng::{purpose, stream_rng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error(transparent)]
    Operator(OperatorError),
    #[error("operator is not primitive: some M^n(e_i) has a zero component for n up to {n_max}")]
    NotPrimitive { n_max: usize },
    #[error(
        "normalised iteration did not converge in {iterations} steps (last step {last_step:e})"
    )]
    NotConverged { iterations: usize, last_step: f64 },
    #[error("M vanished along the iteration from start {start}")]
    Vanished { start: usize },
    #[error("random starts converged to different points (spread {spread:e} > {allowed:e})")]
    StartsDisagree { spread: f64, allowed: f64 },
}

impl From<OperatorError> for EigenError {
    fn from(e: OperatorError) -> Self {
        match e {
            OperatorError::NotPrimitiveWithin { n_max } => EigenError::NotPrimitive { n_max },
            e => EigenError::Operator(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenOptions {
    /// Step size `|u_{k+1} - u_k|_1` (scaled by `max(1, lambda_k)`) at which
    /// the iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    pub starts: usize,
    pub seed: u64,
    /// Horizon of the primitivity check.
    pub primitivity_n_max: usize,
    /// Random simplex points used to certify finiteness of `M` on `S`.
    pub finiteness_samples: usize,
    /// Half-width of the band around 1 classified as critical.
    pub critical_band: f64,
    pub m: MOptions,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
            starts: 5,
            seed: 0,
            primitivity_n_max: 64,
            finiteness_samples: 100,
            critical_band: 1e-6,
            m: MOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda_star: f64,
    /// On the 1-norm simplex with positive entries.
    pub z_star: Vec<f64>,
    /// `|M(z*) - lambda* z*|_1`.
    pub residual: f64,
    /// Iterations used by the reported start.
    pub iterations: usize,
    pub primitivity_index: usize,
    /// Largest pairwise 1-distance between the fixed points of all starts.
    pub start_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum EigenOutcome {
    Finite(EigenResult),
    /// `M` has an infinite component at `witness`; no eigenpair exists.
    InfiniteOperator {
        witness: Vec<f64>,
        component: usize,
    },
}

impl EigenOutcome {
    pub fn finite(&self) -> Option<&EigenResult> {
        match self {
            EigenOutcome::Finite(r) => Some(r),
            EigenOutcome::InfiniteOperator { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
    SurvivalFromLargeStates,
}

impl std::fmt::Display for Criticality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Criticality::Subcritical => "Subcritical",
            Criticality::Critical => "Critical",
            Criticality::Supercritical => "Supercritical",
            Criticality::SurvivalFromLargeStates => "SurvivalFromLargeStates",
        };
        f.write_str(s)
    }
}

pub fn classify(outcome: &EigenOutcome, band: f64) -> Criticality {
    match outcome {
        EigenOutcome::InfiniteOperator { .. } => Criticality::SurvivalFromLargeStates,
        EigenOutcome::Finite(r) if r.lambda_star < 1.0 - band => Criticality::Subcritical,
        EigenOutcome::Finite(r) if r.lambda_star > 1.0 + band => Criticality::Supercritical,
        EigenOutcome::Finite(_) => Criticality::Critical,
    }
}

/// Uniform point on the simplex (Dirichlet(1, ..., 1)).
pub fn random_simplex_point<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Basis vectors, the simplex midpoint and `samples` uniform simplex points.
fn finiteness_points(p: usize, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut e = vec![0.0; p];
            e[i] = 1.0;
            e
        })
        .collect();
    pts.push(vec![1.0 / p as f64; p]);
    let mut rng = stream_rng(seed, purpose::FINITENESS);
    pts.extend((0..samples).map(|_| random_simplex_point(p, &mut rng)));
    pts
}

struct Run {
    z: Vec<f64>,
    iterations: usize,
}

fn iterate_from(
    model: &ValidatedModel,
    start: usize,
    mut u: Vec<f64>,
    opts: &EigenOptions,
) -> Result<Run, EigenError> {
    let mut last_step = f64::INFINITY;
    for k in 1..=opts.max_iter {
        let v = eval_finite(model, &u, &opts.m, k)?;
        let lambda = norm1(&v);
        if lambda == 0.0 {
            return Err(EigenError::Vanished { start });
        }
        let next: Vec<f64> = v.iter().map(|x| x / lambda).collect();
        last_step = dist1(&next, &u);
        u = next;
        if last_step < opts.tol / lambda.max(1.0) {
            return Ok(Run {
                z: u,
                iterations: k,
            });
        }
    }
    Err(EigenError::NotConverged {
        iterations: opts.max_iter,
        last_step,
    })
}

/// Solves `M(z) = lambda z` on the simplex.
///
/// Finiteness of `M` is checked first on sample points; an infinite
/// component yields [`EigenOutcome::InfiniteOperator`] rather than an error.
pub fn solve_eigen(
    model: &ValidatedModel,
    opts: &EigenOptions,
) -> Result<EigenOutcome, EigenError> {
    let p = model.p();
    for z in finiteness_points(p, opts.finiteness_samples, opts.seed) {
        let ev = eval_m(model, &z, &opts.m)?;
        if let Some(component) = ev.infinite_component() {
            return Ok(EigenOutcome::InfiniteOperator {
                witness: z,
                component,
            });
        }
    }
    let n0 = primitivity_index(model, opts.primitivity_n_max, &opts.m)?;

    let mut rng = stream_rng(opts.seed, purpose::EIGEN_STARTS);
    let starts: Vec<Vec<f64>> = (0..opts.starts.max(1))
        .map(|_| random_simplex_point(p, &mut rng))
        .collect();
    let runs: Vec<Run> = starts
        .into_par_iter()
        .enumerate()
        .map(|(s, u)| iterate_from(model, s, u, opts))
        .collect::<Result<_, _>>()?;

    let mut spread: f64 = 0.0;
    for a in 0..runs.len() {
        for b in a + 1..runs.len() {
            spread = spread.max(dist1(&runs[a].z, &runs[b].z));
        }
    }
    let allowed = 10.0 * opts.tol;
    if spread > allowed {
        return Err(EigenError::StartsDisagree { spread, allowed });
    }

    let best = &runs[0];
    let m_z = eval_finite(model, &best.z, &opts.m, best.iterations + 1)?;
    let lambda_star = norm1(&m_z);
    let residual = m_z
        .iter()
        .zip(&best.z)
        .map(|(m, z)| (m - lambda_star * z).abs())
        .sum();
    Ok(EigenOutcome::Finite(EigenResult {
        lambda_star,
        z_star: best.z.clone(),
        residual,
        iterations: best.iterations,
        primitivity_index: n0,
        start_spread: spread,
    }))
}

/// The ratio `|M^{k+1}(z)| / |M^k(z)|` once two consecutive ratios agree to
/// within `tol` (relative).
pub fn growth_rate_via_norms(
    model: &ValidatedModel,
    z: &[f64],
    k_max: usize,
    tol: f64,
    m: &MOptions,
) -> Result<f64, EigenError> {
    let s = norm1(z);
    if s == 0.0 {
        return Err(EigenError::Vanished { start: 0 });
    }
    let mut u: Vec<f64> = z.iter().map(|v| v / s).collect();
    let mut prev = f64::NAN;
    let mut last_step = f64::INFINITY;
    for k in 0..=k_max {
        let v = eval_finite(model, &u, m, k + 1)?;
        let ratio = norm1(&v);
        if ratio == 0.0 {
            return Err(EigenError::Vanished { start: 0 });
        }
        last_step = (ratio - prev).abs() / ratio;
        if last_step <= tol {
            return Ok(ratio);
        }
        prev = ratio;
        u = v.iter().map(|x| x / ratio).collect();
    }
    Err(EigenError::NotConverged {
        iterations: k_max,
        last_step,
    })
}
