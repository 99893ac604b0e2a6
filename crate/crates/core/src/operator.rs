//! The mean growth operator `M(z) = lim_{r->inf} xi(r z V) / r`.
//!
//! By superadditivity `g(r) = xi(r z V) / r` is nondecreasing along the
//! doubling schedule `r = 1, 2, 4, ...` and converges to its supremum
//! `M(z)`, which may be infinite. `M` is concave and positively homogeneous.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dist1, norm1, normalize1};
use crate::mating::{Extension, MatingError, MatingFunction};
use crate::model::{RealVector, ValidatedModel};
use crate::rng::{derive_seed, TrialStreams};
use crate::sim::{step, SimError, SimOptions};
use crate::stats::Moments;

/// Smallest value counted as strictly positive when certifying primitivity.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("input vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input entries must be finite and nonnegative")]
    BadInput,
    #[error(transparent)]
    Mating(#[from] MatingError),
    #[error("M(z) did not converge by r={r_used} (last relative increment {gap:e})")]
    NotConverged {
        gap: f64,
        r_used: f64,
        value: RealVector,
    },
    #[error("component {component} of M became infinite at iterate {iterate}")]
    Infinite { component: usize, iterate: usize },
    #[error("M^n(e_i) not strictly positive for every n up to {n_max}")]
    NotPrimitiveWithin { n_max: usize },
    #[error("|M^n(z)|/lambda^n did not stabilise within {n_max} iterates (last relative change {change:e})")]
    PNotConverged {
        n_max: usize,
        change: f64,
        value: f64,
    },
    #[error(transparent)]
    Simulation(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MOptions {
    /// Componentwise relative increment accepted on two consecutive doublings.
    pub tol: f64,
    /// Largest scaling factor tried.
    pub r_max: f64,
    /// Components above this that still grow are flagged `+inf`.
    pub diverge_cap: f64,
    /// Minimum relative growth per doubling for the divergence flag.
    pub growth_floor: f64,
    pub extension: Extension,
}

impl Default for MOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            r_max: (1u64 << 40) as f64,
            diverge_cap: 1e12,
            growth_floor: 0.02,
            extension: Extension::Natural,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MEvaluation {
    /// `M(z)`; divergent components are `+inf`.
    pub value: RealVector,
    pub r_used: f64,
    pub converged: bool,
    /// Last relative increment over the finite components.
    pub gap: f64,
}

impl MEvaluation {
    pub fn infinite_component(&self) -> Option<usize> {
        self.value.iter().position(|v| v.is_infinite())
    }
}

fn check_input(model: &ValidatedModel, z: &[f64]) -> Result<(), OperatorError> {
    if z.len() != model.p() {
        return Err(OperatorError::DimensionMismatch {
            expected: model.p(),
            found: z.len(),
        });
    }
    if z.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(OperatorError::BadInput);
    }
    Ok(())
}

struct Schedule<'a> {
    model: &'a ValidatedModel,
    base: Vec<f64>,
    extension: Extension,
}

impl Schedule<'_> {
    /// `g(r)` for `r` a power of two. Scaling by powers of two is exact in
    /// floating point, so the natural forms inherit exact monotonicity.
    fn value(&self, r: f64) -> Result<Vec<f64>, MatingError> {
        let w: Vec<f64> = self.base.iter().map(|u| u * r).collect();
        let z = self.model.mating().apply_real(&w, self.extension)?;
        Ok(z.iter().map(|v| v / r).collect())
    }
}

/// `g(2^k)` for `k = 0..=doublings`.
pub fn fekete_schedule(
    model: &ValidatedModel,
    z: &[f64],
    extension: Extension,
    doublings: u32,
) -> Result<Vec<RealVector>, OperatorError> {
    check_input(model, z)?;
    let sched = Schedule {
        model,
        base: model.mean().left_mul(z),
        extension,
    };
    (0..=doublings)
        .map(|k| Ok(RealVector::from(sched.value((1u64 << k) as f64)?)))
        .collect()
}

/// Evaluates `M(z)` on the doubling schedule.
pub fn eval_m(
    model: &ValidatedModel,
    z: &[f64],
    opts: &MOptions,
) -> Result<MEvaluation, OperatorError> {
    check_input(model, z)?;
    let p = model.p();
    if z.iter().all(|&v| v == 0.0) {
        return Ok(MEvaluation {
            value: RealVector::zeros(p),
            r_used: 1.0,
            converged: true,
            gap: 0.0,
        });
    }
    let extension = if model.mating().is_verified() {
        opts.extension
    } else {
        Extension::Floor
    };
    let sched = Schedule {
        model,
        base: model.mean().left_mul(z),
        extension,
    };
    // Under the floor extension g(r) moves in steps of size about 1/r, and
    // binary digits of r (z V)_j can stall for a few doublings. A flat
    // stretch only counts once every positive (z V)_j resolves to `tol`.
    // The capped identity floors its cap even under the natural extension.
    let step_scale = match (extension, model.mating()) {
        (Extension::Floor, _) => Some(1.0),
        (Extension::Natural, MatingFunction::CappedIdentity { alpha, .. }) => Some(alpha.min(1.0)),
        (Extension::Natural, _) => None,
    };
    let resolution_r = step_scale.map_or(1.0, |scale| {
        let min_pos = sched
            .base
            .iter()
            .filter(|&&v| v > 0.0)
            .fold(f64::INFINITY, |m, &v| m.min(v));
        1.0 / (opts.tol * scale * min_pos)
    });

    let mut r = 1.0;
    let mut prev = sched.value(r)?;
    let mut infinite = vec![false; p];
    let mut quiet = 0;
    let mut gap = f64::INFINITY;
    loop {
        if r * 2.0 > opts.r_max {
            break;
        }
        r *= 2.0;
        let cur = match sched.value(r) {
            Ok(v) => v,
            Err(MatingError::Overflow) => break,
            Err(e) => return Err(e.into()),
        };
        gap = 0.0;
        for k in 0..p {
            if infinite[k] {
                continue;
            }
            if cur[k] > opts.diverge_cap && cur[k] >= prev[k] * (1.0 + opts.growth_floor) {
                infinite[k] = true;
                continue;
            }
            if cur[k] > 0.0 {
                gap = f64::max(gap, (cur[k] - prev[k]) / cur[k]);
            }
        }
        prev = cur;
        if infinite.iter().all(|&f| f) {
            return Ok(finish(prev, &infinite, r, true, 0.0));
        }
        if gap < opts.tol && r >= resolution_r {
            quiet += 1;
            if quiet >= 2 {
                return Ok(finish(prev, &infinite, r, true, gap));
            }
        } else {
            quiet = 0;
        }
    }
    let value = finish(prev, &infinite, r, false, gap).value;
    Err(OperatorError::NotConverged {
        gap,
        r_used: r,
        value,
    })
}

fn finish(
    mut value: Vec<f64>,
    infinite: &[bool],
    r: f64,
    converged: bool,
    gap: f64,
) -> MEvaluation {
    for (v, &inf) in value.iter_mut().zip(infinite) {
        if inf {
            *v = f64::INFINITY;
        }
    }
    MEvaluation {
        value: RealVector::from(value),
        r_used: r,
        converged,
        gap,
    }
}

/// Finite `M(z)`, or [`OperatorError::Infinite`].
pub(crate) fn eval_finite(
    model: &ValidatedModel,
    z: &[f64],
    opts: &MOptions,
    iterate: usize,
) -> Result<Vec<f64>, OperatorError> {
    let ev = eval_m(model, z, opts)?;
    if let Some(component) = ev.infinite_component() {
        return Err(OperatorError::Infinite { component, iterate });
    }
    Ok(ev.value.into_inner())
}

/// `M^n(z)`; `n = 0` is the identity.
pub fn iterate_m(
    model: &ValidatedModel,
    z: &[f64],
    n: usize,
    opts: &MOptions,
) -> Result<RealVector, OperatorError> {
    check_input(model, z)?;
    let mut cur = z.to_vec();
    for k in 1..=n {
        cur = eval_finite(model, &cur, opts, k)?;
    }
    Ok(RealVector::from(cur))
}

/// Smallest `n0 <= n_max` such that every `M^n(e_i)`, `n0 <= n <= n_max`,
/// has all components above [`POSITIVITY_FLOOR`] (after normalisation).
pub fn primitivity_index(
    model: &ValidatedModel,
    n_max: usize,
    opts: &MOptions,
) -> Result<usize, OperatorError> {
    let p = model.p();
    let mut positive = vec![true; n_max + 1];
    positive[0] = false;
    for i in 0..p {
        let mut u = vec![0.0; p];
        u[i] = 1.0;
        for (n, pos) in positive.iter_mut().enumerate().skip(1) {
            let v = eval_finite(model, &u, opts, n)?;
            let norm = norm1(&v);
            if norm == 0.0 {
                // stays zero from here on
                *pos = false;
                u = v;
                continue;
            }
            u = v.iter().map(|x| x / norm).collect();
            if u.iter().any(|&x| x <= POSITIVITY_FLOOR) {
                *pos = false;
            }
        }
    }
    if !positive[n_max] {
        return Err(OperatorError::NotPrimitiveWithin { n_max });
    }
    let mut n0 = n_max;
    while n0 > 1 && positive[n0 - 1] {
        n0 -= 1;
    }
    Ok(n0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct POptions {
    /// Relative change accepted on two consecutive iterates. Each step
    /// multiplies by `|M(u)| / lambda*`, so `tol` cannot usefully go below
    /// the accuracy of `lambda*` and of `M` itself.
    pub tol: f64,
    pub n_max: usize,
    pub m: MOptions,
}

impl Default for POptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            n_max: 10_000,
            m: MOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PFunctional {
    pub value: f64,
    pub n_used: usize,
    pub converged: bool,
    /// `|M^n(z)/|M^n(z)| - z*|_1` at the last iterate.
    pub direction_gap: f64,
}

/// `P(z) = lim |M^n(z)| / (lambda*)^n`.
pub fn eval_p(
    model: &ValidatedModel,
    z: &[f64],
    lambda_star: f64,
    z_star: &[f64],
    opts: &POptions,
) -> Result<PFunctional, OperatorError> {
    check_input(model, z)?;
    assert!(lambda_star > 0.0, "lambda_star must be positive");
    let scale = norm1(z);
    if scale == 0.0 {
        return Ok(PFunctional {
            value: 0.0,
            n_used: 0,
            converged: true,
            direction_gap: 0.0,
        });
    }
    // value_n = |M^n(z)| / lambda^n, tracked as scale * prod |M(u_k)| / lambda
    let mut u: Vec<f64> = z.iter().map(|v| v / scale).collect();
    let mut value = scale;
    let mut quiet = 0;
    let mut change = f64::INFINITY;
    for n in 1..=opts.n_max {
        let v = eval_finite(model, &u, &opts.m, n)?;
        let norm = norm1(&v);
        if norm == 0.0 {
            return Ok(PFunctional {
                value: 0.0,
                n_used: n,
                converged: true,
                direction_gap: dist1(&u, z_star),
            });
        }
        let next = value * (norm / lambda_star);
        change = (next - value).abs() / next;
        value = next;
        u = v.iter().map(|x| x / norm).collect();
        if change < opts.tol {
            quiet += 1;
            if quiet >= 2 {
                return Ok(PFunctional {
                    value,
                    n_used: n,
                    converged: true,
                    direction_gap: dist1(&u, z_star),
                });
            }
        } else {
            quiet = 0;
        }
    }
    Err(OperatorError::PNotConverged {
        n_max: opts.n_max,
        change,
        value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub m: u64,
    pub trials: u64,
    /// Monte Carlo `E(Z_1 | Z_0 = m z) / m`.
    pub estimate: Vec<f64>,
    pub std_error: Vec<f64>,
    /// `M(z)`.
    pub operator_value: Vec<f64>,
    /// `estimate <= M(z) + 4 SE` componentwise.
    pub within_bound: bool,
}

/// Compares `E(Z_1 | Z_0 = m z) / m` with `M(z)` along a grid of `m`.
pub fn mean_growth_crosscheck(
    model: &ValidatedModel,
    z: &[u64],
    m_grid: &[u64],
    trials: u64,
    seed: u64,
    m_opts: &MOptions,
    sim_opts: &SimOptions,
) -> Result<Vec<GrowthRow>, OperatorError> {
    let zr: Vec<f64> = z.iter().map(|&v| v as f64).collect();
    let target = eval_m(model, &zr, m_opts)?.value.into_inner();
    let p = model.p();
    m_grid
        .iter()
        .map(|&m| {
            let z0: Vec<u64> = z
                .iter()
                .map(|&v| v.checked_mul(m).ok_or(SimError::Overflow))
                .collect::<Result<_, _>>()?;
            let cell_seed = derive_seed(seed, m);
            let draws: Vec<Vec<u64>> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let g = TrialStreams::new(cell_seed, t).generation(1);
                    step(model, &z0, &g, sim_opts).map(|(_, zn)| zn.into_inner())
                })
                .collect::<Result<_, _>>()?;
            let mut acc = vec![Moments::new(); p];
            for d in &draws {
                for (a, &v) in acc.iter_mut().zip(d) {
                    a.push(v as f64 / m as f64);
                }
            }
            let estimate: Vec<f64> = acc.iter().map(Moments::mean).collect();
            let std_error: Vec<f64> = acc.iter().map(Moments::std_error).collect();
            let within_bound = estimate
                .iter()
                .zip(&std_error)
                .zip(&target)
                .all(|((e, s), t)| *e <= t + 4.0 * s + 1e-12 * t.max(1.0));
            Ok(GrowthRow {
                m,
                trials,
                estimate,
                std_error,
                operator_value: target.clone(),
                within_bound,
            })
        })
        .collect()
}

/// Normalised copy of `z` on the simplex.
pub fn to_simplex(z: &[f64]) -> Vec<f64> {
    normalize1(z)
}
