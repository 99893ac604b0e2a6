//! Forward simulation of the process `Z_n = xi(W_n)`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mating::MatingError;
use crate::model::{PopulationVector, ValidatedModel};
use crate::offspring::OffspringError;
use crate::rng::{GenerationRng, TrialStreams};
use crate::stats::{wilson, Interval, Quantiles, Z95};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("population vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("individual count overflowed u64")]
    Overflow,
    #[error(transparent)]
    Offspring(OffspringError),
    #[error(transparent)]
    Mating(MatingError),
}

impl From<OffspringError> for SimError {
    fn from(e: OffspringError) -> Self {
        match e {
            OffspringError::Overflow => SimError::Overflow,
            e => SimError::Offspring(e),
        }
    }
}

impl From<MatingError> for SimError {
    fn from(e: MatingError) -> Self {
        match e {
            MatingError::Overflow => SimError::Overflow,
            e => SimError::Mating(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimOptions {
    /// Couples of one type above which rows are drawn as a superposition.
    pub exact_threshold: u64,
    /// Permit a rounded normal for laws without an exact superposition.
    pub allow_normal_approx: bool,
    /// Stop a trial once `|Z_n|` reaches this size and count it as escaped.
    pub escape_cap: Option<u64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            exact_threshold: 1_000_000,
            allow_normal_approx: false,
            escape_cap: None,
        }
    }
}

/// One generation: returns `(W, Z)` from `Z_prev`.
pub fn step(
    model: &ValidatedModel,
    z: &[u64],
    rng: &GenerationRng,
    opts: &SimOptions,
) -> Result<(PopulationVector, PopulationVector), SimError> {
    if z.len() != model.p() {
        return Err(SimError::DimensionMismatch {
            expected: model.p(),
            found: z.len(),
        });
    }
    let mut w = vec![0u64; model.q()];
    for (i, (&count, row)) in z.iter().zip(&model.offspring().rows).enumerate() {
        if count == 0 {
            continue;
        }
        let mut s = rng.stream(i);
        row.sample_sum_into(
            i,
            count,
            opts.exact_threshold,
            opts.allow_normal_approx,
            &mut s,
            &mut w,
        )?;
    }
    let zn = model.mating().apply(&w)?;
    Ok((PopulationVector::from(w), zn))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `Z_0, Z_1, ...`
    pub z_path: Vec<Vec<u64>>,
    /// `W_1, W_2, ...` (one shorter than `z_path`).
    pub w_path: Vec<Vec<u64>>,
    /// Length `q` of every `W_n`, kept for paths absorbed at 0.
    pub individual_types: usize,
    pub absorbed_at: Option<usize>,
    pub escaped_at: Option<usize>,
    pub seed: u64,
    pub trial: u64,
}

impl Trajectory {
    pub fn generations(&self) -> usize {
        self.z_path.len() - 1
    }

    pub fn last(&self) -> &[u64] {
        self.z_path.last().expect("trajectory holds Z_0")
    }

    /// CSV with columns `n, Z_1..Z_p, W_1..W_q`; `W` is blank at `n = 0`.
    pub fn to_csv(&self) -> String {
        let p = self.z_path[0].len();
        let q = self.individual_types;
        let mut out = String::from("n");
        for i in 1..=p {
            let _ = write!(out, ",Z_{i}");
        }
        for j in 1..=q {
            let _ = write!(out, ",W_{j}");
        }
        out.push('\n');
        for (n, z) in self.z_path.iter().enumerate() {
            let _ = write!(out, "{n}");
            for v in z {
                let _ = write!(out, ",{v}");
            }
            match n.checked_sub(1).and_then(|k| self.w_path.get(k)) {
                Some(w) => {
                    for v in w {
                        let _ = write!(out, ",{v}");
                    }
                }
                None => out.push_str(&",".repeat(q)),
            }
            out.push('\n');
        }
        out
    }
}

enum Outcome {
    Absorbed(usize),
    Escaped(usize),
    Alive,
}

/// Runs one trial, handing each `(n, W_n, Z_n)` to `visit`.
fn run<F>(
    model: &ValidatedModel,
    z0: &[u64],
    horizon: usize,
    streams: TrialStreams,
    opts: &SimOptions,
    mut visit: F,
) -> Result<(Vec<u64>, Outcome), SimError>
where
    F: FnMut(usize, &[u64], &[u64]),
{
    if z0.len() != model.p() {
        return Err(SimError::DimensionMismatch {
            expected: model.p(),
            found: z0.len(),
        });
    }
    let escaped = |z: &[u64]| {
        opts.escape_cap.is_some_and(|cap| {
            z.iter()
                .try_fold(0u64, |a, &v| a.checked_add(v))
                .is_none_or(|t| t >= cap)
        })
    };
    let mut z = z0.to_vec();
    if z.iter().all(|&v| v == 0) {
        return Ok((z, Outcome::Absorbed(0)));
    }
    if escaped(&z) {
        return Ok((z, Outcome::Escaped(0)));
    }
    for n in 1..=horizon {
        let (w, zn) = step(model, &z, &streams.generation(n as u64), opts)?;
        visit(n, &w, &zn);
        z = zn.into_inner();
        if z.iter().all(|&v| v == 0) {
            return Ok((z, Outcome::Absorbed(n)));
        }
        if escaped(&z) {
            return Ok((z, Outcome::Escaped(n)));
        }
    }
    Ok((z, Outcome::Alive))
}

/// Simulates trial `trial` of seed `seed` for up to `horizon` generations.
/// The path stops early on absorption at zero or on escape.
pub fn simulate(
    model: &ValidatedModel,
    z0: &[u64],
    horizon: usize,
    seed: u64,
    trial: u64,
    opts: &SimOptions,
) -> Result<Trajectory, SimError> {
    let mut z_path = vec![z0.to_vec()];
    let mut w_path = Vec::new();
    let (_, outcome) = run(
        model,
        z0,
        horizon,
        TrialStreams::new(seed, trial),
        opts,
        |_, w, z| {
            w_path.push(w.to_vec());
            z_path.push(z.to_vec());
        },
    )?;
    let (absorbed_at, escaped_at) = match outcome {
        Outcome::Absorbed(n) => (Some(n), None),
        Outcome::Escaped(n) => (None, Some(n)),
        Outcome::Alive => (None, None),
    };
    Ok(Trajectory {
        z_path,
        w_path,
        individual_types: model.q(),
        absorbed_at,
        escaped_at,
        seed,
        trial,
    })
}

/// Final state of one trial without storing the path.
pub fn final_state(
    model: &ValidatedModel,
    z0: &[u64],
    horizon: usize,
    seed: u64,
    trial: u64,
    opts: &SimOptions,
) -> Result<(Vec<u64>, bool), SimError> {
    let (z, outcome) = run(
        model,
        z0,
        horizon,
        TrialStreams::new(seed, trial),
        opts,
        |_, _, _| {},
    )?;
    Ok((z, matches!(outcome, Outcome::Escaped(_))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionSummary {
    pub trials: u64,
    pub horizon: usize,
    pub extinct_count: u64,
    /// Trials stopped at the escape cap (counted as surviving).
    pub escaped_count: u64,
    pub q_hat: f64,
    pub ci95: Interval,
    /// `|Z_horizon|` over trials alive at the horizon without escaping.
    pub survivor_mass: Option<Quantiles>,
}

/// Estimates `P(Z_horizon = 0)` from `trials` independent runs.
pub fn batch_extinction(
    model: &ValidatedModel,
    z0: &[u64],
    horizon: usize,
    trials: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<ExtinctionSummary, SimError> {
    let results: Vec<(Vec<u64>, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| final_state(model, z0, horizon, seed, t, opts))
        .collect::<Result<_, _>>()?;
    let extinct_count = results
        .iter()
        .filter(|(z, _)| z.iter().all(|&v| v == 0))
        .count() as u64;
    let escaped_count = results.iter().filter(|(_, e)| *e).count() as u64;
    let alive: Vec<f64> = results
        .iter()
        .filter(|(z, e)| !*e && z.iter().any(|&v| v > 0))
        .map(|(z, _)| z.iter().map(|&v| v as f64).sum())
        .collect();
    Ok(ExtinctionSummary {
        trials,
        horizon,
        extinct_count,
        escaped_count,
        q_hat: if trials == 0 {
            0.0
        } else {
            extinct_count as f64 / trials as f64
        },
        ci95: wilson(extinct_count, trials, Z95),
        survivor_mass: Quantiles::of(&alive),
    })
}
