//! Superadditive mating functions `xi: N^q -> N^p` and their real extensions.
//!
//! Individual vectors in bisexual layouts are ordered females first, then
//! males: `w = (x_1..x_nf, y_1..y_nm)`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{PopulationVector, RealVector};
use crate::rng::{purpose, stream_rng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatingError {
    #[error("mating input has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("couple count overflowed u64")]
    Overflow,
    #[error("real extension input {0} is not a finite nonnegative number")]
    BadRealInput(f64),
}

/// Which superadditive extension of `xi` to the nonnegative reals is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// Closed real forms (`min`, linear, indicator) where the catalog has them.
    #[default]
    Natural,
    /// `x -> xi(floor(x))`, valid for every superadditive `xi`.
    Floor,
}

pub type MatingFn = Arc<dyn Fn(&[u64]) -> Vec<u64> + Send + Sync>;

/// User-supplied mating function. Not trusted until
/// [`check_superadditivity`] passes on it.
#[derive(Clone)]
pub struct CustomMating {
    pub name: String,
    pub couple_types: usize,
    pub individual_types: usize,
    pub func: MatingFn,
}

impl CustomMating {
    pub fn new<F>(
        name: impl Into<String>,
        individual_types: usize,
        couple_types: usize,
        func: F,
    ) -> Self
    where
        F: Fn(&[u64]) -> Vec<u64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            couple_types,
            individual_types,
            func: Arc::new(func),
        }
    }
}

impl fmt::Debug for CustomMating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMating")
            .field("name", &self.name)
            .field("couple_types", &self.couple_types)
            .field("individual_types", &self.individual_types)
            .finish_non_exhaustive()
    }
}

impl PartialEq for CustomMating {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.couple_types == other.couple_types
            && self.individual_types == other.individual_types
            && Arc::ptr_eq(&self.func, &other.func)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatingFunction {
    /// `xi(x) = x` with `p = q = dim`: the asexual multi-type process.
    Identity { dim: usize },
    /// `xi(x, y) = min(x, y)` componentwise, `n_f = n_m = p = types`.
    PerfectFidelity { types: usize },
    /// `xi(x, y) = min(x, d y)` componentwise.
    Polygamous { types: usize, d: u64 },
    /// Single type, `q = 2`: every female mates as soon as one male exists.
    PromiscuousSingle,
    /// `xi(x, y) = x * prod_j 1{y_j > 0}`, `p = female_types`.
    CompletelyPromiscuous {
        female_types: usize,
        male_types: usize,
    },
    /// `xi(w) = min(w A, w B) + offset` with nonnegative integer `q x p`
    /// matrices. Any nonzero offset breaks `xi(0) = 0` and is rejected by
    /// model validation; it exists so that such configurations can be
    /// expressed and diagnosed.
    MinOfLinear {
        first: Vec<Vec<u64>>,
        second: Vec<Vec<u64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<Vec<u64>>,
    },
    /// `xi_i(x) = min(x_i, floor(alpha |x|))`: type `i` can form at most a
    /// fraction `alpha` of the total population in couples.
    CappedIdentity { dim: usize, alpha: f64 },
    /// Single type, `q = 2`: `xi(x, y) = x y`. Superadditive but not
    /// sublinear, so `M` is infinite.
    Product,
    #[serde(skip)]
    Custom(CustomMating),
}

impl MatingFunction {
    pub fn custom<F>(
        name: impl Into<String>,
        individual_types: usize,
        couple_types: usize,
        func: F,
    ) -> Self
    where
        F: Fn(&[u64]) -> Vec<u64> + Send + Sync + 'static,
    {
        MatingFunction::Custom(CustomMating::new(
            name,
            individual_types,
            couple_types,
            func,
        ))
    }

    /// Number of couple types `p`.
    pub fn couple_types(&self) -> usize {
        match self {
            MatingFunction::Identity { dim } | MatingFunction::CappedIdentity { dim, .. } => *dim,
            MatingFunction::PerfectFidelity { types }
            | MatingFunction::Polygamous { types, .. } => *types,
            MatingFunction::PromiscuousSingle | MatingFunction::Product => 1,
            MatingFunction::CompletelyPromiscuous { female_types, .. } => *female_types,
            MatingFunction::MinOfLinear { first, .. } => first.first().map_or(0, Vec::len),
            MatingFunction::Custom(c) => c.couple_types,
        }
    }

    /// Number of individual types `q`.
    pub fn individual_types(&self) -> usize {
        match self {
            MatingFunction::Identity { dim } | MatingFunction::CappedIdentity { dim, .. } => *dim,
            MatingFunction::PerfectFidelity { types }
            | MatingFunction::Polygamous { types, .. } => 2 * types,
            MatingFunction::PromiscuousSingle | MatingFunction::Product => 2,
            MatingFunction::CompletelyPromiscuous {
                female_types,
                male_types,
            } => female_types + male_types,
            MatingFunction::MinOfLinear { first, .. } => first.len(),
            MatingFunction::Custom(c) => c.individual_types,
        }
    }

    /// Natural `(n_f, n_m)` split for the bisexual catalog entries.
    pub fn sex_split(&self) -> Option<(usize, usize)> {
        match self {
            MatingFunction::PerfectFidelity { types }
            | MatingFunction::Polygamous { types, .. } => Some((*types, *types)),
            MatingFunction::PromiscuousSingle | MatingFunction::Product => Some((1, 1)),
            MatingFunction::CompletelyPromiscuous {
                female_types,
                male_types,
            } => Some((*female_types, *male_types)),
            _ => None,
        }
    }

    /// Whether superadditivity and `xi(0) = 0` hold by construction.
    pub fn is_verified(&self) -> bool {
        match self {
            MatingFunction::Custom(_) => false,
            MatingFunction::MinOfLinear { offset, .. } => {
                offset.as_ref().is_none_or(|o| o.iter().all(|&v| v == 0))
            }
            _ => true,
        }
    }

    pub fn kind_name(&self) -> &str {
        match self {
            MatingFunction::Identity { .. } => "identity",
            MatingFunction::PerfectFidelity { .. } => "perfect_fidelity",
            MatingFunction::Polygamous { .. } => "polygamous",
            MatingFunction::PromiscuousSingle => "promiscuous_single",
            MatingFunction::CompletelyPromiscuous { .. } => "completely_promiscuous",
            MatingFunction::MinOfLinear { .. } => "min_of_linear",
            MatingFunction::CappedIdentity { .. } => "capped_identity",
            MatingFunction::Product => "product",
            MatingFunction::Custom(c) => &c.name,
        }
    }

    /// Parameter-level consistency of the catalog entry itself.
    pub fn check_parameters(&self) -> Result<(), String> {
        match self {
            MatingFunction::Identity { dim } | MatingFunction::CappedIdentity { dim, .. }
                if *dim == 0 =>
            {
                Err("dimension must be at least 1".into())
            }
            MatingFunction::CappedIdentity { alpha, .. }
                if !(alpha.is_finite() && *alpha > 0.0) =>
            {
                Err(format!(
                    "capped_identity alpha must be positive and finite, got {alpha}"
                ))
            }
            MatingFunction::PerfectFidelity { types }
            | MatingFunction::Polygamous { types, .. }
                if *types == 0 =>
            {
                Err("types must be at least 1".into())
            }
            MatingFunction::Polygamous { d, .. } if *d == 0 => {
                Err("polygamous d must be a positive integer".into())
            }
            MatingFunction::CompletelyPromiscuous {
                female_types,
                male_types,
            } if *female_types == 0 || *male_types == 0 => {
                Err("female_types and male_types must be at least 1".into())
            }
            MatingFunction::MinOfLinear {
                first,
                second,
                offset,
            } => {
                let q = first.len();
                let p = first.first().map_or(0, Vec::len);
                if q == 0 || p == 0 {
                    return Err("min_of_linear matrices must be nonempty".into());
                }
                if second.len() != q || first.iter().chain(second).any(|r| r.len() != p) {
                    return Err("min_of_linear matrices must both be q x p".into());
                }
                if offset.as_ref().is_some_and(|o| o.len() != p) {
                    return Err("min_of_linear offset must have length p".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn check_len(&self, len: usize) -> Result<(), MatingError> {
        let q = self.individual_types();
        if len != q {
            return Err(MatingError::DimensionMismatch {
                expected: q,
                found: len,
            });
        }
        Ok(())
    }

    /// `xi(w)` on integer individual counts.
    pub fn apply(&self, w: &[u64]) -> Result<PopulationVector, MatingError> {
        self.check_len(w.len())?;
        let z = match self {
            MatingFunction::Identity { .. } => w.to_vec(),
            MatingFunction::PerfectFidelity { types } => {
                let (x, y) = w.split_at(*types);
                x.iter().zip(y).map(|(a, b)| *a.min(b)).collect()
            }
            MatingFunction::Polygamous { types, d } => {
                let (x, y) = w.split_at(*types);
                x.iter()
                    .zip(y)
                    .map(|(a, b)| (*a).min(b.saturating_mul(*d)))
                    .collect()
            }
            MatingFunction::PromiscuousSingle => vec![if w[1] > 0 { w[0] } else { 0 }],
            MatingFunction::Product => vec![w[0].checked_mul(w[1]).ok_or(MatingError::Overflow)?],
            MatingFunction::CompletelyPromiscuous { female_types, .. } => {
                let (x, y) = w.split_at(*female_types);
                let all_males = y.iter().all(|&v| v > 0);
                x.iter().map(|&v| if all_males { v } else { 0 }).collect()
            }
            MatingFunction::MinOfLinear {
                first,
                second,
                offset,
            } => {
                let a = int_left_mul(w, first)?;
                let b = int_left_mul(w, second)?;
                let mut z: Vec<u64> = a.into_iter().zip(b).map(|(u, v)| u.min(v)).collect();
                if let Some(o) = offset {
                    for (zi, oi) in z.iter_mut().zip(o) {
                        *zi = zi.checked_add(*oi).ok_or(MatingError::Overflow)?;
                    }
                }
                z
            }
            MatingFunction::CappedIdentity { alpha, .. } => {
                let total = w
                    .iter()
                    .try_fold(0u64, |acc, &v| acc.checked_add(v))
                    .ok_or(MatingError::Overflow)?;
                let cap = (alpha * total as f64).floor();
                w.iter()
                    .map(|&v| if (v as f64) <= cap { v } else { cap as u64 })
                    .collect()
            }
            MatingFunction::Custom(c) => {
                let z = (c.func)(w);
                if z.len() != c.couple_types {
                    return Err(MatingError::DimensionMismatch {
                        expected: c.couple_types,
                        found: z.len(),
                    });
                }
                z
            }
        };
        Ok(PopulationVector::from(z))
    }

    /// A superadditive extension of `xi` to nonnegative reals.
    pub fn apply_real(&self, w: &[f64], extension: Extension) -> Result<RealVector, MatingError> {
        self.check_len(w.len())?;
        if let Some(&bad) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(MatingError::BadRealInput(bad));
        }
        if extension == Extension::Floor || matches!(self, MatingFunction::Custom(_)) {
            return self.apply_floor(w);
        }
        let z = match self {
            MatingFunction::Identity { .. } => w.to_vec(),
            MatingFunction::PerfectFidelity { types } => {
                let (x, y) = w.split_at(*types);
                x.iter().zip(y).map(|(a, b)| a.min(*b)).collect()
            }
            MatingFunction::Polygamous { types, d } => {
                let d = *d as f64;
                let (x, y) = w.split_at(*types);
                x.iter().zip(y).map(|(a, b)| a.min(d * b)).collect()
            }
            MatingFunction::PromiscuousSingle => vec![if w[1] > 0.0 { w[0] } else { 0.0 }],
            MatingFunction::Product => vec![w[0] * w[1]],
            MatingFunction::CompletelyPromiscuous { female_types, .. } => {
                let (x, y) = w.split_at(*female_types);
                let all_males = y.iter().all(|&v| v > 0.0);
                x.iter().map(|&v| if all_males { v } else { 0.0 }).collect()
            }
            MatingFunction::MinOfLinear {
                first,
                second,
                offset,
            } => {
                let a = real_left_mul(w, first);
                let b = real_left_mul(w, second);
                let mut z: Vec<f64> = a.into_iter().zip(b).map(|(u, v)| u.min(v)).collect();
                if let Some(o) = offset {
                    for (zi, oi) in z.iter_mut().zip(o) {
                        *zi += *oi as f64;
                    }
                }
                z
            }
            MatingFunction::CappedIdentity { alpha, .. } => {
                // floor(alpha |w|) keeps integer points exact; min of
                // superadditive maps stays superadditive.
                let total: f64 = w.iter().sum();
                let cap = (alpha * total).floor();
                w.iter().map(|&v| v.min(cap)).collect()
            }
            MatingFunction::Custom(_) => unreachable!("custom handled by floor extension"),
        };
        Ok(RealVector::from(z))
    }

    fn apply_floor(&self, w: &[f64]) -> Result<RealVector, MatingError> {
        // u64 conversion of values at or above 2^64 would saturate silently
        const LIMIT: f64 = 18_446_744_073_709_551_616.0;
        let mut ints = Vec::with_capacity(w.len());
        for &v in w {
            let f = v.floor();
            if f >= LIMIT {
                return Err(MatingError::Overflow);
            }
            ints.push(f as u64);
        }
        let z = self.apply(&ints)?;
        Ok(z.to_real())
    }
}

fn int_left_mul(w: &[u64], a: &[Vec<u64>]) -> Result<Vec<u64>, MatingError> {
    let p = a.first().map_or(0, Vec::len);
    let mut out = vec![0u64; p];
    for (wj, row) in w.iter().zip(a) {
        for (o, aji) in out.iter_mut().zip(row) {
            let term = wj.checked_mul(*aji).ok_or(MatingError::Overflow)?;
            *o = o.checked_add(term).ok_or(MatingError::Overflow)?;
        }
    }
    Ok(out)
}

fn real_left_mul(w: &[f64], a: &[Vec<u64>]) -> Vec<f64> {
    let p = a.first().map_or(0, Vec::len);
    let mut out = vec![0.0; p];
    for (wj, row) in w.iter().zip(a) {
        for (o, aji) in out.iter_mut().zip(row) {
            *o += wj * *aji as f64;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub x1: Vec<u64>,
    pub x2: Vec<u64>,
    /// `xi(x1 + x2)`
    pub joint: Vec<u64>,
    /// `xi(x1) + xi(x2)`
    pub separate: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperadditivityReport {
    pub samples: u64,
    pub violations: u64,
    /// Up to [`SuperadditivityReport::KEEP`] counterexamples, in draw order.
    pub counterexamples: Vec<Counterexample>,
    /// Set when `xi` itself failed (overflow or wrong output length).
    pub evaluation_error: Option<String>,
}

impl SuperadditivityReport {
    pub const KEEP: usize = 16;

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.evaluation_error.is_none()
    }
}

/// Randomized check of `xi(x1 + x2) >= xi(x1) + xi(x2)` on pairs drawn
/// uniformly from `{0..=cap}^q`.
pub fn check_superadditivity(
    xi: &MatingFunction,
    samples: u64,
    magnitude_cap: u64,
    seed: u64,
) -> SuperadditivityReport {
    let q = xi.individual_types();
    let mut rng = stream_rng(seed, purpose::SUPERADDITIVITY);
    let mut report = SuperadditivityReport {
        samples,
        violations: 0,
        counterexamples: Vec::new(),
        evaluation_error: None,
    };
    for _ in 0..samples {
        let x1: Vec<u64> = (0..q)
            .map(|_| rng.random_range(0..=magnitude_cap))
            .collect();
        let x2: Vec<u64> = (0..q)
            .map(|_| rng.random_range(0..=magnitude_cap))
            .collect();
        let sum: Vec<u64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
        let eval = (|| -> Result<_, MatingError> {
            let joint = xi.apply(&sum)?;
            let a = xi.apply(&x1)?;
            let b = xi.apply(&x2)?;
            let separate = a
                .iter()
                .zip(b.iter())
                .map(|(u, v)| u.checked_add(*v).ok_or(MatingError::Overflow))
                .collect::<Result<Vec<u64>, _>>()?;
            Ok((joint, separate))
        })();
        let (joint, separate) = match eval {
            Ok(v) => v,
            Err(e) => {
                report.evaluation_error = Some(e.to_string());
                return report;
            }
        };
        if joint.iter().zip(&separate).any(|(j, s)| j < s) {
            report.violations += 1;
            if report.counterexamples.len() < SuperadditivityReport::KEEP {
                report.counterexamples.push(Counterexample {
                    x1,
                    x2,
                    joint: joint.into_inner(),
                    separate,
                });
            }
        }
    }
    report
}
