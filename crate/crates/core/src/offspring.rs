//! Offspring laws: for each couple type `i`, the law of the row `V_{i,.}`.
//!
//! Rows are mutually independent across couple types; entries within a row
//! may be dependent (see [`RowLaw::TotalThenThin`] and
//! [`RowLaw::Empirical`]).

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution, Geometric, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OffspringError {
    #[error("individual count overflowed u64")]
    Overflow,
    #[error("invalid offspring parameter: {0}")]
    InvalidParameter(String),
    #[error("{count} couples of type {row} exceed the exact-sampling threshold {threshold} and this law has no exact superposition; enable the normal approximation to proceed")]
    ThresholdExceeded {
        row: usize,
        count: u64,
        threshold: u64,
    },
}

/// Law of a single nonnegative integer count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TotalLaw {
    Poisson { mean: f64 },
    Geometric { mean: f64 },
    Fixed { count: u64 },
}

impl TotalLaw {
    pub fn mean(&self) -> f64 {
        match self {
            TotalLaw::Poisson { mean } | TotalLaw::Geometric { mean } => *mean,
            TotalLaw::Fixed { count } => *count as f64,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            TotalLaw::Poisson { mean } => *mean,
            TotalLaw::Geometric { mean } => mean * (1.0 + mean),
            TotalLaw::Fixed { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<(), OffspringError> {
        match self {
            TotalLaw::Poisson { mean } | TotalLaw::Geometric { mean } => check_mean(*mean),
            TotalLaw::Fixed { .. } => Ok(()),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            TotalLaw::Poisson { mean } => poisson(*mean, rng),
            TotalLaw::Geometric { mean } => geometric(*mean, rng),
            TotalLaw::Fixed { count } => *count,
        }
    }
}

/// Row law supplied by the caller.
pub trait CustomRowLaw: Send + Sync {
    fn name(&self) -> &str;
    fn individual_types(&self) -> usize;
    /// Adds one draw of the row to `out`.
    fn sample(&self, rng: &mut dyn RngCore, out: &mut [u64]);
    /// Closed-form means, when known. Otherwise means are estimated by
    /// Monte Carlo.
    fn mean(&self) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Clone)]
pub struct CustomRow(pub Arc<dyn CustomRowLaw>);

impl fmt::Debug for CustomRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomRow({})", self.0.name())
    }
}

impl PartialEq for CustomRow {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RowLaw {
    /// Independent Poisson entries with the given means.
    Poisson { rates: Vec<f64> },
    /// Independent geometric entries (failures before first success) with
    /// the given means.
    Geometric { means: Vec<f64> },
    /// A fixed offspring vector.
    Deterministic { values: Vec<u64> },
    /// Bisexual layout with `q = 2 n`: `U_j` children of type `j` are drawn
    /// from `totals[j]`, each child independently female with probability
    /// `alpha`. Output is `(females_1..n, males_1..n)`.
    TotalThenThin { totals: Vec<TotalLaw>, alpha: f64 },
    /// Finite support with probability weights summing to one.
    Empirical {
        support: Vec<Vec<u64>>,
        weights: Vec<f64>,
    },
    #[serde(skip)]
    Custom(CustomRow),
}

fn check_mean(m: f64) -> Result<(), OffspringError> {
    if m.is_finite() && m >= 0.0 {
        Ok(())
    } else {
        Err(OffspringError::InvalidParameter(format!(
            "mean must be finite and nonnegative, got {m}"
        )))
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("validated Poisson mean");
    let v: f64 = d.sample(rng);
    v as u64
}

fn geometric<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Geometric::new(1.0 / (1.0 + mean))
        .expect("validated geometric mean")
        .sample(rng)
}

fn add(acc: &mut u64, v: u64) -> Result<(), OffspringError> {
    *acc = acc.checked_add(v).ok_or(OffspringError::Overflow)?;
    Ok(())
}

impl RowLaw {
    pub fn custom(law: impl CustomRowLaw + 'static) -> Self {
        RowLaw::Custom(CustomRow(Arc::new(law)))
    }

    pub fn individual_types(&self) -> usize {
        match self {
            RowLaw::Poisson { rates } => rates.len(),
            RowLaw::Geometric { means } => means.len(),
            RowLaw::Deterministic { values } => values.len(),
            RowLaw::TotalThenThin { totals, .. } => 2 * totals.len(),
            RowLaw::Empirical { support, .. } => support.first().map_or(0, Vec::len),
            RowLaw::Custom(c) => c.0.individual_types(),
        }
    }

    pub fn validate(&self) -> Result<(), OffspringError> {
        match self {
            RowLaw::Poisson { rates } => rates.iter().try_for_each(|&m| check_mean(m)),
            RowLaw::Geometric { means } => means.iter().try_for_each(|&m| check_mean(m)),
            RowLaw::Deterministic { .. } | RowLaw::Custom(_) => Ok(()),
            RowLaw::TotalThenThin { totals, alpha } => {
                if !(0.0..=1.0).contains(alpha) {
                    return Err(OffspringError::InvalidParameter(format!(
                        "female probability alpha must lie in [0, 1], got {alpha}"
                    )));
                }
                totals.iter().try_for_each(TotalLaw::validate)
            }
            RowLaw::Empirical { support, weights } => {
                if support.is_empty() || support.len() != weights.len() {
                    return Err(OffspringError::InvalidParameter(
                        "empirical law needs one weight per support point".into(),
                    ));
                }
                let q = support[0].len();
                if support.iter().any(|s| s.len() != q) {
                    return Err(OffspringError::InvalidParameter(
                        "empirical support points must share one length".into(),
                    ));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(OffspringError::InvalidParameter(
                        "empirical weights must be nonnegative".into(),
                    ));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(OffspringError::InvalidParameter(format!(
                        "empirical weights sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Closed-form mean row, `None` for custom laws without one.
    pub fn mean(&self) -> Option<Vec<f64>> {
        match self {
            RowLaw::Poisson { rates } => Some(rates.clone()),
            RowLaw::Geometric { means } => Some(means.clone()),
            RowLaw::Deterministic { values } => Some(values.iter().map(|&v| v as f64).collect()),
            RowLaw::TotalThenThin { totals, alpha } => {
                let u: Vec<f64> = totals.iter().map(TotalLaw::mean).collect();
                let mut m: Vec<f64> = u.iter().map(|x| alpha * x).collect();
                m.extend(u.iter().map(|x| (1.0 - alpha) * x));
                Some(m)
            }
            RowLaw::Empirical { support, weights } => {
                let q = self.individual_types();
                let mut m = vec![0.0; q];
                for (s, w) in support.iter().zip(weights) {
                    for (mj, sj) in m.iter_mut().zip(s) {
                        *mj += w * *sj as f64;
                    }
                }
                Some(m)
            }
            RowLaw::Custom(c) => c.0.mean(),
        }
    }

    /// Marginal variances, where available in closed form.
    pub fn variance(&self) -> Option<Vec<f64>> {
        match self {
            RowLaw::Poisson { rates } => Some(rates.clone()),
            RowLaw::Geometric { means } => Some(means.iter().map(|m| m * (1.0 + m)).collect()),
            RowLaw::Deterministic { values } => Some(vec![0.0; values.len()]),
            RowLaw::TotalThenThin { totals, alpha } => {
                // X = Bin(U, a): Var = a(1-a)E U + a^2 Var U
                let var = |a: f64, t: &TotalLaw| a * (1.0 - a) * t.mean() + a * a * t.variance();
                let mut v: Vec<f64> = totals.iter().map(|t| var(*alpha, t)).collect();
                v.extend(totals.iter().map(|t| var(1.0 - alpha, t)));
                Some(v)
            }
            RowLaw::Empirical { support, weights } => {
                let mean = self.mean()?;
                let mut v = vec![0.0; mean.len()];
                for (s, w) in support.iter().zip(weights) {
                    for ((vj, sj), mj) in v.iter_mut().zip(s).zip(&mean) {
                        let d = *sj as f64 - mj;
                        *vj += w * d * d;
                    }
                }
                Some(v)
            }
            RowLaw::Custom(_) => None,
        }
    }

    /// `E(V log V)` per entry, finite for every parametric law here (all
    /// have exponential tails); `None` for custom laws.
    pub fn has_finite_vlogv(&self) -> Option<bool> {
        match self {
            RowLaw::Custom(_) => None,
            _ => Some(true),
        }
    }

    /// Adds one draw of the row to `out`.
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        out: &mut [u64],
    ) -> Result<(), OffspringError> {
        match self {
            RowLaw::Poisson { rates } => {
                for (o, &m) in out.iter_mut().zip(rates) {
                    add(o, poisson(m, rng))?;
                }
            }
            RowLaw::Geometric { means } => {
                for (o, &m) in out.iter_mut().zip(means) {
                    add(o, geometric(m, rng))?;
                }
            }
            RowLaw::Deterministic { values } => {
                for (o, &v) in out.iter_mut().zip(values) {
                    add(o, v)?;
                }
            }
            RowLaw::TotalThenThin { totals, alpha } => {
                let n = totals.len();
                for (j, t) in totals.iter().enumerate() {
                    let u = t.sample(rng);
                    let females = if u == 0 {
                        0
                    } else {
                        Binomial::new(u, *alpha)
                            .expect("validated alpha")
                            .sample(rng)
                    };
                    add(&mut out[j], females)?;
                    add(&mut out[n + j], u - females)?;
                }
            }
            RowLaw::Empirical { support, weights } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = support.len() - 1;
                for (k, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                for (o, &v) in out.iter_mut().zip(&support[pick]) {
                    add(o, v)?;
                }
            }
            RowLaw::Custom(c) => {
                let mut tmp = vec![0u64; out.len()];
                let mut dynrng = DynRng(rng);
                c.0.sample(&mut dynrng, &mut tmp);
                for (o, v) in out.iter_mut().zip(tmp) {
                    add(o, v)?;
                }
            }
        }
        Ok(())
    }

    /// Adds the sum of `count` i.i.d. draws of the row to `out`.
    ///
    /// Up to `threshold` couples every draw is made individually. Above it,
    /// exact superpositions are used where they exist (Poisson sums,
    /// Poisson thinning, deterministic multiples); other laws fail unless
    /// `allow_normal` is set, in which case each entry gets a rounded normal
    /// with matching mean and variance.
    pub fn sample_sum_into<R: Rng + ?Sized>(
        &self,
        row: usize,
        count: u64,
        threshold: u64,
        allow_normal: bool,
        rng: &mut R,
        out: &mut [u64],
    ) -> Result<(), OffspringError> {
        if count == 0 {
            return Ok(());
        }
        if count <= threshold {
            for _ in 0..count {
                self.sample_into(rng, out)?;
            }
            return Ok(());
        }
        let c = count as f64;
        match self {
            RowLaw::Poisson { rates } => {
                for (o, &m) in out.iter_mut().zip(rates) {
                    add(o, poisson(c * m, rng))?;
                }
                Ok(())
            }
            RowLaw::Deterministic { values } => {
                for (o, &v) in out.iter_mut().zip(values) {
                    add(o, v.checked_mul(count).ok_or(OffspringError::Overflow)?)?;
                }
                Ok(())
            }
            RowLaw::TotalThenThin { totals, alpha }
                if totals.iter().all(|t| matches!(t, TotalLaw::Poisson { .. })) =>
            {
                let n = totals.len();
                for (j, t) in totals.iter().enumerate() {
                    let m = t.mean();
                    add(&mut out[j], poisson(c * alpha * m, rng))?;
                    add(&mut out[n + j], poisson(c * (1.0 - alpha) * m, rng))?;
                }
                Ok(())
            }
            _ if allow_normal => {
                let (Some(mean), Some(var)) = (self.mean(), self.variance()) else {
                    return Err(OffspringError::ThresholdExceeded {
                        row,
                        count,
                        threshold,
                    });
                };
                for ((o, m), v) in out.iter_mut().zip(mean).zip(var) {
                    let sd = (c * v).sqrt();
                    let x = if sd > 0.0 {
                        Normal::new(c * m, sd).expect("finite normal").sample(rng)
                    } else {
                        c * m
                    };
                    let x = x.round().max(0.0);
                    if x >= u64::MAX as f64 {
                        return Err(OffspringError::Overflow);
                    }
                    add(o, x as u64)?;
                }
                Ok(())
            }
            _ => Err(OffspringError::ThresholdExceeded {
                row,
                count,
                threshold,
            }),
        }
    }
}

struct DynRng<'a, R: Rng + ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// One [`RowLaw`] per couple type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OffspringLaw {
    pub rows: Vec<RowLaw>,
}

impl OffspringLaw {
    pub fn new(rows: Vec<RowLaw>) -> Self {
        Self { rows }
    }

    /// Independent Poisson entries with mean matrix `rates` (`p x q`).
    pub fn poisson(rates: &[Vec<f64>]) -> Self {
        Self::new(
            rates
                .iter()
                .map(|r| RowLaw::Poisson { rates: r.clone() })
                .collect(),
        )
    }

    pub fn deterministic(values: &[Vec<u64>]) -> Self {
        Self::new(
            values
                .iter()
                .map(|v| RowLaw::Deterministic { values: v.clone() })
                .collect(),
        )
    }

    pub fn couple_types(&self) -> usize {
        self.rows.len()
    }

    /// Common row length, or `None` when rows disagree.
    pub fn individual_types(&self) -> Option<usize> {
        let q = self.rows.first()?.individual_types();
        self.rows
            .iter()
            .all(|r| r.individual_types() == q)
            .then_some(q)
    }
}
