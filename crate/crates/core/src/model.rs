//! Domain types, the mean reproduction matrix and model validation.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::linalg::{norm1, Matrix};
use crate::mating::{check_superadditivity, MatingFunction};
use crate::offspring::{OffspringError, OffspringLaw};
use crate::rng::{purpose, stream_rng};
use crate::stats::Moments;

/// Means above this are treated as non-integrable.
pub const INTEGRABILITY_CAP: f64 = 1e12;

/// Counts of couples (length `p`) or individuals (length `q`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PopulationVector(Vec<u64>);

impl PopulationVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    /// `|z|`, failing on overflow.
    pub fn total(&self) -> Option<u64> {
        self.0.iter().try_fold(0u64, |acc, &v| acc.checked_add(v))
    }

    pub fn to_real(&self) -> RealVector {
        RealVector(self.0.iter().map(|&v| v as f64).collect())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }

    /// Componentwise `self >= other`.
    pub fn dominates(&self, other: &[u64]) -> bool {
        self.0.iter().zip(other).all(|(a, b)| a >= b)
    }
}

impl From<Vec<u64>> for PopulationVector {
    fn from(v: Vec<u64>) -> Self {
        Self(v)
    }
}

impl Deref for PopulationVector {
    type Target = [u64];
    fn deref(&self) -> &[u64] {
        &self.0
    }
}

/// Nonnegative real vector; entries may be `+inf` when flagged divergent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn norm1(&self) -> f64 {
        norm1(&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, c: f64) -> RealVector {
        RealVector(self.0.iter().map(|v| v * c).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for RealVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for RealVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("mean of V[{row}][{col}] estimated at {estimate}, above the integrability cap")]
    NonIntegrable {
        row: usize,
        col: usize,
        estimate: f64,
    },
    #[error("column {0} of the mean matrix sums to zero")]
    ZeroColumn(usize),
    #[error("estimation budget must be at least 1")]
    ZeroBudget,
    #[error(transparent)]
    Offspring(#[from] OffspringError),
}

/// `V[i][j]` = expected type-`j` offspring of a type-`i` couple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanMatrix {
    pub means: Matrix,
    /// Monte Carlo standard errors; all zero for closed-form rows.
    pub std_errors: Matrix,
}

impl MeanMatrix {
    pub fn exact(means: Matrix) -> Self {
        let std_errors = Matrix::zeros(means.rows(), means.cols());
        Self { means, std_errors }
    }

    pub fn p(&self) -> usize {
        self.means.rows()
    }

    pub fn q(&self) -> usize {
        self.means.cols()
    }

    /// `z V`.
    pub fn left_mul(&self, z: &[f64]) -> Vec<f64> {
        self.means.left_mul(z)
    }

    /// Female block `X` (first `n_f` columns).
    pub fn female_block(&self, n_f: usize) -> Matrix {
        self.means.column_block(0, n_f)
    }

    /// Male block `Y` (columns after the first `n_f`).
    pub fn male_block(&self, n_f: usize) -> Matrix {
        self.means.column_block(n_f, self.q())
    }
}

/// Mean matrix of an offspring law. Closed-form rows are exact; custom rows
/// without a closed form are estimated from `estimation_budget` draws.
pub fn mean_matrix(
    offspring: &OffspringLaw,
    estimation_budget: u64,
    seed: u64,
) -> Result<MeanMatrix, ModelError> {
    if estimation_budget == 0 {
        return Err(ModelError::ZeroBudget);
    }
    let p = offspring.couple_types();
    let q = offspring.rows.first().map_or(0, |r| r.individual_types());
    let mut means = Matrix::zeros(p, q);
    let mut ses = Matrix::zeros(p, q);
    for (i, row) in offspring.rows.iter().enumerate() {
        if row.individual_types() != q {
            return Err(ModelError::DimensionMismatch {
                what: "offspring row",
                expected: q,
                found: row.individual_types(),
            });
        }
        row.validate()?;
        match row.mean() {
            Some(m) => {
                for (j, v) in m.into_iter().enumerate() {
                    means.set(i, j, v);
                }
            }
            None => {
                let mut rng = stream_rng(seed, purpose::MEAN_ESTIMATION - i as u64);
                let mut acc = vec![Moments::new(); q];
                let mut draw = vec![0u64; q];
                for _ in 0..estimation_budget {
                    draw.iter_mut().for_each(|v| *v = 0);
                    row.sample_into(&mut rng, &mut draw)?;
                    for (a, &v) in acc.iter_mut().zip(&draw) {
                        a.push(v as f64);
                    }
                }
                for (j, a) in acc.iter().enumerate() {
                    means.set(i, j, a.mean());
                    ses.set(i, j, a.std_error());
                }
            }
        }
    }
    for i in 0..p {
        for j in 0..q {
            let m = means.get(i, j);
            if !m.is_finite() || m > INTEGRABILITY_CAP {
                return Err(ModelError::NonIntegrable {
                    row: i,
                    col: j,
                    estimate: m,
                });
            }
        }
    }
    if let Some(j) = (0..q).find(|&j| means.column_sum(j) <= 0.0) {
        return Err(ModelError::ZeroColumn(j));
    }
    Ok(MeanMatrix {
        means,
        std_errors: ses,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub mating: MatingFunction,
    pub offspring: OffspringLaw,
    /// `(n_f, n_m)`; metadata only, algorithms use the general `(p, q)` form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sex_split: Option<(usize, usize)>,
}

impl ModelSpec {
    pub fn new(mating: MatingFunction, offspring: OffspringLaw) -> Self {
        let sex_split = mating.sex_split();
        Self {
            mating,
            offspring,
            sex_split,
        }
    }

    pub fn p(&self) -> usize {
        self.mating.couple_types()
    }

    pub fn q(&self) -> usize {
        self.mating.individual_types()
    }
}

/// The modelling assumption a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    /// `xi(0) = 0`
    MatingVanishesAtZero,
    /// `xi(x1 + x2) >= xi(x1) + xi(x2)`
    Superadditivity,
    /// every column of `V` has positive sum
    ColumnSumPositive,
    /// every `V_{i,j}` integrable
    Integrability,
    /// `p, q >= 1` and consistent lengths
    Dimensions,
    /// `n_f, n_m >= 1`, `n_f + n_m = q`
    SexSplit,
    /// parameter ranges of the catalog entries
    Parameters,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Assumption::MatingVanishesAtZero => "xi(0)=0",
            Assumption::Superadditivity => "superadditivity xi(x1+x2)>=xi(x1)+xi(x2)",
            Assumption::ColumnSumPositive => "column sum positive",
            Assumption::Integrability => "integrable offspring",
            Assumption::Dimensions => "dimension consistency",
            Assumption::SexSplit => "sex split n_f+n_m=q",
            Assumption::Parameters => "parameter range",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub assumption: Assumption,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fails: {}", self.assumption, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn breaks(&self, assumption: Assumption) -> bool {
        self.violations.iter().any(|v| v.assumption == assumption)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Settings for [`validate_model_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Monte Carlo budget for custom rows without closed-form means.
    pub estimation_budget: u64,
    /// Superadditivity check for unverified mating functions.
    pub superadditivity_samples: u64,
    pub superadditivity_cap: u64,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            estimation_budget: 100_000,
            superadditivity_samples: 10_000,
            superadditivity_cap: 64,
            seed: 0,
        }
    }
}

struct ModelInner {
    spec: ModelSpec,
    mean: MeanMatrix,
    fingerprint: String,
}

/// An immutable model that passed validation. Cheap to clone and share
/// across threads.
#[derive(Clone)]
pub struct ValidatedModel {
    inner: Arc<ModelInner>,
}

impl fmt::Debug for ValidatedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ValidatedModel")
            .field("mating", &self.inner.spec.mating.kind_name())
            .field("p", &self.p())
            .field("q", &self.q())
            .field("fingerprint", &self.inner.fingerprint)
            .finish()
    }
}

impl ValidatedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.inner.spec
    }

    pub fn mating(&self) -> &MatingFunction {
        &self.inner.spec.mating
    }

    pub fn offspring(&self) -> &OffspringLaw {
        &self.inner.spec.offspring
    }

    pub fn mean(&self) -> &MeanMatrix {
        &self.inner.mean
    }

    pub fn p(&self) -> usize {
        self.inner.spec.p()
    }

    pub fn q(&self) -> usize {
        self.inner.spec.q()
    }

    /// Hex SHA-256 of the model's canonical JSON form.
    pub fn fingerprint(&self) -> &str {
        &self.inner.fingerprint
    }
}

/// Hex SHA-256 of a spec's JSON form. Custom components are identified by
/// name.
pub fn fingerprint(spec: &ModelSpec) -> String {
    fingerprint_json(spec)
}

/// Hex SHA-256 of any serialisable value's JSON form.
pub fn fingerprint_json<T: Serialize + fmt::Debug>(value: &T) -> String {
    let text = match serde_json::to_string(value) {
        Ok(s) => s,
        Err(_) => format!("{value:?}"),
    };
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn validate_model(spec: ModelSpec) -> Result<ValidatedModel, ValidationReport> {
    validate_model_with(spec, ValidationOptions::default())
}

/// Checks `xi(0) = 0`, superadditivity of unverified mating functions,
/// dimension consistency, integrability and positive column sums.
pub fn validate_model_with(
    spec: ModelSpec,
    opts: ValidationOptions,
) -> Result<ValidatedModel, ValidationReport> {
    let mut violations: Vec<Violation> = Vec::new();
    let push = |v: &mut Vec<Violation>, assumption, detail: String| {
        v.push(Violation { assumption, detail })
    };

    let p = spec.p();
    let q = spec.q();
    if let Err(e) = spec.mating.check_parameters() {
        push(&mut violations, Assumption::Parameters, e);
    }
    if p == 0 || q == 0 {
        push(
            &mut violations,
            Assumption::Dimensions,
            format!("p={p}, q={q}; both must be at least 1"),
        );
    }
    if spec.offspring.couple_types() != p {
        push(
            &mut violations,
            Assumption::Dimensions,
            format!(
                "offspring law has {} rows, mating function has p={p}",
                spec.offspring.couple_types()
            ),
        );
    }
    for (i, row) in spec.offspring.rows.iter().enumerate() {
        if row.individual_types() != q {
            push(
                &mut violations,
                Assumption::Dimensions,
                format!(
                    "offspring row {i} has length {}, expected q={q}",
                    row.individual_types()
                ),
            );
        }
        if let Err(e) = row.validate() {
            push(
                &mut violations,
                Assumption::Parameters,
                format!("offspring row {i}: {e}"),
            );
        }
    }
    if let Some((nf, nm)) = spec.sex_split {
        if nf == 0 || nm == 0 || nf + nm != q {
            push(
                &mut violations,
                Assumption::SexSplit,
                format!("(n_f, n_m)=({nf}, {nm}) with q={q}"),
            );
        }
    }
    if !violations.is_empty() {
        return Err(ValidationReport { violations });
    }

    match spec.mating.apply(&vec![0; q]) {
        Ok(z) if z.is_zero() => {}
        Ok(z) => push(
            &mut violations,
            Assumption::MatingVanishesAtZero,
            format!("xi(0)={:?}", z.as_slice()),
        ),
        Err(e) => push(
            &mut violations,
            Assumption::MatingVanishesAtZero,
            e.to_string(),
        ),
    }
    if !spec.mating.is_verified() {
        let report = check_superadditivity(
            &spec.mating,
            opts.superadditivity_samples,
            opts.superadditivity_cap,
            opts.seed,
        );
        if !report.passed() {
            let detail = match (&report.evaluation_error, report.counterexamples.first()) {
                (Some(e), _) => e.clone(),
                (None, Some(c)) => format!(
                    "{} of {} sampled pairs violate it, e.g. x1={:?}, x2={:?}: xi(x1+x2)={:?} < {:?}",
                    report.violations, report.samples, c.x1, c.x2, c.joint, c.separate
                ),
                (None, None) => "check failed".into(),
            };
            push(&mut violations, Assumption::Superadditivity, detail);
        }
    }

    let mean = match mean_matrix(&spec.offspring, opts.estimation_budget, opts.seed) {
        Ok(m) => Some(m),
        Err(ModelError::ZeroColumn(j)) => {
            push(
                &mut violations,
                Assumption::ColumnSumPositive,
                format!("column {} of V sums to 0", j + 1),
            );
            None
        }
        Err(e @ ModelError::NonIntegrable { .. }) => {
            push(&mut violations, Assumption::Integrability, e.to_string());
            None
        }
        Err(e) => {
            push(&mut violations, Assumption::Parameters, e.to_string());
            None
        }
    };

    match mean {
        Some(mean) if violations.is_empty() => {
            let fingerprint = fingerprint(&spec);
            Ok(ValidatedModel {
                inner: Arc::new(ModelInner {
                    spec,
                    mean,
                    fingerprint,
                }),
            })
        }
        _ => Err(ValidationReport { violations }),
    }
}
