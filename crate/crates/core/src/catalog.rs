//! Built-in example models.
//!
//! Functions in [`spec`] build unvalidated [`ModelSpec`]s; the top-level
//! functions validate them and panic on parameters that break a model
//! assumption, which makes them convenient in tests and examples.

use rand::Rng;

use crate::mating::MatingFunction;
use crate::model::{validate_model, ModelSpec, ValidatedModel};
use crate::offspring::{OffspringLaw, RowLaw, TotalLaw};

pub mod spec {
    use super::*;

    /// `alpha I + beta J` with `J` the all-ones `p x p` matrix.
    pub fn scaled_identity_plus_ones(p: usize, alpha: f64, beta: f64) -> Vec<Vec<f64>> {
        (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| beta + if i == j { alpha } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    fn join_rows(x: &[Vec<f64>], y: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .zip(y)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect()
    }

    /// Perfect fidelity with independent Poisson offspring, female means
    /// `x` and male means `y` (both `p x p`).
    pub fn perfect_fidelity_poisson(x: &[Vec<f64>], y: &[Vec<f64>]) -> ModelSpec {
        ModelSpec::new(
            MatingFunction::PerfectFidelity { types: x.len() },
            OffspringLaw::poisson(&join_rows(x, y)),
        )
    }

    /// Perfect fidelity with `X = alpha I + beta J`, `Y = alpha' I + beta' J`.
    pub fn symmetric_perfect_fidelity(
        p: usize,
        alpha: f64,
        beta: f64,
        alpha_prime: f64,
        beta_prime: f64,
    ) -> ModelSpec {
        perfect_fidelity_poisson(
            &scaled_identity_plus_ones(p, alpha, beta),
            &scaled_identity_plus_ones(p, alpha_prime, beta_prime),
        )
    }

    /// Perfect fidelity where each child of a type-`i` couple is of type
    /// `j` with Poisson count of mean `u[i][j]`, then female with probability
    /// `alpha`.
    pub fn proportional_sex_assignment(u: &[Vec<f64>], alpha: f64) -> ModelSpec {
        let rows = u
            .iter()
            .map(|r| RowLaw::TotalThenThin {
                totals: r.iter().map(|&mean| TotalLaw::Poisson { mean }).collect(),
                alpha,
            })
            .collect();
        ModelSpec::new(
            MatingFunction::PerfectFidelity { types: u.len() },
            OffspringLaw::new(rows),
        )
    }

    /// Completely promiscuous mating with Poisson offspring; `x` is
    /// `p x p`, `y` is `p x n_m`.
    pub fn completely_promiscuous(x: &[Vec<f64>], y: &[Vec<f64>]) -> ModelSpec {
        ModelSpec::new(
            MatingFunction::CompletelyPromiscuous {
                female_types: x.len(),
                male_types: y.first().map_or(0, Vec::len),
            },
            OffspringLaw::poisson(&join_rows(x, y)),
        )
    }

    pub fn single_type_perfect_fidelity(female_mean: f64, male_mean: f64) -> ModelSpec {
        perfect_fidelity_poisson(&[vec![female_mean]], &[vec![male_mean]])
    }

    pub fn promiscuous_single(female_mean: f64, male_mean: f64) -> ModelSpec {
        ModelSpec::new(
            MatingFunction::PromiscuousSingle,
            OffspringLaw::poisson(&[vec![female_mean, male_mean]]),
        )
    }

    /// `xi(x, y) = x y` with Poisson offspring; `M` is infinite.
    pub fn product(female_mean: f64, male_mean: f64) -> ModelSpec {
        ModelSpec::new(
            MatingFunction::Product,
            OffspringLaw::poisson(&[vec![female_mean, male_mean]]),
        )
    }

    /// `xi(x, y) = min(x, d y)` per type with geometric offspring counts.
    pub fn polygamous(types: usize, d: u64, female_mean: f64, male_mean: f64) -> ModelSpec {
        let row = |i: usize| {
            let mut means = vec![0.0; 2 * types];
            means[i] = female_mean;
            means[types + i] = male_mean;
            RowLaw::Geometric { means }
        };
        ModelSpec::new(
            MatingFunction::Polygamous { types, d },
            OffspringLaw::new((0..types).map(row).collect()),
        )
    }

    /// The asexual single-type Galton-Watson process with Poisson offspring.
    pub fn asexual_poisson(mean: f64) -> ModelSpec {
        identity_poisson(&[vec![mean]])
    }

    /// Identity mating (multi-type asexual process) with Poisson rows.
    pub fn identity_poisson(v: &[Vec<f64>]) -> ModelSpec {
        ModelSpec::new(
            MatingFunction::Identity { dim: v.len() },
            OffspringLaw::poisson(v),
        )
    }

    /// Single-type perfect fidelity where every couple has exactly
    /// `females` daughters and `males` sons.
    pub fn deterministic_fidelity(females: u64, males: u64) -> ModelSpec {
        ModelSpec::new(
            MatingFunction::PerfectFidelity { types: 1 },
            OffspringLaw::deterministic(&[vec![females, males]]),
        )
    }

    /// Deterministic identity mating: `Z_{n+1} = Z_n V` exactly.
    pub fn deterministic_identity(v: &[Vec<u64>]) -> ModelSpec {
        ModelSpec::new(
            MatingFunction::Identity { dim: v.len() },
            OffspringLaw::deterministic(v),
        )
    }

    /// Two-type model where a couple of type 1 has two children of a single
    /// random type, and a type-2 couple one type-2 child.
    pub fn random_single_type_children() -> ModelSpec {
        ModelSpec::new(
            MatingFunction::Identity { dim: 2 },
            OffspringLaw::new(vec![
                RowLaw::Empirical {
                    support: vec![vec![2, 0], vec![0, 2]],
                    weights: vec![0.5, 0.5],
                },
                RowLaw::Deterministic { values: vec![0, 1] },
            ]),
        )
    }
}

fn validated(name: &str, s: ModelSpec) -> ValidatedModel {
    validate_model(s).unwrap_or_else(|report| panic!("catalog model {name} is invalid: {report}"))
}

pub fn symmetric_perfect_fidelity(
    p: usize,
    alpha: f64,
    beta: f64,
    alpha_prime: f64,
    beta_prime: f64,
) -> ValidatedModel {
    validated(
        "symmetric_perfect_fidelity",
        spec::symmetric_perfect_fidelity(p, alpha, beta, alpha_prime, beta_prime),
    )
}

pub fn perfect_fidelity_poisson(x: &[Vec<f64>], y: &[Vec<f64>]) -> ValidatedModel {
    validated(
        "perfect_fidelity_poisson",
        spec::perfect_fidelity_poisson(x, y),
    )
}

pub fn proportional_sex_assignment(u: &[Vec<f64>], alpha: f64) -> ValidatedModel {
    validated(
        "proportional_sex_assignment",
        spec::proportional_sex_assignment(u, alpha),
    )
}

pub fn completely_promiscuous(x: &[Vec<f64>], y: &[Vec<f64>]) -> ValidatedModel {
    validated("completely_promiscuous", spec::completely_promiscuous(x, y))
}

pub fn single_type_perfect_fidelity(female_mean: f64, male_mean: f64) -> ValidatedModel {
    validated(
        "single_type_perfect_fidelity",
        spec::single_type_perfect_fidelity(female_mean, male_mean),
    )
}

pub fn promiscuous_single(female_mean: f64, male_mean: f64) -> ValidatedModel {
    validated(
        "promiscuous_single",
        spec::promiscuous_single(female_mean, male_mean),
    )
}

pub fn product(female_mean: f64, male_mean: f64) -> ValidatedModel {
    validated("product", spec::product(female_mean, male_mean))
}

pub fn polygamous(types: usize, d: u64, female_mean: f64, male_mean: f64) -> ValidatedModel {
    validated(
        "polygamous",
        spec::polygamous(types, d, female_mean, male_mean),
    )
}

pub fn asexual_poisson(mean: f64) -> ValidatedModel {
    validated("asexual_poisson", spec::asexual_poisson(mean))
}

pub fn identity_poisson(v: &[Vec<f64>]) -> ValidatedModel {
    validated("identity_poisson", spec::identity_poisson(v))
}

pub fn deterministic_fidelity(females: u64, males: u64) -> ValidatedModel {
    validated(
        "deterministic_fidelity",
        spec::deterministic_fidelity(females, males),
    )
}

pub fn deterministic_identity(v: &[Vec<u64>]) -> ValidatedModel {
    validated("deterministic_identity", spec::deterministic_identity(v))
}

/// Named example models covering every catalog mating function.
pub fn catalog() -> Vec<(&'static str, ModelSpec)> {
    vec![
        (
            "symmetric_perfect_fidelity",
            spec::symmetric_perfect_fidelity(2, 0.5, 0.3, 1.0, 0.1),
        ),
        (
            "proportional_sex_assignment",
            spec::proportional_sex_assignment(&[vec![1.0, 2.0], vec![1.5, 0.5]], 0.3),
        ),
        (
            "completely_promiscuous",
            spec::completely_promiscuous(
                &[vec![0.6, 0.4], vec![0.3, 0.9]],
                &[vec![0.5], vec![0.2]],
            ),
        ),
        (
            "single_type_perfect_fidelity",
            spec::single_type_perfect_fidelity(0.8, 1.9),
        ),
        ("promiscuous_single", spec::promiscuous_single(0.5, 5.0)),
        ("polygamous", spec::polygamous(1, 3, 1.2, 0.6)),
        ("asexual_poisson", spec::asexual_poisson(1.5)),
        (
            "identity",
            spec::identity_poisson(&[vec![0.5, 0.5], vec![0.5, 0.5]]),
        ),
        ("deterministic_fidelity", spec::deterministic_fidelity(1, 1)),
        (
            "random_single_type_children",
            spec::random_single_type_children(),
        ),
        (
            "min_of_linear",
            ModelSpec::new(
                MatingFunction::MinOfLinear {
                    first: vec![vec![1, 0], vec![0, 1], vec![1, 1]],
                    second: vec![vec![2, 1], vec![1, 2], vec![0, 0]],
                    offset: None,
                },
                OffspringLaw::poisson(&[vec![0.6, 0.5, 0.4], vec![0.3, 0.7, 0.5]]),
            ),
        ),
        (
            "capped_identity",
            ModelSpec::new(
                MatingFunction::CappedIdentity { dim: 2, alpha: 0.6 },
                OffspringLaw::poisson(&[vec![0.9, 0.4], vec![0.5, 0.8]]),
            ),
        ),
    ]
}

/// Mating kinds with a finite operator, as named in configs.
pub const FINITE_MATING_KINDS: [&str; 7] = [
    "identity",
    "perfect_fidelity",
    "polygamous",
    "promiscuous_single",
    "completely_promiscuous",
    "min_of_linear",
    "capped_identity",
];

/// A random model of the given mating kind with 1 to 3 couple types and
/// Poisson offspring rates in `[0.1, 2]`. `None` for an unknown kind.
pub fn random_spec<R: Rng + ?Sized>(kind: &str, rng: &mut R) -> Option<ModelSpec> {
    let p = rng.random_range(1..=3usize);
    let mating = match kind {
        "identity" => MatingFunction::Identity { dim: p },
        "perfect_fidelity" => MatingFunction::PerfectFidelity { types: p },
        "polygamous" => MatingFunction::Polygamous {
            types: p,
            d: rng.random_range(1..=4),
        },
        "promiscuous_single" => MatingFunction::PromiscuousSingle,
        "completely_promiscuous" => MatingFunction::CompletelyPromiscuous {
            female_types: p,
            male_types: rng.random_range(1..=3),
        },
        "min_of_linear" => {
            let q = rng.random_range(1..=3usize);
            let mut matrix = || -> Vec<Vec<u64>> {
                (0..q)
                    .map(|_| (0..p).map(|_| rng.random_range(0..=3)).collect())
                    .collect()
            };
            MatingFunction::MinOfLinear {
                first: matrix(),
                second: matrix(),
                offset: None,
            }
        }
        "capped_identity" => MatingFunction::CappedIdentity {
            dim: p,
            alpha: rng.random_range(0.3..=1.0),
        },
        _ => return None,
    };
    let (p, q) = (mating.couple_types(), mating.individual_types());
    let rates: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..q).map(|_| rng.random_range(0.1..=2.0)).collect())
        .collect();
    Some(ModelSpec::new(mating, OffspringLaw::poisson(&rates)))
}
