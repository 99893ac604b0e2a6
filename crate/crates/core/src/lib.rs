//! Multi-type bisexual Galton-Watson branching processes.
//!
//! A population of mating units (couples) of `p` types produces individuals of
//! `q` types; a superadditive mating function then turns the individuals of a
//! generation into the next generation of couples. This crate provides:
//!
//! - the model types and validation ([`model`], [`mating`], [`offspring`]),
//! - the concave mean growth operator `M(z) = lim_r xi(r z V) / r`, its
//!   iterates, primitivity index and limit functional ([`operator`]),
//! - a concave Perron-Frobenius eigen solver and criticality classification
//!   ([`eigen`]),
//! - reproducible forward simulation and extinction estimation ([`sim`]),
//! - a Monte Carlo harness checking the limit theorems ([`experiments`]).

pub mod catalog;
pub mod eigen;
pub mod experiments;
pub mod linalg;
pub mod mating;
pub mod model;
pub mod offspring;
pub mod operator;
pub mod rng;
pub mod sim;
pub mod stats;

pub use eigen::{
    classify, solve_eigen, Criticality, EigenError, EigenOptions, EigenOutcome, EigenResult,
};
pub use mating::{check_superadditivity, Extension, MatingError, MatingFunction};
pub use model::{
    mean_matrix, validate_model, MeanMatrix, ModelError, ModelSpec, PopulationVector, RealVector,
    ValidatedModel, ValidationReport,
};
pub use offspring::{OffspringLaw, RowLaw, TotalLaw};
pub use operator::{eval_m, eval_p, iterate_m, primitivity_index, MOptions, OperatorError};
pub use sim::{batch_extinction, simulate, step, SimError, SimOptions, Trajectory};
