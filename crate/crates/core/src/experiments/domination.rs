use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_len, Cell, ExperimentError, ExperimentReport};
use crate::model::ValidatedModel;
use crate::rng::derive_seed;
use crate::sim::{final_state, SimError, SimOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominationCase {
    pub z0: Vec<u64>,
    pub z0_tilde: Vec<u64>,
    pub z1: Vec<u64>,
    pub z1_tilde: Vec<u64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DominationParams {
    pub cases: Vec<DominationCase>,
    pub trials: u64,
    /// The product may exceed the joint probability by this many combined
    /// standard errors.
    pub se_multiplier: f64,
    pub sim: SimOptions,
}

impl Default for DominationParams {
    fn default() -> Self {
        Self {
            cases: Vec::new(),
            trials: 1_000,
            se_multiplier: 3.0,
            sim: SimOptions::default(),
        }
    }
}

fn add(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Monte Carlo estimate of `P(Z_n >= target | Z_0 = start)` and its
/// standard error.
pub fn reach_probability(
    model: &ValidatedModel,
    start: &[u64],
    target: &[u64],
    n: usize,
    trials: u64,
    seed: u64,
    sim: &SimOptions,
) -> Result<(f64, f64), SimError> {
    let opts = SimOptions {
        escape_cap: None,
        ..*sim
    };
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            final_state(model, start, n, seed, t, &opts)
                .map(|(z, _)| z.iter().zip(target).all(|(a, b)| a >= b) as u64)
        })
        .collect::<Result<Vec<u64>, _>>()?
        .into_iter()
        .sum();
    let p = hits as f64 / trials as f64;
    Ok((p, (p * (1.0 - p) / trials as f64).sqrt()))
}

/// Checks `P(Z_n >= z1 + z1~ | z0 + z0~) >= P(Z_n >= z1 | z0) P(Z_n >= z1~ | z0~)`.
///
/// The joint estimate and the `z0` factor share their random streams, so
/// `z0~ = z1~ = 0` gives exact equality.
pub fn domination_experiment(
    model: &ValidatedModel,
    params: &DominationParams,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    let p = model.p();
    let mut report = ExperimentReport::new(
        "domination",
        model.fingerprint().to_string(),
        seed,
        serde_json::to_value(params).expect("parameters serialise"),
    );
    if params.cases.is_empty() {
        return Err(ExperimentError::BadParameter(
            "domination needs at least one case".into(),
        ));
    }
    for (k, case) in params.cases.iter().enumerate() {
        for (what, v) in [
            ("z0", &case.z0),
            ("z0_tilde", &case.z0_tilde),
            ("z1", &case.z1),
            ("z1_tilde", &case.z1_tilde),
        ] {
            check_len(what, v.len(), p)?;
        }
        let shared = derive_seed(seed, 2 * k as u64);
        let other = derive_seed(seed, 2 * k as u64 + 1);
        let joint_start = add(&case.z0, &case.z0_tilde);
        let joint_target = add(&case.z1, &case.z1_tilde);
        let (a, se_a) = reach_probability(
            model,
            &joint_start,
            &joint_target,
            case.n,
            params.trials,
            shared,
            &params.sim,
        )?;
        let (b, se_b) = reach_probability(
            model,
            &case.z0,
            &case.z1,
            case.n,
            params.trials,
            shared,
            &params.sim,
        )?;
        let (c, se_c) = reach_probability(
            model,
            &case.z0_tilde,
            &case.z1_tilde,
            case.n,
            params.trials,
            other,
            &params.sim,
        )?;
        let product = b * c;
        let se_product = (c * c * se_b * se_b + b * b * se_c * se_c).sqrt();
        let combined = (se_a * se_a + se_product * se_product).sqrt();

        let mut cell = Cell::new(format!("case={k}"), params.trials);
        cell.set("n", case.n as u64);
        cell.set("z0", format!("{:?}", case.z0));
        cell.set("z0_tilde", format!("{:?}", case.z0_tilde));
        cell.set("z1", format!("{:?}", case.z1));
        cell.set("z1_tilde", format!("{:?}", case.z1_tilde));
        cell.set_f64("joint", a);
        cell.set_f64("joint_se", se_a);
        cell.set_f64("first", b);
        cell.set_f64("second", c);
        cell.set_f64("product", product);
        cell.set_f64("product_se", se_product);
        cell.set_f64("margin", a - product);
        cell.pass = Some(a >= product - params.se_multiplier * combined);
        report.cells.push(cell);
    }
    Ok(report.finish())
}
