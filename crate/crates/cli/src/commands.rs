use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bgw_core::eigen::{classify, solve_eigen, Criticality, EigenOutcome};
use bgw_core::experiments::run_experiment;
use bgw_core::model::validate_model;
use bgw_core::sim::{batch_extinction, simulate};
use bgw_core::ValidatedModel;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::{Cli, Command, Format};

pub const EXIT_INFINITE: u8 = 2;
pub const EXIT_ASSERTION: u8 = 3;

/// Loads the config, applies flag overrides and dispatches. `Err` maps to exit 1.
pub fn run(cli: &Cli) -> Result<u8> {
    let Some(path) = &cli.config else {
        bail!("--config is required");
    };
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    cfg.seed = Some(cfg.seed.unwrap_or(0));
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    // The embedded config never records where it was written, so moving
    // the output directory does not change the artifacts.
    cfg.output = None;
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut stdout = String::new();
    let code = match cli.command {
        Command::Eigen => eigen(&cfg, &out, cli.format, &mut stdout)?,
        Command::Simulate => simulate_cmd(&cfg, &out, cli.format, &mut stdout)?,
        Command::Experiment => experiment(&cfg, &out, cli.format, &mut stdout)?,
    };
    print!("{stdout}");
    Ok(code)
}

fn seed(cfg: &RunConfig) -> u64 {
    cfg.seed.unwrap_or(0)
}

fn model(cfg: &RunConfig) -> Result<ValidatedModel> {
    let Some(m) = &cfg.model else {
        bail!("config has no [model] block");
    };
    validate_model(m.to_spec()?).map_err(|report| anyhow::anyhow!("model is invalid: {report}"))
}

fn write(out: &Path, name: &str, text: &str) -> Result<()> {
    let path = out.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serialises");
    s.push('\n');
    s
}

fn config_value(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).expect("config serialises")
}

fn eigen(cfg: &RunConfig, out: &Path, format: Option<Format>, stdout: &mut String) -> Result<u8> {
    let m = model(cfg)?;
    let opts = cfg.solver.eigen_options(seed(cfg));
    let outcome = solve_eigen(&m, &opts)?;
    let class = classify(&outcome, opts.critical_band);
    let doc = json!({
        "config": config_value(cfg),
        "fingerprint": m.fingerprint(),
        "class": class.to_string(),
        "result": outcome,
    });
    let text = pretty(&doc);
    write(out, "eigen.json", &text)?;
    match (format, &outcome) {
        (Some(Format::Json), _) => stdout.push_str(&text),
        (Some(Format::Csv), EigenOutcome::Finite(r)) => {
            let zs: Vec<String> = (1..=r.z_star.len())
                .map(|i| format!("z_star_{i}"))
                .collect();
            let vs: Vec<String> = r.z_star.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(
                stdout,
                "lambda_star,residual,iterations,class,{}",
                zs.join(",")
            );
            let _ = writeln!(
                stdout,
                "{},{},{},{class},{}",
                r.lambda_star,
                r.residual,
                r.iterations,
                vs.join(",")
            );
        }
        (Some(Format::Csv), EigenOutcome::InfiniteOperator { component, .. }) => {
            let _ = writeln!(stdout, "lambda_star,infinite_component,class");
            let _ = writeln!(stdout, "inf,{component},{class}");
        }
        (None, EigenOutcome::Finite(r)) => {
            let _ = writeln!(stdout, "lambda_star={}", r.lambda_star);
            let _ = writeln!(stdout, "z_star={:?}", r.z_star);
            let _ = writeln!(stdout, "residual={}", r.residual);
            let _ = writeln!(stdout, "iterations={}", r.iterations);
            let _ = writeln!(stdout, "class={class}");
        }
        (None, EigenOutcome::InfiniteOperator { witness, component }) => {
            let _ = writeln!(stdout, "lambda_star=inf");
            let _ = writeln!(stdout, "infinite_component={component}");
            let _ = writeln!(stdout, "witness={witness:?}");
            let _ = writeln!(stdout, "class={class}");
        }
    }
    Ok(if class == Criticality::SurvivalFromLargeStates {
        EXIT_INFINITE
    } else {
        0
    })
}

fn simulate_cmd(
    cfg: &RunConfig,
    out: &Path,
    format: Option<Format>,
    stdout: &mut String,
) -> Result<u8> {
    let m = model(cfg)?;
    let Some(sc) = &cfg.simulate else {
        bail!("config has no [simulate] block");
    };
    if sc.z0.len() != m.p() {
        bail!(
            "simulate.z0 has length {}, expected p = {}",
            sc.z0.len(),
            m.p()
        );
    }
    let opts = sc.options();
    let s = seed(cfg);
    let path = simulate(&m, &sc.z0, sc.horizon, s, sc.trial, &opts)?;
    let summary = batch_extinction(&m, &sc.z0, sc.horizon, sc.trials, s, &opts)?;
    let csv = path.to_csv();
    write(out, "trajectory.csv", &csv)?;
    let doc = json!({
        "config": config_value(cfg),
        "fingerprint": m.fingerprint(),
        "summary": summary,
    });
    let text = pretty(&doc);
    write(out, "extinction.json", &text)?;
    match format {
        Some(Format::Json) => stdout.push_str(&text),
        Some(Format::Csv) => stdout.push_str(&csv),
        None => {
            let _ = writeln!(stdout, "q_hat={}", summary.q_hat);
            let _ = writeln!(stdout, "ci95=[{}, {}]", summary.ci95.lo, summary.ci95.hi);
            let _ = writeln!(stdout, "extinct={}", summary.extinct_count);
            let _ = writeln!(stdout, "escaped={}", summary.escaped_count);
            let _ = writeln!(stdout, "trials={}", summary.trials);
        }
    }
    Ok(0)
}

fn experiment(
    cfg: &RunConfig,
    out: &Path,
    format: Option<Format>,
    stdout: &mut String,
) -> Result<u8> {
    let Some(spec) = &cfg.experiment else {
        bail!("config has no [experiment] block");
    };
    let m = match (&cfg.model, spec.needs_model()) {
        (Some(_), _) | (None, true) => Some(model(cfg)?),
        (None, false) => None,
    };
    let s = seed(cfg);
    let report = run_experiment(spec, m.as_ref(), &cfg.solver.eigen_options(s), s)?;
    let csv = report.to_csv();
    let mut doc = serde_json::to_value(&report).expect("report serialises");
    doc.as_object_mut()
        .expect("report is an object")
        .insert("config".into(), config_value(cfg));
    let text = pretty(&doc);
    let name = spec.name();
    write(out, &format!("{name}.csv"), &csv)?;
    write(out, &format!("{name}.json"), &text)?;
    match format {
        Some(Format::Json) => stdout.push_str(&text),
        Some(Format::Csv) => stdout.push_str(&csv),
        None => {
            for c in &report.cells {
                let verdict = match c.pass {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "-",
                };
                let _ = writeln!(stdout, "{} {verdict}", c.label);
            }
            for n in &report.notes {
                let _ = writeln!(stdout, "note: {n}");
            }
            let _ = writeln!(stdout, "passed={}", report.passed);
        }
    }
    Ok(if report.passed { 0 } else { EXIT_ASSERTION })
}
