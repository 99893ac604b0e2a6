//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use bgw_core::catalog::{self, random_spec, FINITE_MATING_KINDS};
use bgw_core::eigen::{solve_eigen, EigenOptions, EigenOutcome, EigenResult};
use bgw_core::experiments::{
    domination_experiment, lln_experiment, supermartingale_experiment, DominationCase,
    DominationParams, ExperimentReport, LlnParams, SupermartingaleParams,
};
use bgw_core::model::validate_model;
use bgw_core::operator::{eval_m, fekete_schedule, MOptions};
use bgw_core::{batch_extinction, Extension, SimOptions, ValidatedModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("eigen closed forms", closed_forms),
        ("linear reductions", linear_reductions),
        ("extinction criterion", extinction_criterion),
        ("classical GW cross-check", classical_gw),
        ("operator properties", operator_properties),
        ("law of large numbers", lln),
        ("supermartingale", supermartingale),
        ("profile", profile),
        ("domination", domination),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = check();
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS criterion {}: {name} ({secs:.1}s) {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({secs:.1}s) {detail}", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn finite(model: &ValidatedModel, opts: &EigenOptions) -> Result<EigenResult, String> {
    match solve_eigen(model, opts) {
        Ok(EigenOutcome::Finite(r)) => Ok(r),
        other => Err(format!("expected a finite eigenpair, got {other:?}")),
    }
}

fn closed_forms() -> Verdict {
    let settings = [
        (2, 0.5, 0.3, 1.0, 0.1),
        (3, 0.2, 0.1, 0.4, 0.3),
        (4, 1.0, 0.05, 0.3, 0.2),
        (5, 0.1, 0.2, 0.5, 0.1),
    ];
    let mut worst = 0.0f64;
    for (p, a, b, a2, b2) in settings {
        let start = Instant::now();
        let model = catalog::symmetric_perfect_fidelity(p, a, b, a2, b2);
        let r = finite(&model, &EigenOptions::default())?;
        let elapsed = start.elapsed();
        let oracle = (a + b * p as f64).min(a2 + b2 * p as f64);
        let err = (r.lambda_star - oracle).abs();
        worst = worst.max(err);
        ensure(err < 1e-6, || {
            format!("p={p}: lambda {} vs {oracle}", r.lambda_star)
        })?;
        ensure(r.residual < 1e-6, || {
            format!("p={p}: residual {}", r.residual)
        })?;
        let off: f64 = r.z_star.iter().map(|z| (z - 1.0 / p as f64).abs()).sum();
        ensure(off < 1e-6, || format!("p={p}: z* {:?}", r.z_star))?;
        ensure(elapsed < Duration::from_secs(1), || {
            format!("p={p}: took {elapsed:?}")
        })?;
    }
    Ok(format!(
        "{} settings, max |dlambda| {worst:.1e}",
        settings.len()
    ))
}

/// Perron root and left vector (summing to 1) of a positive matrix.
fn perron(a: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let n = a.len();
    let mut left = vec![1.0 / n as f64; n];
    let mut lambda = 0.0;
    for _ in 0..20_000 {
        let next: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| left[i] * a[i][j]).sum())
            .collect();
        lambda = next.iter().sum();
        left = next.iter().map(|v| v / lambda).collect();
    }
    (lambda, left)
}

fn positive_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(0.05..1.5)).collect())
        .collect()
}

fn linear_reductions() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let p = if case % 2 == 0 { 3 } else { 5 };
        let v = positive_matrix(&mut rng, p, p);
        let x = positive_matrix(&mut rng, p, p);
        let y = positive_matrix(&mut rng, p, p);
        for (what, model, matrix) in [
            ("identity", catalog::identity_poisson(&v), &v),
            (
                "completely_promiscuous",
                catalog::completely_promiscuous(&x, &y),
                &x,
            ),
        ] {
            let (lambda, left) = perron(matrix);
            let r = finite(&model, &EigenOptions::default())?;
            let dz: f64 = r.z_star.iter().zip(&left).map(|(a, b)| (a - b).abs()).sum();
            let err = (r.lambda_star - lambda).abs().max(dz);
            worst = worst.max(err);
            ensure(err < 1e-6, || {
                format!(
                    "{what} case {case} ({p}x{p}): lambda {} vs {lambda}, z* off by {dz:.1e}",
                    r.lambda_star
                )
            })?;
        }
    }
    Ok(format!(
        "20 cases x 2 mating functions, max error {worst:.1e}"
    ))
}

fn bgw() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bgw"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

/// Runs `bgw <command> --config <name> --out <dir>` and returns the exit code.
fn run_cli(command: &str, name: &str, out: &Path) -> Result<i32, String> {
    let o = bgw()
        .args([command, "--config"])
        .arg(config(name))
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| format!("running bgw: {e}"))?;
    o.status.code().ok_or_else(|| "bgw was killed".to_string())
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cells(doc: &Value) -> Vec<Value> {
    doc["cells"].as_array().cloned().unwrap_or_default()
}

fn extinction_criterion() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let code = run_cli("experiment", "extinction_sweep.toml", dir.path())?;
    let elapsed = start.elapsed();
    let doc = read_json(&dir.path().join("extinction_sweep.json"))?;
    let (mut low, mut high) = (Vec::new(), Vec::new());
    for c in cells(&doc) {
        let v = &c["values"];
        let q = v["q_hat"].as_f64().ok_or("missing q_hat")?;
        let Some(lambda) = v["lambda_star"].as_f64() else {
            continue;
        };
        if lambda <= 0.9 + 1e-9 {
            ensure(q >= 0.99, || format!("lambda*={lambda}: q_hat {q} < 0.99"))?;
            low.push(format!("{lambda}:{q}"));
        } else if lambda >= 1.2 - 1e-9 {
            ensure(q <= 0.9, || format!("lambda*={lambda}: q_hat {q} > 0.9"))?;
            high.push(format!("{lambda}:{q}"));
        }
    }
    ensure(code == 0, || format!("exit code {code}"))?;
    ensure(!low.is_empty() && !high.is_empty(), || {
        "grid does not cross lambda*=1".into()
    })?;
    ensure(elapsed < Duration::from_secs(120), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "subcritical {} / supercritical {}",
        low.join(" "),
        high.join(" ")
    ))
}

fn classical_gw() -> Verdict {
    // root of s = exp(1.5 (s - 1)) in (0, 1) by bisection
    let g = |s: f64| (1.5 * (s - 1.0)).exp() - s;
    let (mut lo, mut hi) = (0.0, 0.9);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let model = catalog::asexual_poisson(1.5);
    // a line of 1000 survivors dies out with probability about 0.417^1000;
    // Poisson rows are drawn exactly as one superposed draw
    let opts = SimOptions {
        escape_cap: Some(1_000),
        exact_threshold: 0,
        ..SimOptions::default()
    };
    let s = batch_extinction(&model, &[1], 300, 100_000, 15, &opts).map_err(|e| e.to_string())?;
    ensure(s.ci95.contains(root), || {
        format!(
            "root {root:.6} outside [{:.4}, {:.4}], q_hat {}",
            s.ci95.lo, s.ci95.hi, s.q_hat
        )
    })?;
    Ok(format!(
        "root {root:.6}, q_hat {:.4} in [{:.4}, {:.4}]",
        s.q_hat, s.ci95.lo, s.ci95.hi
    ))
}

fn m_of(model: &ValidatedModel, z: &[f64]) -> Result<Vec<f64>, String> {
    let e = eval_m(model, z, &MOptions::default()).map_err(|e| e.to_string())?;
    ensure(e.converged, || format!("M did not converge at {z:?}"))?;
    Ok(e.value.into_inner())
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn operator_properties() -> Verdict {
    const TOL: f64 = 1e-6;
    const CASES: u64 = 1000;
    for (k, kind) in FINITE_MATING_KINDS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + k as u64);
        for case in 0..CASES {
            let fail = |what: &str| format!("{kind} case {case}: {what}");
            let spec = random_spec(kind, &mut rng).ok_or_else(|| fail("no random spec"))?;
            let model = validate_model(spec).map_err(|e| fail(&e.to_string()))?;
            let p = model.p();
            let point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..p).map(|_| rng.random_range(0.05..1.0)).collect()
            };
            let x = point(&mut rng);
            let y = point(&mut rng);
            let mx = m_of(&model, &x)?;
            let my = m_of(&model, &y)?;

            let alpha = [0.5, 2.0, 10.0][case as usize % 3];
            let scaled: Vec<f64> = x.iter().map(|v| alpha * v).collect();
            let ms = m_of(&model, &scaled)?;
            let diff: Vec<f64> = ms.iter().zip(&mx).map(|(a, b)| a - alpha * b).collect();
            ensure(l1(&diff) <= TOL * alpha * l1(&mx) + 1e-12, || {
                fail("homogeneity")
            })?;

            let a: f64 = rng.random_range(0.01..0.99);
            let mix: Vec<f64> = x
                .iter()
                .zip(&y)
                .map(|(u, v)| a * u + (1.0 - a) * v)
                .collect();
            let mm = m_of(&model, &mix)?;
            let slack = TOL * (l1(&mx) + l1(&my)) + 1e-12;
            ensure(
                (0..p).all(|i| mm[i] >= a * mx[i] + (1.0 - a) * my[i] - slack),
                || fail("concavity"),
            )?;

            let up: Vec<f64> = x.iter().map(|v| v + rng.random_range(0.0..0.5)).collect();
            let mu = m_of(&model, &up)?;
            ensure(
                (0..p).all(|i| mx[i] <= mu[i] + TOL * l1(&mu) + 1e-12),
                || fail("monotonicity"),
            )?;

            let ext = if case % 2 == 0 {
                Extension::Natural
            } else {
                Extension::Floor
            };
            let g = fekete_schedule(&model, &x, ext, 30).map_err(|e| fail(&e.to_string()))?;
            let nondecreasing = g.windows(2).all(|w| {
                w[0].as_slice()
                    .iter()
                    .zip(w[1].as_slice())
                    .all(|(s, t)| s <= t)
            });
            ensure(nondecreasing, || fail("Fekete schedule decreases"))?;
        }
    }
    Ok(format!(
        "{CASES} cases for each of {} mating functions",
        FINITE_MATING_KINDS.len()
    ))
}

fn lln_report(
    model: &ValidatedModel,
    z_inf: Vec<f64>,
    seed: u64,
) -> Result<ExperimentReport, String> {
    let params = LlnParams {
        z_inf,
        n: 3,
        m_grid: vec![10, 100, 1_000, 10_000],
        trials: 1_000,
        se_multiplier: 2.0,
        ..LlnParams::default()
    };
    lln_experiment(model, &params, seed).map_err(|e| e.to_string())
}

fn lln() -> Verdict {
    let linear = catalog::identity_poisson(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
    let fidelity = catalog::symmetric_perfect_fidelity(2, 0.5, 0.3, 1.0, 0.1);
    let mut detail = Vec::new();
    for (what, model, z) in [
        ("identity", &linear, vec![0.5, 0.5]),
        ("perfect_fidelity", &fidelity, vec![0.7, 0.3]),
    ] {
        let report = lln_report(model, z, 2)?;
        let errs: Vec<f64> = report
            .cells
            .iter()
            .filter_map(|c| c.values.get("mean_l1_error").and_then(Value::as_f64))
            .collect();
        let ses: Vec<f64> = report
            .cells
            .iter()
            .filter_map(|c| c.values.get("std_error").and_then(Value::as_f64))
            .collect();
        ensure(errs.len() == 4 && ses.len() == 4, || {
            format!("{what}: malformed report")
        })?;
        for i in 1..4 {
            let band = 2.0 * (ses[i].powi(2) + ses[i - 1].powi(2)).sqrt();
            ensure(errs[i] < errs[i - 1] + band, || {
                format!("{what}: error rises {} -> {}", errs[i - 1], errs[i])
            })?;
        }
        ensure(errs[3] < errs[0], || {
            format!("{what}: no decrease {errs:?}")
        })?;
        ensure(report.passed, || format!("{what}: report failed"))?;
        detail.push(format!("{what} {:.3e}->{:.3e}", errs[0], errs[3]));
    }
    Ok(detail.join(", "))
}

fn supermartingale() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let code = run_cli("experiment", "supermartingale.toml", dir.path())?;
    let doc = read_json(&dir.path().join("supermartingale.json"))?;
    let all = cells(&doc);
    let mut asserted = 0;
    let mut worst_z = f64::NEG_INFINITY;
    for c in &all {
        if c["pass"] == Value::Bool(false) {
            return Err(format!("cell {} fails", c["label"]));
        }
        if c["pass"] == Value::Bool(true) {
            asserted += 1;
        }
        if let Some(z) = c["values"]["z_score"].as_f64() {
            worst_z = worst_z.max(z);
        }
    }
    ensure(code == 0 && doc["passed"] == Value::Bool(true), || {
        format!("exit code {code}")
    })?;
    let params = doc["parameters"].clone();
    ensure(
        params["trials"] == 10_000 && params["horizon"] == 30,
        || "config is not at the stated scale".into(),
    )?;

    let model = catalog::deterministic_fidelity(1, 1);
    let pair = finite(&model, &EigenOptions::default())?;
    let params = SupermartingaleParams {
        z0: vec![7],
        horizon: 30,
        trials: 50,
        ..SupermartingaleParams::default()
    };
    let report =
        supermartingale_experiment(&model, &params, &pair, 1).map_err(|e| e.to_string())?;
    for c in &report.cells {
        if let Some(v) = c.values.get("mean_increment") {
            ensure(v.as_f64() == Some(0.0), || {
                format!("deterministic increment {v} in {}", c.label)
            })?;
        }
    }
    Ok(format!(
        "{asserted} asserted cells, max z-score {worst_z:.2}; deterministic increments exactly 0"
    ))
}

fn profile() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let code = run_cli("experiment", "profile.toml", dir.path())?;
    let doc = read_json(&dir.path().join("profile.json"))?;
    let medians: Vec<String> = cells(&doc)
        .iter()
        .filter_map(|c| {
            c["values"]["median"]
                .as_f64()
                .map(|m| format!("{} median {m:.4}", c["label"].as_str().unwrap_or("?")))
        })
        .collect();
    ensure(code == 0 && doc["passed"] == Value::Bool(true), || {
        format!("exit code {code}: {}", medians.join(", "))
    })?;
    Ok(medians.join(", "))
}

fn poisson_pmf(mean: f64, len: usize) -> Vec<f64> {
    let mut pmf = vec![0.0; len];
    let mut log_p = -mean;
    for (k, slot) in pmf.iter_mut().enumerate() {
        if k > 0 {
            log_p += mean.ln() - (k as f64).ln();
        }
        *slot = log_p.exp();
    }
    pmf
}

/// Law of `Z_n` for single-type perfect fidelity, `Z' = min(Pois(f z), Pois(m z))`,
/// on states `0..len`. Returns the law and the mass lost to truncation.
fn exact_law(f: f64, m: f64, z0: usize, n: usize, len: usize) -> (Vec<f64>, f64) {
    let mut law = vec![0.0; len];
    law[z0] = 1.0;
    for _ in 0..n {
        let mut next = vec![0.0; len];
        next[0] += law[0];
        for (z, &w) in law.iter().enumerate().skip(1) {
            if w == 0.0 {
                continue;
            }
            let pf = poisson_pmf(f * z as f64, len);
            let pm = poisson_pmf(m * z as f64, len);
            // tails P(F > k), P(M > k) on the truncated range
            let mut tail_f = 1.0 - pf[0];
            let mut tail_m = 1.0 - pm[0];
            for k in 0..len {
                // P(min = k) = P(F = k) P(M >= k) + P(M = k) P(F > k)
                next[k] += w * (pf[k] * (pm[k] + tail_m) + pm[k] * tail_f);
                if k + 1 < len {
                    tail_f -= pf[k + 1];
                    tail_m -= pm[k + 1];
                }
            }
        }
        law = next;
    }
    let lost = 1.0 - law.iter().sum::<f64>();
    (law, lost)
}

fn tail(law: &[f64], at_least: usize) -> f64 {
    law[at_least.min(law.len())..].iter().sum()
}

fn domination() -> Verdict {
    // exact enumeration on a truncated state space
    let (f, m) = (2.0, 2.0);
    let model = catalog::single_type_perfect_fidelity(f, m);
    let exact_cases = [
        (3, 3, 2, 2, 2),
        (2, 1, 3, 1, 1),
        (1, 2, 1, 4, 3),
        (4, 2, 5, 1, 2),
        (1, 1, 2, 2, 2),
    ];
    const LEN: usize = 400;
    let mut mc_cases = Vec::new();
    let mut oracle = Vec::new();
    for &(z0, z0t, z1, z1t, n) in &exact_cases {
        let (joint_law, lost_j) = exact_law(f, m, z0 + z0t, n, LEN);
        let (a_law, lost_a) = exact_law(f, m, z0, n, LEN);
        let (b_law, lost_b) = exact_law(f, m, z0t, n, LEN);
        ensure(lost_j.max(lost_a).max(lost_b) < 1e-12, || {
            format!("truncation loses {lost_j:.1e}")
        })?;
        let joint = tail(&joint_law, z1 + z1t);
        let product = tail(&a_law, z1) * tail(&b_law, z1t);
        ensure(joint >= product, || {
            format!(
                "exact case {:?}: {joint} < {product}",
                (z0, z0t, z1, z1t, n)
            )
        })?;
        oracle.push((joint, tail(&a_law, z1), tail(&b_law, z1t)));
        mc_cases.push(DominationCase {
            z0: vec![z0 as u64],
            z0_tilde: vec![z0t as u64],
            z1: vec![z1 as u64],
            z1_tilde: vec![z1t as u64],
            n,
        });
    }
    let params = DominationParams {
        cases: mc_cases,
        trials: 20_000,
        ..DominationParams::default()
    };
    let report = domination_experiment(&model, &params, 6).map_err(|e| e.to_string())?;
    ensure(report.passed, || {
        "Monte Carlo inequality fails on the exact cases".into()
    })?;
    for (c, &(joint, first, second)) in report.cells.iter().zip(&oracle) {
        let get = |k: &str| c.values.get(k).and_then(Value::as_f64).unwrap_or(f64::NAN);
        let se = |p: f64| (p * (1.0 - p) / 20_000.0).sqrt().max(1e-9);
        for (what, est, exact) in [
            ("joint", get("joint"), joint),
            ("first", get("first"), first),
            ("second", get("second"), second),
        ] {
            ensure((est - exact).abs() <= 4.0 * se(exact), || {
                format!("{}: {what} {est} vs exact {exact}", c.label)
            })?;
        }
    }

    // randomized cases on several models
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let models = [
        catalog::single_type_perfect_fidelity(1.4, 1.7),
        catalog::promiscuous_single(1.2, 0.9),
        catalog::symmetric_perfect_fidelity(2, 0.5, 0.3, 1.0, 0.1),
        catalog::identity_poisson(&[vec![0.6, 0.5], vec![0.4, 0.8]]),
    ];
    let mut checked = 0;
    let mut worst = f64::INFINITY;
    for (k, model) in models.iter().enumerate() {
        let p = model.p();
        let mut cases = Vec::new();
        for i in 0..5 {
            let mut v =
                |hi: u64| -> Vec<u64> { (0..p).map(|_| rng.random_range(0..=hi)).collect() };
            cases.push(DominationCase {
                z0: v(4),
                z0_tilde: v(4),
                z1: v(5),
                z1_tilde: v(5),
                n: 1 + (i + k) % 3,
            });
        }
        let params = DominationParams {
            cases,
            trials: 4_000,
            ..DominationParams::default()
        };
        let report =
            domination_experiment(model, &params, 40 + k as u64).map_err(|e| e.to_string())?;
        for c in &report.cells {
            let margin = c
                .values
                .get("margin")
                .and_then(Value::as_f64)
                .unwrap_or(f64::NAN);
            worst = worst.min(margin);
            ensure(c.pass == Some(true), || {
                format!("model {k} {}: margin {margin}", c.label)
            })?;
            checked += 1;
        }
    }
    Ok(format!(
        "{} exact cases, {checked} randomized cases, min margin {worst:.4}",
        exact_cases.len()
    ))
}

fn artifacts(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.map_err(|e| e.to_string())?;
            let bytes = fs::read(e.path()).map_err(|e| e.to_string())?;
            Ok((e.file_name().to_string_lossy().into_owned(), bytes))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn reproducibility() -> Verdict {
    let runs = [
        ("eigen", "perfect_fidelity.toml"),
        ("eigen", "product_infinite.toml"),
        ("simulate", "perfect_fidelity.toml"),
        ("experiment", "domination.toml"),
        ("experiment", "lln_identity.toml"),
        ("experiment", "corridor.toml"),
    ];
    let mut compared = 0;
    for (command, name) in runs {
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        let ca = run_cli(command, name, a.path())?;
        let cb = run_cli(command, name, b.path())?;
        ensure(ca == cb, || {
            format!("{command} {name}: exit codes {ca} vs {cb}")
        })?;
        let (fa, fb) = (artifacts(a.path())?, artifacts(b.path())?);
        ensure(!fa.is_empty() && fa == fb, || {
            format!("{command} {name}: artifacts differ")
        })?;
        compared += fa.len();
    }
    Ok(format!(
        "{} commands rerun, {compared} artifacts byte-identical",
        runs.len()
    ))
}
