use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bgw(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgw"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("BGW_SEED")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value_of(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eigen_of_the_perfect_fidelity_model() {
    let dir = tempfile::tempdir().unwrap();
    let o = bgw(
        &["eigen"],
        &configs().join("perfect_fidelity.toml"),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let text = stdout(&o);
    let lambda: f64 = value_of(&text, "lambda_star").parse().unwrap();
    assert!((lambda - 1.1).abs() < 1e-6);
    assert_eq!(value_of(&text, "class"), "Supercritical");
    let doc = json(&dir.path().join("eigen.json"));
    assert_eq!(doc["config"]["seed"], 1);
    assert_eq!(doc["config"]["model"]["mating"]["kind"], "perfect_fidelity");
    assert_eq!(doc["config"]["solver"]["tol"], 1e-8);
    assert_eq!(doc["fingerprint"].as_str().unwrap().len(), 64);
}

#[test]
fn eigen_of_a_symmetric_identity_model_is_critical() {
    let dir = tempfile::tempdir().unwrap();
    let o = bgw(
        &["eigen"],
        &configs().join("identity_critical.toml"),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(value_of(&text, "lambda_star").parse::<f64>().unwrap(), 1.0);
    assert_eq!(value_of(&text, "class"), "Critical");
}

#[test]
fn invalid_model_exits_1_naming_the_assumption() {
    let dir = tempfile::tempdir().unwrap();
    let o = bgw(
        &["eigen"],
        &configs().join("invalid_offset.toml"),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("xi(0)=0 fails"));
}

#[test]
fn infinite_operator_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = bgw(
        &["eigen"],
        &configs().join("product_infinite.toml"),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(value_of(&stdout(&o), "class"), "SurvivalFromLargeStates");
    let doc = json(&dir.path().join("eigen.json"));
    assert_eq!(doc["result"]["outcome"], "infinite_operator");
}

#[test]
fn zero_start_is_extinct() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[model]
mating = { kind = "perfect_fidelity", types = 1 }
offspring = [{ kind = "poisson", rates = [1.5, 1.5] }]
[simulate]
z0 = [0]
trials = 50
"#,
    );
    let o = bgw(&["simulate"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value_of(&stdout(&o), "q_hat"), "1");
    assert_eq!(
        json(&dir.path().join("extinction.json"))["summary"]["q_hat"],
        1.0
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("trajectory.csv")).unwrap(),
        "n,Z_1,W_1,W_2\n0,0,,\n"
    );
}

/// `P(Z_n = 0 | Z_0 = 1)` for Poisson(`mu`) offspring, iterating the
/// generating function `f(s) = exp(mu (s - 1))` from 0.
fn gw_extinction_by(mu: f64, n: usize) -> f64 {
    (0..n).fold(0.0, |s, _| (mu * (s - 1.0)).exp())
}

#[test]
fn subcritical_extinction_matches_the_generating_function() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
seed = 21
[model]
mating = { kind = "identity", dim = 1 }
offspring = [{ kind = "poisson", rates = [0.8] }]
[simulate]
z0 = [1]
horizon = 8
trials = 20000
"#,
    );
    let o = bgw(&["simulate"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0));
    let summary = &json(&dir.path().join("extinction.json"))["summary"];
    let (lo, hi) = (
        summary["ci95"]["lo"].as_f64().unwrap(),
        summary["ci95"]["hi"].as_f64().unwrap(),
    );
    let oracle = gw_extinction_by(0.8, 8);
    assert!(
        lo <= oracle && oracle <= hi,
        "{oracle} outside [{lo}, {hi}]"
    );
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "json"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let cases = [
        ("eigen", "perfect_fidelity.toml"),
        ("simulate", "perfect_fidelity.toml"),
        ("experiment", "domination.toml"),
        ("experiment", "lln_identity.toml"),
    ];
    for (cmd, cfg) in cases {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let oa = bgw(&[cmd], &configs().join(cfg), a.path());
        let ob = bgw(&[cmd, "--threads", "1"], &configs().join(cfg), b.path());
        assert_eq!(oa.status.code(), Some(0), "{cmd} {cfg}");
        assert_eq!(ob.status.code(), Some(0), "{cmd} {cfg}");
        assert_eq!(oa.stdout, ob.stdout);
        let (fa, fb) = (artifacts(a.path()), artifacts(b.path()));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{cmd} {cfg}");
    }
}

#[test]
fn seed_flag_and_environment_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("perfect_fidelity.toml");
    let o = bgw(&["eigen", "--seed", "77"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("eigen.json"))["config"]["seed"], 77);
    let o = Command::new(env!("CARGO_BIN_EXE_bgw"))
        .args(["eigen", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .env("BGW_SEED", "78")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("eigen.json"))["config"]["seed"], 78);
}

#[test]
fn format_flag_selects_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("perfect_fidelity.toml");
    let o = bgw(&["eigen", "--format", "json"], &cfg, dir.path());
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["class"], "Supercritical");
    let o = bgw(&["eigen", "--format", "csv"], &cfg, dir.path());
    assert!(stdout(&o).starts_with("lambda_star,residual,iterations,class,z_star_1,z_star_2\n"));
}

#[test]
fn usage_and_schema_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        "[experiment]\nname = \"telepathy\"",
        "[experiment]\nname = \"lln\"\ntrails = 3",
        "sead = 4",
    ] {
        let cfg = write_config(dir.path(), text);
        let o = bgw(&["experiment"], &cfg, dir.path());
        assert_eq!(o.status.code(), Some(1), "{text}");
    }
    let cfg = configs().join("perfect_fidelity.toml");
    assert_eq!(
        bgw(&["frobnicate"], &cfg, dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(
        bgw(&["eigen", "--threads", "x"], &cfg, dir.path())
            .status
            .code(),
        Some(1)
    );
    let o = Command::new(env!("CARGO_BIN_EXE_bgw"))
        .arg("eigen")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn lln_on_a_deterministic_model_has_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[model]
mating = { kind = "perfect_fidelity", types = 1 }
offspring = [{ kind = "deterministic", values = [1, 1] }]
[experiment]
name = "lln"
z_inf = [1.0]
trials = 20
"#,
    );
    let o = bgw(&["experiment"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let doc = json(&dir.path().join("lln.json"));
    for cell in doc["cells"].as_array().unwrap() {
        assert_eq!(cell["values"]["mean_l1_error"], 0.0);
    }
    assert_eq!(doc["config"]["experiment"]["name"], "lln");
}

#[test]
fn supermartingale_on_a_linear_poisson_model_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
seed = 8
[model]
mating = { kind = "identity", dim = 1 }
offspring = [{ kind = "poisson", rates = [1.2] }]
[experiment]
name = "supermartingale"
z0 = [5]
horizon = 15
trials = 2000
"#,
    );
    let o = bgw(&["experiment"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn sweep_flags_the_boundary_cell_critical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[experiment]
name = "extinction_sweep"
family = { family = "single_type_perfect_fidelity", male_mean = 2.0 }
grid = [0.8, 1.0, 1.4]
z0 = [30]
horizon = 80
trials = 300
sim = { escape_cap = 500 }
"#,
    );
    let o = bgw(&["experiment"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("extinction_sweep.csv")).unwrap();
    assert!(
        csv.lines()
            .any(|l| l.starts_with("mu=1,") && l.contains(",Critical,")),
        "{csv}"
    );
}

#[test]
fn failed_assertion_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[model]
mating = { kind = "perfect_fidelity", types = 2 }
offspring = [
    { kind = "poisson", rates = [0.8, 0.3, 1.1, 0.1] },
    { kind = "poisson", rates = [0.3, 0.8, 0.1, 1.1] },
]
[experiment]
name = "profile"
z0 = [20, 20]
horizon = 10
trials = 100
max_direction_median = 0.0
"#,
    );
    let o = bgw(&["experiment"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("direction_l1 FAIL"));
    assert!(dir.path().join("profile.csv").exists());
}
