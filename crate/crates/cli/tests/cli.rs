use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use ptrs_core::cost::{evaluate, CostMethod};
use ptrs_core::model::ExpModel;
use ptrs_core::pattern::PilotPattern;
use serde_json::Value;
use tempfile::TempDir;

fn ptrs(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptrs"))
        .env_remove("PTRS_SEED")
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("spawn ptrs")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = ptrs(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap_or(Value::Null)
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn plan_worked_example() {
    let dir = TempDir::new().unwrap();
    let plan = ok(
        dir.path(),
        &[
            "plan",
            "--fc",
            "300e9",
            "--n",
            "4096",
            "--max-cost",
            "2.5",
            "--delta0",
            "20",
        ],
    );
    assert_eq!(plan["delta_pf"], 54);
    assert_eq!(plan["feasible"], true);
    assert_eq!(plan["method"], "affine");
    assert!((plan["overhead_pct"].as_f64().unwrap() - 1.85).abs() < 0.01);
    assert!((plan["j_at_delta0_pct"].as_f64().unwrap() - 0.9255).abs() < 1e-3);
    let file: Value = serde_json::from_str(&read(dir.path(), "plan.json")).unwrap();
    assert_eq!(file, plan);
    for key in [
        "fc_hz",
        "n_total",
        "max_cost_pct",
        "delta0",
        "omega",
        "eta",
        "j_at_delta0_pct",
        "delta_pf",
        "n_pilots",
        "overhead_pct",
        "feasible",
        "method",
    ] {
        assert!(file.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn infeasible_plan_is_a_successful_answer() {
    let dir = TempDir::new().unwrap();
    let plan = ok(
        dir.path(),
        &[
            "plan",
            "--fc",
            "300e9",
            "--max-cost",
            "0.5",
            "--delta0",
            "20",
        ],
    );
    assert_eq!(plan["feasible"], false);
    assert!(plan["note"].as_str().unwrap().contains("delta0"));
}

#[test]
fn cost_with_every_sample_a_pilot_is_zero() {
    let dir = TempDir::new().unwrap();
    let cost = ok(
        dir.path(),
        &[
            "cost", "--a", "0.00736", "--b", "0.977", "--n", "4096", "--delta", "1", "--p1", "1",
        ],
    );
    assert!(cost["j_pct"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(cost["method"], "boxed");
}

#[test]
fn cost_records_numeric_fallback() {
    let dir = TempDir::new().unwrap();
    let cost = ok(
        dir.path(),
        &[
            "cost", "--a", "0.0074", "--b", "0.9", "--n", "100", "--delta", "60",
        ],
    );
    assert_eq!(cost["method"], "numeric");
    assert_eq!(cost["fallback"], true);
}

#[test]
fn cost_matches_library_and_dumps_jn() {
    let dir = TempDir::new().unwrap();
    let cost = ok(
        dir.path(),
        &[
            "cost",
            "--a",
            "0.0075",
            "--b",
            "0.9",
            "--n",
            "1024",
            "--delta",
            "30",
            "--p1",
            "center",
            "--dump-jn",
        ],
    );
    let m = ExpModel::new(0.0075, 0.9).unwrap();
    let p = PilotPattern::uniform(1024, 15, 30).unwrap();
    let lib = evaluate(&m, &p, CostMethod::Boxed).unwrap();
    assert_eq!(cost["j_pct"].as_f64().unwrap(), lib.j_pct);
    let jn = read(dir.path(), "jn.csv");
    let lines: Vec<&str> = jn.lines().collect();
    assert_eq!(lines[0], "n,j_n");
    assert_eq!(lines.len(), 1025);
    let total: f64 = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - lib.j_abs).abs() < 1e-9 * 1024.0);
}

#[test]
fn sweep_delta_series_at_300ghz() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &["sweep-delta", "--fc", "300e9", "--deltas", "1:109:12"],
    );
    let text = read(dir.path(), "sweep_delta.csv");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "delta,n_pilots,j_pct,method");
    assert_eq!(lines.len(), 11);
    let j: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(j[0].abs() < 1e-9);
    assert!(j.windows(2).all(|w| w[1] > w[0]));
    // Near-affine growth of roughly 0.045% of N per unit spacing.
    let slope = (j[9] - j[1]) / (109.0 - 13.0);
    assert!((slope - 0.0453).abs() < 0.0453 * 0.1, "slope {slope}");
}

#[test]
fn data_outputs_are_reproducible_and_sidecars_hold_config() {
    let (d1, d2) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&d1, &d2] {
        ok(
            d.path(),
            &["sweep-delta", "--fc", "150e9", "--deltas", "1:120:7"],
        );
        ok(
            d.path(),
            &["synth", "--n", "256", "--traces", "3", "--seed", "11"],
        );
    }
    for name in ["sweep_delta.csv", "traces.bin"] {
        assert_eq!(
            fs::read(d1.path().join(name)).unwrap(),
            fs::read(d2.path().join(name)).unwrap()
        );
        let meta: Value =
            serde_json::from_str(&read(d1.path(), &format!("{name}.meta.json"))).unwrap();
        assert!(meta["created_unix"].as_u64().unwrap() > 0);
        assert_eq!(meta["output"], name);
    }
    let meta: Value = serde_json::from_str(&read(d1.path(), "traces.bin.meta.json")).unwrap();
    assert_eq!(meta["resolved"]["seed"], 11);
    assert_eq!(meta["config"]["command"]["synth"]["traces"], 3);
    let meta: Value = serde_json::from_str(&read(d1.path(), "sweep_delta.csv.meta.json")).unwrap();
    assert_eq!(meta["resolved"]["model"]["fc_hz"], 150e9);
}

#[test]
fn seed_environment_variable_overrides_flag() {
    let dir = TempDir::new().unwrap();
    let synth = |seed: &str, env: Option<&str>, sub: &str| {
        let out_dir = dir.path().join(sub);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ptrs"));
        cmd.env_remove("PTRS_SEED");
        if let Some(v) = env {
            cmd.env("PTRS_SEED", v);
        }
        let out = cmd
            .arg("--out-dir")
            .arg(&out_dir)
            .args(["synth", "--n", "128", "--seed", seed])
            .output()
            .unwrap();
        assert!(out.status.success());
        fs::read(out_dir.join("traces.bin")).unwrap()
    };
    let env7 = synth("5", Some("7"), "a");
    assert_eq!(env7, synth("7", None, "b"));
    assert_ne!(env7, synth("5", None, "c"));
    let meta: Value =
        serde_json::from_str(&read(&dir.path().join("a"), "traces.bin.meta.json")).unwrap();
    assert_eq!(meta["resolved"]["seed_source"], "PTRS_SEED");

    let out = Command::new(env!("CARGO_BIN_EXE_ptrs"))
        .env("PTRS_SEED", "seven")
        .arg("--out-dir")
        .arg(dir.path())
        .args(["synth", "--n", "128"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let code = |args: &[&str]| ptrs(dir.path(), args).status.code();
    // Usage errors.
    let out = ptrs(dir.path(), &["plan", "--fcc", "3e11"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--fc"));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["cost", "--delta", "10"]), Some(2));
    assert_eq!(code(&["cost", "--a", "0.01", "--delta", "10"]), Some(2));
    assert_eq!(
        code(&["sweep-delta", "--fc", "3e11", "--deltas", "9:1:1"]),
        Some(2)
    );
    assert_eq!(
        code(&["sweep-delta", "--fc", "3e11", "--deltas", "1.5"]),
        Some(2)
    );
    assert_eq!(
        code(&["cost", "--a", "0.01", "--b", "0.9", "--method", "exact", "--delta", "5"]),
        Some(2)
    );
    // Domain errors.
    assert_eq!(
        code(&["cost", "--a", "0", "--b", "0.9", "--delta", "10"]),
        Some(1)
    );
    assert_eq!(code(&["cost", "--fc", "400e9", "--delta", "10"]), Some(1));
    assert_eq!(
        code(&["cost", "--a", "0.01", "--b", "0.9", "--delta", "10", "--n", "5", "--p1", "9"]),
        Some(1)
    );
    assert_eq!(
        code(&["fit", "--from-file", "/nonexistent/autocorr.csv"]),
        Some(1)
    );
    // Help is not an error.
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn pipeline_round_trips_through_files() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--n", "1024", "--traces", "40", "--csv"]);
    ok(d, &["autocorr", "--from-file", &path(d, "traces.bin")]);
    let auto = read(d, "autocorr.csv");
    assert!(auto.starts_with("lag,gamma\n0,1\n"));
    assert_eq!(auto.lines().count(), 1 + 257);

    // Fitting the CSV estimate and the traces directly gives the same model.
    let from_csv = ok(
        d,
        &[
            "fit",
            "--from-file",
            &path(d, "autocorr.csv"),
            "--fc",
            "100e9",
        ],
    );
    let from_bin = ok(
        d,
        &[
            "fit",
            "--from-file",
            &path(d, "traces.bin"),
            "--fc",
            "100e9",
        ],
    );
    assert_eq!(from_csv, from_bin);
    assert_eq!(from_csv["fc_hz"], 100e9);

    // Single-trace CSV export reads back bit-exactly.
    ok(
        d,
        &[
            "autocorr",
            "--from-file",
            &path(d, "trace.csv"),
            "--out-dir",
            &path(d, "one"),
        ],
    );
    fs::create_dir_all(d.join("single")).unwrap();
    ok(
        d,
        &[
            "synth",
            "--n",
            "1024",
            "--traces",
            "1",
            "--csv",
            "--out-dir",
            &path(d, "single"),
        ],
    );
    ok(
        d,
        &[
            "autocorr",
            "--from-file",
            &path(d, "single/traces.bin"),
            "--out-dir",
            &path(d, "single_bin"),
        ],
    );
    ok(
        d,
        &[
            "autocorr",
            "--from-file",
            &path(d, "single/trace.csv"),
            "--out-dir",
            &path(d, "single_csv"),
        ],
    );
    assert_eq!(
        read(d, "single_bin/autocorr.csv"),
        read(d, "single_csv/autocorr.csv")
    );

    // Coefficients: CSV -> binary -> CSV is lossless.
    let model = path(d, "model.json");
    let pat = ["--n", "400", "--delta", "50", "--p1", "25"];
    let mut args = vec!["coeffs", "--model", &model];
    args.extend(pat);
    ok(d, &args);
    let first = read(d, "coeffs.csv");
    let csv_in = path(d, "coeffs.csv");
    let mut to_bin = args.clone();
    to_bin.extend(["--from-file", &csv_in, "--format", "bin"]);
    let summary = ok(d, &to_bin);
    assert_eq!(summary["max_abs_diff_vs_input"], 0.0);
    let bin_in = path(d, "coeffs.bin");
    let mut to_csv = args.clone();
    to_csv.extend(["--from-file", &bin_in, "--format", "csv"]);
    ok(d, &to_csv);
    assert_eq!(read(d, "coeffs.csv"), first);
    let mut numeric = args.clone();
    numeric.extend(["--from-file", &csv_in, "--method", "numeric"]);
    let summary = ok(d, &numeric);
    assert!(summary["max_abs_diff_vs_input"].as_f64().unwrap() < 1e-9);
}

#[test]
fn result_documents_rerun_from_file() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();

    let cost = ok(
        d,
        &[
            "cost", "--fc", "250e9", "--n", "2048", "--delta", "40", "--p1", "center",
        ],
    );
    let again = ok(d, &["cost", "--from-file", &path(d, "cost.json")]);
    assert_eq!(cost, again);
    let quasi = ok(
        d,
        &[
            "cost",
            "--from-file",
            &path(d, "cost.json"),
            "--method",
            "quasipoly",
        ],
    );
    let rel = (quasi["j_pct"].as_f64().unwrap() / cost["j_pct"].as_f64().unwrap() - 1.0).abs();
    assert!(rel < 1e-6);

    let plan = ok(
        d,
        &[
            "plan",
            "--fc",
            "200e9",
            "--max-cost",
            "1.5",
            "--delta0",
            "10",
            "--exact-refine",
        ],
    );
    assert_eq!(plan["method"], "affine+exact");
    assert!(plan["exact_j_pct"].as_f64().unwrap() <= 1.5);
    let replan = ok(
        d,
        &[
            "plan",
            "--from-file",
            &path(d, "plan.json"),
            "--exact-refine",
        ],
    );
    assert_eq!(plan, replan);

    let sim = ok(
        d,
        &[
            "simulate", "--fc", "200e9", "--n", "256", "--delta", "16", "--trials", "300",
            "--seed", "4",
        ],
    );
    let bytes = fs::read(d.join("sim.json")).unwrap();
    assert_eq!(sim["seed"], 4);
    assert!(sim["z_score"].as_f64().unwrap().abs() < 4.0);
    let rerun = ok(d, &["simulate", "--from-file", &path(d, "sim.json")]);
    assert_eq!(sim, rerun);
    assert_eq!(bytes, fs::read(d.join("sim.json")).unwrap());
}

#[test]
fn sweeps_feed_the_affine_fit_and_planner() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "sweep-fc",
            "--fc",
            "100e9:300e9:50e9",
            "--deltas",
            "1:109:12",
            "--p1",
            "center",
        ],
    );
    let text = read(d, "sweep_fc.csv");
    assert!(text.starts_with("fc_hz,delta,n_pilots,j_pct,method\n1e+11,1,"));
    assert_eq!(text.lines().count(), 1 + 5 * 10);

    let summary = ok(d, &["fit-affine", "--from-file", &path(d, "sweep_fc.csv")]);
    let fits = summary["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 5);
    let last = &fits[4];
    assert_eq!(last["fc_hz"], 300e9);
    assert!((last["omega"].as_f64().unwrap() - 0.0453).abs() < 0.0453 * 0.1);
    assert!((last["eta"].as_f64().unwrap() - 0.0195).abs() < 0.03);
    assert!(last["r2"].as_f64().unwrap() >= 0.99);

    // The refit table reproduces the same quadratic coefficients.
    let coefs = summary["omega_coef"].as_f64().unwrap();
    let refit = ok(
        d,
        &[
            "fit-affine",
            "--from-file",
            &path(d, "fit_affine.csv"),
            "--out-dir",
            &path(d, "refit"),
        ],
    );
    assert!((refit["omega_coef"].as_f64().unwrap() / coefs - 1.0).abs() < 1e-6);

    let plan = ok(
        d,
        &[
            "plan",
            "--fc",
            "300e9",
            "--max-cost",
            "2.5",
            "--delta0",
            "20",
            "--coefs",
            &path(d, "omega_eta.json"),
        ],
    );
    assert_eq!(plan["feasible"], true);
    let dpf = plan["delta_pf"].as_u64().unwrap();
    assert!((50..=58).contains(&dpf), "delta_pf {dpf}");

    ok(
        d,
        &[
            "sweep-delta",
            "--fc",
            "300e9",
            "--p1",
            "center",
            "--out-dir",
            &path(d, "one"),
        ],
    );
    let single = ok(
        d,
        &[
            "fit-affine",
            "--from-file",
            &path(d, "one/sweep_delta.csv"),
            "--fc",
            "300e9",
            "--out-dir",
            &path(d, "one"),
        ],
    );
    assert_eq!(single["fits"][0]["omega"], last["omega"]);
}

#[test]
fn ab_grid_reevaluates_from_file() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "sweep-ab",
            "--a",
            "0.007:0.008:0.0005",
            "--b",
            "0.8,0.9,0.97",
        ],
    );
    let grid = read(d, "sweep_ab.csv");
    let lines: Vec<&str> = grid.lines().collect();
    assert_eq!(lines[0], "a,b,j_pct");
    assert_eq!(lines.len(), 1 + 9);
    ok(
        d,
        &[
            "sweep-ab",
            "--from-file",
            &path(d, "sweep_ab.csv"),
            "--out-dir",
            &path(d, "again"),
        ],
    );
    assert_eq!(read(d, "again/sweep_ab.csv"), grid);
    // Cost falls as the floor rises.
    let j: Vec<f64> = lines[1..4]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(j[0] > j[1] && j[1] > j[2]);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn cost_json_round_trips(a in 1e-3f64..0.05, b in 0.5f64..0.99, delta in 2usize..200, p1 in 1usize..20) {
        let dir = TempDir::new().unwrap();
        let d = dir.path();
        let (a_s, b_s, d_s, p_s) = (a.to_string(), b.to_string(), delta.to_string(), p1.to_string());
        let first = ok(d, &["cost", "--a", &a_s, "--b", &b_s, "--n", "1024", "--delta", &d_s, "--p1", &p_s]);
        let bytes = fs::read(d.join("cost.json")).unwrap();
        let again = ok(d, &["cost", "--from-file", &path(d, "cost.json")]);
        prop_assert_eq!(&first, &again);
        prop_assert_eq!(bytes, fs::read(d.join("cost.json")).unwrap());
        prop_assert_eq!(first["model"]["a"].as_f64().unwrap(), a);
        prop_assert_eq!(first["model"]["b"].as_f64().unwrap(), b);
    }

    #[test]
    fn plan_json_round_trips(fc in 100e9f64..300e9, max_cost in 0.2f64..5.0, delta0 in 1usize..60) {
        let dir = TempDir::new().unwrap();
        let d = dir.path();
        let (f, m, d0) = (fc.to_string(), max_cost.to_string(), delta0.to_string());
        let first = ok(d, &["plan", "--fc", &f, "--max-cost", &m, "--delta0", &d0]);
        let again = ok(d, &["plan", "--from-file", &path(d, "plan.json")]);
        prop_assert_eq!(&first, &again);
        if first["feasible"] == true {
            prop_assert!(first["delta_pf"].as_u64().unwrap() >= delta0 as u64);
        }
    }
}
