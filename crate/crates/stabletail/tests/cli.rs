//! Integration tests that drive the compiled binary end to end: exit codes,
//! artifact shapes, config echoing, and byte-level determinism.

use std::io::Write as _;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stabletail"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout_str(out)).expect("stdout is JSON")
}

fn write_file(path: &Path, text: &str) {
    std::fs::write(path, text).expect("writes");
}

#[test]
fn simulate_is_deterministic_and_embeds_config() {
    let args = [
        "simulate", "--dist", "stable", "--alpha", "1.5", "--n", "50", "--seed", "42",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "same flags, same bytes");

    let text = stdout_str(&a);
    let first = text.lines().next().unwrap();
    let config: serde_json::Value =
        serde_json::from_str(first.strip_prefix("# config=").expect("config header")).unwrap();
    assert_eq!(config["dist"], "stable");
    assert_eq!(config["alpha"], 1.5);
    assert_eq!(config["sigma"], 1.0);
    assert_eq!(config["master_seed"], 42);
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.parse().expect("numeric line"))
        .collect();
    assert_eq!(values.len(), 50);

    // A different stream under the same master seed gives different draws.
    let c = run(&[
        "simulate", "--dist", "stable", "--alpha", "1.5", "--n", "50", "--seed", "42", "--stream",
        "1",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn stats_reproduces_hand_computed_values() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("sample.csv");
    write_file(&sample, "1\n2\n3\n4\n5\n");
    let out = run(&["stats", sample.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["config"]["command"], "stats");
    assert_eq!(v["stats"]["n"], 5);
    assert_eq!(v["stats"]["mean"], 3.0);
    assert_eq!(v["stats"]["b2"], 1.7);
    // c = 1.7/5 is not exactly 0.34 in binary floating point.
    assert_eq!(v["stats"]["c"].as_f64().unwrap(), 1.7 / 5.0);
}

#[test]
fn stats_reads_stdin_and_file_identically() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("sample.csv");
    let sim = run(&[
        "simulate",
        "--dist",
        "gaussian",
        "--n",
        "500",
        "--seed",
        "7",
        "--out",
        sample.to_str().unwrap(),
    ]);
    assert!(sim.status.success());

    let from_file = json_of(&run(&["stats", sample.to_str().unwrap()]));
    let mut child = bin()
        .args(["stats", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(&std::fs::read(&sample).unwrap())
        .unwrap();
    let piped = child.wait_with_output().unwrap();
    assert!(piped.status.success());
    let from_stdin: serde_json::Value = serde_json::from_slice(&piped.stdout).unwrap();
    assert_eq!(from_file["stats"], from_stdin["stats"]);
}

#[test]
fn file_and_stdout_are_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("sample.csv");
    write_file(&sample, "1\n2\n3\n4\n5\n6\n");
    let to_stdout = run(&["stats", sample.to_str().unwrap()]);
    let json_path = dir.path().join("stats.json");
    let to_file = run(&[
        "stats",
        sample.to_str().unwrap(),
        "--out",
        json_path.to_str().unwrap(),
    ]);
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    assert_eq!(std::fs::read(&json_path).unwrap(), to_stdout.stdout);
}

#[test]
fn estimate_clamps_and_reports_method() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("sample.csv");
    write_file(&sample, "1\n2\n3\n4\n5\n");
    // g2 = -1.3 at n = 5 gives raw alpha 2.52, clamped to 2.
    let v = json_of(&run(&["estimate", sample.to_str().unwrap()]));
    assert_eq!(v["estimate"]["alpha_hat"], 2.0);
    assert_eq!(v["estimate"]["clamped"], true);
    assert_eq!(v["estimate"]["method"], "kurtosis-ratio");
    assert_eq!(v["estimate"]["sigma_hat"], serde_json::Value::Null);

    let bad = run(&["estimate", sample.to_str().unwrap(), "--method", "banana"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn exit_codes_distinguish_usage_from_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = dir.path().join("tiny.csv");
    write_file(&tiny, "1\n2\n3\n");

    // Usage errors -> 1.
    assert_eq!(run(&["nonsense"]).status.code(), Some(1));
    assert_eq!(
        run(&["simulate", "--dist", "stable", "--n", "5", "--seed", "1"])
            .status
            .code(),
        Some(1),
        "stable without --alpha"
    );
    assert_eq!(
        run(&["simulate", "--dist", "stable", "--alpha", "1.5", "--n", "5"])
            .status
            .code(),
        Some(1),
        "missing required --seed"
    );

    // Data/numeric errors -> 2.
    assert_eq!(
        run(&["stats", tiny.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["stats", "/no/such/file.csv"]).status.code(), Some(2));
    assert_eq!(
        run(&["estimate", tiny.to_str().unwrap(), "--method", "kw"])
            .status
            .code(),
        Some(2),
        "kw needs 100 observations"
    );

    // Success -> 0 with help.
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn growth_emits_curve_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("sample.csv");
    assert!(run(&[
        "simulate",
        "--dist",
        "stable",
        "--alpha",
        "1.3",
        "--n",
        "200",
        "--seed",
        "5",
        "--out",
        sample.to_str().unwrap(),
    ])
    .status
    .success());

    let curve_path = dir.path().join("curve.csv");
    let out = run(&[
        "growth",
        sample.to_str().unwrap(),
        "--checkpoints",
        "50,100,150,200",
        "--out-curve",
        curve_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(
        v["config"]["checkpoints"],
        serde_json::json!([50, 100, 150, 200])
    );
    assert_eq!(v["curve"].as_array().unwrap().len(), 4);
    assert!(v["slope_fit"]["slope"].is_f64());
    assert!(
        v["linearity"].is_null(),
        "four checkpoints are too few for the quadratic diagnostic"
    );

    let csv = std::fs::read_to_string(&curve_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,g2"));
    for (line, point) in lines.zip(v["curve"].as_array().unwrap()) {
        let (n_txt, g2_txt) = line.split_once(',').unwrap();
        assert_eq!(n_txt.parse::<u64>().unwrap(), point[0].as_u64().unwrap());
        assert_eq!(g2_txt.parse::<f64>().unwrap(), point[1].as_f64().unwrap());
    }
}

#[test]
fn bootstrap_test_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("sample.csv");
    assert!(run(&[
        "simulate",
        "--dist",
        "stable",
        "--alpha",
        "1.4",
        "--n",
        "200",
        "--seed",
        "8",
        "--out",
        sample.to_str().unwrap(),
    ])
    .status
    .success());

    let args = [
        "test",
        sample.to_str().unwrap(),
        "--bootstrap",
        "200",
        "--seed",
        "31",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    assert_eq!(v["config"]["B"], 200);
    assert_eq!(v["config"]["level"], 0.05);
    assert_eq!(v["bootstrap"]["B"], 200);
    assert!(v["bootstrap"]["reject_alpha2"].is_boolean());
    assert!(
        v["bootstrap"]["alpha_ci_low"].as_f64().unwrap()
            <= v["bootstrap"]["alpha_ci_high"].as_f64().unwrap()
    );
}

#[test]
fn experiment_artifacts_are_thread_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("t1");
    let out4 = dir.path().join("t4");
    let base = [
        "experiment",
        "--kind",
        "mean-ratio",
        "--m",
        "60",
        "--seed",
        "3",
    ];
    let run1 = bin()
        .args(base)
        .args(["--out-dir", out1.to_str().unwrap(), "--threads", "1"])
        .output()
        .unwrap();
    let run4 = bin()
        .args(base)
        .args(["--out-dir", out4.to_str().unwrap(), "--threads", "4"])
        .output()
        .unwrap();
    assert!(run1.status.success() && run4.status.success());

    for name in ["rows.csv", "summary.json", "mean_ratio_vs_alpha.csv"] {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out4.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs across thread counts");
    }
    // stdout carries exactly the summary document.
    assert_eq!(
        run1.stdout,
        std::fs::read(out1.join("summary.json")).unwrap()
    );
    // meta.json records the runtime facts (excluded from determinism).
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out1.join("meta.json")).unwrap()).unwrap();
    assert!(meta["wall_seconds"].is_f64());

    // rows.csv embeds the resolved config on its first line.
    let rows = std::fs::read_to_string(out1.join("rows.csv")).unwrap();
    let first = rows.lines().next().unwrap();
    let embedded: serde_json::Value =
        serde_json::from_str(first.strip_prefix("# config=").unwrap()).unwrap();
    assert_eq!(embedded["kind"], "mean-ratio");
    assert_eq!(embedded["m"], 60);
    assert_eq!(embedded["master_seed"], 3);
}

#[test]
fn experiment_accepts_config_files_and_rejects_conflicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    write_file(
        &cfg,
        r#"
kind = "mean-ratio"
family = "stable"
alphas = [1.25, 1.75]
m = 40
master_seed = 5

[size.uniform-random]
lo = 200
hi = 400
"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = std::fs::read_to_string(out_dir.join("rows.csv")).unwrap();
    // comment + header + 2 alphas x 40 replicates
    assert_eq!(rows.lines().count(), 2 + 80);

    let conflict = run(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--kind",
        "scatter",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(conflict.status.code(), Some(1));

    let invalid = run(&[
        "experiment",
        "--kind",
        "scatter",
        "--seed",
        "1",
        "--alphas",
        "1.5",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(invalid.status.code(), Some(1), "scatter draws alpha itself");
}

#[test]
fn ingest_runs_the_full_returns_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let prices = dir.path().join("prices.csv");
    // Deterministic toy price path, long enough for two 100-return windows.
    let mut text = String::from("date,close\n");
    let mut price = 100.0f64;
    for i in 0..260 {
        let r = 0.01 * ((i as f64 * 0.7).sin() + 0.3 * ((i * i) as f64 * 0.11).cos());
        price *= r.exp();
        let day = chrono::NaiveDate::from_ymd_opt(2021, 1, 1)
            .unwrap()
            .checked_add_days(chrono::Days::new(i))
            .unwrap();
        text.push_str(&format!("{day},{price}\n"));
    }
    write_file(&prices, &text);

    let curve_path = dir.path().join("curve.csv");
    let out = run(&[
        "ingest",
        prices.to_str().unwrap(),
        "--step",
        "20",
        "--windows",
        "0:130,129:259",
        "--out-curve",
        curve_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json_of(&out);
    assert_eq!(v["n_prices"], 260);
    assert_eq!(v["n_returns"], 259);
    assert!(v["curve"].as_array().unwrap().len() >= 10);
    let windows = v["windows"].as_array().unwrap();
    assert_eq!(windows.len(), 2);
    assert_eq!(windows[0]["start"], 0);
    assert!(windows[0]["kogon_williams"]["alpha_hat"].is_f64());
    assert!(windows[1]["kurtosis_ratio"]["alpha_hat"].is_f64());
    assert!(std::fs::read_to_string(&curve_path)
        .unwrap()
        .starts_with("n,g2\n"));

    // Unsorted rows are re-sorted with a warning on stderr, not an error.
    let shuffled = dir.path().join("shuffled.csv");
    let mut lines: Vec<&str> = text.lines().collect();
    lines.swap(5, 200);
    write_file(&shuffled, &(lines.join("\n") + "\n"));
    let warned = run(&["ingest", shuffled.to_str().unwrap(), "--step", "20"]);
    assert!(warned.status.success());
    assert!(String::from_utf8_lossy(&warned.stderr).contains("re-sorted"));
    let vs = json_of(&warned);
    assert_eq!(vs["warnings"].as_array().unwrap().len(), 1);

    // A nonpositive close is a data error naming the line.
    let broken = dir.path().join("broken.csv");
    write_file(&broken, "date,close\n2021-01-01,100\n2021-01-02,-5\n");
    let err = run(&["ingest", broken.to_str().unwrap()]);
    assert_eq!(err.status.code(), Some(2));
}
