use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fraclab::Report;
use serde_json::Value;
use tempfile::TempDir;

fn fraclab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraclab")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn report_json(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn leibniz_example_passes() {
    let dir = TempDir::new().unwrap();
    let o = fraclab(
        &[
            "verify",
            "leibniz",
            "--manifold",
            "circle",
            "--s",
            "0.5",
            "--modes",
            "32",
            "--z-nodes",
            "160",
            "--tol",
            "1e-6",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = report_json(dir.path());
    assert_eq!(j["pass"], true);
    let run = &j["runs"][0];
    for key in [
        "run_id",
        "identity",
        "manifold",
        "s",
        "modes",
        "z_nodes",
        "residual_sup",
        "residual_l2",
        "lhs_mean",
        "rhs_mean",
        "tail_error_estimate",
        "pass",
        "wall_time_ms",
    ] {
        assert!(run.get(key).is_some(), "missing {key}");
    }
    assert_eq!(run["identity"], "leibniz");
    assert_eq!(run["manifold"], "circle");
    assert!(run["residual_sup"].as_f64().unwrap() <= 1e-6);
    assert!((run["lhs_mean"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let csv = fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("run_id,identity,s,node,x1,x2,lhs,rhs,residual"));
    assert!(lines.count() >= 64);
}

#[test]
fn kato_example_gives_four() {
    let dir = TempDir::new().unwrap();
    let o = fraclab(&["verify", "kato", "--s", "0.5", "--u", "cos", "--phi", "1"], dir.path());
    assert_eq!(code(&o), 0);
    let r = Report::read(dir.path()).unwrap();
    assert_eq!(r.runs.len(), 1);
    assert!((r.runs[0].lhs_mean - 4.0).abs() < 1e-9);
    assert!((r.runs[0].rhs_mean - 4.0).abs() < 4e-3);
    assert_eq!(r.runs[0].mesh_level, Some(1));
}

#[test]
fn empty_identity_list() {
    let dir = TempDir::new().unwrap();
    let o = fraclab(&["verify"], dir.path());
    assert_eq!(code(&o), 0);
    let r = Report::read(dir.path()).unwrap();
    assert!(r.pass);
    assert!(r.runs.is_empty());
    assert!(!dir.path().join("residuals.csv").exists());
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["verify", "leibnitz"][..],
        &["verify", "leibniz", "--s", "1.5"],
        &["verify", "leibniz", "--manifold", "klein-bottle"],
        &["verify", "leibniz", "--u", "tan"],
        &["verify", "leibniz", "--z-nodes", "3"],
        &["verify", "leibniz", "--tol", "0"],
        &["verify", "leibniz", "--modes", "abc"],
    ] {
        let o = fraclab(args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}");
    }
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn invalid_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[run]\nmanifold = \"circle\"\nresolution = 4\n").unwrap();
    let o = fraclab(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("resolution"));

    let o = fraclab(&["verify", "--config", dir.path().join("missing.toml").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn failures_exit_1_with_detail() {
    let dir = TempDir::new().unwrap();
    let o =
        fraclab(&["verify", "leibniz", "--u", "mixed", "--s", "0.25", "--z-nodes", "8", "--tol", "1e-10"], dir.path());
    assert_eq!(code(&o), 1);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.starts_with("FAIL  leibniz"), "{stdout}");
    let r = Report::read(dir.path()).unwrap();
    assert!(!r.pass);
    assert!(r.runs[0].residual_sup > r.runs[0].threshold);

    let o = Command::new(env!("CARGO_BIN_EXE_fraclab")).args(["report", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("1 runs, 1 failed"));
}

#[test]
fn runtime_errors_are_failing_records() {
    let dir = TempDir::new().unwrap();
    let o = fraclab(&["verify", "kato", "leibniz", "--manifold", "torus", "--modes", "8"], dir.path());
    assert_eq!(code(&o), 1);
    let j = report_json(dir.path());
    let kato = &j["runs"][0];
    assert_eq!(kato["pass"], false);
    assert!(kato["residual_sup"].is_null());
    assert!(kato["error"].as_str().unwrap().contains("circle"));
    assert_eq!(j["runs"][1]["pass"], true);
    // nulls read back as NaN
    let r = Report::read(dir.path()).unwrap();
    assert!(r.runs[0].residual_sup.is_nan());
}

#[test]
fn report_subcommand() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&fraclab(&["verify", "oracles", "--modes", "8"], dir.path())), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_fraclab")).args(["report", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("oracle-heat"));
    assert!(text.contains("theta-half"));

    let empty = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fraclab")).args(["report", "--out"]).arg(empty.path()).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn reports_are_byte_identical_across_thread_counts() {
    let args =
        ["verify", "leibniz", "cordoba", "sv", "--u", "mixed", "--v", "sin2", "--s", "0.25,0.75", "--modes", "16"];
    let mut outputs = Vec::new();
    for threads in ["1", "3", "1"] {
        let dir = TempDir::new().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_fraclab"))
            .args(args)
            .arg("--out")
            .arg(dir.path())
            .env("FRACLAB_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        outputs.push((
            fs::read(dir.path().join("report.json")).unwrap(),
            fs::read(dir.path().join("residuals.csv")).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn timings_are_recorded_on_request() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&fraclab(&["verify", "leibniz", "--modes", "8", "--timings"], dir.path())), 0);
    let r = Report::read(dir.path()).unwrap();
    assert!(!r.config.run.deterministic);
    assert!(r.runs[0].wall_time_ms > 0.0);
}

#[test]
fn config_file_with_custom_coefficients() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        r#"
[run]
identities = ["leibniz", "bochner"]
manifold = "torus"
s = [0.3]
modes = 8
residuals_csv = false

[functions]
u = { cos = [[1, 1.0], [1, -1, 0.5]], sin = [[0, 2, 0.25]] }
v = "cos2"
"#,
    )
    .unwrap();
    let o = fraclab(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = Report::read(dir.path()).unwrap();
    assert_eq!(r.runs.len(), 2);
    assert!(r.runs.iter().all(|x| x.manifold == "torus" && x.s == 0.3));
    assert!(!dir.path().join("residuals.csv").exists());

    // flags override the file
    let o = fraclab(&["verify", "leibniz", "--config", cfg.to_str().unwrap(), "--s", "0.6"], dir.path());
    assert_eq!(code(&o), 0);
    let r = Report::read(dir.path()).unwrap();
    assert_eq!(r.runs.len(), 1);
    assert_eq!(r.runs[0].s, 0.6);
}

#[test]
fn sweep_writes_table() {
    let dir = TempDir::new().unwrap();
    let o = fraclab(
        &["sweep", "leibniz", "kato", "--u", "mixed", "--sweep-z-nodes", "40,80", "--sweep-levels", "0,1"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("ZNodes"));
    assert!(table.contains("MeshLevel"));
    let j: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    let series = j["series"].as_array().unwrap();
    assert!(series.iter().any(|s| s["axis"] == "z_nodes" && s["identity"] == "leibniz"));
    assert!(series.iter().any(|s| s["axis"] == "mesh_level" && s["identity"] == "kato"));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
}
