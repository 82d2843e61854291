//! End-to-end checks of the `worklock` binary: exit codes, output files,
//! determinism, and override precedence.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_worklock"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should launch")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    name.to_string()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL_SWEEP: &str = "experiment = \"sweep\"\nseed = 3\n\n[parameters]\nl = 10\nr_min = 0.2\nr_max = 0.8\nr_step = 0.2\nquality_min = 0.0\nquality_max = 0.99\nquality_step = 0.45\n";

#[test]
fn list_names_every_experiment() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    for name in [
        "protocol",
        "sweep",
        "homogenizer",
        "reuse",
        "nogo-audit",
        "tolerance",
    ] {
        assert!(text.contains(name), "list output missing {name}");
    }
}

#[test]
fn missing_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["run", "nope.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("nope.toml"));
}

#[test]
fn negative_temperature_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "experiment = \"sweep\"\n[parameters]\nkt = -1\n",
    );
    let out = run_in(dir.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("kt"));
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "bad.toml")
        .collect();
    assert!(leftovers.is_empty(), "bad run left files: {leftovers:?}");
}

#[test]
fn unknown_experiment_exits_2_and_prints_the_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "unk.toml", "experiment = \"frobnicate\"\n");
    let out = run_in(dir.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("frobnicate"));
    for name in ["protocol", "sweep", "homogenizer", "reuse", "nogo-audit"] {
        assert!(err.contains(name), "error text missing {name}");
    }
}

#[test]
fn unknown_parameter_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "unk_param.toml",
        "experiment = \"reuse\"\n[parameters]\nbogus = 1\n",
    );
    let out = run_in(dir.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("bogus"));
}

#[test]
fn sweep_writes_csv_and_manifest_with_matching_digest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.toml", SMALL_SWEEP);
    let out = run_in(dir.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "r,quality,L,q,success_prob,failure_prob_incoherent,improvement,boundary_leakage"
    );
    // 4 r values x 3 quality values
    assert_eq!(lines.count(), 12);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["experiment"], "sweep");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["outputs"][0]["path"], "sweep.csv");
    assert_eq!(
        manifest["outputs"][0]["bytes"].as_u64().unwrap(),
        csv.len() as u64
    );
    let digest = manifest["outputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
}

#[test]
fn reruns_and_worker_counts_produce_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.toml", SMALL_SWEEP);

    let mut digests = Vec::new();
    for workers in ["1", "4", "1"] {
        let out = run_in(dir.path(), &["run", &cfg, "--workers", workers]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
        digests.push(fs::read(dir.path().join("sweep.csv")).unwrap());
    }
    assert_eq!(digests[0], digests[1], "workers changed the bytes");
    assert_eq!(digests[0], digests[2], "rerun changed the bytes");
}

#[test]
fn set_overrides_beat_file_values_and_seed_flag_beats_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.toml", SMALL_SWEEP);
    let out = run_in(
        dir.path(),
        &[
            "run",
            &cfg,
            "--set",
            "r_step=0.3",
            "--set",
            "seed=9",
            "--seed",
            "42",
            "--set",
            "output_path=custom.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let csv = fs::read_to_string(dir.path().join("custom.csv")).unwrap();
    // r values 0.2, 0.5, 0.8 after the step override
    assert_eq!(csv.lines().count(), 1 + 3 * 3);
    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("custom.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["parameters"]["r_step"], 0.3);
}

#[test]
fn output_dir_env_var_redirects_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("reuse.toml");
    fs::write(
        &cfg_path,
        "experiment = \"reuse\"\n[parameters]\nn = 6\neta = 0.3\nm = 2\n",
    )
    .unwrap();
    let target = dir.path().join("artifacts");
    let out = bin()
        .current_dir(dir.path())
        .env("WORKLOCK_OUTPUT_DIR", &target)
        .args(["run", "reuse.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(target.join("reuse.csv").is_file());
    assert!(target.join("reuse.manifest.json").is_file());
    assert!(!dir.path().join("reuse.csv").exists());
}

#[test]
fn reuse_rows_echo_task_and_grid_settings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "reuse.toml",
        "experiment = \"reuse\"\n[parameters]\nn = 6\neta = 0.3\nm = 3\ntask = \"mixed_to_pure\"\n",
    );
    let out = run_in(dir.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let csv = fs::read_to_string(dir.path().join("reuse.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(
        rows[0],
        "use_index,task_error,reservoir_drift,N,eta,task"
    );
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("1,"));
    assert!(rows[3].ends_with(",mixed_to_pure"));
}

#[test]
fn audit_json_reports_clean_invariance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "audit.toml",
        "experiment = \"nogo-audit\"\nseed = 5\n[parameters]\nn_trials = 40\n",
    );
    let out = run_in(dir.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("nogo_audit.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["overlap_invariance"]["n_trials"], 40);
    assert_eq!(report["overlap_invariance"]["double_rotation_violations"], 0);
    assert_eq!(report["verdict_table"]["pairs"].as_array().unwrap().len(), 3);
    let feasible = report["identical_work_schedule"]["feasible"]
        .as_array()
        .unwrap();
    assert!(feasible.iter().all(|v| v == true));
}

#[test]
fn tolerance_json_carries_the_fitted_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "tol.toml",
        "experiment = \"tolerance\"\n[parameters]\nl = 20\ndeltas = [-0.05, 0.05]\n",
    );
    let out = run_in(dir.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let curve: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("tolerance.json")).unwrap())
            .unwrap();
    assert_eq!(curve["bound_holds"], true);
    assert!(curve["certified_work"].as_f64().unwrap() > 0.0);
    assert_eq!(curve["points"].as_array().unwrap().len(), 2);
}

#[test]
fn protocol_csv_tracks_reference_decay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "prot.toml",
        "experiment = \"protocol\"\n[parameters]\nl = 30\ncycles = 4\n",
    );
    let out = run_in(dir.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let csv = fs::read_to_string(dir.path().join("protocol.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(
        rows[0],
        "cycle,q,success_prob,work_extracted,repump_cost,net_work,reference_quality"
    );
    assert_eq!(rows.len(), 5);
    let quality: Vec<f64> = rows[1..]
        .iter()
        .map(|r| r.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    for pair in quality.windows(2) {
        assert!(pair[1] < pair[0], "repump should erode reference quality");
    }
}
