use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nlcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlcf")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_csv_and_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let ckpt = dir.path().join("state.bin");
    let cfg = write_config(
        dir.path(),
        &format!(
            "[grid]\nnx = 10\nny = 10\n[time]\nt_end = 0.02\ncadence = 4\n[output]\ncsv = {:?}\ncheckpoint = {:?}\ncheckpoint_interval = 2\n",
            csv, ckpt
        ),
    );
    let out = nlcf(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,E_total"));
    assert!(text.lines().count() > 2);
    assert!(ckpt.exists());
}

#[test]
fn run_streams_to_stdout_without_csv_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\nnx = 8\nny = 8\n[time]\nt_end = 0.01\n");
    let out = nlcf(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("t,E_total"));
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\nnx = 8\nny = 8\n[viscosity]\nmu_min = 0.0\n");
    let out = nlcf(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("viscosity.mu_min"));

    let missing = dir.path().join("missing.toml");
    assert_eq!(nlcf(&["run", missing.to_str().unwrap()]).status.code(), Some(1));

    let cfg = write_config(dir.path(), "[grid]\nnx = 8\nny = 8\n");
    assert_eq!(nlcf(&["stability-sweep", &cfg, "--deltas", "0,-1"]).status.code(), Some(1));
}

#[test]
fn solver_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[grid]\nnx = 12\nny = 12\n[time]\nt_end = 0.01\n[initial]\namplitude = 0.5\n[solver]\nunit_tol = 1e-30\n",
    );
    let out = nlcf(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_prints_one_row_per_amplitude() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\nnx = 8\nny = 8\n[time]\nt_end = 0.01\n");
    let out = nlcf(&["stability-sweep", &cfg, "--deltas", "0,1e-3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3, "{text}");
    assert!(rows[1].starts_with("0,") && rows[1].ends_with("\"ok\""));
}
