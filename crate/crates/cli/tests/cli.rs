use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::Value;
use tempfile::TempDir;

static RUNS: AtomicUsize = AtomicUsize::new(0);

struct Run {
    out: PathBuf,
    output: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().expect("exited normally")
    }

    fn stdout(&self) -> String {
        String::from_utf8_lossy(&self.output.stdout).into_owned()
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.output.stderr).into_owned()
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.out.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&self.read(name)).unwrap()
    }
}

fn dwlab(dir: &TempDir, command: &str, config: Option<&str>, extra: &[&str]) -> Run {
    let id = RUNS.fetch_add(1, Ordering::Relaxed);
    let out = dir.path().join(format!("out-{command}-{id}"));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dwlab"));
    cmd.arg(command).arg("--out").arg(&out).args(extra);
    if let Some(text) = config {
        let path = dir.path().join(format!("{command}-{id}.conf"));
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(&path);
    }
    Run {
        out,
        output: cmd.output().unwrap(),
    }
}

const DIRICHLET_16: &str = "[model]\nmodel = dirichlet\nn = 16\nL = 1\nalpha = const 1\nbeta = const 1\n";

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn analyze_passes_on_the_dissipative_model() {
    let dir = TempDir::new().unwrap();
    let run = dwlab(&dir, "analyze", Some(DIRICHLET_16), &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let report = run.json("analyze.json");
    assert_eq!(report["pass"], Value::Bool(true));
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for expected in [
        "block-continuity",
        "block-ellipticity",
        "sector",
        "parabola",
        "selfadjointness",
        "noncoercivity-witness",
    ] {
        assert!(names.contains(&expected), "{names:?}");
    }
    let sidecar = run.json("generator.json");
    assert_eq!(sidecar["convention"], "generator=-A");
    assert_eq!(sidecar["n"], 15);
    assert_eq!(run.read("numerical_range.csv").lines().next(), Some("theta,re_z,im_z"));
}

#[test]
fn negative_beta_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let run = dwlab(
        &dir,
        "analyze",
        Some(&DIRICHLET_16.replace("beta = const 1", "beta = const -1")),
        &[],
    );
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("beta"), "{}", run.stderr());
}

#[test]
fn missing_key_is_named() {
    let dir = TempDir::new().unwrap();
    let run = dwlab(&dir, "analyze", Some(&DIRICHLET_16.replace("n = 16\n", "")), &[]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("'n'"), "{}", run.stderr());
}

#[test]
fn unknown_key_is_rejected_with_its_line() {
    let dir = TempDir::new().unwrap();
    let run = dwlab(&dir, "analyze", Some(&format!("{DIRICHLET_16}gamma = 3\n")), &[]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains(":7:"), "{}", run.stderr());
}

#[test]
fn empty_lambda_grid_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let run = dwlab(
        &dir,
        "spectrum",
        Some(&format!("{DIRICHLET_16}[analysis]\nlambda_grid = list\n")),
        &[],
    );
    assert_eq!(run.code(), 2, "{}", run.stderr());
}

#[test]
fn scalar_toy_has_a_double_eigenvalue_at_minus_one() {
    let dir = TempDir::new().unwrap();
    let run = dwlab(&dir, "spectrum", Some("[model]\nmodel = scalar\na = 1\nb = 2\n"), &[]);
    let rows = csv_rows(&run.read("eigenvalues.csv"));
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!((row[0] + 1.0).abs() < 1e-7 && row[1].abs() < 1e-7, "{row:?}");
    }
}

#[test]
fn dissipative_spectrum_lies_in_the_left_half_plane() {
    let dir = TempDir::new().unwrap();
    let run = dwlab(&dir, "spectrum", Some(&DIRICHLET_16.replace("n = 16", "n = 32")), &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let rows = csv_rows(&run.read("eigenvalues.csv"));
    assert_eq!(rows.len(), 62);
    assert!(rows.iter().all(|r| r[0] <= 1e-10));
    let summary = run.json("spectrum.json");
    assert_eq!(summary["sector_pass"], Value::Bool(true));
    assert!(summary["sup_norm"].as_f64().unwrap().is_finite());
}

#[test]
fn mode_one_evolution_matches_the_oracle() {
    let dir = TempDir::new().unwrap();
    let config = "[model]\nmodel = dirichlet\nn = 32\nL = 1\nalpha = const 2\nbeta = const 1\n\n\
                  [evolve]\nmethod = exact\ndt = 0.1\nT = 1\nmode = 1\n";
    let run = dwlab(&dir, "evolve", Some(config), &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let summary = run.json("evolve.json");
    assert!(summary["oracle_relative_error"].as_f64().unwrap() <= 1e-8);
    let text = run.read("trajectory.csv");
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[..3], &["time", "energy", "reality_drift"]);
    assert_eq!(header.len(), 3 + 4 * 31);
    assert_eq!(csv_rows(&text).len(), 11);
}

#[test]
fn zero_data_gives_a_zero_trajectory() {
    let dir = TempDir::new().unwrap();
    let run = dwlab(
        &dir,
        "evolve",
        Some(&format!("{DIRICHLET_16}[evolve]\namplitude = 0\ndt = 0.1\n")),
        &[],
    );
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let rows = csv_rows(&run.read("trajectory.csv"));
    assert!(rows.iter().all(|r| r[1..].iter().all(|&x| x == 0.0)));
}

#[test]
fn dynamic_bc_trajectory_exports_the_boundary_component() {
    let dir = TempDir::new().unwrap();
    let config = "[model]\nmodel = dynamic-bc\nn = 16\nL = 1\nalpha = const 1\n\n\
                  [evolve]\nmethod = crank-nicolson\ndt = 0.05\nT = 0.5\n";
    let run = dwlab(&dir, "evolve", Some(config), &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let text = run.read("trajectory.csv");
    assert!(text.lines().next().unwrap().ends_with("u3_1_re,u3_1_im"));
    assert!(run.json("evolve.json")["constraint_violation"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn semilinear_blow_up_exits_four() {
    let dir = TempDir::new().unwrap();
    let config = "[model]\nmodel = dirichlet\nn = 64\nL = 1\nalpha = const 1\nbeta = const 1\n\n\
                  [evolve]\nmethod = semilinear\ndt = 0.02\nT = 1\namplitude = 1e3\n";
    let run = dwlab(&dir, "evolve", Some(config), &[]);
    assert_eq!(run.code(), 4, "{}", run.stderr());
    assert!(run.stderr().contains("last finite time"), "{}", run.stderr());
}

#[test]
fn corrupted_bounds_fail_by_name() {
    let dir = TempDir::new().unwrap();
    for (bound, criterion, name) in [
        ("angle-bound", 1, "c01-angle-bound"),
        ("parabola", 10, "c10-parabola"),
        ("sector", 11, "c11-sector"),
    ] {
        let config = format!("[verify]\ncorrupt_bound = {bound}\nonly = {criterion}\n");
        let run = dwlab(&dir, "verify", Some(&config), &[]);
        assert_eq!(run.code(), 1, "{bound}: {}", run.stderr());
        assert!(run.stderr().contains(name), "{}", run.stderr());
        assert_eq!(run.json("verify.json")["pass"], Value::Bool(false));
    }
}

fn all_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let config = "[model]\nmodel = dirichlet\nn = 16\nL = 1\nalpha = const 1+0.5i\nbeta = sine 1 0.5\n";
    let first = dwlab(&dir, "analyze", Some(config), &["--seed", "7"]);
    let second = dwlab(&dir, "analyze", Some(config), &["--seed", "7", "--threads", "1"]);
    assert_eq!(first.code(), second.code());
    assert_eq!(all_files(&first.out), all_files(&second.out));

    let verify = "[verify]\nonly = 1, 4, 5\n";
    let a = dwlab(&dir, "verify", Some(verify), &[]);
    let b = dwlab(&dir, "verify", Some(verify), &[]);
    assert_eq!(a.code(), 0, "{}", a.stdout());
    assert_eq!(a.read("verify.json"), b.read("verify.json"));
}

#[test]
fn format_flag_limits_outputs() {
    let dir = TempDir::new().unwrap();
    let run = dwlab(&dir, "analyze", Some(DIRICHLET_16), &["--format", "json"]);
    assert_eq!(run.code(), 0);
    let names: Vec<String> = all_files(&run.out).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["analyze.json", "generator.json"]);
}

#[test]
fn commands_other_than_verify_need_a_config() {
    let dir = TempDir::new().unwrap();
    assert_eq!(dwlab(&dir, "evolve", None, &[]).code(), 2);
}
