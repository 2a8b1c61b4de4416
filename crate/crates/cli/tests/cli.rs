use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CROSSOVER: &str = r#"{
  "mesh": {"rect": {"width": 1.0, "height": 1.0, "h": 0.25}},
  "boundary": {"sides": {"bottom": "neumann", "right": "dirichlet", "top": "neumann", "left": "dirichlet"}},
  "load": {"separable": {"times": [0.0, 1.0], "phi": [0.0, 2.0], "profile": {"affine": {"a": 1.0, "b": 0.0, "c": 0.0}}}},
  "delta": 0.1,
  "strategy": {"brute": {"budget": 4}},
  "output_dir": "out"
}"#;

const ZERO_LOAD: &str = r#"{
  "mesh": {"rect": {"width": 1.0, "height": 1.0, "h": 0.25}},
  "boundary": {"all": "dirichlet"},
  "load": {"separable": {"times": [0.0, 1.0], "phi": [0.0, 0.0], "profile": {"affine": {"a": 1.0, "b": 0.0, "c": 0.0}}}},
  "delta": 0.25,
  "output_dir": "out"
}"#;

struct Case {
    dir: TempDir,
}

impl Case {
    fn new(text: &str) -> Self {
        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("config.json"), text).unwrap();
        Self { dir }
    }
    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }
    fn qsf(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_qsf"))
            .current_dir(self.dir.path())
            .env_remove("QSF_OUTPUT_DIR")
            .args(args)
            .output()
            .unwrap()
    }
    fn run(&self) -> Output {
        self.qsf(&["run", "config.json"])
    }
    fn audit(&self, dir: &Path) -> Output {
        self.qsf(&["audit", "config.json", dir.to_str().unwrap()])
    }
}

fn rows(dir: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join("evolution.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn zero_load_gives_constant_energy_and_exact_audit() {
    let case = Case::new(ZERO_LOAD);
    let out = case.run();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&case.out());
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[4] == "0.000000000000e+00" && r[5] == "0"));
    for name in ["sif.csv", "summary.json", "cracks.json", "snapshots/step_0004.svg"] {
        assert!(case.out().join(name).exists(), "{name}");
    }

    let audit = case.audit(&case.out());
    assert_eq!(audit.status.code(), Some(0));
    let verdict: serde_json::Value = serde_json::from_str(&fs::read_to_string(case.out().join("audit.json")).unwrap()).unwrap();
    assert_eq!(verdict["passed"], true);
    for check in verdict["checks"].as_array().unwrap() {
        assert_eq!(check["residual"].as_f64(), Some(0.0), "{check}");
    }
}

#[test]
fn crossover_shows_the_surface_jump() {
    let case = Case::new(CROSSOVER);
    let out = case.run();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rows = rows(&case.out());
    assert_eq!(rows.len(), 11);
    let jump = rows.iter().position(|r| num(&r[3]) > 0.0).expect("crack appears");
    assert!(jump > 0);
    assert!(rows[..jump].iter().all(|r| num(&r[3]) == 0.0));
    assert!(rows[jump..].iter().all(|r| (num(&r[3]) - 1.0).abs() < 1e-12 && num(&r[2]).abs() < 1e-10));
    // Before the jump the total grows like t²; afterwards it stays at the crack length.
    assert!(num(&rows[jump - 1][4]) <= 1.0 && num(&rows[jump - 1][4]) > num(&rows[1][4]));

    let audit = case.audit(&case.out());
    assert_eq!(audit.status.code(), Some(0), "{}", String::from_utf8_lossy(&audit.stdout));
}

#[test]
fn edited_energy_fails_the_audit() {
    let case = Case::new(CROSSOVER);
    assert_eq!(case.run().status.code(), Some(0));
    let csv = case.out().join("evolution.csv");
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut cells: Vec<String> = lines[4].split(',').map(str::to_string).collect();
    cells[4] = "5.000000000000e+00".into();
    lines[4] = cells.join(",");
    fs::write(&csv, lines.join("\n") + "\n").unwrap();

    let audit = case.audit(&case.out());
    assert_eq!(audit.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&audit.stdout);
    assert!(stdout.contains("FAIL  consistency"), "{stdout}");
    assert!(stdout.contains("FAIL  balance") && stdout.contains("violated"), "{stdout}");
}

#[test]
fn zero_time_step_is_a_config_error() {
    let case = Case::new(&CROSSOVER.replace("\"delta\": 0.1", "\"delta\": 0"));
    let out = case.run();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
    let broken = Case::new(&CROSSOVER.replace("\"h\": 0.25", "\"h\": 0.25,"));
    let out = broken.run();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_artifacts_are_reported() {
    let case = Case::new(ZERO_LOAD);
    let out = case.audit(&case.dir.path().join("nowhere"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn summary_is_byte_identical_across_runs_and_thread_counts() {
    let case = Case::new(CROSSOVER);
    assert_eq!(case.qsf(&["--threads", "1", "run", "config.json"]).status.code(), Some(0));
    let first = fs::read(case.out().join("summary.json")).unwrap();
    assert_eq!(case.qsf(&["--threads", "3", "run", "config.json"]).status.code(), Some(0));
    let second = fs::read(case.out().join("summary.json")).unwrap();
    assert_eq!(first, second);
    let summary: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(summary["input_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn environment_overrides_output_dir_and_flags_override_strategy() {
    let case = Case::new(ZERO_LOAD);
    let elsewhere = case.dir.path().join("elsewhere");
    let out = Command::new(env!("CARGO_BIN_EXE_qsf"))
        .current_dir(case.dir.path())
        .env("QSF_OUTPUT_DIR", &elsewhere)
        .args(["--strategy", "greedy", "--budget", "2", "run", "config.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(elsewhere.join("evolution.csv").exists());
    assert!(!case.out().exists());
    let summary = fs::read_to_string(elsewhere.join("summary.json")).unwrap();
    assert!(summary.contains("Greedy"), "{summary}");
}

#[test]
fn oracle_dumps_the_candidate_table() {
    let case = Case::new(&CROSSOVER.replace("\"h\": 0.25", "\"h\": 0.5"));
    let out = case.qsf(&["oracle", "config.json", "--budget", "2", "--time", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(case.out().join("oracle.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("candidate_edges,bulk,surface,total"));
    assert!(lines.count() > 10);
}
