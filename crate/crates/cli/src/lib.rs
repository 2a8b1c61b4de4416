//! Configuration, orchestration and artifact output for `qsf` runs.

pub mod artifacts;
pub mod audit;
pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use qsf_core::evolution::{replay, run as run_evolution, MinimizerStrategy};
use qsf_core::oracle::brute_force_min;
use qsf_core::Error;

use artifacts::{sci, CRACKS_JSON, EVOLUTION_CSV, SIF_CSV, SNAPSHOT_DIR, SUMMARY_JSON};
use audit::Check;
use config::{LoadedConfig, Setup};

pub const OUTPUT_DIR_ENV: &str = "QSF_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing or unreadable artifacts: {0}")]
    Artifacts(String),
    #[error("cannot write output: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Artifacts(_) | Self::Io(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

fn from_core(e: Error) -> CliError {
    match e {
        Error::NumericalFailure { .. } => CliError::Numerical(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

/// Command-line adjustments applied on top of the config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub strategy: Option<StrategyName>,
    /// Brute-force edge budget, or greedy depth.
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyName {
    Brute,
    Greedy,
}

impl Overrides {
    fn apply(&self, current: MinimizerStrategy) -> MinimizerStrategy {
        let (depth, patience) = match current {
            MinimizerStrategy::Brute { max_extra_edges } => (max_extra_edges, 0),
            MinimizerStrategy::Greedy { depth, patience } => (depth, patience),
        };
        let depth = self.budget.unwrap_or(depth);
        let greedy = match self.strategy {
            Some(StrategyName::Greedy) => true,
            Some(StrategyName::Brute) => false,
            None => matches!(current, MinimizerStrategy::Greedy { .. }),
        };
        if greedy {
            MinimizerStrategy::Greedy { depth, patience }
        } else {
            MinimizerStrategy::Brute { max_extra_edges: depth }
        }
    }
}

fn prepare(config_path: &Path, overrides: &Overrides) -> Result<(LoadedConfig, Setup), CliError> {
    let loaded = config::load(config_path)?;
    let mut setup = config::build(&loaded)?;
    setup.strategy = overrides.apply(setup.strategy);
    setup.strategy.validate().map_err(|e| CliError::Config(format!("strategy: {e}")))?;
    Ok((loaded, setup))
}

/// Output directory: `QSF_OUTPUT_DIR` if set, else the config's.
pub fn output_dir(loaded: &LoadedConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => loaded.config.output_dir.clone(),
    }
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
struct StepSummary {
    i: usize,
    t: f64,
    bulk: f64,
    surface: f64,
    total: f64,
    crack_edges: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub input_digest: String,
    pub strategy: String,
    pub delta: f64,
    pub steps: usize,
    pub sigma: f64,
    pub rho: f64,
    energies: Vec<StepSummary>,
    pub audits: Vec<Check>,
    pub passed: bool,
}

/// Outcome of a command: the exit status it maps to and what to print.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: String,
}

fn verdict(checks: &[Check]) -> (bool, String) {
    let mut text = String::new();
    for c in checks {
        let state = match (c.passed, c.applicable) {
            (true, true) => "PASS",
            (true, false) => "SKIP",
            (false, _) => "FAIL",
        };
        let _ = writeln!(text, "{state}  {}: {}", c.name, c.detail);
    }
    (checks.iter().all(|c| c.passed), text)
}

/// `run`: evolution, enabled audits and all artifacts.
pub fn run(config_path: &Path, overrides: &Overrides) -> Result<Outcome, CliError> {
    let (loaded, setup) = prepare(config_path, overrides)?;
    let out = output_dir(&loaded);
    let evo = run_evolution(&setup.mesh, &setup.bp, &setup.load, &setup.k0, &setup.schedule, setup.strategy)
        .map_err(from_core)?;
    let sif = loaded.config.sif.clone().or_else(|| loaded.config.audits.griffith.then(Default::default));
    let options = sif.as_ref().map(|s| s.options());
    let (checks, report) = audit::checklist(&setup, &evo, &evo.records, &loaded.config.audits, options.as_ref())?;

    artifacts::write(&out, EVOLUTION_CSV, &artifacts::evolution_csv(&evo.records))?;
    artifacts::write(&out, SIF_CSV, &artifacts::sif_csv(report.as_ref()))?;
    let cracks = artifacts::crack_entries(&evo.records, &setup.mesh);
    let cracks = serde_json::to_string_pretty(&cracks).expect("serialisable");
    artifacts::write(&out, CRACKS_JSON, &(cracks + "\n"))?;
    let every = loaded.config.snapshot_every;
    let last = evo.records.len().saturating_sub(1);
    for r in evo.records.iter().filter(|r| r.index % every == 0 || r.index == last) {
        let svg = artifacts::snapshot_svg(&setup.mesh, &r.crack, r.t);
        artifacts::write(&out, &format!("{SNAPSHOT_DIR}/step_{:04}.svg", r.index), &svg)?;
    }

    let (passed, text) = verdict(&checks);
    let summary = Summary {
        input_digest: digest(&loaded.input_bytes),
        strategy: format!("{:?}", setup.strategy),
        delta: setup.schedule.delta(),
        steps: evo.records.len(),
        sigma: evo.sigma,
        rho: evo.rho,
        energies: evo
            .records
            .iter()
            .map(|r| StepSummary {
                i: r.index,
                t: r.t,
                bulk: r.energies.bulk,
                surface: r.energies.surface,
                total: r.energies.total,
                crack_edges: r.crack.edge_count(),
            })
            .collect(),
        audits: checks,
        passed,
    };
    let json = serde_json::to_string_pretty(&summary).expect("serialisable");
    artifacts::write(&out, SUMMARY_JSON, &(json + "\n"))?;
    let final_energy = evo.records.last().map(|r| r.energies.total).unwrap_or_default();
    let report = format!("{} steps, final total energy {}, artifacts in {}\n{text}", summary.steps, sci(final_energy), out.display());
    Ok(Outcome { exit_code: if passed { 0 } else { 1 }, report })
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditVerdict {
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// `audit`: re-checks a recorded run directory against its config.
pub fn audit(config_path: &Path, dir: &Path, overrides: &Overrides) -> Result<Outcome, CliError> {
    let (loaded, setup) = prepare(config_path, overrides)?;
    let rows = artifacts::read_evolution_csv(&dir.join(EVOLUTION_CSV))?;
    let cracks = artifacts::read_cracks(&dir.join(CRACKS_JSON), &setup.mesh)?;
    if cracks.len() != setup.schedule.times().len() {
        return Err(CliError::Artifacts(format!(
            "{CRACKS_JSON} has {} steps, the schedule {}",
            cracks.len(),
            setup.schedule.times().len()
        )));
    }
    let evo = replay(&setup.mesh, &setup.bp, &setup.load, &setup.k0, &setup.schedule, &cracks).map_err(from_core)?;
    let mut checks = vec![audit::consistency(&rows, &evo)];
    if rows.len() == evo.records.len() {
        let recorded = audit::overlay(&rows, &evo);
        let options = loaded.config.audits.griffith.then(|| loaded.config.sif.clone().unwrap_or_default().options());
        let (more, _) = audit::checklist(&setup, &evo, &recorded, &loaded.config.audits, options.as_ref())?;
        checks.extend(more);
    }
    let (passed, text) = verdict(&checks);
    let json = serde_json::to_string_pretty(&AuditVerdict { passed, checks }).expect("serialisable");
    artifacts::write(dir, artifacts::AUDIT_JSON, &(json.clone() + "\n"))?;
    Ok(Outcome { exit_code: if passed { 0 } else { 1 }, report: format!("{json}\n{text}") })
}

/// `oracle`: exhaustive candidate table for one load time.
pub fn oracle(config_path: &Path, time: f64, overrides: &Overrides) -> Result<Outcome, CliError> {
    let (loaded, setup) = prepare(config_path, overrides)?;
    if !(0.0..=1.0).contains(&time) {
        return Err(CliError::Config(format!("time {time} is not in [0, 1]")));
    }
    let budget = match setup.strategy {
        MinimizerStrategy::Brute { max_extra_edges } => max_extra_edges,
        MinimizerStrategy::Greedy { depth, .. } => depth,
    };
    let g = setup.load.at(time);
    let result = brute_force_min(&setup.mesh, &setup.bp, &g, &setup.k0, budget, true).map_err(from_core)?;
    let mut csv = String::from("candidate_edges,bulk,surface,total\n");
    for row in result.table.as_deref().unwrap_or_default() {
        let edges: Vec<String> = row.crack.edge_pairs(&setup.mesh).iter().map(|[a, b]| format!("{a}-{b}")).collect();
        let name = match (edges.is_empty(), row.crack.point_node()) {
            (true, Some(n)) => format!("point {n}"),
            _ => edges.join(" "),
        };
        let e = &row.energies;
        let _ = writeln!(csv, "{name},{},{},{}", sci(e.bulk), sci(e.surface), sci(e.total));
    }
    let out = output_dir(&loaded);
    artifacts::write(&out, "oracle.csv", &csv)?;
    let report = format!(
        "{} candidates over {} eligible edges, minimum total {} with {} edges; table in {}",
        result.candidates,
        result.eligible_edges,
        sci(result.energies.total),
        result.crack.edge_count(),
        out.join("oracle.csv").display()
    );
    Ok(Outcome { exit_code: 0, report })
}
