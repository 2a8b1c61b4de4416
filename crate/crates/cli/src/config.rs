//! JSON run configuration and its translation into a core problem.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qsf_core::domain::{assign_boundary, build_rect_mesh, read_mesh, rect_sides, BoundaryInterval};
use qsf_core::evolution::{MinimizerStrategy, Schedule};
use qsf_core::sif::{GriffithOptions, ReleaseScheme, SifBasis};
use qsf_core::{BoundaryKind, BoundaryPartition, CrackSet, LoadTrace, Mesh};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshSpec,
    pub boundary: BoundarySpec,
    pub load: LoadSpec,
    #[serde(default)]
    pub k0: CrackSpec,
    pub delta: f64,
    #[serde(default)]
    pub strategy: StrategySpec,
    #[serde(default)]
    pub audits: AuditToggles,
    #[serde(default)]
    pub sif: Option<SifSpec>,
    /// Write an SVG snapshot every this many steps; the last step is always written.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Seed for randomised checks; the run itself is deterministic.
    #[serde(default)]
    pub seed: u64,
}

fn default_snapshot_every() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("qsf-output")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Rect { width: f64, height: f64, h: f64 },
    /// Plain-text mesh file, relative paths taken from the config's directory.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Dirichlet,
    Neumann,
}

impl From<Kind> for BoundaryKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Dirichlet => BoundaryKind::Dirichlet,
            Kind::Neumann => BoundaryKind::Neumann,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    /// Same kind on the whole boundary.
    All(Kind),
    /// Sides of a rectangular mesh.
    Sides { bottom: Kind, right: Kind, top: Kind, left: Kind },
    /// Arclength intervals from the lexicographically smallest boundary node,
    /// counterclockwise.
    Intervals(Vec<IntervalSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    pub start: f64,
    pub end: f64,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadSpec {
    /// `g(t) = φ(t)·profile` with `φ` linear between the samples.
    Separable { times: Vec<f64>, phi: Vec<f64>, profile: ProfileSpec },
    /// Nodal values per sample time.
    Table { times: Vec<f64>, values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `a·x + b·y + c`.
    Affine { a: f64, b: f64, c: f64 },
    Nodal(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CrackSpec {
    #[default]
    Empty,
    Point(usize),
    /// Node pairs of the crack edges.
    Edges(Vec<[usize; 2]>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategySpec {
    Brute { budget: usize },
    Greedy { depth: usize, patience: usize },
}

impl Default for StrategySpec {
    fn default() -> Self {
        Self::Brute { budget: 1 }
    }
}

impl From<StrategySpec> for MinimizerStrategy {
    fn from(s: StrategySpec) -> Self {
        match s {
            StrategySpec::Brute { budget } => MinimizerStrategy::Brute { max_extra_edges: budget },
            StrategySpec::Greedy { depth, patience } => MinimizerStrategy::Greedy { depth, patience },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditToggles {
    pub irreversibility: bool,
    pub estimate: bool,
    pub apriori: bool,
    pub monotone: bool,
    pub balance: bool,
    pub griffith: bool,
}

impl Default for AuditToggles {
    fn default() -> Self {
        Self { irreversibility: true, estimate: true, apriori: true, monotone: true, balance: true, griffith: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SifSpec {
    pub extra_terms: usize,
    pub traction_free: bool,
    pub r_in: Option<f64>,
    pub r_out: Option<f64>,
    pub tolerance: f64,
    pub release_rate: Option<Scheme>,
}

impl Default for SifSpec {
    fn default() -> Self {
        let g = GriffithOptions::<f64>::default();
        Self { extra_terms: 0, traction_free: false, r_in: None, r_out: None, tolerance: g.tolerance, release_rate: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Forward,
    Central,
    Richardson,
}

impl SifSpec {
    pub fn options(&self) -> GriffithOptions<f64> {
        GriffithOptions {
            tolerance: self.tolerance,
            basis: SifBasis { extra_terms: self.extra_terms, traction_free: self.traction_free },
            r_in: self.r_in,
            r_out: self.r_out,
            release_rate: self.release_rate.map(|s| match s {
                Scheme::Forward => ReleaseScheme::Forward,
                Scheme::Central => ReleaseScheme::Central,
                Scheme::Richardson => ReleaseScheme::Richardson,
            }),
        }
    }
}

/// A config read from disk together with the bytes that identify its inputs.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    /// Config bytes followed by the bytes of any referenced mesh file.
    pub input_bytes: Vec<u8>,
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let config = parse(&text)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut input_bytes = text.into_bytes();
    if let MeshSpec::File { path: mesh } = &config.mesh {
        let full = base_dir.join(mesh);
        let bytes = fs::read(&full).map_err(|e| CliError::Config(format!("mesh.file.path {}: {e}", full.display())))?;
        input_bytes.extend(bytes);
    }
    Ok(LoadedConfig { config, base_dir, input_bytes })
}

/// Parses and validates a config, naming the offending field and line.
pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        CliError::Config(format!("line {} column {}, field `{}`: {inner}", inner.line(), inner.column(), e.path()))
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, why: String| Err(CliError::Config(format!("field `{field}`: {why}")));
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad("delta", format!("{} is not in (0, 1]", self.delta));
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every", "must be at least 1".into());
        }
        if let MeshSpec::Rect { width, height, h } = self.mesh {
            if !(width > 0.0 && height > 0.0 && h > 0.0) {
                return bad("mesh.rect", "dimensions and h must be positive".into());
            }
        }
        if matches!(self.boundary, BoundarySpec::Sides { .. }) && !matches!(self.mesh, MeshSpec::Rect { .. }) {
            return bad("boundary.sides", "needs a rect mesh".into());
        }
        Ok(())
    }
}

/// Everything a run needs, built from a config.
#[derive(Debug, Clone)]
pub struct Setup {
    pub mesh: Mesh,
    pub bp: BoundaryPartition,
    pub load: LoadTrace,
    pub k0: CrackSet,
    pub schedule: Schedule,
    pub strategy: MinimizerStrategy,
}

pub fn build(loaded: &LoadedConfig) -> Result<Setup, CliError> {
    let c = &loaded.config;
    let field = |name: &'static str| move |e: qsf_core::Error| CliError::Config(format!("field `{name}`: {e}"));
    let mesh = match &c.mesh {
        MeshSpec::Rect { width, height, h } => build_rect_mesh(*width, *height, *h).map_err(field("mesh.rect"))?,
        MeshSpec::File { path } => {
            let full = loaded.base_dir.join(path);
            let file = fs::File::open(&full).map_err(|e| CliError::Config(format!("mesh.file.path {}: {e}", full.display())))?;
            read_mesh(BufReader::new(file)).map_err(field("mesh.file"))?
        }
    };
    let intervals: Vec<BoundaryInterval<f64>> = match &c.boundary {
        BoundarySpec::All(k) => {
            let (_, edges) = mesh.boundary_cycle().map_err(field("mesh"))?;
            let perimeter: f64 = edges.iter().map(|&e| mesh.edge_length(e)).sum();
            vec![BoundaryInterval::new(0.0, perimeter, (*k).into())]
        }
        BoundarySpec::Sides { bottom, right, top, left } => {
            let MeshSpec::Rect { width, height, .. } = c.mesh else { unreachable!("validated") };
            rect_sides(width, height, (*bottom).into(), (*right).into(), (*top).into(), (*left).into())
        }
        BoundarySpec::Intervals(list) => list.iter().map(|i| BoundaryInterval::new(i.start, i.end, i.kind.into())).collect(),
    };
    let bp = assign_boundary(&mesh, &intervals).map_err(field("boundary"))?;
    let load = match &c.load {
        LoadSpec::Separable { times, phi, profile } => {
            let profile = match profile {
                ProfileSpec::Affine { a, b, c } => mesh.nodes().iter().map(|p| a * p[0] + b * p[1] + c).collect(),
                ProfileSpec::Nodal(v) if v.len() == mesh.node_count() => v.clone(),
                ProfileSpec::Nodal(v) => {
                    return Err(CliError::Config(format!(
                        "field `load.separable.profile.nodal`: {} values for {} nodes",
                        v.len(),
                        mesh.node_count()
                    )))
                }
            };
            LoadTrace::separable(times.clone(), phi.clone(), profile).map_err(field("load.separable"))?
        }
        LoadSpec::Table { times, values } => {
            if let Some(v) = values.iter().find(|v| v.len() != mesh.node_count()) {
                return Err(CliError::Config(format!(
                    "field `load.table.values`: {} values for {} nodes",
                    v.len(),
                    mesh.node_count()
                )));
            }
            LoadTrace::from_samples(times.clone(), values.clone()).map_err(field("load.table"))?
        }
    };
    let k0 = match &c.k0 {
        CrackSpec::Empty => CrackSet::empty(),
        CrackSpec::Point(n) if *n < mesh.node_count() => CrackSet::point(*n),
        CrackSpec::Point(n) => return Err(CliError::Config(format!("field `k0.point`: node {n} does not exist"))),
        CrackSpec::Edges(pairs) => CrackSet::from_node_pairs(&mesh, pairs).map_err(field("k0.edges"))?,
    };
    if !k0.is_continuum(&mesh).map_err(field("k0"))? {
        return Err(CliError::Config("field `k0`: crack is not connected".into()));
    }
    let schedule = Schedule::new(c.delta).map_err(field("delta"))?;
    let strategy: MinimizerStrategy = c.strategy.into();
    strategy.validate().map_err(field("strategy"))?;
    Ok(Setup { mesh, bp, load, k0, schedule, strategy })
}
