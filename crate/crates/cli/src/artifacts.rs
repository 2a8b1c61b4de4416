//! Files written by a run and read back by the audit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qsf_core::evolution::EvolutionRecord;
use qsf_core::sif::GriffithReport;
use qsf_core::{CrackSet, Mesh};

use crate::CliError;

pub const EVOLUTION_CSV: &str = "evolution.csv";
pub const SIF_CSV: &str = "sif.csv";
pub const CRACKS_JSON: &str = "cracks.json";
pub const SUMMARY_JSON: &str = "summary.json";
pub const AUDIT_JSON: &str = "audit.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

const EVOLUTION_HEADER: &str = "i,t,bulk,surface,total,crack_edges,work_integral,estimate_slack";
const SIF_HEADER: &str = "step,tip_x,tip_y,kappa,residual,release_rate,sigma_dot";

/// C-style `%.12e`: twelve fraction digits, signed exponent of at least two digits.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// One parsed row of `evolution.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRow {
    pub i: usize,
    pub t: f64,
    pub bulk: f64,
    pub surface: f64,
    pub total: f64,
    pub crack_edges: usize,
    pub work_integral: f64,
    pub estimate_slack: f64,
}

pub fn evolution_csv(records: &[EvolutionRecord]) -> String {
    let mut out = String::from(EVOLUTION_HEADER);
    out.push('\n');
    for r in records {
        let e = &r.energies;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.index,
            sci(r.t),
            sci(e.bulk),
            sci(e.surface),
            sci(e.total),
            r.crack.edge_count(),
            sci(r.work_integral),
            sci(r.estimate_slack)
        );
    }
    out
}

pub fn read_evolution_csv(path: &Path) -> Result<Vec<EvolutionRow>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Artifacts(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == EVOLUTION_HEADER => {}
        _ => return Err(CliError::Artifacts(format!("{}: expected header `{EVOLUTION_HEADER}`", path.display()))),
    }
    let mut rows = Vec::new();
    for (n, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |what: &str| CliError::Artifacts(format!("{} line {}: {what}", path.display(), n + 1));
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 8 {
            return Err(bad("expected 8 columns"));
        }
        let f = |k: usize| cells[k].parse::<f64>().map_err(|_| bad(&format!("column {} is not a number", k + 1)));
        let u = |k: usize| cells[k].parse::<usize>().map_err(|_| bad(&format!("column {} is not a count", k + 1)));
        rows.push(EvolutionRow {
            i: u(0)?,
            t: f(1)?,
            bulk: f(2)?,
            surface: f(3)?,
            total: f(4)?,
            crack_edges: u(5)?,
            work_integral: f(6)?,
            estimate_slack: f(7)?,
        });
    }
    Ok(rows)
}

pub fn sif_csv(report: Option<&GriffithReport>) -> String {
    let mut out = String::from(SIF_HEADER);
    out.push('\n');
    for step in report.iter().flat_map(|r| &r.steps) {
        for tip in &step.tips {
            let rate = tip.release_rate.map_or_else(|| "nan".to_string(), sci);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                step.index,
                sci(tip.tip[0]),
                sci(tip.tip[1]),
                sci(tip.kappa),
                sci(tip.residual),
                rate,
                sci(tip.sigma_dot)
            );
        }
    }
    out
}

/// Crack of one step as node pairs, plus the node of a point crack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackEntry {
    pub step: usize,
    pub t: f64,
    pub edges: Vec<[usize; 2]>,
    pub point: Option<usize>,
}

pub fn crack_entries(records: &[EvolutionRecord], mesh: &Mesh) -> Vec<CrackEntry> {
    records
        .iter()
        .map(|r| CrackEntry { step: r.index, t: r.t, edges: r.crack.edge_pairs(mesh), point: r.crack.point_node() })
        .collect()
}

pub fn read_cracks(path: &Path, mesh: &Mesh) -> Result<Vec<CrackSet>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Artifacts(format!("{}: {e}", path.display())))?;
    let entries: Vec<CrackEntry> =
        serde_json::from_str(&text).map_err(|e| CliError::Artifacts(format!("{}: {e}", path.display())))?;
    entries
        .iter()
        .map(|c| match (c.point, c.edges.is_empty()) {
            (Some(n), true) if n < mesh.node_count() => Ok(CrackSet::point(n)),
            _ => CrackSet::from_node_pairs(mesh, &c.edges)
                .map_err(|e| CliError::Artifacts(format!("{} step {}: {e}", path.display(), c.step))),
        })
        .collect()
}

/// Mesh in light grey with the crack drawn heavy, `y` pointing up.
pub fn snapshot_svg(mesh: &Mesh, crack: &CrackSet, t: f64) -> String {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in mesh.nodes() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let size = 640.0;
    let margin = 16.0;
    let scale = (size - 2.0 * margin) / span;
    let map = |p: [f64; 2]| (margin + (p[0] - lo[0]) * scale, margin + (hi[1] - p[1]) * scale);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(out, "<title>t = {}</title>", sci(t));
    let _ = writeln!(out, r##"<g stroke="#cccccc" stroke-width="0.5" fill="none">"##);
    for &[a, b] in mesh.edges() {
        let ((x0, y0), (x1, y1)) = (map(mesh.node(a)), map(mesh.node(b)));
        let _ = writeln!(out, r#"<line x1="{x0:.3}" y1="{y0:.3}" x2="{x1:.3}" y2="{y1:.3}"/>"#);
    }
    out.push_str("</g>\n");
    let _ = writeln!(out, r##"<g stroke="#000000" stroke-width="4" stroke-linecap="round" fill="#000000">"##);
    for [a, b] in crack.edge_pairs(mesh) {
        let ((x0, y0), (x1, y1)) = (map(mesh.node(a)), map(mesh.node(b)));
        let _ = writeln!(out, r#"<line x1="{x0:.3}" y1="{y0:.3}" x2="{x1:.3}" y2="{y1:.3}"/>"#);
    }
    if let Some(n) = crack.point_node() {
        let (x, y) = map(mesh.node(n));
        let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="4"/>"#);
    }
    out.push_str("</g>\n</svg>\n");
    out
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_format_matches_c() {
        assert_eq!(sci(1.0), "1.000000000000e+00");
        assert_eq!(sci(-0.00012345), "-1.234500000000e-04");
        assert_eq!(sci(0.0), "0.000000000000e+00");
        assert_eq!(sci(6.02e123), "6.020000000000e+123");
        assert_eq!(sci(f64::NAN), "nan");
        assert_eq!("1.234500000000e-04".parse::<f64>().unwrap(), 1.2345e-4);
    }
}
