//! Audit checklist shared by `run` (on fresh records) and `audit` (on a
//! recorded run directory).

use serde::Serialize;

use qsf_core::evolution::{
    audit_apriori_bounds, audit_discrete_estimate, audit_irreversibility, audit_monotone_load, Evolution, EvolutionRecord,
};
use qsf_core::sif::{griffith_audit, GriffithOptions, GriffithReport};
use qsf_core::Error;

use crate::artifacts::EvolutionRow;
use crate::config::{AuditToggles, Setup};
use crate::CliError;

/// Per-step tolerance on `|ΔE − ΔW|` at steps whose crack does not change.
pub const BALANCE_TOLERANCE: f64 = 1e-8;
/// Tolerance on `E(g(t),K(t)) − E(g(t),K(s))`.
pub const MONOTONE_TOLERANCE: f64 = 1e-8;
/// Relative agreement required between recorded and recomputed values; the
/// CSV keeps 13 significant digits.
pub const RECORD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// False when the check could not apply to this run.
    pub applicable: bool,
    /// Size of the worst violation, or of the worst residual when passing.
    pub residual: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, residual: f64, detail: String) -> Self {
        Self { name, passed, applicable: true, residual, detail }
    }
    fn skipped(name: &'static str, detail: String) -> Self {
        Self { name, passed: true, applicable: false, residual: 0.0, detail }
    }
}

fn numerical(e: Error) -> CliError {
    match e {
        Error::NumericalFailure { .. } => CliError::Numerical(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

/// Runs the enabled checks on `records`. `evo` supplies the exact
/// frozen-crack work and the displacements; its energies may differ from
/// `records` when those were read back from disk.
pub fn checklist(
    setup: &Setup,
    evo: &Evolution,
    records: &[EvolutionRecord],
    toggles: &AuditToggles,
    griffith: Option<&GriffithOptions>,
) -> Result<(Vec<Check>, Option<GriffithReport>), CliError> {
    let Setup { mesh, bp, load, k0, schedule, .. } = setup;
    let mut checks = Vec::new();
    if toggles.irreversibility {
        checks.push(match audit_irreversibility(records, mesh) {
            None => Check::new("irreversibility", true, 0.0, "K_{i-1} ⊆ K_i at every step".into()),
            Some(i) => Check::new("irreversibility", false, 1.0, format!("K_{} ⊄ K_{i}", i - 1)),
        });
    }
    if toggles.estimate {
        let r = audit_discrete_estimate(records, mesh, load, schedule);
        let (i, j) = r.worst_pair;
        let detail = if r.passed {
            format!("E_j ≤ E_i + W_ij + ρ over {} pairs, least slack {:e} at ({i}, {j}), ρ = {:e}", r.pairs, r.worst_slack, r.rho)
        } else {
            format!("E_{j} ≤ E_{i} + W_{i}{j} + ρ violated by {:e}", -r.worst_slack)
        };
        checks.push(Check::new("estimate", r.passed, if r.passed { 0.0 } else { -r.worst_slack }, detail));
    }
    if toggles.apriori {
        let r = audit_apriori_bounds(records, mesh, load, schedule);
        let detail = if r.max_grad_u > r.max_grad_g {
            format!("‖∇u‖ ≤ max‖∇g‖ violated: {:e} > {:e}", r.max_grad_u, r.max_grad_g)
        } else if !r.passed {
            format!("H¹(K) ≤ C violated: length {:e}, bound {:e}", r.max_length, r.length_bound)
        } else {
            format!("‖∇u‖ ≤ {:e} ≤ {:e}, H¹(K) ≤ {:e} ≤ {:e}", r.max_grad_u, r.max_grad_g, r.max_length, r.length_bound)
        };
        let residual = (r.max_grad_u - r.max_grad_g).max(r.max_length - r.length_bound).max(0.0);
        checks.push(Check::new("apriori", r.passed, residual, detail));
    }
    if toggles.monotone {
        checks.push(match audit_monotone_load(records, mesh, bp, load) {
            Ok(r) => {
                let passed = r.worst_violation <= MONOTONE_TOLERANCE;
                let (s, t) = r.worst_pair;
                let detail = if passed {
                    format!("E(g(t),K(t)) ≤ E(g(t),K(s)) over {} pairs, worst {:e}", r.pairs, r.worst_violation)
                } else {
                    format!("E(g(t_{t}),K(t_{t})) ≤ E(g(t_{t}),K(t_{s})) violated by {:e}", r.worst_violation)
                };
                Check::new("monotone", passed, r.worst_violation.max(0.0), detail)
            }
            Err(Error::Precondition(why)) => Check::skipped("monotone", why),
            Err(e) => return Err(numerical(e)),
        });
    }
    if toggles.balance {
        let mut worst = (0.0f64, 0usize);
        let mut frozen_steps = 0;
        for (w, f) in records.windows(2).zip(evo.records.windows(2)) {
            if w[0].crack != w[1].crack {
                continue;
            }
            frozen_steps += 1;
            let gap = ((w[1].energies.total - w[0].energies.total) - (f[1].frozen_work - f[0].frozen_work)).abs();
            if gap > worst.0 || gap.is_nan() {
                worst = (gap, w[1].index);
            }
        }
        let passed = worst.0 <= BALANCE_TOLERANCE;
        let detail = if passed {
            format!("|ΔE − 2∫(∇u|∇ġ)| ≤ {:e} over {frozen_steps} frozen steps", worst.0)
        } else {
            format!("ΔE = 2∫(∇u|∇ġ) violated at step {} by {:e}", worst.1, worst.0)
        };
        checks.push(Check::new("balance", passed, worst.0, detail));
    }
    let report = match griffith {
        Some(options) => {
            let r = griffith_audit(&evo.records, mesh, bp, load, k0, options).map_err(numerical)?;
            if toggles.griffith {
                let first = r.steps.iter().find_map(|s| s.violations.first().map(|v| format!("step {}: {v}", s.index)));
                let detail = first.unwrap_or_else(|| {
                    format!(
                        "κ² ≤ 1 and (1 − κ²)σ̇ = 0 within tolerance, {} unclassifiable steps, max |(1 − κ²)σ̇| = {:e}",
                        r.unclassifiable, r.worst_product
                    )
                });
                checks.push(Check::new("griffith", r.passed, r.worst_product, detail));
            }
            Some(r)
        }
        None => None,
    };
    Ok((checks, report))
}

/// Recorded rows against the records recomputed from the recorded cracks.
pub fn consistency(rows: &[EvolutionRow], evo: &Evolution) -> Check {
    if rows.len() != evo.records.len() {
        return Check::new(
            "consistency",
            false,
            1.0,
            format!("{} recorded steps for {} schedule times", rows.len(), evo.records.len()),
        );
    }
    let mut worst: (f64, String) = (0.0, String::new());
    for (row, r) in rows.iter().zip(&evo.records) {
        if row.i != r.index || row.crack_edges != r.crack.edge_count() {
            return Check::new("consistency", false, 1.0, format!("step {} does not match its crack record", row.i));
        }
        let fields = [
            ("t", row.t, r.t),
            ("bulk", row.bulk, r.energies.bulk),
            ("surface", row.surface, r.energies.surface),
            ("total", row.total, r.energies.total),
            ("work_integral", row.work_integral, r.work_integral),
            ("estimate_slack", row.estimate_slack, r.estimate_slack),
        ];
        let total_sum = (row.total - row.bulk - row.surface).abs() / (1.0 + row.total.abs());
        if total_sum > worst.0 {
            worst = (total_sum, format!("total = bulk + surface violated at step {}", row.i));
        }
        for (name, recorded, recomputed) in fields {
            let gap = (recorded - recomputed).abs() / (1.0 + recomputed.abs());
            if gap > worst.0 || gap.is_nan() {
                worst = (gap, format!("recorded {name} at step {} is {recorded:e}, recomputed {recomputed:e}", row.i));
            }
        }
    }
    let passed = worst.0 <= RECORD_TOLERANCE;
    let detail = if passed { format!("records reproduce within {:e}", worst.0) } else { worst.1 };
    Check::new("consistency", passed, worst.0, detail)
}

/// Replayed records carrying the recorded energies and work.
pub fn overlay(rows: &[EvolutionRow], evo: &Evolution) -> Vec<EvolutionRecord> {
    evo.records
        .iter()
        .zip(rows)
        .map(|(r, row)| {
            let mut r = r.clone();
            r.energies.bulk = row.bulk;
            r.energies.surface = row.surface;
            r.energies.total = row.total;
            r.grad_u_norm = row.bulk.max(0.0).sqrt();
            r.work_integral = row.work_integral;
            r.estimate_slack = row.estimate_slack;
            r
        })
        .collect()
}
