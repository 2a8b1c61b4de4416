//! Incremental minimisation in time and the audits of its trajectory.
//!
//! Each step picks `K_i` minimising `E(g(t_i), K)` over a finite family of
//! continua `K ⊇ K_{i-1}` generated by a [`MinimizerStrategy`]. Records keep
//! the displacement of every step so that audits and stress-intensity fits can
//! be run afterwards without re-solving.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::crack::{connected_supersets, CrackSet};
use crate::domain::{BoundaryPartition, Mesh};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::solver::{solve_equilibrium, solve_with, split_mesh, transfer, DisplacementField, Energies, LoadTrace, SolveOptions};

/// Uniform time grid `t_i = i·δ`, `i = 0..=N` with `N = ⌊1/δ⌋`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule<T: Real = f64> {
    delta: T,
    times: Vec<T>,
}

impl<T: Real> Schedule<T> {
    pub fn new(delta: T) -> Result<Self> {
        if !(delta > T::zero() && delta <= T::one()) {
            return Err(Error::Precondition(format!("time step must lie in (0, 1], got {delta}")));
        }
        // A relative nudge keeps δ = 1/n from losing its last step to rounding.
        let ratio = (T::one() / delta) * (T::one() + T::lit(4.0) * T::epsilon());
        let n = ratio.floor().to_usize().ok_or_else(|| Error::Precondition("time step too small".into()))?;
        let times = (0..=n).map(|i| (T::from_usize_lossy(i) * delta).min(T::one())).collect();
        Ok(Self { delta, times })
    }

    /// `δ = 1/n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("need at least one time step".into()));
        }
        Self::new(T::one() / T::from_usize_lossy(n))
    }

    pub fn delta(&self) -> T {
        self.delta
    }
    pub fn times(&self) -> &[T] {
        &self.times
    }
    /// `N_δ`, the index of the last step.
    pub fn last_index(&self) -> usize {
        self.times.len() - 1
    }
}

/// Family of candidate cracks examined at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizerStrategy {
    /// Every continuum obtained by adding at most `max_extra_edges` edges.
    Brute { max_extra_edges: usize },
    /// Repeatedly move to the best extension by at most `depth` edges while
    /// that lowers the energy by more than `1e-12`; up to `patience`
    /// consecutive non-improving moves are tried before stopping, and the
    /// best crack visited is returned.
    Greedy { depth: usize, patience: usize },
}

impl MinimizerStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Greedy { depth: 0, .. } => Err(Error::Precondition("greedy depth must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

/// Result of one minimisation step.
#[derive(Debug, Clone)]
pub struct StepOutcome<T: Real = f64> {
    pub crack: CrackSet<T>,
    pub energies: Energies<T>,
    /// Displacement dofs on the split mesh of `crack`.
    pub displacement: Vec<T>,
    /// Energies of the previous crack under the new load.
    pub previous: Energies<T>,
    pub previous_displacement: Vec<T>,
    /// Number of candidate cracks whose energy was evaluated.
    pub candidates: usize,
}

struct Scored<T: Real> {
    crack: CrackSet<T>,
    energies: Energies<T>,
}

fn evaluate<T: Real>(mesh: &Mesh<T>, bp: &BoundaryPartition<T>, g: &[T], crack: &CrackSet<T>) -> Result<Energies<T>> {
    let cm = split_mesh(mesh, crack)?;
    let u = solve_equilibrium(&cm, bp, g)?;
    Ok(Energies::new(u.bulk_energy(), crack.length()))
}

fn solve_values<T: Real>(mesh: &Mesh<T>, bp: &BoundaryPartition<T>, g: &[T], crack: &CrackSet<T>) -> Result<(Energies<T>, Vec<T>)> {
    let cm = split_mesh(mesh, crack)?;
    let u = solve_equilibrium(&cm, bp, g)?;
    Ok((Energies::new(u.bulk_energy(), crack.length()), u.into_values()))
}

fn within<T: Real>(value: T, floor: T) -> bool {
    value <= floor + T::tie_tolerance() * (T::one() + floor.abs())
}

/// Structural part of the tie-break order: fewer edges, then the sorted edge
/// tuple, then no seed before the lowest seed node.
fn structural_cmp<T: Real>(a: &CrackSet<T>, b: &CrackSet<T>) -> Ordering {
    a.edge_count()
        .cmp(&b.edge_count())
        .then_with(|| a.edges().cmp(b.edges()))
        .then_with(|| a.point_node().cmp(&b.point_node()))
}

/// Index of the preferred candidate: minimal total energy up to the tie
/// window, then minimal surface energy up to the window, then
/// [`structural_cmp`]. Independent of the order of `scored`.
fn select<T: Real>(scored: &[Scored<T>]) -> usize {
    let best_total = scored.iter().map(|s| s.energies.total).fold(T::infinity(), T::min);
    let best_surface = scored
        .iter()
        .filter(|s| within(s.energies.total, best_total))
        .map(|s| s.energies.surface)
        .fold(T::infinity(), T::min);
    scored
        .iter()
        .enumerate()
        .filter(|(_, s)| within(s.energies.total, best_total) && within(s.energies.surface, best_surface))
        .min_by(|(_, a), (_, b)| structural_cmp(&a.crack, &b.crack))
        .map(|(i, _)| i)
        .expect("candidate family is never empty")
}

/// Energies of every crack in `family`, each solve warm-started from
/// `start`, the equilibrium of a crack contained in all of them.
fn score_all<T: Real>(
    mesh: &Mesh<T>,
    bp: &BoundaryPartition<T>,
    g: &[T],
    start: &DisplacementField<'_, T>,
    family: Vec<CrackSet<T>>,
) -> Result<Vec<Scored<T>>> {
    // Seeds do not split the mesh: they share the energy of the bare body.
    let bare = if family.iter().any(|k| k.point_node().is_some()) {
        Some(evaluate(mesh, bp, g, &CrackSet::empty())?)
    } else {
        None
    };
    family
        .into_par_iter()
        .map(|crack| {
            let energies = match (crack.point_node(), bare) {
                (Some(_), Some(e)) => e,
                _ => {
                    let cm = split_mesh(mesh, &crack)?;
                    let warm = transfer(start, &cm);
                    let u = solve_with(&cm, bp, |d| g[cm.dof_node(d)], Some(&warm), SolveOptions::default())?;
                    Energies::new(u.bulk_energy(), crack.length())
                }
            };
            Ok(Scored { crack, energies })
        })
        .collect()
}

/// One step of the scheme: minimise `E(g, K)` over the strategy's family of
/// continua containing `k_prev`.
pub fn step<T: Real>(
    mesh: &Mesh<T>,
    bp: &BoundaryPartition<T>,
    k_prev: &CrackSet<T>,
    g: &[T],
    strategy: MinimizerStrategy,
) -> Result<StepOutcome<T>> {
    strategy.validate()?;
    if g.len() != mesh.node_count() {
        return Err(Error::Precondition("load needs one value per mesh node".into()));
    }
    let prev_cm = split_mesh(mesh, k_prev)?;
    let prev_field = solve_equilibrium(&prev_cm, bp, g)?;
    let previous = Energies::new(prev_field.bulk_energy(), k_prev.length());
    let (choice, candidates) = match strategy {
        MinimizerStrategy::Brute { max_extra_edges } => {
            let family = connected_supersets(k_prev, mesh, max_extra_edges)?;
            let scored = score_all(mesh, bp, g, &prev_field, family)?;
            let i = select(&scored);
            (Scored { crack: scored[i].crack.clone(), energies: scored[i].energies }, scored.len())
        }
        MinimizerStrategy::Greedy { depth, patience } => greedy(mesh, bp, g, &prev_field, previous, depth, patience)?,
    };
    let previous_displacement = prev_field.values().to_vec();
    let (energies, displacement) = if choice.crack == *k_prev {
        (previous, previous_displacement.clone())
    } else {
        solve_values(mesh, bp, g, &choice.crack)?
    };
    debug_assert!(k_prev.is_subset_of(&choice.crack, mesh), "step lost part of the previous crack");
    Ok(StepOutcome { crack: choice.crack, energies, displacement, previous, previous_displacement, candidates })
}

const GREEDY_DECREASE: f64 = 1e-12;

fn greedy<T: Real>(
    mesh: &Mesh<T>,
    bp: &BoundaryPartition<T>,
    g: &[T],
    prev_field: &DisplacementField<'_, T>,
    start: Energies<T>,
    depth: usize,
    patience: usize,
) -> Result<(Scored<T>, usize)> {
    let k_prev = prev_field.cracked().crack();
    let mut best = Scored { crack: k_prev.clone(), energies: start };
    let mut current = Scored { crack: k_prev.clone(), energies: start };
    let mut evaluated = 1;
    let mut idle = 0;
    loop {
        let family: Vec<CrackSet<T>> =
            connected_supersets(&current.crack, mesh, depth)?.into_iter().filter(|k| *k != current.crack).collect();
        if family.is_empty() {
            break;
        }
        evaluated += family.len();
        let scored = score_all(mesh, bp, g, prev_field, family)?;
        let i = select(&scored);
        let next = Scored { crack: scored[i].crack.clone(), energies: scored[i].energies };
        if next.energies.total < best.energies.total - T::lit(GREEDY_DECREASE) {
            best = Scored { crack: next.crack.clone(), energies: next.energies };
            idle = 0;
        } else {
            idle += 1;
            if idle > patience {
                break;
            }
        }
        current = next;
    }
    Ok((best, evaluated))
}

/// State of the evolution at one step time.
#[derive(Debug, Clone)]
pub struct EvolutionRecord<T: Real = f64> {
    pub index: usize,
    pub t: T,
    pub crack: CrackSet<T>,
    pub displacement: Vec<T>,
    pub energies: Energies<T>,
    /// `‖∇u_i‖`.
    pub grad_u_norm: T,
    /// `‖∇g(t_i)‖`.
    pub grad_g_norm: T,
    /// `2∫_0^{t_i} (∇u_δ|∇ġ) dt` with the step function `u_δ`: the
    /// left-endpoint work, exact for the step functions.
    pub work_integral: T,
    /// `2∫_0^{t_i} (∇u(τ)|∇ġ) dτ` with `u(τ)` the equilibrium of `g(τ)` on
    /// the crack of the step in progress, integrated exactly.
    pub frozen_work: T,
    /// `total_i − total_0 − frozen_work_i`; zero for a frozen crack.
    pub balance_residual: T,
    /// `total_0 + work_integral_i + ρ(δ) − total_i`, non-negative by the
    /// discrete estimate.
    pub estimate_slack: T,
    pub candidates: usize,
}

/// A completed run.
#[derive(Debug, Clone)]
pub struct Evolution<T: Real = f64> {
    pub schedule: Schedule<T>,
    pub records: Vec<EvolutionRecord<T>>,
    /// `max_r ∫_{t_r}^{t_{r+1}} ‖∇ġ‖`.
    pub sigma: T,
    /// `ρ(δ) = σ(δ)·∫_0^1 ‖∇ġ‖`.
    pub rho: T,
}

/// `σ(δ)` and `ρ(δ)` of the load on the schedule.
pub fn rho_delta<T: Real>(mesh: &Mesh<T>, load: &LoadTrace<T>, schedule: &Schedule<T>) -> (T, T) {
    let sigma = schedule
        .times()
        .windows(2)
        .map(|w| load.rate_norm_integral(mesh, w[0], w[1]))
        .fold(T::zero(), T::max);
    (sigma, sigma * load.rate_norm_integral(mesh, T::zero(), T::one()))
}

/// `2∫_a^b (∇u(τ)|∇ġ(τ)) dτ` for the equilibria `u(τ)` of `g(τ)` on a fixed
/// crack. `u` is affine in `τ` between load samples, so the trapezoid rule on
/// each sample interval is exact. `u_a`, `u_b` are the end-point solutions.
fn frozen_work<T: Real>(
    mesh: &Mesh<T>,
    bp: &BoundaryPartition<T>,
    load: &LoadTrace<T>,
    crack: &CrackSet<T>,
    (a, u_a): (T, &[T]),
    (b, u_b): (T, &[T]),
) -> Result<T> {
    let cm = split_mesh(mesh, crack)?;
    let mut knots = vec![(a, u_a.to_vec())];
    for s in load.knots_between(a, b) {
        knots.push((s, solve_equilibrium(&cm, bp, &load.at(s))?.into_values()));
    }
    knots.push((b, u_b.to_vec()));
    let half = T::lit(0.5);
    let mut work = T::zero();
    for w in knots.windows(2) {
        let ((s0, v0), (s1, v1)) = (&w[0], &w[1]);
        let rate = load.rate_at(*s0);
        let r0 = DisplacementField::from_values(cm.clone(), v0.clone()).work_rate(rate);
        let r1 = DisplacementField::from_values(cm.clone(), v1.clone()).work_rate(rate);
        work += (*s1 - *s0) * half * (r0 + r1);
    }
    Ok(work)
}

/// Runs the scheme on `schedule`, starting from `k0` (so `K_{-1} = K_0`).
pub fn run<T: Real>(
    mesh: &Mesh<T>,
    bp: &BoundaryPartition<T>,
    load: &LoadTrace<T>,
    k0: &CrackSet<T>,
    schedule: &Schedule<T>,
    strategy: MinimizerStrategy,
) -> Result<Evolution<T>> {
    if load.node_count() != mesh.node_count() {
        return Err(Error::Precondition("load needs one value per mesh node".into()));
    }
    if !k0.is_continuum(mesh)? {
        return Err(Error::InvalidCrack("initial crack is not connected".into()));
    }
    let (sigma, rho) = rho_delta(mesh, load, schedule);
    let mut records: Vec<EvolutionRecord<T>> = Vec::with_capacity(schedule.times().len());
    let mut k_prev = k0.clone();
    for (i, &t) in schedule.times().iter().enumerate() {
        let out = step(mesh, bp, &k_prev, &load.at(t), strategy)?;
        if !k_prev.is_subset_of(&out.crack, mesh) {
            return Err(Error::InvalidCrack(format!("irreversibility violated at step {i}")));
        }
        k_prev = out.crack.clone();
        push_record(&mut records, mesh, bp, load, rho, t, out)?;
    }
    Ok(Evolution { schedule: schedule.clone(), records, sigma, rho })
}

/// Rebuilds the records of a run from its crack sequence alone, solving
/// each equilibrium again. `cracks[i]` belongs to `schedule.times()[i]`;
/// `k0` precedes the first one. No minimality or irreversibility is assumed.
pub fn replay<T: Real>(
    mesh: &Mesh<T>,
    bp: &BoundaryPartition<T>,
    load: &LoadTrace<T>,
    k0: &CrackSet<T>,
    schedule: &Schedule<T>,
    cracks: &[CrackSet<T>],
) -> Result<Evolution<T>> {
    if cracks.len() != schedule.times().len() {
        return Err(Error::Precondition(format!(
            "{} cracks for {} schedule times",
            cracks.len(),
            schedule.times().len()
        )));
    }
    if load.node_count() != mesh.node_count() {
        return Err(Error::Precondition("load needs one value per mesh node".into()));
    }
    let (sigma, rho) = rho_delta(mesh, load, schedule);
    let mut records: Vec<EvolutionRecord<T>> = Vec::with_capacity(cracks.len());
    let mut k_prev = k0;
    for (&t, crack) in schedule.times().iter().zip(cracks) {
        let g = load.at(t);
        let (previous, previous_displacement) = solve_values(mesh, bp, &g, k_prev)?;
        let (energies, displacement) = if crack == k_prev {
            (previous, previous_displacement.clone())
        } else {
            solve_values(mesh, bp, &g, crack)?
        };
        let out = StepOutcome { crack: crack.clone(), energies, displacement, previous, previous_displacement, candidates: 1 };
        push_record(&mut records, mesh, bp, load, rho, t, out)?;
        k_prev = crack;
    }
    Ok(Evolution { schedule: schedule.clone(), records, sigma, rho })
}

/// Appends the record of step `out` at time `t`, accumulating both work
/// integrals from the previous record.
fn push_record<T: Real>(
    records: &mut Vec<EvolutionRecord<T>>,
    mesh: &Mesh<T>,
    bp: &BoundaryPartition<T>,
    load: &LoadTrace<T>,
    rho: T,
    t: T,
    out: StepOutcome<T>,
) -> Result<()> {
    let g = load.at(t);
    let (work_integral, frozen) = match records.last() {
        None => (T::zero(), T::zero()),
        Some(prev) => {
            let g_prev = load.at(prev.t);
            let dg: Vec<T> = g.iter().zip(&g_prev).map(|(&a, &b)| a - b).collect();
            let cm = split_mesh(mesh, &prev.crack)?;
            let left = DisplacementField::from_values(cm, prev.displacement.clone()).work_rate(&dg);
            let exact = frozen_work(
                mesh,
                bp,
                load,
                &prev.crack,
                (prev.t, &prev.displacement),
                (t, &out.previous_displacement),
            )?;
            (prev.work_integral + left, prev.frozen_work + exact)
        }
    };
    let total0 = records.first().map_or(out.energies.total, |r| r.energies.total);
    records.push(EvolutionRecord {
        index: records.len(),
        t,
        crack: out.crack,
        grad_u_norm: out.energies.bulk.max(T::zero()).sqrt(),
        grad_g_norm: mesh.dirichlet_energy(&g).sqrt(),
        displacement: out.displacement,
        energies: out.energies,
        work_integral,
        frozen_work: frozen,
        balance_residual: out.energies.total - total0 - frozen,
        estimate_slack: total0 + work_integral + rho - out.energies.total,
        candidates: out.candidates,
    });
    Ok(())
}

/// First step `i` at which `K_{i-1} ⊄ K_i`.
pub fn audit_irreversibility<T: Real>(records: &[EvolutionRecord<T>], mesh: &Mesh<T>) -> Option<usize> {
    records.windows(2).find(|w| !w[0].crack.is_subset_of(&w[1].crack, mesh)).map(|w| w[1].index)
}

/// Outcome of the discrete energy estimate over all pairs `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport<T> {
    pub sigma: T,
    pub rho: T,
    /// `min_{i<j} [E_i + 2∫_{t_i}^{t_j}(∇u_δ|∇ġ) + ρ(δ) − E_j]`.
    pub worst_slack: T,
    pub worst_pair: (usize, usize),
    pub pairs: usize,
    pub passed: bool,
}

/// Checks `E_j ≤ E_i + 2∫_{t_i}^{t_j}(∇u_δ|∇ġ) dt + ρ(δ)` for every pair of
/// records, using the recorded left-endpoint work.
pub fn audit_discrete_estimate<T: Real>(
    records: &[EvolutionRecord<T>],
    mesh: &Mesh<T>,
    load: &LoadTrace<T>,
    schedule: &Schedule<T>,
) -> EstimateReport<T> {
    let (sigma, rho) = rho_delta(mesh, load, schedule);
    let mut worst = (T::infinity(), (0, 0));
    let mut pairs = 0;
    let mut scale = T::one();
    for (a, ri) in records.iter().enumerate() {
        scale = scale.max(ri.energies.total.abs()).max(ri.work_integral.abs());
        for rj in &records[a + 1..] {
            let slack = ri.energies.total + (rj.work_integral - ri.work_integral) + rho - rj.energies.total;
            pairs += 1;
            if slack < worst.0 {
                worst = (slack, (ri.index, rj.index));
            }
        }
    }
    let worst_slack = if pairs == 0 { T::zero() } else { worst.0 };
    EstimateReport {
        sigma,
        rho,
        worst_slack,
        worst_pair: worst.1,
        pairs,
        passed: worst_slack >= -audit_tolerance::<T>() * scale,
    }
}

/// Relative slack granted to audited inequalities for solver and summation
/// round-off.
pub fn audit_tolerance<T: Real>() -> T {
    T::cg_tolerance() * T::lit(1e-2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AprioriReport<T> {
    /// `max_t ‖∇g(t)‖`.
    pub max_grad_g: T,
    pub max_grad_u: T,
    /// `E_0 + 2Σ_r ‖∇u_r‖∫_{t_r}^{t_{r+1}}‖∇ġ‖ + ρ(δ)`.
    pub length_bound: T,
    /// `E_0 + 2·max_t‖∇g‖·∫_0^1‖∇ġ‖ + ρ(δ)`, the constant depending on the data only.
    pub data_bound: T,
    pub max_length: T,
    pub passed: bool,
}

/// `‖∇u_i‖ ≤ max_t ‖∇g(t)‖` and `H¹(K_i) ≤ C` at every record.
pub fn audit_apriori_bounds<T: Real>(
    records: &[EvolutionRecord<T>],
    mesh: &Mesh<T>,
    load: &LoadTrace<T>,
    schedule: &Schedule<T>,
) -> AprioriReport<T> {
    let (_, rho) = rho_delta(mesh, load, schedule);
    let max_grad_g = load.max_gradient_norm(mesh);
    let max_grad_u = records.iter().map(|r| r.grad_u_norm).fold(T::zero(), T::max);
    let max_length = records.iter().map(|r| r.energies.surface).fold(T::zero(), T::max);
    let total0 = records.first().map_or(T::zero(), |r| r.energies.total);
    let two = T::lit(2.0);
    let mut chain = T::zero();
    for w in records.windows(2) {
        chain += w[0].grad_u_norm * load.rate_norm_integral(mesh, w[0].t, w[1].t);
    }
    let length_bound = total0 + two * chain + rho;
    let data_bound = total0 + two * max_grad_g * load.rate_norm_integral(mesh, T::zero(), T::one()) + rho;
    let round = T::lit(64.0) * T::epsilon();
    let passed = max_grad_u <= max_grad_g * (T::one() + round)
        && records.iter().all(|r| r.energies.surface <= length_bound * (T::one() + round))
        && length_bound <= data_bound * (T::one() + round);
    AprioriReport { max_grad_g, max_grad_u, length_bound, data_bound, max_length, passed }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport<T> {
    /// `max_{s<t} E(g(t),K(t)) − E(g(t),K(s))`, zero when no pair differs.
    pub worst_violation: T,
    pub worst_pair: (usize, usize),
    pub pairs: usize,
    pub solves: usize,
}

/// For a separable load `g = φ(t)h` with `φ ≥ 0` non-decreasing, checks
/// `E(g(t),K(t)) ≤ E(g(t),K(s))` for every pair of records `s < t` by
/// re-solving with the older crack.
pub fn audit_monotone_load<T: Real>(
    records: &[EvolutionRecord<T>],
    mesh: &Mesh<T>,
    bp: &BoundaryPartition<T>,
    load: &LoadTrace<T>,
) -> Result<MonotoneReport<T>> {
    let form = load
        .separable_form()
        .ok_or_else(|| Error::Precondition("monotone-load audit needs a separable load".into()))?;
    if form.phi.iter().any(|&p| p < T::zero()) || form.phi.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("φ must be non-negative and non-decreasing".into()));
    }
    let mut distinct: Vec<CrackSet<T>> = Vec::new();
    for r in records {
        if !distinct.contains(&r.crack) {
            distinct.push(r.crack.clone());
        }
    }
    let jobs: Vec<(usize, usize)> = records
        .iter()
        .enumerate()
        .flat_map(|(j, rt)| {
            let older: Vec<usize> = distinct
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != rt.crack && records[..j].iter().any(|rs| rs.crack == **c))
                .map(|(k, _)| k)
                .collect();
            older.into_iter().map(move |k| (j, k))
        })
        .collect();
    let energies: Vec<T> = jobs
        .par_iter()
        .map(|&(j, k)| evaluate(mesh, bp, &load.at(records[j].t), &distinct[k]).map(|e| e.total))
        .collect::<Result<_>>()?;
    let mut report = MonotoneReport { worst_violation: T::zero(), worst_pair: (0, 0), pairs: 0, solves: jobs.len() };
    for (j, rt) in records.iter().enumerate() {
        for (s, rs) in records[..j].iter().enumerate() {
            report.pairs += 1;
            let older = if rs.crack == rt.crack {
                rt.energies.total
            } else {
                let k = distinct.iter().position(|c| *c == rs.crack).expect("listed");
                let at = jobs.iter().position(|&job| job == (j, k)).expect("solved");
                energies[at]
            };
            let violation = rt.energies.total - older;
            if violation > report.worst_violation {
                report.worst_violation = violation;
                report.worst_pair = (s, j);
            }
        }
    }
    Ok(report)
}

/// A complete evolution problem, for refinement studies.
#[derive(Debug, Clone)]
pub struct Problem<'a, T: Real = f64> {
    pub mesh: &'a Mesh<T>,
    pub bp: &'a BoundaryPartition<T>,
    pub load: &'a LoadTrace<T>,
    pub k0: CrackSet<T>,
    pub strategy: MinimizerStrategy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow<T> {
    pub coarse: T,
    pub fine: T,
    /// `sup_t |E_coarse(t) − E_fine(t)|` over the union of both grids, with
    /// the energies read as step functions.
    pub sup_difference: T,
    pub at: T,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable<T: Real = f64> {
    pub deltas: Vec<T>,
    /// `(t_i, total_i)` per run.
    pub trajectories: Vec<Vec<(T, T)>>,
    /// Consecutive pairs of `deltas`.
    pub rows: Vec<ConvergenceRow<T>>,
}

fn step_value<T: Real>(trajectory: &[(T, T)], t: T) -> T {
    match trajectory.iter().rposition(|&(s, _)| s <= t) {
        Some(k) => trajectory[k].1,
        None => trajectory[0].1,
    }
}

/// Runs the problem for each `δ` and tabulates the total-energy differences
/// between consecutive runs.
pub fn refine_and_compare<T: Real>(problem: &Problem<'_, T>, deltas: &[T]) -> Result<ConvergenceTable<T>> {
    if deltas.is_empty() || deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Precondition("time steps must be strictly decreasing".into()));
    }
    let mut trajectories = Vec::new();
    for &d in deltas {
        let schedule = Schedule::new(d)?;
        let evo = run(problem.mesh, problem.bp, problem.load, &problem.k0, &schedule, problem.strategy)?;
        trajectories.push(evo.records.iter().map(|r| (r.t, r.energies.total)).collect::<Vec<_>>());
    }
    let rows = trajectories
        .windows(2)
        .zip(deltas.windows(2))
        .map(|(tr, d)| {
            let mut grid: Vec<T> = tr[0].iter().chain(&tr[1]).map(|p| p.0).collect();
            grid.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
            grid.dedup();
            let (sup_difference, at) = grid
                .into_iter()
                .map(|t| ((step_value(&tr[0], t) - step_value(&tr[1], t)).abs(), t))
                .fold((T::zero(), T::zero()), |acc, x| if x.0 > acc.0 { x } else { acc });
            ConvergenceRow { coarse: d[0], fine: d[1], sup_difference, at }
        })
        .collect();
    Ok(ConvergenceTable { deltas: deltas.to_vec(), trajectories, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{assign_boundary, build_rect_mesh, rect_sides, BoundaryKind::*};

    fn square(h: f64) -> (Mesh<f64>, BoundaryPartition<f64>) {
        let m = build_rect_mesh(1.0, 1.0, h).unwrap();
        let bp = assign_boundary(&m, &rect_sides(1.0, 1.0, Neumann, Dirichlet, Neumann, Dirichlet)).unwrap();
        (m, bp)
    }

    fn x_profile(m: &Mesh<f64>, scale: f64) -> Vec<f64> {
        m.nodes().iter().map(|p| scale * p[0]).collect()
    }

    #[test]
    fn schedule_counts() {
        assert_eq!(Schedule::<f64>::new(0.1).unwrap().last_index(), 10);
        assert_eq!(Schedule::<f64>::new(0.3).unwrap().last_index(), 3);
        assert_eq!(Schedule::<f64>::uniform(3).unwrap().times()[3], 1.0);
        assert!(Schedule::<f64>::new(0.0).is_err());
        assert!(Schedule::<f64>::new(1.5).is_err());
    }

    #[test]
    fn zero_load_keeps_crack() {
        let (m, bp) = square(0.5);
        let k = CrackSet::from_node_pairs(&m, &[[3, 4]]).unwrap();
        let g = vec![0.0; m.node_count()];
        let out = step(&m, &bp, &k, &g, MinimizerStrategy::Brute { max_extra_edges: 2 }).unwrap();
        assert_eq!(out.crack, k);
        assert!((out.energies.total - 0.5).abs() < 1e-14);
    }

    #[test]
    fn small_and_large_loads_on_the_square() {
        let (m, bp) = square(0.5);
        let strategy = MinimizerStrategy::Brute { max_extra_edges: 2 };
        let small = step(&m, &bp, &CrackSet::empty(), &x_profile(&m, 0.5), strategy).unwrap();
        assert!(small.crack.is_empty());
        assert_eq!(small.energies, small.previous);
        let large = step(&m, &bp, &CrackSet::empty(), &x_profile(&m, 2.0), strategy).unwrap();
        assert!((large.energies.total - 1.0).abs() < 1e-10);
        assert!((large.energies.bulk).abs() < 1e-10);
        assert_eq!(large.crack.edge_count(), 2);
    }

    #[test]
    fn tie_break_prefers_shorter_then_fewer_edges() {
        let (m, _) = square(0.5);
        let e = |pairs: &[[usize; 2]]| CrackSet::from_node_pairs(&m, pairs).unwrap();
        let mk = |crack: CrackSet<f64>, total: f64| {
            let s = crack.length();
            Scored { crack, energies: Energies::new(total - s, s) }
        };
        let a = mk(e(&[[1, 4], [4, 7]]), 1.0);
        let b = mk(e(&[[0, 1]]), 1.0 + 1e-14);
        let c = mk(CrackSet::empty(), 1.0 + 1e-3);
        let picked = select(&[a, b, c]);
        assert_eq!(picked, 1);
        let seeds = [mk(CrackSet::point(3), 0.4), mk(CrackSet::empty(), 0.4)];
        assert_eq!(select(&seeds), 1);
    }

    #[test]
    fn greedy_finds_the_cut_at_large_load() {
        let (m, bp) = square(0.5);
        let g = x_profile(&m, 2.0);
        let out = step(&m, &bp, &CrackSet::empty(), &g, MinimizerStrategy::Greedy { depth: 2, patience: 0 }).unwrap();
        assert!((out.energies.total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn linear_load_balance_is_exact() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let bp = assign_boundary(&m, &rect_sides(1.0, 1.0, Dirichlet, Dirichlet, Dirichlet, Dirichlet)).unwrap();
        let load = LoadTrace::ramp(x_profile(&m, 0.9));
        let schedule = Schedule::uniform(5).unwrap();
        let evo = run(&m, &bp, &load, &CrackSet::empty(), &schedule, MinimizerStrategy::Brute { max_extra_edges: 1 })
            .unwrap();
        for r in &evo.records {
            assert!(r.crack.is_empty());
            assert!((r.energies.total - (0.9 * r.t).powi(2)).abs() < 1e-10);
            assert!(r.balance_residual.abs() < 1e-10);
            assert!(r.estimate_slack >= -1e-12);
        }
        assert!(audit_discrete_estimate(&evo.records, &m, &load, &schedule).passed);
        assert!(audit_apriori_bounds(&evo.records, &m, &load, &schedule).passed);
        let mono = audit_monotone_load(&evo.records, &m, &bp, &load).unwrap();
        assert_eq!(mono.worst_violation, 0.0);
        assert_eq!(mono.solves, 0);
    }

    #[test]
    fn monotone_audit_requires_separable_load() {
        let (m, bp) = square(0.5);
        let load = LoadTrace::from_samples(vec![0.0, 1.0], vec![vec![0.0; 9], x_profile(&m, 1.0)]).unwrap();
        assert!(matches!(audit_monotone_load::<f64>(&[], &m, &bp, &load), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_load_refinement_is_flat() {
        let (m, bp) = square(0.5);
        let load = LoadTrace::zero(m.node_count());
        let p = Problem { mesh: &m, bp: &bp, load: &load, k0: CrackSet::empty(), strategy: MinimizerStrategy::Brute { max_extra_edges: 1 } };
        let table = refine_and_compare(&p, &[0.5, 0.25]).unwrap();
        assert_eq!(table.rows[0].sup_difference, 0.0);
        assert!(refine_and_compare(&p, &[0.25, 0.5]).is_err());
    }

    #[test]
    fn replay_reproduces_a_run() {
        let (m, bp) = square(0.5);
        let load = LoadTrace::ramp(x_profile(&m, 2.0));
        let schedule = Schedule::new(0.25).unwrap();
        let evo = run(&m, &bp, &load, &CrackSet::empty(), &schedule, MinimizerStrategy::Brute { max_extra_edges: 2 }).unwrap();
        let cracks: Vec<CrackSet> = evo.records.iter().map(|r| r.crack.clone()).collect();
        let again = replay(&m, &bp, &load, &CrackSet::empty(), &schedule, &cracks).unwrap();
        for (a, b) in evo.records.iter().zip(&again.records) {
            assert_eq!(a.crack, b.crack);
            assert!((a.energies.total - b.energies.total).abs() < 1e-12);
            assert!((a.work_integral - b.work_integral).abs() < 1e-12);
            assert!((a.frozen_work - b.frozen_work).abs() < 1e-12);
        }
        assert!(replay(&m, &bp, &load, &CrackSet::empty(), &schedule, &cracks[1..]).is_err());
    }
}
