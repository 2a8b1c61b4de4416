//! Exhaustive ground truth for small instances.
//!
//! The enumeration here does not go through [`crate::crack::connected_supersets`]:
//! it lists every subset of the eligible edges up to the budget and keeps the
//! connected ones, which is slow but obviously complete. Only the linear solver
//! is shared with the evolution code.

use std::cmp::Ordering;

use itertools::Itertools;
use rayon::prelude::*;

use crate::crack::CrackSet;
use crate::domain::{BoundaryPartition, Mesh};
use crate::error::{Error, Result};
use crate::evolution::StepOutcome;
use crate::scalar::Real;
use crate::solver::{total_energy, Energies};

/// Largest number of candidates the oracle agrees to solve.
pub const CANDIDATE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow<T: Real = f64> {
    pub crack: CrackSet<T>,
    pub energies: Energies<T>,
}

#[derive(Debug, Clone)]
pub struct OracleResult<T: Real = f64> {
    pub crack: CrackSet<T>,
    pub energies: Energies<T>,
    pub candidates: usize,
    /// Edges that may appear in some candidate.
    pub eligible_edges: usize,
    /// Every candidate in enumeration order, when requested.
    pub table: Option<Vec<TableRow<T>>>,
}

/// Node-hop distance of every node from the crack nodes; all zero for `∅`.
fn hop_distance<T: Real>(mesh: &Mesh<T>, crack: &CrackSet<T>) -> Vec<usize> {
    let sources = crack.nodes(mesh);
    if sources.is_empty() {
        return vec![0; mesh.node_count()];
    }
    let mut d = vec![usize::MAX; mesh.node_count()];
    let mut queue = std::collections::VecDeque::new();
    for s in sources {
        d[s] = 0;
        queue.push_back(s);
    }
    while let Some(n) = queue.pop_front() {
        for &e in mesh.node_edges(n) {
            let m = mesh.opposite(e, n);
            if d[m] == usize::MAX {
                d[m] = d[n] + 1;
                queue.push_back(m);
            }
        }
    }
    d
}

/// Edges outside `k_prev` that some connected extension by at most `budget`
/// edges can reach: the nearer end lies within `budget − 1` hops.
pub fn eligible_edges<T: Real>(mesh: &Mesh<T>, k_prev: &CrackSet<T>, budget: usize) -> Vec<usize> {
    if budget == 0 {
        return Vec::new();
    }
    let d = hop_distance(mesh, k_prev);
    (0..mesh.edge_count())
        .filter(|&e| !k_prev.contains_edge(e))
        .filter(|&e| {
            let [a, b] = mesh.edge(e);
            d[a].min(d[b]) < budget
        })
        .collect()
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Number of edge subsets the oracle would test: `Σ_{k ≤ budget} C(n, k)`,
/// an upper bound on the connected ones.
pub fn candidate_estimate(eligible: usize, budget: usize) -> u128 {
    let n = eligible as u128;
    (0..=budget.min(eligible) as u128).fold(0u128, |acc, k| acc.saturating_add(binomial(n, k)))
}

/// Union-find connectivity of an edge list, with an optional node that must
/// be touched.
fn connected<T: Real>(mesh: &Mesh<T>, edges: &[usize], anchor: Option<usize>) -> bool {
    if edges.is_empty() {
        return true;
    }
    let mut nodes: Vec<usize> = edges.iter().flat_map(|&e| mesh.edge(e)).collect();
    nodes.sort_unstable();
    nodes.dedup();
    if let Some(a) = anchor {
        if nodes.binary_search(&a).is_err() {
            return false;
        }
    }
    let index = |n: usize| nodes.binary_search(&n).expect("edge node listed");
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut groups = nodes.len();
    for &e in edges {
        let [a, b] = mesh.edge(e);
        let (ra, rb) = (root(&mut parent, index(a)), root(&mut parent, index(b)));
        if ra != rb {
            parent[ra] = rb;
            groups -= 1;
        }
    }
    groups == 1
}

/// Every continuum `K ⊇ k_prev` with at most `budget` extra edges, listed
/// by subset size and then in combination order.
fn enumerate<T: Real>(mesh: &Mesh<T>, k_prev: &CrackSet<T>, eligible: &[usize], budget: usize) -> Result<Vec<CrackSet<T>>> {
    let mut out = vec![k_prev.clone()];
    if k_prev.is_empty() {
        out.extend((0..mesh.node_count()).map(CrackSet::point));
    }
    let anchor = if k_prev.edge_count() == 0 { k_prev.point_node() } else { None };
    for size in 1..=budget.min(eligible.len()) {
        for subset in eligible.iter().copied().combinations(size) {
            let mut edges = k_prev.edges().to_vec();
            edges.extend(subset);
            edges.sort_unstable();
            if connected(mesh, &edges, anchor) {
                out.push(CrackSet::from_edges(mesh, edges)?);
            }
        }
    }
    Ok(out)
}

/// Tie-break total order: energies compared with a tolerance window, then
/// edge count, edge tuple and seed node. The window comparison is made
/// against the table minimum so that the order is a strict total order.
fn rank<T: Real>(rows: &[TableRow<T>]) -> Vec<usize> {
    let tol = |floor: T| T::tie_tolerance() * (T::one() + floor.abs());
    let min_total = rows.iter().map(|r| r.energies.total).fold(T::infinity(), T::min);
    let tied: Vec<usize> =
        (0..rows.len()).filter(|&i| rows[i].energies.total - min_total <= tol(min_total)).collect();
    let min_surface = tied.iter().map(|&i| rows[i].energies.surface).fold(T::infinity(), T::min);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let class = |i: usize| -> u8 {
        let r = &rows[i];
        if r.energies.total - min_total > tol(min_total) {
            2
        } else if r.energies.surface - min_surface > tol(min_surface) {
            1
        } else {
            0
        }
    };
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&rows[a], &rows[b]);
        class(a)
            .cmp(&class(b))
            .then_with(|| match class(a) {
                0 => Ordering::Equal,
                _ => ra.energies.total.partial_cmp(&rb.energies.total).unwrap_or(Ordering::Equal),
            })
            .then_with(|| ra.crack.edge_count().cmp(&rb.crack.edge_count()))
            .then_with(|| ra.crack.edges().cmp(rb.crack.edges()))
            .then_with(|| ra.crack.point_node().cmp(&rb.crack.point_node()))
    });
    order
}

/// Exact minimiser of `E(g, K)` over continua `K ⊇ k_prev` with at most
/// `max_extra_edges` added edges.
pub fn brute_force_min<T: Real>(
    mesh: &Mesh<T>,
    bp: &BoundaryPartition<T>,
    g: &[T],
    k_prev: &CrackSet<T>,
    max_extra_edges: usize,
    keep_table: bool,
) -> Result<OracleResult<T>> {
    if !k_prev.is_continuum(mesh)? {
        return Err(Error::InvalidCrack("previous crack is not connected".into()));
    }
    let eligible = eligible_edges(mesh, k_prev, max_extra_edges);
    let estimate = candidate_estimate(eligible.len(), max_extra_edges);
    if estimate > CANDIDATE_LIMIT {
        return Err(Error::BudgetExceeded { estimate, limit: CANDIDATE_LIMIT });
    }
    let family = enumerate(mesh, k_prev, &eligible, max_extra_edges)?;
    let rows: Vec<TableRow<T>> = family
        .into_par_iter()
        .map(|crack| {
            let energies = match crack.point_node() {
                Some(_) => total_energy(mesh, bp, g, &CrackSet::empty())?,
                None => total_energy(mesh, bp, g, &crack)?,
            };
            Ok(TableRow { crack, energies })
        })
        .collect::<Result<_>>()?;
    let best = rank(&rows)[0];
    Ok(OracleResult {
        crack: rows[best].crack.clone(),
        energies: rows[best].energies,
        candidates: rows.len(),
        eligible_edges: eligible.len(),
        table: keep_table.then_some(rows),
    })
}

impl<T: Real> OracleResult<T> {
    /// Table rows sorted by the tie-break order, best first.
    pub fn ranked(&self) -> Option<Vec<&TableRow<T>>> {
        let rows = self.table.as_ref()?;
        Some(rank(rows).into_iter().map(|i| &rows[i]).collect())
    }
}

/// Arclength derivative of `E(g, ·)` along an ordered growth path: central
/// difference `(E_{k+1} − E_{k−1}) / (ℓ_k + ℓ_{k+1})` around the prefix of
/// `k` edges, one-sided at either end.
pub fn fd_energy_derivative<T: Real>(
    mesh: &Mesh<T>,
    bp: &BoundaryPartition<T>,
    g: &[T],
    path: &[usize],
    at_index: usize,
) -> Result<T> {
    if path.is_empty() || at_index > path.len() {
        return Err(Error::Precondition(format!("prefix {at_index} of a path with {} edges", path.len())));
    }
    let prefix = |k: usize| -> Result<CrackSet<T>> {
        let c = CrackSet::from_edges(mesh, path[..k].iter().copied())?;
        if !c.is_continuum(mesh)? {
            return Err(Error::InvalidCrack(format!("path prefix of {k} edges is not connected")));
        }
        Ok(c)
    };
    let energy = |k: usize| -> Result<T> { Ok(total_energy(mesh, bp, g, &prefix(k)?)?.total) };
    let lo = at_index.saturating_sub(1);
    let hi = (at_index + 1).min(path.len());
    let span: T = path[lo..hi].iter().map(|&e| mesh.edge_length(e)).sum();
    Ok((energy(hi)? - energy(lo)?) / span)
}

/// Same crack and energies within `1e-10`.
pub fn verify_step_against_oracle<T: Real>(step: &StepOutcome<T>, oracle: &OracleResult<T>) -> bool {
    let tol = T::lit(1e-10);
    step.crack == oracle.crack
        && (step.energies.total - oracle.energies.total).abs() <= tol
        && (step.energies.bulk - oracle.energies.bulk).abs() <= tol
}
