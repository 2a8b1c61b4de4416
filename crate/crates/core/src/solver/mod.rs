//! Equilibrium of the cracked body and its energies.
//!
//! The displacement minimises `∫_{Ω\K} |∇v|²` among P1 fields on the mesh
//! split along the crack, with `v = g` on the Dirichlet part of the boundary
//! not covered by the crack. Crack faces carry no constraint, which is the
//! discrete traction-free condition.

mod load;
pub mod sparse;

pub use load::{LoadTrace, Separable};

use crate::crack::CrackSet;
use crate::domain::{BoundaryPartition, Mesh};
use crate::error::{Error, Result};
use crate::scalar::{dot, Real, Vec2};
use sparse::{pcg, CsrMatrix};

/// Mesh whose nodes are duplicated along a crack.
///
/// Each node gets one degree of freedom per angular sector delimited by the
/// crack edges incident to it: crack tips keep one dof, nodes inside a crack
/// path get two, branch points of degree `d` get `d`.
#[derive(Debug, Clone)]
pub struct CrackedMesh<'m, T: Real = f64> {
    mesh: &'m Mesh<T>,
    crack: CrackSet<T>,
    node_dof_start: Vec<usize>,
    dof_node: Vec<usize>,
    corner_dofs: Vec<[usize; 3]>,
}

/// Splits the mesh along a continuum crack.
pub fn split_mesh<'m, T: Real>(mesh: &'m Mesh<T>, crack: &CrackSet<T>) -> Result<CrackedMesh<'m, T>> {
    if !crack.is_continuum(mesh)? {
        return Err(Error::InvalidCrack("crack is not connected".into()));
    }
    let n = mesh.node_count();
    let mut node_dof_start = Vec::with_capacity(n + 1);
    let mut dof_node = Vec::with_capacity(n);
    let mut corner_dofs = vec![[usize::MAX; 3]; mesh.triangles().len()];

    for node in 0..n {
        node_dof_start.push(dof_node.len());
        let tris = mesh.node_triangles(node);
        let cut = mesh.node_edges(node).iter().any(|&e| crack.contains_edge(e));
        let sector_of: Vec<usize> = if !cut {
            vec![0; tris.len()]
        } else {
            sectors(mesh, crack, node)
        };
        let sectors = sector_of.iter().copied().max().map_or(0, |m| m + 1);
        let base = dof_node.len();
        for _ in 0..sectors.max(1) {
            dof_node.push(node);
        }
        for (k, &t) in tris.iter().enumerate() {
            let local = mesh.triangles()[t].iter().position(|&v| v == node).expect("node in triangle");
            corner_dofs[t][local] = base + sector_of[k];
        }
    }
    node_dof_start.push(dof_node.len());
    Ok(CrackedMesh { mesh, crack: crack.clone(), node_dof_start, dof_node, corner_dofs })
}

/// Groups the triangles around `node` into sectors: two triangles share a
/// sector when they share a non-crack edge through `node`. Sectors are
/// numbered in order of their smallest triangle position.
fn sectors<T: Real>(mesh: &Mesh<T>, crack: &CrackSet<T>, node: usize) -> Vec<usize> {
    let tris = mesh.node_triangles(node);
    let mut parent: Vec<usize> = (0..tris.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let nx = p[c];
            p[c] = r;
            c = nx;
        }
        r
    }
    for &e in mesh.node_edges(node) {
        if crack.contains_edge(e) {
            continue;
        }
        let shared: Vec<usize> = mesh
            .edge_triangles(e)
            .iter()
            .filter_map(|t| tris.iter().position(|x| x == t))
            .collect();
        if shared.len() == 2 {
            let (a, b) = (find(&mut parent, shared[0]), find(&mut parent, shared[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut label = vec![usize::MAX; tris.len()];
    let mut next = 0;
    (0..tris.len())
        .map(|k| {
            let r = find(&mut parent, k);
            if label[r] == usize::MAX {
                label[r] = next;
                next += 1;
            }
            label[r]
        })
        .collect()
}

impl<'m, T: Real> CrackedMesh<'m, T> {
    pub fn mesh(&self) -> &'m Mesh<T> {
        self.mesh
    }
    pub fn crack(&self) -> &CrackSet<T> {
        &self.crack
    }
    pub fn dof_count(&self) -> usize {
        self.dof_node.len()
    }
    pub fn dof_node(&self, dof: usize) -> usize {
        self.dof_node[dof]
    }
    /// Dofs of `node`; one unless the node is split.
    pub fn node_dofs(&self, node: usize) -> std::ops::Range<usize> {
        self.node_dof_start[node]..self.node_dof_start[node + 1]
    }
    /// Index of `dof` among the dofs of its node.
    pub fn dof_side(&self, dof: usize) -> usize {
        dof - self.node_dof_start[self.dof_node[dof]]
    }
    pub fn corner_dofs(&self, t: usize) -> [usize; 3] {
        self.corner_dofs[t]
    }

    /// Mean direction from the dof's node into the sector it represents.
    pub fn sector_direction(&self, dof: usize) -> Vec2<T> {
        let node = self.dof_node[dof];
        let p = self.mesh.node(node);
        let mut acc = [T::zero(); 2];
        for &t in self.mesh.node_triangles(node) {
            if self.corner_dofs[t].contains(&dof) {
                let c = self.mesh.centroid(t);
                acc[0] += c[0] - p[0];
                acc[1] += c[1] - p[1];
            }
        }
        acc
    }

    /// True when the Dirichlet constraint of `node` is removed by the crack:
    /// every Dirichlet boundary edge at the node is a crack edge.
    pub fn is_released(&self, bp: &BoundaryPartition<T>, node: usize) -> bool {
        let mut dirichlet_edges = self
            .mesh
            .node_edges(node)
            .iter()
            .filter(|&&e| bp.is_dirichlet_edge(e))
            .peekable();
        dirichlet_edges.peek().is_some() && dirichlet_edges.all(|&e| self.crack.contains_edge(e))
    }

    /// Dirichlet-constrained dofs.
    pub fn constrained(&self, bp: &BoundaryPartition<T>) -> Vec<bool> {
        let mut out = vec![false; self.dof_count()];
        for node in 0..self.mesh.node_count() {
            if bp.is_dirichlet_node(node) && !self.is_released(bp, node) {
                for d in self.node_dofs(node) {
                    out[d] = true;
                }
            }
        }
        out
    }

    /// Lifts a nodal field to the dofs (all sides get the node value).
    pub fn lift(&self, nodal: &[T]) -> Vec<T> {
        self.dof_node.iter().map(|&n| nodal[n]).collect()
    }

    pub fn gradient(&self, t: usize, dof_values: &[T]) -> Vec2<T> {
        let (g, _) = self.mesh.shape_gradients(t);
        let c = self.corner_dofs[t];
        let mut out = [T::zero(); 2];
        for k in 0..3 {
            out[0] += g[k][0] * dof_values[c[k]];
            out[1] += g[k][1] * dof_values[c[k]];
        }
        out
    }

    /// `Σ_T area·∇a·∇b` for dof fields on this mesh.
    pub fn inner(&self, a: &[T], b: &[T]) -> T {
        (0..self.mesh.triangles().len())
            .map(|t| {
                let area = self.mesh.signed_area(t).abs();
                area * dot(self.gradient(t, a), self.gradient(t, b))
            })
            .sum()
    }

    /// Connected components of the split mesh, labelled per dof.
    pub fn components(&self) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.dof_count()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for c in &self.corner_dofs {
            for k in 1..3 {
                let (a, b) = (find(&mut parent, c[0]), find(&mut parent, c[k]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        (0..self.dof_count()).map(|d| find(&mut parent, d)).collect()
    }
}

/// Stopping rule for the linear solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<T> {
    pub tolerance: T,
    /// Iteration cap as a multiple of the number of free dofs.
    pub max_iter_per_dof: usize,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self { tolerance: T::cg_tolerance(), max_iter_per_dof: 50 }
    }
}

/// Equilibrium displacement on a cracked mesh.
#[derive(Debug, Clone)]
pub struct DisplacementField<'m, T: Real = f64> {
    cracked: CrackedMesh<'m, T>,
    values: Vec<T>,
    iterations: usize,
}

impl<'m, T: Real> DisplacementField<'m, T> {
    pub fn from_values(cracked: CrackedMesh<'m, T>, values: Vec<T>) -> Self {
        assert_eq!(values.len(), cracked.dof_count(), "one value per dof");
        Self { cracked, values, iterations: 0 }
    }
    pub fn cracked(&self) -> &CrackedMesh<'m, T> {
        &self.cracked
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn into_values(self) -> Vec<T> {
        self.values
    }
    pub fn iterations(&self) -> usize {
        self.iterations
    }
    pub fn gradient(&self, t: usize) -> Vec2<T> {
        self.cracked.gradient(t, &self.values)
    }

    /// `Σ_T area·|∇u|²`, i.e. `‖∇u‖²` with the normalisation `μ/2 = 1`.
    pub fn bulk_energy(&self) -> T {
        self.cracked.inner(&self.values, &self.values)
    }

    /// `2·(∇u | ∇ġ)` for a nodal load rate `ġ`.
    pub fn work_rate(&self, gdot: &[T]) -> T {
        let lifted = self.cracked.lift(gdot);
        T::lit(2.0) * self.cracked.inner(&self.values, &lifted)
    }

    /// `(node, side, value)` triples, the displacement dump format.
    pub fn dump(&self) -> Vec<(usize, usize, T)> {
        (0..self.values.len())
            .map(|d| (self.cracked.dof_node(d), self.cracked.dof_side(d), self.values[d]))
            .collect()
    }
}

/// Solves with nodal Dirichlet data `g`.
pub fn solve_equilibrium<'m, T: Real>(
    cm: &CrackedMesh<'m, T>,
    bp: &BoundaryPartition<T>,
    g: &[T],
) -> Result<DisplacementField<'m, T>> {
    solve_with(cm, bp, |d| g[cm.dof_node(d)], None, SolveOptions::default())
}

/// General solve: `data(dof)` gives the Dirichlet value of each dof (and the
/// starting guess of free dofs when no `warm` start is supplied). Components
/// of the split mesh without a constrained dof are set to zero.
pub fn solve_with<'m, T: Real>(
    cm: &CrackedMesh<'m, T>,
    bp: &BoundaryPartition<T>,
    data: impl Fn(usize) -> T,
    warm: Option<&[T]>,
    opts: SolveOptions<T>,
) -> Result<DisplacementField<'m, T>> {
    let ndof = cm.dof_count();
    let constrained = cm.constrained(bp);
    let comp = cm.components();
    let mut anchored = vec![false; ndof];
    for d in 0..ndof {
        if constrained[d] {
            anchored[comp[d]] = true;
        }
    }

    let mut values: Vec<T> = match warm {
        Some(w) => {
            assert_eq!(w.len(), ndof, "warm start has one value per dof");
            w.to_vec()
        }
        None => (0..ndof).map(&data).collect(),
    };
    for d in 0..ndof {
        if constrained[d] {
            values[d] = data(d);
        } else if !anchored[comp[d]] {
            values[d] = T::zero();
        }
    }
    let data_energy = if cfg!(debug_assertions) && warm.is_none() {
        Some(cm.inner(&values, &values))
    } else {
        None
    };

    let mut free_index = vec![usize::MAX; ndof];
    let mut free = Vec::new();
    for d in 0..ndof {
        if !constrained[d] && anchored[comp[d]] {
            free_index[d] = free.len();
            free.push(d);
        }
    }
    let mut iterations = 0;
    if !free.is_empty() {
        let mesh = cm.mesh();
        let mut triplets = Vec::with_capacity(9 * mesh.triangles().len());
        let mut rhs = vec![T::zero(); free.len()];
        for t in 0..mesh.triangles().len() {
            let (g, area) = mesh.shape_gradients(t);
            let area = area.abs();
            let c = cm.corner_dofs(t);
            for i in 0..3 {
                let fi = free_index[c[i]];
                if fi == usize::MAX {
                    continue;
                }
                for j in 0..3 {
                    let k = area * dot(g[i], g[j]);
                    let fj = free_index[c[j]];
                    if fj == usize::MAX {
                        rhs[fi] -= k * values[c[j]];
                    } else {
                        triplets.push((fi, fj, k));
                    }
                }
            }
        }
        let a = CsrMatrix::from_triplets(free.len(), triplets);
        let mut x: Vec<T> = free.iter().map(|&d| values[d]).collect();
        let report = pcg(&a, &rhs, &mut x, opts.tolerance, opts.max_iter_per_dof * free.len())?;
        iterations = report.iterations;
        for (k, &d) in free.iter().enumerate() {
            values[d] = x[k];
        }
    }
    if let Some(e0) = data_energy {
        let e = cm.inner(&values, &values);
        debug_assert!(
            e <= e0 + T::lit(1e-8) * (T::one() + e0),
            "compliance bound violated: {e} > {e0}"
        );
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure { iterations, residual: f64::NAN });
    }
    Ok(DisplacementField { cracked: cm.clone(), values, iterations })
}

/// Carries a solution over to another split of the same mesh by matching
/// triangle corners, for use as a warm start.
pub fn transfer<T: Real>(from: &DisplacementField<'_, T>, to: &CrackedMesh<'_, T>) -> Vec<T> {
    let mut out = vec![T::zero(); to.dof_count()];
    let mut seen = vec![false; to.dof_count()];
    for t in 0..to.mesh().triangles().len() {
        let (a, b) = (from.cracked.corner_dofs(t), to.corner_dofs(t));
        for k in 0..3 {
            if !seen[b[k]] {
                out[b[k]] = from.values[a[k]];
                seen[b[k]] = true;
            }
        }
    }
    out
}

/// Bulk, surface and total energy of a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies<T> {
    pub bulk: T,
    pub surface: T,
    pub total: T,
}

impl<T: Real> Energies<T> {
    pub fn new(bulk: T, surface: T) -> Self {
        Self { bulk, surface, total: bulk + surface }
    }
}

/// `E(g, K) = ‖∇u‖² + H¹(K)` with `u` the equilibrium for load `g`.
pub fn total_energy<T: Real>(
    mesh: &Mesh<T>,
    bp: &BoundaryPartition<T>,
    g: &[T],
    crack: &CrackSet<T>,
) -> Result<Energies<T>> {
    let cm = split_mesh(mesh, crack)?;
    let u = solve_equilibrium(&cm, bp, g)?;
    Ok(Energies::new(u.bulk_energy(), crack.length()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{assign_boundary, build_rect_mesh, rect_sides, BoundaryKind::*};

    fn vertical_cut(mesh: &Mesh<f64>, x: f64) -> CrackSet<f64> {
        let col: Vec<usize> = (0..mesh.node_count()).filter(|&n| (mesh.node(n)[0] - x).abs() < 1e-12).collect();
        let pairs: Vec<[usize; 2]> = col.windows(2).map(|w| [w[0], w[1]]).collect();
        CrackSet::from_node_pairs(mesh, &pairs).unwrap()
    }

    #[test]
    fn split_empty_crack() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let cm = split_mesh(&m, &CrackSet::empty()).unwrap();
        assert_eq!(cm.dof_count(), m.node_count());
    }

    #[test]
    fn split_interior_slit() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let k = CrackSet::from_node_pairs(&m, &[[11, 12], [12, 13]]).unwrap();
        let cm = split_mesh(&m, &k).unwrap();
        assert_eq!(cm.dof_count(), m.node_count() + 1);
        assert_eq!(cm.node_dofs(12).len(), 2);
        assert_eq!(cm.node_dofs(11).len(), 1);
        assert_eq!(cm.node_dofs(13).len(), 1);
    }

    #[test]
    fn split_full_vertical_cut() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let cm = split_mesh(&m, &vertical_cut(&m, 0.5)).unwrap();
        // 3 interior nodes and both boundary end nodes split
        assert_eq!(cm.dof_count(), 25 + 3 + 2);
        assert_eq!(cm.components().iter().collect::<std::collections::BTreeSet<_>>().len(), 2);
    }

    #[test]
    fn split_branch_point() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        // T junction at node 12
        let k = CrackSet::from_node_pairs(&m, &[[11, 12], [12, 13], [12, 17]]).unwrap();
        let cm = split_mesh(&m, &k).unwrap();
        assert_eq!(cm.node_dofs(12).len(), 3);
    }

    #[test]
    fn split_rejects_disconnected() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let k = CrackSet::from_node_pairs(&m, &[[6, 7], [17, 18]]).unwrap();
        assert!(matches!(split_mesh(&m, &k), Err(Error::InvalidCrack(_))));
    }

    #[test]
    fn linear_data_is_reproduced() {
        let m = build_rect_mesh(1.0, 1.0, 0.125).unwrap();
        let bp = assign_boundary(&m, &rect_sides(1.0, 1.0, Dirichlet, Dirichlet, Dirichlet, Dirichlet)).unwrap();
        let g: Vec<f64> = m.nodes().iter().map(|p| p[0]).collect();
        let cm = split_mesh(&m, &CrackSet::empty()).unwrap();
        let u = solve_equilibrium(&cm, &bp, &g).unwrap();
        for (d, v) in u.values().iter().enumerate() {
            assert!((v - m.node(cm.dof_node(d))[0]).abs() < 1e-12);
        }
        assert!((u.bulk_energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cut_decouples_sides() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let bp = assign_boundary(&m, &rect_sides(1.0, 1.0, Neumann, Dirichlet, Neumann, Dirichlet)).unwrap();
        let g: Vec<f64> = m.nodes().iter().map(|p| if p[0] > 0.5 { 1.0 } else { 0.0 }).collect();
        let k = vertical_cut(&m, 0.5);
        let cm = split_mesh(&m, &k).unwrap();
        let u = solve_equilibrium(&cm, &bp, &g).unwrap();
        assert!(u.bulk_energy() < 1e-20);
        let e = total_energy(&m, &bp, &g, &k).unwrap();
        assert!((e.surface - 1.0).abs() < 1e-12 && (e.total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn floating_component_is_zero() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let bp = assign_boundary(&m, &rect_sides(1.0, 1.0, Neumann, Neumann, Neumann, Dirichlet)).unwrap();
        let g = vec![3.0; m.node_count()];
        let cm = split_mesh(&m, &vertical_cut(&m, 0.5)).unwrap();
        let u = solve_equilibrium(&cm, &bp, &g).unwrap();
        for d in 0..cm.dof_count() {
            let x = m.node(cm.dof_node(d))[0];
            let right = x > 0.5 || (x == 0.5 && cm.sector_direction(d)[0] > 0.0);
            let expect = if right { 0.0 } else { 3.0 };
            assert!((u.values()[d] - expect).abs() < 1e-12, "dof {d}");
        }
    }

    #[test]
    fn bulk_energy_examples() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let cm = split_mesh(&m, &CrackSet::empty()).unwrap();
        let field = |f: &dyn Fn([f64; 2]) -> f64| {
            DisplacementField::from_values(cm.clone(), m.nodes().iter().map(|&p| f(p)).collect())
        };
        assert_eq!(field(&|_| 2.5).bulk_energy(), 0.0);
        assert!((field(&|p| p[0]).bulk_energy() - 1.0).abs() < 1e-12);
        assert!((field(&|p| p[0] + p[1]).bulk_energy() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_released_only_under_fully_cracked_edges() {
        let m = build_rect_mesh(1.0, 1.0, 0.5).unwrap();
        let bp = assign_boundary(&m, &rect_sides(1.0, 1.0, Neumann, Neumann, Neumann, Dirichlet)).unwrap();
        // left side nodes 0, 3, 6; only 3 is constrained (0 and 6 are separators)
        let half = CrackSet::from_node_pairs(&m, &[[0, 3]]).unwrap();
        assert!(!split_mesh(&m, &half).unwrap().is_released(&bp, 3));
        let full = CrackSet::from_node_pairs(&m, &[[0, 3], [3, 6]]).unwrap();
        assert!(split_mesh(&m, &full).unwrap().is_released(&bp, 3));
        let point = CrackSet::point(3);
        assert!(!split_mesh(&m, &point).unwrap().is_released(&bp, 3));
    }

    #[test]
    fn work_rate_examples() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let bp = assign_boundary(&m, &rect_sides(1.0, 1.0, Dirichlet, Dirichlet, Dirichlet, Dirichlet)).unwrap();
        let x: Vec<f64> = m.nodes().iter().map(|p| p[0]).collect();
        let t = 0.3;
        let g: Vec<f64> = x.iter().map(|v| t * v).collect();
        let cm = split_mesh(&m, &CrackSet::empty()).unwrap();
        let u = solve_equilibrium(&cm, &bp, &g).unwrap();
        assert!((u.work_rate(&x) - 2.0 * t).abs() < 1e-12);
        assert_eq!(u.work_rate(&vec![0.0; m.node_count()]), 0.0);
    }

    #[test]
    fn work_rate_vanishes_on_cut_square() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let bp = assign_boundary(&m, &rect_sides(1.0, 1.0, Neumann, Dirichlet, Neumann, Dirichlet)).unwrap();
        let g: Vec<f64> = m.nodes().iter().map(|p| if p[0] > 0.5 { 1.0 } else { 0.0 }).collect();
        let cm = split_mesh(&m, &vertical_cut(&m, 0.5)).unwrap();
        let u = solve_equilibrium(&cm, &bp, &g).unwrap();
        let gdot: Vec<f64> = m.nodes().iter().map(|p| p[0] + 0.5 * p[1]).collect();
        assert!(u.work_rate(&gdot).abs() < 1e-12);
    }

    #[test]
    fn transfer_preserves_unsplit_values() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let bp = assign_boundary(&m, &rect_sides(1.0, 1.0, Dirichlet, Dirichlet, Dirichlet, Dirichlet)).unwrap();
        let g: Vec<f64> = m.nodes().iter().map(|p| p[0] * p[1]).collect();
        let base = split_mesh(&m, &CrackSet::empty()).unwrap();
        let u = solve_equilibrium(&base, &bp, &g).unwrap();
        let k = CrackSet::from_node_pairs(&m, &[[11, 12], [12, 13]]).unwrap();
        let cm = split_mesh(&m, &k).unwrap();
        let w = transfer(&u, &cm);
        for (d, &wd) in w.iter().enumerate() {
            assert_eq!(wd, u.values()[cm.dof_node(d)]);
        }
        let warm = solve_with(&cm, &bp, |d| g[cm.dof_node(d)], Some(&w), SolveOptions::default()).unwrap();
        let cold = solve_equilibrium(&cm, &bp, &g).unwrap();
        assert!((warm.bulk_energy() - cold.bulk_energy()).abs() < 1e-10);
    }
}
