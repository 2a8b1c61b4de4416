//! Triangulated planar domains and their Dirichlet/Neumann boundary partition.
//!
//! A [`Mesh`] owns node coordinates and positively oriented triangles; edges
//! are derived from the triangles and numbered in lexicographic order of
//! their `(low, high)` node pair, so edge ids induce a deterministic order on
//! crack sets. The boundary is the set of edges shared by exactly one
//! triangle and is expected to form one simple closed cycle.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::{cross, dist, sub, Real, Vec2};

/// Triangulated domain.
#[derive(Debug, Clone)]
pub struct Mesh<T: Real = f64> {
    nodes: Vec<Vec2<T>>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_lengths: Vec<T>,
    edge_triangles: Vec<Vec<usize>>,
    node_edges: Vec<Vec<usize>>,
    node_triangles: Vec<Vec<usize>>,
    boundary_edges: Vec<usize>,
    on_boundary: Vec<bool>,
    edge_lookup: HashMap<(usize, usize), usize>,
    h: T,
}

/// A broken mesh invariant reported by [`Mesh::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveArea { triangle: usize, area: f64 },
    ZeroLengthEdge { edge: usize },
    OverSharedEdge { edge: usize, triangles: usize },
    IsolatedNode { node: usize },
    BoundaryNotCycle { detail: String },
}

impl<T: Real> Mesh<T> {
    /// Builds the edge structure of a triangulation. Only index errors are
    /// fatal here; geometric and topological defects are left for
    /// [`Mesh::validate`].
    pub fn new(nodes: Vec<Vec2<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&n| n >= nodes.len()) {
                return Err(Error::InvalidReference(format!(
                    "triangle {t} references a node outside 0..{}",
                    nodes.len()
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidReference(format!("triangle {t} repeats a node")));
            }
        }

        let mut pairs: Vec<[usize; 2]> = triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| [a.min(b), a.max(b)])
            .collect();
        pairs.sort_unstable();
        pairs.dedup();

        let edge_lookup: HashMap<(usize, usize), usize> =
            pairs.iter().enumerate().map(|(i, e)| ((e[0], e[1]), i)).collect();
        let edge_lengths = pairs.iter().map(|e| dist(nodes[e[0]], nodes[e[1]])).collect::<Vec<_>>();

        let mut edge_triangles = vec![Vec::new(); pairs.len()];
        let mut node_triangles = vec![Vec::new(); nodes.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_triangles[edge_lookup[&(a.min(b), a.max(b))]].push(t);
                node_triangles[tri[k]].push(t);
            }
        }
        let mut node_edges = vec![Vec::new(); nodes.len()];
        for (i, e) in pairs.iter().enumerate() {
            node_edges[e[0]].push(i);
            node_edges[e[1]].push(i);
        }
        let boundary_edges: Vec<usize> =
            (0..pairs.len()).filter(|&e| edge_triangles[e].len() == 1).collect();
        let mut on_boundary = vec![false; nodes.len()];
        for &e in &boundary_edges {
            on_boundary[pairs[e][0]] = true;
            on_boundary[pairs[e][1]] = true;
        }
        let h = edge_lengths.iter().copied().fold(T::zero(), T::max);

        Ok(Self {
            nodes,
            triangles,
            edges: pairs,
            edge_lengths,
            edge_triangles,
            node_edges,
            node_triangles,
            boundary_edges,
            on_boundary,
            edge_lookup,
            h,
        })
    }

    /// Overrides the nominal element size.
    pub fn with_nominal_size(mut self, h: T) -> Self {
        self.h = h;
        self
    }

    pub fn nodes(&self) -> &[Vec2<T>] {
        &self.nodes
    }
    pub fn node(&self, i: usize) -> Vec2<T> {
        self.nodes[i]
    }
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
    pub fn edge_length(&self, e: usize) -> T {
        self.edge_lengths[e]
    }
    pub fn edge_triangles(&self, e: usize) -> &[usize] {
        &self.edge_triangles[e]
    }
    /// Edges incident to a node, in increasing id order.
    pub fn node_edges(&self, n: usize) -> &[usize] {
        &self.node_edges[n]
    }
    pub fn node_triangles(&self, n: usize) -> &[usize] {
        &self.node_triangles[n]
    }
    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }
    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_triangles[e].len() == 1
    }
    pub fn is_boundary_node(&self, n: usize) -> bool {
        self.on_boundary[n]
    }
    pub fn h(&self) -> T {
        self.h
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&(a.min(b), a.max(b))).copied()
    }

    /// The node of edge `e` other than `n`.
    pub fn opposite(&self, e: usize, n: usize) -> usize {
        let [a, b] = self.edges[e];
        if a == n {
            b
        } else {
            a
        }
    }

    pub fn edge_midpoint(&self, e: usize) -> Vec2<T> {
        let [a, b] = self.edges[e];
        let half = T::lit(0.5);
        [
            (self.nodes[a][0] + self.nodes[b][0]) * half,
            (self.nodes[a][1] + self.nodes[b][1]) * half,
        ]
    }

    /// Signed area, positive for counterclockwise triangles.
    pub fn signed_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        cross(sub(self.nodes[b], self.nodes[a]), sub(self.nodes[c], self.nodes[a])) * T::lit(0.5)
    }

    pub fn centroid(&self, t: usize) -> Vec2<T> {
        let [a, b, c] = self.triangles[t];
        let third = T::one() / T::lit(3.0);
        [
            (self.nodes[a][0] + self.nodes[b][0] + self.nodes[c][0]) * third,
            (self.nodes[a][1] + self.nodes[b][1] + self.nodes[c][1]) * third,
        ]
    }

    /// Gradients of the three P1 hat functions of triangle `t` and its area.
    pub fn shape_gradients(&self, t: usize) -> ([Vec2<T>; 3], T) {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        let twice = cross(sub(pb, pa), sub(pc, pa));
        let inv = T::one() / twice;
        let g = [
            [(pb[1] - pc[1]) * inv, (pc[0] - pb[0]) * inv],
            [(pc[1] - pa[1]) * inv, (pa[0] - pc[0]) * inv],
            [(pa[1] - pb[1]) * inv, (pb[0] - pa[0]) * inv],
        ];
        (g, twice * T::lit(0.5))
    }

    /// Gradient of the P1 interpolant of a nodal field on triangle `t`.
    pub fn field_gradient(&self, t: usize, field: &[T]) -> Vec2<T> {
        let (g, _) = self.shape_gradients(t);
        let tri = self.triangles[t];
        let mut out = [T::zero(); 2];
        for k in 0..3 {
            out[0] += g[k][0] * field[tri[k]];
            out[1] += g[k][1] * field[tri[k]];
        }
        out
    }

    /// `‖∇f‖²` of the P1 interpolant of a nodal field.
    pub fn dirichlet_energy(&self, field: &[T]) -> T {
        (0..self.triangles.len())
            .map(|t| {
                let g = self.field_gradient(t, field);
                self.signed_area(t).abs() * (g[0] * g[0] + g[1] * g[1])
            })
            .sum()
    }

    pub fn total_area(&self) -> T {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Reports every broken invariant; an empty list means the mesh is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for t in 0..self.triangles.len() {
            let area = self.signed_area(t);
            if !(area > T::zero()) {
                out.push(Violation::NonPositiveArea { triangle: t, area: area.to_f64_lossy() });
            }
        }
        for (e, len) in self.edge_lengths.iter().enumerate() {
            if !(*len > T::zero()) {
                out.push(Violation::ZeroLengthEdge { edge: e });
            }
        }
        for (e, tris) in self.edge_triangles.iter().enumerate() {
            if tris.len() > 2 {
                out.push(Violation::OverSharedEdge { edge: e, triangles: tris.len() });
            }
        }
        for (n, tris) in self.node_triangles.iter().enumerate() {
            if tris.is_empty() {
                out.push(Violation::IsolatedNode { node: n });
            }
        }
        if let Err(e) = self.boundary_cycle() {
            out.push(Violation::BoundaryNotCycle { detail: e.to_string() });
        }
        out
    }

    /// Boundary nodes in counterclockwise order, starting at the
    /// lexicographically smallest boundary node, together with the boundary
    /// edge leaving each of them.
    pub fn boundary_cycle(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        if self.boundary_edges.is_empty() {
            return Err(Error::InvalidGeometry("mesh has no boundary edges".into()));
        }
        // Directed boundary edges inherit the orientation of their triangle.
        let mut next: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for &e in &self.boundary_edges {
            let t = self.edge_triangles[e][0];
            let tri = self.triangles[t];
            let [a, b] = self.edges[e];
            let forward = (0..3).any(|k| tri[k] == a && tri[(k + 1) % 3] == b);
            let (from, to) = if forward { (a, b) } else { (b, a) };
            *degree.entry(a).or_default() += 1;
            *degree.entry(b).or_default() += 1;
            if next.insert(from, (to, e)).is_some() {
                return Err(Error::InvalidGeometry(format!(
                    "boundary node {from} has more than one outgoing boundary edge"
                )));
            }
        }
        if let Some((n, d)) = degree.iter().find(|(_, &d)| d != 2) {
            return Err(Error::InvalidGeometry(format!("boundary node {n} has boundary degree {d}")));
        }
        let start = *degree
            .keys()
            .min_by(|&&a, &&b| {
                let (pa, pb) = (self.nodes[a], self.nodes[b]);
                pa[0].partial_cmp(&pb[0])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(pa[1].partial_cmp(&pb[1]).unwrap_or(std::cmp::Ordering::Equal))
                    .then(a.cmp(&b))
            })
            .expect("non-empty boundary");
        let mut cycle = vec![start];
        let mut cycle_edges = Vec::new();
        let mut cur = start;
        loop {
            let &(to, e) = next.get(&cur).ok_or_else(|| {
                Error::InvalidGeometry(format!("boundary chain breaks at node {cur}"))
            })?;
            cycle_edges.push(e);
            if to == start {
                break;
            }
            if cycle.len() > self.boundary_edges.len() {
                return Err(Error::InvalidGeometry("boundary walk does not close".into()));
            }
            cycle.push(to);
            cur = to;
        }
        if cycle_edges.len() != self.boundary_edges.len() {
            return Err(Error::InvalidGeometry(format!(
                "boundary splits into several cycles ({} of {} edges reached)",
                cycle_edges.len(),
                self.boundary_edges.len()
            )));
        }
        Ok((cycle, cycle_edges))
    }

    /// Sum of the boundary edge lengths.
    pub fn perimeter(&self) -> T {
        self.boundary_edges.iter().map(|&e| self.edge_lengths[e]).sum()
    }
}

/// Structured right-triangle mesh of `[0, width] × [0, height]`.
///
/// Nodes are numbered row-major (`id = j·(nx+1) + i`) and every cell is split
/// by the diagonal from its lower-left to its upper-right corner.
pub fn build_rect_mesh<T: Real>(width: T, height: T, h: T) -> Result<Mesh<T>> {
    if !(width > T::zero() && height > T::zero() && h > T::zero()) {
        return Err(Error::InvalidGeometry("rectangle dimensions and h must be positive".into()));
    }
    if h > width.min(height) {
        return Err(Error::InvalidGeometry("h exceeds the smaller rectangle side".into()));
    }
    let cells = |len: T| -> usize {
        let slack = T::lit(1e-9);
        ((len / h) - slack).ceil().to_usize().unwrap_or(1).max(1)
    };
    let (nx, ny) = (cells(width), cells(height));
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([
                width * T::from_usize_lossy(i) / T::from_usize_lossy(nx),
                height * T::from_usize_lossy(j) / T::from_usize_lossy(ny),
            ]);
        }
    }
    let triangles = grid_triangles(nx, ny);
    let dx = width / T::from_usize_lossy(nx);
    let dy = height / T::from_usize_lossy(ny);
    Ok(Mesh::new(nodes, triangles)?.with_nominal_size(dx.max(dy)))
}

fn grid_triangles(nx: usize, ny: usize) -> Vec<[usize; 3]> {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    tris
}

/// Mesh of the disk of radius `radius` centred at the origin.
///
/// A uniform grid on `[-R, R]²` is kept as is inside `[-R/2, R/2]²` and
/// blended radially onto the circle outside it. Grid lines through the
/// origin stay straight, so slits along the coordinate axes follow mesh
/// edges and the inner block is a translation-invariant grid of size `h`.
pub fn build_disk_mesh<T: Real>(radius: T, h: T) -> Result<Mesh<T>> {
    if !(radius > T::zero() && h > T::zero()) || h > radius {
        return Err(Error::InvalidGeometry("disk radius and h must be positive with h ≤ R".into()));
    }
    let two = T::lit(2.0);
    let mut n = ((two * radius / h) - T::lit(1e-9)).ceil().to_usize().unwrap_or(2).max(2);
    // keep the origin and the inner-block boundary on grid lines
    if !n.is_multiple_of(4) {
        n += 4 - n % 4;
    }
    let step = two * radius / T::from_usize_lossy(n);
    let half = radius / two;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = -radius + step * T::from_usize_lossy(i);
            let y = -radius + step * T::from_usize_lossy(j);
            let m = x.abs().max(y.abs());
            if m <= half {
                nodes.push([x, y]);
            } else {
                let w = (m - half) / half;
                let r = x.hypot(y);
                let s = (T::one() - w) + w * m / r;
                nodes.push([x * s, y * s]);
            }
        }
    }
    Ok(Mesh::new(nodes, grid_triangles(n, n))?.with_nominal_size(step))
}

/// Boundary condition type of a boundary arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Labeled arclength interval `[start, end]` along the boundary cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryInterval<T: Real = f64> {
    pub start: T,
    pub end: T,
    pub kind: BoundaryKind,
}

impl<T: Real> BoundaryInterval<T> {
    pub fn new(start: T, end: T, kind: BoundaryKind) -> Self {
        Self { start, end, kind }
    }
}

/// Intervals for the four sides of `[0, w] × [0, h]`, in boundary order
/// (bottom, right, top, left) starting from the origin.
pub fn rect_sides<T: Real>(
    width: T,
    height: T,
    bottom: BoundaryKind,
    right: BoundaryKind,
    top: BoundaryKind,
    left: BoundaryKind,
) -> Vec<BoundaryInterval<T>> {
    let p1 = width;
    let p2 = width + height;
    let p3 = width + height + width;
    let p4 = p3 + height;
    vec![
        BoundaryInterval::new(T::zero(), p1, bottom),
        BoundaryInterval::new(p1, p2, right),
        BoundaryInterval::new(p2, p3, top),
        BoundaryInterval::new(p3, p4, left),
    ]
}

/// Split of `∂Ω` into Dirichlet arcs, Neumann arcs and the separator nodes
/// between them.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPartition<T: Real = f64> {
    cycle_nodes: Vec<usize>,
    cycle_edges: Vec<usize>,
    arclength: Vec<T>,
    perimeter: T,
    edge_kind: Vec<Option<BoundaryKind>>,
    dirichlet_arcs: Vec<Vec<usize>>,
    neumann_arcs: Vec<Vec<usize>>,
    separator_nodes: Vec<usize>,
    dirichlet_node: Vec<bool>,
}

/// Labels boundary edges by the interval containing their midpoint
/// arclength. Arclength starts at the lexicographically smallest boundary
/// node and runs counterclockwise.
pub fn assign_boundary<T: Real>(
    mesh: &Mesh<T>,
    intervals: &[BoundaryInterval<T>],
) -> Result<BoundaryPartition<T>> {
    let (cycle_nodes, cycle_edges) = mesh.boundary_cycle()?;
    let mut arclength = Vec::with_capacity(cycle_nodes.len() + 1);
    let mut s = T::zero();
    arclength.push(s);
    for &e in &cycle_edges {
        s += mesh.edge_length(e);
        arclength.push(s);
    }
    let perimeter = s;

    if intervals.is_empty() {
        return Err(Error::InvalidPartition("no boundary intervals given".into()));
    }
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap_or(std::cmp::Ordering::Equal));
    let tol = T::lit(1e-9) * perimeter.max(T::one());
    if sorted[0].start.abs() > tol {
        return Err(Error::InvalidPartition(format!(
            "gap: boundary [0, {}) is not covered",
            sorted[0].start
        )));
    }
    for w in sorted.windows(2) {
        if w[1].start > w[0].end + tol {
            return Err(Error::InvalidPartition(format!("gap between {} and {}", w[0].end, w[1].start)));
        }
        if w[1].start < w[0].end - tol {
            return Err(Error::InvalidPartition(format!(
                "overlap: [{}, {}] and [{}, {}]",
                w[0].start, w[0].end, w[1].start, w[1].end
            )));
        }
    }
    for iv in &sorted {
        if !(iv.end > iv.start) {
            return Err(Error::InvalidPartition(format!("empty interval [{}, {}]", iv.start, iv.end)));
        }
    }
    let last = sorted.last().expect("non-empty");
    if (last.end - perimeter).abs() > tol {
        return Err(Error::InvalidPartition(format!(
            "intervals end at {} but the perimeter is {}",
            last.end, perimeter
        )));
    }

    let half = T::lit(0.5);
    let kinds: Vec<BoundaryKind> = (0..cycle_edges.len())
        .map(|k| {
            let mid = (arclength[k] + arclength[k + 1]) * half;
            sorted
                .iter()
                .find(|iv| mid >= iv.start - tol && mid <= iv.end + tol)
                .map(|iv| iv.kind)
                .expect("intervals cover the boundary")
        })
        .collect();
    Ok(BoundaryPartition::from_cycle_kinds(mesh, cycle_nodes, cycle_edges, arclength, kinds))
}

/// Labels every boundary edge with `kind_of(midpoint)`.
pub fn assign_boundary_by<T: Real>(
    mesh: &Mesh<T>,
    kind_of: impl Fn(Vec2<T>) -> BoundaryKind,
) -> Result<BoundaryPartition<T>> {
    let (cycle_nodes, cycle_edges) = mesh.boundary_cycle()?;
    let mut arclength = vec![T::zero()];
    let mut s = T::zero();
    for &e in &cycle_edges {
        s += mesh.edge_length(e);
        arclength.push(s);
    }
    let kinds = cycle_edges.iter().map(|&e| kind_of(mesh.edge_midpoint(e))).collect();
    Ok(BoundaryPartition::from_cycle_kinds(mesh, cycle_nodes, cycle_edges, arclength, kinds))
}

impl<T: Real> BoundaryPartition<T> {
    fn from_cycle_kinds(
        mesh: &Mesh<T>,
        cycle_nodes: Vec<usize>,
        cycle_edges: Vec<usize>,
        arclength: Vec<T>,
        kinds: Vec<BoundaryKind>,
    ) -> Self {
        let m = cycle_edges.len();
        let mut edge_kind = vec![None; mesh.edge_count()];
        for (k, &e) in cycle_edges.iter().enumerate() {
            edge_kind[e] = Some(kinds[k]);
        }

        let mut dirichlet_arcs = Vec::new();
        let mut neumann_arcs = Vec::new();
        let mut separator_nodes = Vec::new();
        // rotate so that the walk starts at a label change, if any
        let first_change = (0..m).find(|&k| kinds[k] != kinds[(k + m - 1) % m]);
        match first_change {
            None => {
                let arc = cycle_edges.clone();
                match kinds[0] {
                    BoundaryKind::Dirichlet => dirichlet_arcs.push(arc),
                    BoundaryKind::Neumann => neumann_arcs.push(arc),
                }
            }
            Some(start) => {
                let mut k = 0;
                while k < m {
                    let idx = (start + k) % m;
                    let kind = kinds[idx];
                    separator_nodes.push(cycle_nodes[idx]);
                    let mut run = Vec::new();
                    while k < m && kinds[(start + k) % m] == kind {
                        run.push(cycle_edges[(start + k) % m]);
                        k += 1;
                    }
                    match kind {
                        BoundaryKind::Dirichlet => dirichlet_arcs.push(run),
                        BoundaryKind::Neumann => neumann_arcs.push(run),
                    }
                }
            }
        }
        separator_nodes.sort_unstable();
        separator_nodes.dedup();

        let mut dirichlet_node = vec![false; mesh.node_count()];
        for arc in &dirichlet_arcs {
            for &e in arc {
                let [a, b] = mesh.edge(e);
                dirichlet_node[a] = true;
                dirichlet_node[b] = true;
            }
        }
        for &n in &separator_nodes {
            dirichlet_node[n] = false;
        }
        let perimeter = *arclength.last().expect("arclength has the start entry");

        Self {
            cycle_nodes,
            cycle_edges,
            arclength,
            perimeter,
            edge_kind,
            dirichlet_arcs,
            neumann_arcs,
            separator_nodes,
            dirichlet_node,
        }
    }

    pub fn dirichlet_arcs(&self) -> &[Vec<usize>] {
        &self.dirichlet_arcs
    }
    pub fn neumann_arcs(&self) -> &[Vec<usize>] {
        &self.neumann_arcs
    }
    pub fn separator_nodes(&self) -> &[usize] {
        &self.separator_nodes
    }
    pub fn cycle_nodes(&self) -> &[usize] {
        &self.cycle_nodes
    }
    pub fn cycle_edges(&self) -> &[usize] {
        &self.cycle_edges
    }
    /// Arclength of each cycle node; the last entry is the perimeter.
    pub fn arclength(&self) -> &[T] {
        &self.arclength
    }
    pub fn perimeter(&self) -> T {
        self.perimeter
    }
    pub fn edge_kind(&self, e: usize) -> Option<BoundaryKind> {
        self.edge_kind[e]
    }
    pub fn is_dirichlet_edge(&self, e: usize) -> bool {
        self.edge_kind[e] == Some(BoundaryKind::Dirichlet)
    }
    /// True for nodes of `∂_D Ω` (separators excluded).
    pub fn is_dirichlet_node(&self, n: usize) -> bool {
        self.dirichlet_node[n]
    }
}

/// Writes the plain-text mesh format: a `nodes N triangles T` header, `N`
/// lines `x y`, then `T` lines `i j k` with 0-based node ids.
pub fn write_mesh<T: Real, W: Write>(mesh: &Mesh<T>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "nodes {} triangles {}", mesh.node_count(), mesh.triangles().len())?;
    for p in mesh.nodes() {
        writeln!(out, "{} {}", p[0], p[1])?;
    }
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

/// Reads the format written by [`write_mesh`].
pub fn read_mesh<T: Real, R: BufRead>(input: R) -> Result<Mesh<T>> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
    let io_err = |line: usize, e: std::io::Error| Error::Parse { line, message: e.to_string() };

    let (line, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty mesh file".into() })?;
    let header = header.map_err(|e| io_err(line, e))?;
    let words: Vec<&str> = header.split_whitespace().collect();
    let (n, t) = match words.as_slice() {
        ["nodes", n, "triangles", t] => (
            n.parse::<usize>().map_err(|e| Error::Parse { line, message: format!("node count: {e}") })?,
            t.parse::<usize>()
                .map_err(|e| Error::Parse { line, message: format!("triangle count: {e}") })?,
        ),
        _ => {
            return Err(Error::Parse {
                line,
                message: "expected header `nodes N triangles T`".into(),
            })
        }
    };

    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, text) = lines.next().ok_or(Error::Parse { line: 0, message: "missing node line".into() })?;
        let text = text.map_err(|e| io_err(line, e))?;
        let vals: Vec<f64> = text
            .split_whitespace()
            .map(|w| w.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line, message: format!("coordinate: {e}") })?;
        if vals.len() != 2 {
            return Err(Error::Parse { line, message: "expected `x y`".into() });
        }
        nodes.push([T::lit(vals[0]), T::lit(vals[1])]);
    }
    let mut tris = Vec::with_capacity(t);
    for _ in 0..t {
        let (line, text) =
            lines.next().ok_or(Error::Parse { line: 0, message: "missing triangle line".into() })?;
        let text = text.map_err(|e| io_err(line, e))?;
        let ids: Vec<usize> = text
            .split_whitespace()
            .map(|w| w.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line, message: format!("node index: {e}") })?;
        if ids.len() != 3 {
            return Err(Error::Parse { line, message: "expected `i j k`".into() });
        }
        tris.push([ids[0], ids[1], ids[2]]);
    }
    Mesh::new(nodes, tris)
}

#[cfg(test)]
mod tests {
    use super::BoundaryKind::{Dirichlet as D, Neumann as N};
    use super::*;

    #[test]
    fn rect_mesh_counts() {
        let m = build_rect_mesh(1.0, 1.0, 0.5).unwrap();
        assert_eq!((m.node_count(), m.triangles().len(), m.edge_count()), (9, 8, 16));
        let m = build_rect_mesh(1.0, 1.0, 1.0).unwrap();
        assert_eq!((m.node_count(), m.triangles().len()), (4, 2));
        let m = build_rect_mesh(2.0, 1.0, 0.5).unwrap();
        assert_eq!((m.node_count(), m.triangles().len()), (15, 16));
    }

    #[test]
    fn rect_mesh_rejects_bad_dimensions() {
        assert!(matches!(build_rect_mesh(0.0, 1.0, 0.5), Err(Error::InvalidGeometry(_))));
        assert!(matches!(build_rect_mesh(1.0, -1.0, 0.5), Err(Error::InvalidGeometry(_))));
        assert!(matches!(build_rect_mesh(1.0, 1.0, 0.0), Err(Error::InvalidGeometry(_))));
        assert!(matches!(build_rect_mesh(1.0, 0.5, 0.75), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn rect_mesh_node_order_is_row_major() {
        let m = build_rect_mesh(2.0, 1.0, 0.5).unwrap();
        assert_eq!(m.node(0), [0.0, 0.0]);
        assert_eq!(m.node(4), [2.0, 0.0]);
        assert_eq!(m.node(5), [0.0, 0.5]);
        assert_eq!(m.node(14), [2.0, 1.0]);
    }

    #[test]
    fn rect_area_and_perimeter() {
        for &(w, h, s) in &[(1.0f64, 1.0, 0.25), (2.0, 1.0, 0.1), (0.7, 1.3, 0.05)] {
            let m = build_rect_mesh(w, h, s).unwrap();
            assert!(((m.total_area() - w * h) / (w * h)).abs() < 1e-12);
            let p = 2.0 * (w + h);
            assert!(((m.perimeter() - p) / p).abs() < 1e-12);
            assert!(m.validate().is_empty());
        }
    }

    #[test]
    fn validate_flags_inverted_triangle() {
        let m = build_rect_mesh(1.0, 1.0, 0.5).unwrap();
        let mut tris = m.triangles().to_vec();
        tris[3].swap(1, 2);
        let bad = Mesh::new(m.nodes().to_vec(), tris).unwrap();
        let v = bad.validate();
        assert!(v.iter().any(|x| matches!(x, Violation::NonPositiveArea { triangle: 3, .. })), "{v:?}");
    }

    #[test]
    fn validate_flags_dangling_piece() {
        // a triangle hanging off the square's corner (1,1) shares only that node
        let m = build_rect_mesh(1.0, 1.0, 1.0).unwrap();
        let mut nodes = m.nodes().to_vec();
        nodes.push([2.0, 1.0]);
        nodes.push([1.5, 2.0]);
        let mut tris = m.triangles().to_vec();
        tris.push([3, 4, 5]);
        let bad = Mesh::new(nodes, tris).unwrap();
        let v = bad.validate();
        assert!(v.iter().any(|x| matches!(x, Violation::BoundaryNotCycle { .. })), "{v:?}");
    }

    #[test]
    fn boundary_cycle_starts_at_origin_ccw() {
        let m = build_rect_mesh(1.0, 1.0, 0.5).unwrap();
        let (nodes, _) = m.boundary_cycle().unwrap();
        assert_eq!(nodes, vec![0, 1, 2, 5, 8, 7, 6, 3]);
    }

    #[test]
    fn partition_all_dirichlet() {
        let m = build_rect_mesh(1.0, 1.0, 0.5).unwrap();
        let bp = assign_boundary(&m, &rect_sides(1.0, 1.0, D, D, D, D)).unwrap();
        assert!(bp.neumann_arcs().is_empty());
        assert!(bp.separator_nodes().is_empty());
        assert_eq!(bp.dirichlet_arcs().len(), 1);
    }

    #[test]
    fn partition_left_dirichlet() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let bp = assign_boundary(&m, &rect_sides(1.0, 1.0, N, N, N, D)).unwrap();
        assert_eq!((bp.dirichlet_arcs().len(), bp.neumann_arcs().len()), (1, 1));
        assert_eq!(bp.separator_nodes(), &[0, 20]);
        assert!(!bp.is_dirichlet_node(0) && bp.is_dirichlet_node(5) && !bp.is_dirichlet_node(20));
    }

    #[test]
    fn partition_left_right_dirichlet() {
        let m = build_rect_mesh(1.0, 1.0, 0.5).unwrap();
        let bp = assign_boundary(&m, &rect_sides(1.0, 1.0, N, D, N, D)).unwrap();
        assert_eq!((bp.dirichlet_arcs().len(), bp.neumann_arcs().len()), (2, 2));
        assert_eq!(bp.separator_nodes().len(), 4);
    }

    #[test]
    fn partition_rejects_gaps_and_overlaps() {
        let m = build_rect_mesh(1.0, 1.0, 0.5).unwrap();
        let gap = [BoundaryInterval::new(0.0, 1.0, D), BoundaryInterval::new(1.5, 4.0, N)];
        assert!(matches!(assign_boundary(&m, &gap), Err(Error::InvalidPartition(_))));
        let overlap = [BoundaryInterval::new(0.0, 2.0, D), BoundaryInterval::new(1.5, 4.0, N)];
        assert!(matches!(assign_boundary(&m, &overlap), Err(Error::InvalidPartition(_))));
        let short = [BoundaryInterval::new(0.0, 3.0, D)];
        assert!(matches!(assign_boundary(&m, &short), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn partition_is_deterministic() {
        let m = build_rect_mesh(1.0, 0.5, 0.125).unwrap();
        let sides = rect_sides(1.0, 0.5, N, D, D, N);
        assert_eq!(assign_boundary(&m, &sides).unwrap(), assign_boundary(&m, &sides).unwrap());
    }

    #[test]
    fn disk_mesh_is_valid() {
        let m = build_disk_mesh(1.0, 1.0 / 16.0).unwrap();
        assert!(m.validate().is_empty(), "{:?}", m.validate());
        let area = m.total_area();
        assert!((area - std::f64::consts::PI).abs() < 0.02, "{area}");
        assert!(m.nodes().iter().any(|p| p == &[0.0, 0.0]));
        assert!(m.nodes().iter().any(|p| p == &[-1.0, 0.0]));
    }

    #[test]
    fn mesh_text_round_trip() {
        let m = build_rect_mesh(1.0, 0.5, 0.25).unwrap();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back: Mesh<f64> = read_mesh(&buf[..]).unwrap();
        assert_eq!(back.nodes(), m.nodes());
        assert_eq!(back.triangles(), m.triangles());
    }

    #[test]
    fn mesh_text_reports_line() {
        let text = "nodes 3 triangles 1\n0 0\n1 x\n0 1\n0 1 2\n";
        match read_mesh::<f64, _>(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_precision_mesh() {
        let m = build_rect_mesh(1.0f32, 1.0, 0.25).unwrap();
        assert!(m.validate().is_empty());
        assert!((m.total_area() - 1.0).abs() < 1e-6);
    }
}
