//! Discrete continua: connected crack sets made of mesh edges.
//!
//! A [`CrackSet`] is either empty, a single node (a zero-length point crack)
//! or a set of mesh edges. The admissible cracks of the time-stepping scheme
//! are the edge-connected ones; [`connected_supersets`] enumerates them
//! around a given crack.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::hash::{Hash, Hasher};

use crate::domain::Mesh;
use crate::error::{Error, Result};
use crate::scalar::{dist, norm, point_segment_distance, sub, Real, Vec2};

#[derive(Debug, Clone)]
pub struct CrackSet<T: Real = f64> {
    edges: Vec<usize>,
    point: Option<usize>,
    length: T,
}

impl<T: Real> PartialEq for CrackSet<T> {
    fn eq(&self, other: &Self) -> bool {
        self.edges == other.edges && self.point == other.point
    }
}
impl<T: Real> Eq for CrackSet<T> {}
impl<T: Real> Hash for CrackSet<T> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.edges.hash(state);
        self.point.hash(state);
    }
}

impl<T: Real> Default for CrackSet<T> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<T: Real> CrackSet<T> {
    pub fn empty() -> Self {
        Self { edges: Vec::new(), point: None, length: T::zero() }
    }

    /// Zero-length crack consisting of one node.
    pub fn point(node: usize) -> Self {
        Self { edges: Vec::new(), point: Some(node), length: T::zero() }
    }

    pub fn from_edges(mesh: &Mesh<T>, edges: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut edges: Vec<usize> = edges.into_iter().collect();
        edges.sort_unstable();
        edges.dedup();
        if let Some(&bad) = edges.iter().find(|&&e| e >= mesh.edge_count()) {
            return Err(Error::InvalidReference(format!("edge id {bad} not in mesh")));
        }
        let length = edges.iter().map(|&e| mesh.edge_length(e)).sum();
        Ok(Self { edges, point: None, length })
    }

    pub fn from_node_pairs(mesh: &Mesh<T>, pairs: &[[usize; 2]]) -> Result<Self> {
        let ids = pairs
            .iter()
            .map(|&[a, b]| {
                mesh.edge_id(a, b)
                    .ok_or_else(|| Error::InvalidReference(format!("({a},{b}) is not a mesh edge")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_edges(mesh, ids)
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }
    /// Node of a point crack.
    pub fn point_node(&self) -> Option<usize> {
        self.point
    }
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
    /// `H¹` measure: the summed length of the member edges.
    pub fn length(&self) -> T {
        self.length
    }
    /// True when the set contains no point at all.
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty() && self.point.is_none()
    }
    pub fn contains_edge(&self, e: usize) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    /// Nodes touched by the crack, sorted.
    pub fn nodes(&self, mesh: &Mesh<T>) -> Vec<usize> {
        let mut nodes: Vec<usize> = self.edges.iter().flat_map(|&e| mesh.edge(e)).collect();
        nodes.extend(self.point);
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Set inclusion of the underlying point sets.
    pub fn is_subset_of(&self, other: &Self, mesh: &Mesh<T>) -> bool {
        if !self.edges.iter().all(|&e| other.contains_edge(e)) {
            return false;
        }
        match self.point {
            None => true,
            Some(p) => other.point == Some(p) || other.edges.iter().any(|&e| mesh.edge(e).contains(&p)),
        }
    }

    pub fn with_edge(&self, mesh: &Mesh<T>, e: usize) -> Self {
        let mut edges = self.edges.clone();
        if let Err(pos) = edges.binary_search(&e) {
            edges.insert(pos, e);
        }
        Self { length: edges.iter().map(|&x| mesh.edge_length(x)).sum(), edges, point: None }
    }

    pub fn without_edge(&self, mesh: &Mesh<T>, e: usize) -> Self {
        let edges: Vec<usize> = self.edges.iter().copied().filter(|&x| x != e).collect();
        Self { length: edges.iter().map(|&x| mesh.edge_length(x)).sum(), edges, point: None }
    }

    /// Number of crack edges incident to `node`.
    pub fn degree(&self, mesh: &Mesh<T>, node: usize) -> usize {
        mesh.node_edges(node).iter().filter(|&&e| self.contains_edge(e)).count()
    }

    /// Sorted `(i, j)` node pairs, the serialized form of the crack.
    pub fn edge_pairs(&self, mesh: &Mesh<T>) -> Vec<[usize; 2]> {
        self.edges.iter().map(|&e| mesh.edge(e)).collect()
    }

    fn check_refs(&self, mesh: &Mesh<T>) -> Result<()> {
        if let Some(&bad) = self.edges.iter().find(|&&e| e >= mesh.edge_count()) {
            return Err(Error::InvalidReference(format!("edge id {bad} not in mesh")));
        }
        if let Some(p) = self.point {
            if p >= mesh.node_count() {
                return Err(Error::InvalidReference(format!("node id {p} not in mesh")));
            }
        }
        Ok(())
    }

    /// True iff the crack is a continuum: empty, a point, or an
    /// edge-connected set.
    pub fn is_continuum(&self, mesh: &Mesh<T>) -> Result<bool> {
        self.check_refs(mesh)?;
        if self.edges.len() <= 1 {
            return Ok(true);
        }
        let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
        fn find(parent: &mut BTreeMap<usize, usize>, x: usize) -> usize {
            let p = *parent.entry(x).or_insert(x);
            if p == x {
                return x;
            }
            let r = find(parent, p);
            parent.insert(x, r);
            r
        }
        for &e in &self.edges {
            let [a, b] = mesh.edge(e);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent.insert(ra, rb);
            }
        }
        let nodes: Vec<usize> = parent.keys().copied().collect();
        let root = find(&mut parent, nodes[0]);
        Ok(nodes.into_iter().all(|n| find(&mut parent, n) == root))
    }

    /// Crack tips: interior nodes of crack degree one, each with the unit
    /// vector pointing from its crack neighbour towards it.
    pub fn tips(&self, mesh: &Mesh<T>) -> Vec<(usize, Vec2<T>)> {
        let mut out = Vec::new();
        for n in self.nodes(mesh) {
            if mesh.is_boundary_node(n) {
                continue;
            }
            let incident: Vec<usize> =
                mesh.node_edges(n).iter().copied().filter(|&e| self.contains_edge(e)).collect();
            if incident.len() == 1 {
                let other = mesh.opposite(incident[0], n);
                let d = sub(mesh.node(n), mesh.node(other));
                let l = norm(d);
                out.push((n, [d[0] / l, d[1] / l]));
            }
        }
        out
    }

    /// Geometric point set of the crack.
    pub fn geometry(&self, mesh: &Mesh<T>) -> SegmentSet<T> {
        let mut segments: Vec<[Vec2<T>; 2]> =
            self.edges.iter().map(|&e| {
                let [a, b] = mesh.edge(e);
                [mesh.node(a), mesh.node(b)]
            }).collect();
        if let Some(p) = self.point {
            segments.push([mesh.node(p), mesh.node(p)]);
        }
        SegmentSet { segments }
    }
}

/// Capped Hausdorff distance between two cracks of the same mesh.
pub fn hausdorff_distance<T: Real>(a: &CrackSet<T>, b: &CrackSet<T>, mesh: &Mesh<T>) -> T {
    capped_hausdorff(&a.geometry(mesh), &b.geometry(mesh))
}

/// Finite union of closed segments; a degenerate segment is a point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SegmentSet<T: Real = f64> {
    pub segments: Vec<[Vec2<T>; 2]>,
}

impl<T: Real> SegmentSet<T> {
    /// Polyline through `points`.
    pub fn polyline(points: &[Vec2<T>]) -> Self {
        let segments = match points.len() {
            0 => Vec::new(),
            1 => vec![[points[0], points[0]]],
            _ => points.windows(2).map(|w| [w[0], w[1]]).collect(),
        };
        Self { segments }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn length(&self) -> T {
        self.segments.iter().map(|s| dist(s[0], s[1])).sum()
    }

    pub fn distance_to(&self, p: Vec2<T>) -> T {
        self.segments
            .iter()
            .map(|s| point_segment_distance(p, s[0], s[1]))
            .fold(T::infinity(), T::min)
    }

    /// `min_j max(d_j(p), d_j(q))`: an upper bound of `dist(·, self)` on `[p, q]`.
    fn convex_bound(&self, p: Vec2<T>, q: Vec2<T>) -> T {
        self.segments
            .iter()
            .map(|s| point_segment_distance(p, s[0], s[1]).max(point_segment_distance(q, s[0], s[1])))
            .fold(T::infinity(), T::min)
    }

    fn diameter_bound(&self) -> T {
        let mut lo = [T::infinity(); 2];
        let mut hi = [T::neg_infinity(); 2];
        for s in &self.segments {
            for p in s {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
        }
        (hi[0] - lo[0]).hypot(hi[1] - lo[1])
    }
}

struct Piece<T> {
    bound: T,
    s0: T,
    s1: T,
    f0: T,
    f1: T,
}
impl<T: Real> PartialEq for Piece<T> {
    fn eq(&self, o: &Self) -> bool {
        self.bound == o.bound
    }
}
impl<T: Real> Eq for Piece<T> {}
impl<T: Real> PartialOrd for Piece<T> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Real> Ord for Piece<T> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.bound.partial_cmp(&o.bound).unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// `sup_{x∈a} dist(x, b)` for non-empty sets.
///
/// Along a segment of `a`, the distance to each piece of `b` is convex, so
/// its maximum over a sub-interval sits at an end point; `dist(·, b)` is also
/// 1-Lipschitz. Both facts bound the maximum over a sub-interval, and
/// sub-intervals are refined best-bound-first until the bound is within
/// `1e-12·diam` of the best value found.
pub fn directed_hausdorff<T: Real>(a: &SegmentSet<T>, b: &SegmentSet<T>) -> T {
    let scale = a.diameter_bound().max(b.diameter_bound()).max(T::one());
    let tol = T::lit(1e-12) * scale;
    let half = T::lit(0.5);
    let mut best = T::zero();
    let mut heap = BinaryHeap::new();
    for seg in &a.segments {
        let len = dist(seg[0], seg[1]);
        let at = |s: T| [seg[0][0] + s * (seg[1][0] - seg[0][0]), seg[0][1] + s * (seg[1][1] - seg[0][1])];
        let bound = |s0: T, s1: T, f0: T, f1: T| {
            let convex = b.convex_bound(at(s0), at(s1));
            convex.min((f0 + f1 + (s1 - s0) * len) * half)
        };
        let (f0, f1) = (b.distance_to(seg[0]), b.distance_to(seg[1]));
        best = best.max(f0).max(f1);
        if len > T::zero() {
            heap.push(Piece { bound: bound(T::zero(), T::one(), f0, f1), s0: T::zero(), s1: T::one(), f0, f1 });
        }
        while let Some(p) = heap.pop() {
            if p.bound <= best + tol {
                heap.clear();
                break;
            }
            let sm = (p.s0 + p.s1) * half;
            let fm = b.distance_to(at(sm));
            best = best.max(fm);
            heap.push(Piece { bound: bound(p.s0, sm, p.f0, fm), s0: p.s0, s1: sm, f0: p.f0, f1: fm });
            heap.push(Piece { bound: bound(sm, p.s1, fm, p.f1), s0: sm, s1: p.s1, f0: fm, f1: p.f1 });
        }
    }
    best
}

/// `min{1, d_H(a, b)}` with `d_H(∅, ∅) = 0` and `d_H(∅, K) = 1` for `K ≠ ∅`.
pub fn capped_hausdorff<T: Real>(a: &SegmentSet<T>, b: &SegmentSet<T>) -> T {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => T::zero(),
        (true, false) | (false, true) => T::one(),
        _ => directed_hausdorff(a, b).max(directed_hausdorff(b, a)).min(T::one()),
    }
}

/// All continua `K ⊇ k0` obtained by adding at most `max_extra_edges` mesh
/// edges, ordered by (number of added edges, lexicographic edge ids).
///
/// For `k0 = ∅` the zeroth level also lists every single-node crack after
/// the empty set.
pub fn connected_supersets<T: Real>(
    k0: &CrackSet<T>,
    mesh: &Mesh<T>,
    max_extra_edges: usize,
) -> Result<Vec<CrackSet<T>>> {
    if !k0.is_continuum(mesh)? {
        return Err(Error::InvalidCrack("initial crack is not connected".into()));
    }
    let mut out = vec![k0.clone()];
    if k0.is_empty() {
        out.extend((0..mesh.node_count()).map(CrackSet::point));
    }
    if max_extra_edges == 0 {
        return Ok(out);
    }

    let first: BTreeSet<Vec<usize>> = if k0.edges.is_empty() {
        match k0.point {
            None => (0..mesh.edge_count()).map(|e| vec![e]).collect(),
            Some(p) => mesh.node_edges(p).iter().map(|&e| vec![e]).collect(),
        }
    } else {
        frontier(mesh, &k0.edges)
            .into_iter()
            .map(|e| {
                let mut s = k0.edges.clone();
                s.insert(s.binary_search(&e).unwrap_err(), e);
                s
            })
            .collect()
    };

    let mut level = first;
    for depth in 1..=max_extra_edges {
        out.extend(level.iter().map(|edges| CrackSet {
            length: edges.iter().map(|&e| mesh.edge_length(e)).sum(),
            edges: edges.clone(),
            point: None,
        }));
        if depth == max_extra_edges {
            break;
        }
        let mut next = BTreeSet::new();
        for set in &level {
            for e in frontier(mesh, set) {
                let mut s = set.clone();
                s.insert(s.binary_search(&e).unwrap_err(), e);
                next.insert(s);
            }
        }
        level = next;
    }
    Ok(out)
}

/// Edges outside `edges` sharing a node with it.
fn frontier<T: Real>(mesh: &Mesh<T>, edges: &[usize]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for &e in edges {
        for n in mesh.edge(e) {
            for &f in mesh.node_edges(n) {
                if edges.binary_search(&f).is_err() {
                    out.insert(f);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_rect_mesh;

    fn path(mesh: &Mesh<f64>, nodes: &[usize]) -> CrackSet<f64> {
        let pairs: Vec<[usize; 2]> = nodes.windows(2).map(|w| [w[0], w[1]]).collect();
        CrackSet::from_node_pairs(mesh, &pairs).unwrap()
    }

    #[test]
    fn lengths() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        assert_eq!(CrackSet::<f64>::empty().length(), 0.0);
        // three collinear horizontal edges on the row y = 0.5
        let k = path(&m, &[10, 11, 12, 13]);
        assert!((k.length() - 0.75).abs() < 1e-15);
        let m = build_rect_mesh(1.0, 1.0, 0.5).unwrap();
        let k = path(&m, &[3, 4, 1]);
        assert!((k.length() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn continuum_cases() {
        let m = build_rect_mesh(1.0, 1.0, 0.5).unwrap();
        assert!(CrackSet::<f64>::empty().is_continuum(&m).unwrap());
        assert!(CrackSet::<f64>::point(4).is_continuum(&m).unwrap());
        assert!(path(&m, &[3, 4, 5]).is_continuum(&m).unwrap());
        let e1 = m.edge_id(0, 1).unwrap();
        let e2 = m.edge_id(7, 8).unwrap();
        assert!(!CrackSet::from_edges(&m, [e1, e2]).unwrap().is_continuum(&m).unwrap());
    }

    #[test]
    fn continuum_rejects_unknown_edge() {
        let big = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let small = build_rect_mesh(1.0, 1.0, 1.0).unwrap();
        let k = CrackSet::from_edges(&big, [40]).unwrap();
        assert!(matches!(k.is_continuum(&small), Err(Error::InvalidReference(_))));
    }

    #[test]
    fn hausdorff_conventions() {
        let m = build_rect_mesh(4.0, 4.0, 1.0).unwrap();
        let e: CrackSet<f64> = CrackSet::empty();
        let k = path(&m, &[0, 1]);
        assert_eq!(hausdorff_distance(&e, &e, &m), 0.0);
        assert_eq!(hausdorff_distance(&e, &k, &m), 1.0);
        assert_eq!(hausdorff_distance(&k, &e, &m), 1.0);
        // nodes (0,0) and (3,4)
        let far = hausdorff_distance(&CrackSet::point(0), &CrackSet::point(4 * 5 + 3), &m);
        assert_eq!(far, 1.0);
    }

    #[test]
    fn hausdorff_of_parallel_segments() {
        let a = SegmentSet::polyline(&[[0.0, 0.0], [1.0, 0.0]]);
        let b = SegmentSet::polyline(&[[0.0, 0.3], [0.5, 0.3]]);
        // farthest point of a from b is (1,0): distance hypot(0.5, 0.3)
        let expected = 0.5f64.hypot(0.3);
        assert!((capped_hausdorff(&a, &b) - expected).abs() < 1e-10);
    }

    #[test]
    fn hausdorff_interior_maximum() {
        // the farthest point of `a` lies strictly inside it, between b's pieces
        let a = SegmentSet::polyline(&[[0.0, 0.0], [1.0, 0.0]]);
        let b = SegmentSet { segments: vec![[[0.0, 0.1], [0.0, 0.1]], [[1.0, 0.1], [1.0, 0.1]]] };
        let expected = 0.5f64.hypot(0.1);
        assert!((directed_hausdorff(&a, &b) - expected).abs() < 1e-10);
    }

    #[test]
    fn supersets_budget_zero() {
        let m = build_rect_mesh(1.0, 1.0, 0.5).unwrap();
        let k = path(&m, &[3, 4]);
        assert_eq!(connected_supersets(&k, &m, 0).unwrap(), vec![k]);
    }

    #[test]
    fn supersets_one_extra_interior_edge() {
        let m = build_rect_mesh(1.0, 1.0, 0.5).unwrap();
        let e = m.edge_id(4, 5).unwrap();
        let k = CrackSet::from_edges(&m, [e]).unwrap();
        // brute-force adjacency count: edges sharing a node with e, other than e
        let deg = (0..m.edge_count())
            .filter(|&f| f != e && m.edge(f).iter().any(|n| m.edge(e).contains(n)))
            .count();
        let all = connected_supersets(&k, &m, 1).unwrap();
        assert_eq!(all.len(), 1 + deg);
        assert_eq!(deg, 8);
    }

    #[test]
    fn supersets_from_empty_on_single_cell() {
        let m = build_rect_mesh(1.0, 1.0, 1.0).unwrap();
        let all = connected_supersets(&CrackSet::empty(), &m, 1).unwrap();
        // the empty set, 4 point seeds and 5 single edges
        assert_eq!(all.len(), 10);
        assert!(all[0].is_empty());
        assert!(all[1..5].iter().all(|k| k.point_node().is_some()));
        assert!(all[5..].iter().all(|k| k.edge_count() == 1));
    }

    #[test]
    fn supersets_rejects_disconnected_seed() {
        let m = build_rect_mesh(1.0, 1.0, 0.5).unwrap();
        let k = CrackSet::from_edges(&m, [m.edge_id(0, 1).unwrap(), m.edge_id(7, 8).unwrap()]).unwrap();
        assert!(matches!(connected_supersets(&k, &m, 1), Err(Error::InvalidCrack(_))));
    }

    #[test]
    fn tip_cases() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let interior = path(&m, &[11, 12, 13]);
        let tips = interior.tips(&m);
        assert_eq!(tips.len(), 2);
        assert!((tips[0].1[0] + tips[1].1[0]).abs() < 1e-15 && tips[0].1[0].abs() == 1.0);
        let from_boundary = path(&m, &[10, 11, 12]);
        assert_eq!(from_boundary.tips(&m).len(), 1);
        let square_loop = path(&m, &[6, 7, 12, 11, 6]);
        assert!(square_loop.tips(&m).is_empty());
    }

    #[test]
    fn subset_relation() {
        let m = build_rect_mesh(1.0, 1.0, 0.25).unwrap();
        let a = path(&m, &[11, 12]);
        let b = path(&m, &[11, 12, 13]);
        assert!(a.is_subset_of(&b, &m) && !b.is_subset_of(&a, &m));
        assert!(CrackSet::point(13).is_subset_of(&b, &m));
        assert!(!CrackSet::point(14).is_subset_of(&b, &m));
        assert!(CrackSet::empty().is_subset_of(&a, &m));
    }
}
