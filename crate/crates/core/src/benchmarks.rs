//! Reference problems shared by tests, the acceptance suite and the CLI.

use crate::crack::CrackSet;
use crate::domain::{assign_boundary, assign_boundary_by, build_disk_mesh, build_rect_mesh, rect_sides, BoundaryKind, BoundaryPartition, Mesh};
use crate::error::{Error, Result};
use crate::scalar::{dist, Real, Vec2};
use crate::sif::{singular_mode, TipFrame};
use crate::solver::{solve_equilibrium, split_mesh, CrackedMesh, LoadTrace};

/// Crack through the mesh nodes on the segment `[a, b]`, which must follow
/// mesh edges.
pub fn segment_crack<T: Real>(mesh: &Mesh<T>, a: Vec2<T>, b: Vec2<T>) -> Result<CrackSet<T>> {
    let len = dist(a, b);
    let tol = T::lit(1e-9) * (T::one() + len);
    let mut on: Vec<(T, usize)> = (0..mesh.node_count())
        .filter_map(|n| {
            let p = mesh.node(n);
            let (da, db) = (dist(p, a), dist(p, b));
            (da + db <= len + tol).then_some((da, n))
        })
        .collect();
    on.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite distances"));
    if on.len() < 2 {
        return Err(Error::InvalidGeometry("segment does not contain two mesh nodes".into()));
    }
    let pairs: Vec<[usize; 2]> = on.windows(2).map(|w| [w[0].1, w[1].1]).collect();
    CrackSet::from_node_pairs(mesh, &pairs)
}

/// Node at `p`.
pub fn node_at<T: Real>(mesh: &Mesh<T>, p: Vec2<T>) -> Result<usize> {
    let tol = T::lit(1e-9) * (T::one() + mesh.h());
    (0..mesh.node_count())
        .find(|&n| dist(mesh.node(n), p) <= tol)
        .ok_or_else(|| Error::InvalidGeometry(format!("no mesh node at ({}, {})", p[0], p[1])))
}

/// Unit square, Dirichlet on the left and right sides, Neumann elsewhere.
pub fn two_sided_square<T: Real>(h: T) -> Result<(Mesh<T>, BoundaryPartition<T>)> {
    use BoundaryKind::*;
    let mesh = build_rect_mesh(T::one(), T::one(), h)?;
    let bp = assign_boundary(&mesh, &rect_sides(T::one(), T::one(), Neumann, Dirichlet, Neumann, Dirichlet))?;
    Ok((mesh, bp))
}

/// Nodal field `λ·x`.
pub fn linear_profile<T: Real>(mesh: &Mesh<T>, lambda: T) -> Vec<T> {
    mesh.nodes().iter().map(|p| lambda * p[0]).collect()
}

/// Unit disk with a straight slit from `(−1, 0)` to the centre, Dirichlet on
/// the circle.
#[derive(Debug, Clone)]
pub struct SlitDisk<T: Real = f64> {
    pub mesh: Mesh<T>,
    pub bp: BoundaryPartition<T>,
    pub crack: CrackSet<T>,
    pub tip: usize,
}

pub const SLIT_TANGENT: [f64; 2] = [1.0, 0.0];

impl<T: Real> SlitDisk<T> {
    pub fn new(h: T) -> Result<Self> {
        let mesh = build_disk_mesh(T::one(), h)?;
        let bp = assign_boundary_by(&mesh, |_| BoundaryKind::Dirichlet)?;
        let crack = segment_crack(&mesh, [-T::one(), T::zero()], [T::zero(), T::zero()])?;
        let tip = node_at(&mesh, [T::zero(), T::zero()])?;
        Ok(Self { mesh, bp, crack, tip })
    }

    pub fn tangent(&self) -> Vec2<T> {
        [T::lit(SLIT_TANGENT[0]), T::lit(SLIT_TANGENT[1])]
    }

    /// Frame at the centre for an annulus `[r_in, r_out]`.
    pub fn frame(&self, r_in: T, r_out: T) -> Result<TipFrame<T>> {
        TipFrame::new(&self.mesh, self.tip, self.tangent(), r_in, r_out)
    }

    /// `a·√(2ρ/π)sin(θ/2)` about the origin for dof `d` of `cm`, with the
    /// face of split nodes on the slit taken from their sector.
    pub fn mode_three(&self, cm: &CrackedMesh<'_, T>, d: usize, a: T) -> T {
        let frame = TipFrame { node: self.tip, tip: [T::zero(), T::zero()], tangent: self.tangent(), r_in: T::zero(), r_out: T::one() };
        let (rho, theta) = frame.polar(cm.mesh().node(cm.dof_node(d)), Some(cm.sector_direction(d)));
        a * singular_mode(rho, theta)
    }
}

/// Rectangle `[0,1]²` with a pre-crack along `y = 1/2` from the Neumann left
/// side to `(x0, 1/2)`; top, right and bottom carry `t·λ·√(2ρ/π)sin(θ/2)`
/// about `(x0, 1/2)`, extended into the interior harmonically.
#[derive(Debug, Clone)]
pub struct StraightGrowth<T: Real = f64> {
    pub mesh: Mesh<T>,
    pub bp: BoundaryPartition<T>,
    pub k0: CrackSet<T>,
    pub load: LoadTrace<T>,
}

impl<T: Real> StraightGrowth<T> {
    pub fn new(h: T, x0: T, lambda: T) -> Result<Self> {
        use BoundaryKind::*;
        let one = T::one();
        let half = T::lit(0.5);
        let mesh = build_rect_mesh(one, one, h)?;
        let bp = assign_boundary(&mesh, &rect_sides(one, one, Dirichlet, Dirichlet, Dirichlet, Neumann))?;
        let k0 = segment_crack(&mesh, [T::zero(), half], [x0, half])?;
        let trace: Vec<T> = mesh
            .nodes()
            .iter()
            .map(|&p| {
                let d = [p[0] - x0, p[1] - half];
                lambda * singular_mode(d[0].hypot(d[1]), d[1].atan2(d[0]))
            })
            .collect();
        let cm = split_mesh(&mesh, &CrackSet::empty())?;
        let profile = solve_equilibrium(&cm, &bp, &trace)?.into_values();
        Ok(Self { load: LoadTrace::ramp(profile), mesh, bp, k0 })
    }
}
