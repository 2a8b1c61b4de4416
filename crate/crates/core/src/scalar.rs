//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar the mesh, solver and fitting code are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances that depend on the precision
/// (conjugate-gradient stopping rule, tie-break windows) live here so that
/// algorithms never hard-code an `f64` epsilon.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Relative residual at which conjugate gradients stops.
    fn cg_tolerance() -> Self;

    /// Relative window inside which two energies are considered tied.
    fn tie_tolerance() -> Self;

    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    fn cg_tolerance() -> Self {
        1e-6
    }
    fn tie_tolerance() -> Self {
        1e-5
    }
}

impl Real for f64 {
    fn cg_tolerance() -> Self {
        1e-10
    }
    fn tie_tolerance() -> Self {
        1e-12
    }
}

/// Point or vector in the plane.
pub type Vec2<T> = [T; 2];

#[inline]
pub fn sub<T: Real>(a: Vec2<T>, b: Vec2<T>) -> Vec2<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot<T: Real>(a: Vec2<T>, b: Vec2<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross<T: Real>(a: Vec2<T>, b: Vec2<T>) -> T {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm<T: Real>(a: Vec2<T>) -> T {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist<T: Real>(a: Vec2<T>, b: Vec2<T>) -> T {
    norm(sub(a, b))
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance<T: Real>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> T {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == T::zero() {
        return dist(p, a);
    }
    let s = (dot(sub(p, a), ab) / len2).max(T::zero()).min(T::one());
    dist(p, [a[0] + s * ab[0], a[1] + s * ab[1]])
}
