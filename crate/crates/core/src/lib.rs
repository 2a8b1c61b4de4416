//! Quasi-static brittle fracture in anti-plane shear.
//!
//! The crate evolves a crack `K(t)` in a planar elastic body by incremental
//! global minimisation of `E(g, K) = ‖∇u‖² + H¹(K)` over edge-connected
//! cracks containing the previous one, and audits the resulting trajectory:
//! energy balance, a-priori bounds, monotone-load stability and Griffith's
//! criterion through mode-III stress intensity factors.
//!
//! All numerical types are generic over [`Real`] (`f32` or `f64`); the
//! `*64`/`*32` aliases below fix the scalar.

// `!(a > b)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod crack;
pub mod domain;
pub mod error;
pub mod evolution;
pub mod oracle;
pub mod scalar;
pub mod sif;
pub mod solver;

pub use crack::CrackSet;
pub use domain::{BoundaryKind, BoundaryPartition, Mesh};
pub use error::{Error, Result};
pub use scalar::Real;
pub use solver::{CrackedMesh, DisplacementField, Energies, LoadTrace};

pub type Mesh64 = Mesh<f64>;
pub type Mesh32 = Mesh<f32>;
pub type CrackSet64 = CrackSet<f64>;
pub type CrackSet32 = CrackSet<f32>;
pub type BoundaryPartition64 = BoundaryPartition<f64>;
pub type BoundaryPartition32 = BoundaryPartition<f32>;
pub type LoadTrace64 = LoadTrace<f64>;
pub type LoadTrace32 = LoadTrace<f32>;

