//! Planar pairwise symmetric four-body problem (PPS4BP) with regularized
//! simultaneous binary collisions.
//!
//! The crate computes the one-parameter family of symmetric periodic
//! collision orbits of the PPS4BP over the mass ratio `m ∈ (0, 1]` and
//! classifies the linear stability of each orbit. Collisions are removed by
//! a Levi-Civita-type canonical transformation plus time rescaling
//! ([`model`]), orbits are produced by symmetry-constrained Newton shooting
//! over one-eighth of the fixed period `2π` ([`orbit`]), and the
//! characteristic multipliers come from a symmetry factorization of the
//! monodromy matrix that only needs the fundamental matrix at a quarter of
//! the regularized period, `Y(π/4)` ([`reduction`]).
//!
//! The [`cli`] module drives mass sweeps and writes the CSV outputs; the
//! `pps4bp` binary exposes it as subcommands.

pub mod cli;
pub mod integrate;
pub mod model;
pub mod orbit;
pub mod reduction;
pub mod spectrum;

/// 4-vector of `f64`.
pub type Vec4 = nalgebra::SVector<f64, 4>;
/// 8-vector of `f64`.
pub type Vec8 = nalgebra::SVector<f64, 8>;
/// 3×3 matrix of `f64`.
pub type Mat3 = nalgebra::SMatrix<f64, 3, 3>;
/// 4×4 matrix of `f64`.
pub type Mat4 = nalgebra::SMatrix<f64, 4, 4>;
/// 8×8 matrix of `f64`.
pub type Mat8 = nalgebra::SMatrix<f64, 8, 8>;

/// Fixed step length used throughout: one eighth-period of `π/4` split into
/// 50000 steps.
pub const DEFAULT_STEP: f64 = std::f64::consts::PI / 200_000.0;

/// Regularized time of the first simultaneous binary collision; the orbit
/// period is `2π`, collisions occur at odd multiples of `π/4`.
pub const QUARTER_PERIOD: f64 = std::f64::consts::FRAC_PI_4;

/// Full regularized period of every orbit in the family.
pub const PERIOD: f64 = std::f64::consts::TAU;
