//! Numerical realizations of four convex reformulations of nonlinear PDEs.
//!
//! * [`ot`]: discrete optimal transport with convex potentials (weak
//!   Monge-Ampere) and the [`isoperimetry`] chain built on it.
//! * [`euler`]: the concave pressure functional of incompressible Euler flows.
//! * [`scl`]: multidimensional scalar conservation laws lifted to a monotone
//!   level field and evolved by transport plus monotone projection, with a
//!   Godunov reference solver.
//! * [`born_infeld`]: the augmented 10-component Born-Infeld system in one
//!   space dimension.

pub mod error;
pub mod born_infeld;
pub mod cli;
pub mod euler;
pub mod isoperimetry;
pub mod ot;
pub mod scl;

pub use error::{Error, Result};
