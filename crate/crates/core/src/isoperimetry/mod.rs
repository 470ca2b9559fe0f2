//! Numerical check of the transport proof of the isoperimetric inequality.

mod chain;
mod domain;

pub use chain::{gromov_chain_check, ChainReport, SYMMETRY_TOLERANCE};
pub use domain::{isoperimetric_bound, unit_ball_volume, DomainGrid, IsoperimetricBound, Shape};
