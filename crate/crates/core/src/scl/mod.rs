//! Scalar conservation laws `u_t + div F(u) = 0` on the periodic box, solved
//! through the monotone level-set lift, with a Godunov reference solver and
//! Kruzhkov entropy diagnostics.

mod entropy;
mod flux;
mod godunov;
mod grid;
pub mod io;
mod lift;
mod pav;

pub use entropy::entropy_residual;
pub use flux::{FluxLaw, ScalarFlux};
pub use godunov::{godunov_solve, godunov_trajectory, FiniteVolumeState, DEFAULT_CFL};
pub use grid::{l1_distance, CellAverages, Torus};
pub use lift::{
    evolve, evolve_with, lift, lift_band, monotone_project, reconstruct, reconstruct_band, transport_step, LevelField,
    LiftedScheme, LiftedSolver, DEFAULT_SCHEME,
};
pub use pav::pav;
