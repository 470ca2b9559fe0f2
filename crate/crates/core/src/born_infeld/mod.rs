mod field;
mod solver;
mod state;

pub use field::{conservation_drift, galilean_boost, manifold_residual, AbiField1D, Profile};
pub use solver::{fv_step, max_wave_speed, AbiSolver, SpeedWarning, DEFAULT_CFL};
pub use state::{
    abi_flux, bi_embed, energy_u, entropy_hessian, flux_jacobian, hull_residual, jacobian_spectral_radius, jacobian_spectrum, state_manifold_residual, wave_speed_bound,
    AbiState, Vec3, COMPONENTS,
};
