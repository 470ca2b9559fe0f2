//! Discrete optimal transport for the quadratic cost: exact couplings,
//! convex potentials and the checks that tie them to the weak
//! Monge-Ampere formulation.

mod dual;
pub mod io;
mod measure;
mod multiscale;
mod network_simplex;
mod plan;

pub use dual::{
    check_cyclical_monotonicity, evaluate_j, legendre_transform, solve_discrete_ot, CycleReport, OtSolution,
    PotentialSamples, FEASIBILITY_TOLERANCE, MASS_TOLERANCE,
};
pub use measure::{DiscreteMeasure, PointCloud, MERGE_TOLERANCE};
pub use plan::{
    barycentric_map, pushforward_residual, PlanEntry, PushforwardForm, TransportPlan, MARGINAL_TOLERANCE,
};
