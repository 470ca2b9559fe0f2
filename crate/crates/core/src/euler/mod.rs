//! Concave maximization principle for the pressure of incompressible Euler
//! flows: among time-dependent fields `q`, the pressure `p` of a short
//! enough geodesic maximizes `int int q + int J_q[g_{t0}(x), g_{t1}(x)] dx`.

mod domain;
mod field;
mod functional;
mod path;

pub use domain::{ConvexDomain, SpatialQuadrature};
pub use field::{random_perturbation, smallness_check, PressureField, Smallness};
pub use path::{path_action_min, path_action_min_with, ActionPath, PathOptions};
pub use functional::{
    functional_value, maximizer_margin, midpoint_concavity_defect, rigid_rotation_solution, Functional, MaximizerReport, ParticleEndpoints,
    RotationFlow, RotationSetup,
};
