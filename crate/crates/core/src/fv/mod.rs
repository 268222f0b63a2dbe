//! Finite-volume solver for the spatially homogeneous relativistic equation
//! in `h = f/J` form, with implicit Euler stepping and spectral-gap extraction.

mod cg;
mod operator;
pub mod radial;
mod spectral;
mod step;

pub use cg::{pcg, CgStats};
pub use operator::{build_operator, DiscreteOperator, TAIL_WARNING};
pub use radial::{radial_solve, RadialGrid, RadialOperator, RadialTrajectory};
pub use spectral::{spectral_gap, spectral_gap_estimate, GapEstimate, GapOptions};
pub use step::{
    diagnostics, scheme_dissipation, solve, solve_with, step_implicit, step_implicit_counted, Diagnostics,
    SolveOptions, SolveTrajectory, StepCounters, CG_TOLERANCE, MAX_HALVINGS, NEGATIVITY_TOLERANCE,
};
