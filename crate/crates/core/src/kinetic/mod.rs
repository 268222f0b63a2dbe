//! Physical parameters, kinematics, equilibria and the momentum grid.

mod grid;
mod params;
pub mod partition;
pub mod physics;

pub use grid::{DistributionField, JuttnerMeasure, MomentumGrid3, Representation};
pub use params::PhysicalParams;
pub use partition::{
    partition_function, partition_function_bessel, partition_function_scaled, tail_cutoff, tail_fraction,
};
pub use physics::{
    diffusion_divergence, diffusion_gradient, diffusion_matrix, drift_field, juttner, log_juttner, log_u,
    maxwellian, metric, newtonian_residual, p0,
};
