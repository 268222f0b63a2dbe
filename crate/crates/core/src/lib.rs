//! Spatially homogeneous relativistic Fokker-Planck equation: a Jüttner-exact
//! finite-volume solver, exact classical kernels, a stochastic particle
//! oracle and the functional-inequality rate machinery.

pub mod error;
pub mod fv;
pub mod green;
pub mod kinetic;
pub mod particles;
pub mod quad;
pub mod rates;
pub mod special;

pub use error::{Error, Result};
pub use kinetic::{DistributionField, JuttnerMeasure, MomentumGrid3, PhysicalParams, Representation};
