use thiserror::Error;

/// Errors raised by the solver, the oracles and the rate machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// `e^{-xi}` underflows; the unscaled quantity cannot be represented.
    #[error("overflow guard: xi = {xi} exceeds the supported range (xi <= {limit})")]
    Overflow { xi: f64, limit: f64 },

    /// `t a(2 beta, t) - a(beta, t)^2` is not positive at this resolution.
    #[error("kernel denominator vanished at t = {t} (beta = {beta})")]
    KernelDenominator { t: f64, beta: f64 },

    #[error("kernel calibration failed: {0}")]
    Calibration(String),

    #[error("grid tail: {0}")]
    GridTail(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("negative density after {halvings} step halvings (min h = {min:e}, max h = {max:e})")]
    Negativity { halvings: u32, min: f64, max: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("normalization: <h>_mu = {mean} deviates from 1")]
    Normalization { mean: f64 },

    #[error("fit window too short: {points} usable points (need at least {required})")]
    WindowTooShort { points: usize, required: usize },

    #[error("particle blow-up at step {step}: |p| = {norm:e} exceeds {limit:e}")]
    BlowUp { step: u64, norm: f64, limit: f64 },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("quadrature failed: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;
