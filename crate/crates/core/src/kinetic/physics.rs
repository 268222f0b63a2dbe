//! Relativistic kinematics, equilibria and the diffusion geometry.
//!
//! The diffusion matrix `D` and the Riemannian metric `g` are mutual
//! inverses. `D` has eigenvalue `mc/p0` on the plane orthogonal to `p` and
//! `p0/(mc)` along `p`.

use nalgebra::{Matrix3, Vector3};

use super::PhysicalParams;

/// `p0 = sqrt(m^2 c^2 + |p|^2)`.
pub fn p0(params: &PhysicalParams, p: &Vector3<f64>) -> f64 {
    p0_radial(params, p.norm())
}

pub fn p0_radial(params: &PhysicalParams, r: f64) -> f64 {
    params.mc().hypot(r)
}

/// `p0 - mc`, evaluated as `|p|^2 / (p0 + mc)` to avoid cancellation at large `c`.
pub fn kinetic_momentum(params: &PhysicalParams, r: f64) -> f64 {
    let mc = params.mc();
    r * r / (mc.hypot(r) + mc)
}

/// `ln J(p) = -theta c p0`.
pub fn log_juttner(params: &PhysicalParams, p: &Vector3<f64>) -> f64 {
    -params.theta_c() * p0(params, p)
}

/// Unnormalized Jüttner density `exp(-theta c p0)`.
pub fn juttner(params: &PhysicalParams, p: &Vector3<f64>) -> f64 {
    log_juttner(params, p).exp()
}

/// Jüttner density relative to its peak, `exp(-theta c (p0 - mc))`.
pub fn juttner_scaled_radial(params: &PhysicalParams, r: f64) -> f64 {
    (-params.theta_c() * kinetic_momentum(params, r)).exp()
}

/// Unnormalized Maxwellian `exp(-theta |p|^2 / (2m))`.
pub fn maxwellian(params: &PhysicalParams, p: &Vector3<f64>) -> f64 {
    (-params.theta() * p.norm_squared() / (2.0 * params.m())).exp()
}

/// `D^{ij} = (mc/p0) (delta^{ij} + p^i p^j / (m c)^2)`.
pub fn diffusion_matrix(params: &PhysicalParams, p: &Vector3<f64>) -> Matrix3<f64> {
    let mc = params.mc();
    let e = p0(params, p);
    (Matrix3::identity() + p * p.transpose() / (mc * mc)) * (mc / e)
}

/// `g_{ij} = (p0 delta_{ij} - p_i p_j / p0) / (mc)`.
pub fn metric(params: &PhysicalParams, p: &Vector3<f64>) -> Matrix3<f64> {
    let mc = params.mc();
    let e = p0(params, p);
    (Matrix3::identity() * e - p * p.transpose() / e) / mc
}

/// `W^i = -(theta + 1/(2 p0 c)) p^i / m`.
pub fn drift_field(params: &PhysicalParams, p: &Vector3<f64>) -> Vector3<f64> {
    let e = p0(params, p);
    -p * ((params.theta() + 1.0 / (2.0 * e * params.c())) / params.m())
}

/// `ln u` with `u = sqrt(mc/p0) exp(-theta c p0) = J / sqrt(det g)`.
pub fn log_u(params: &PhysicalParams, p: &Vector3<f64>) -> f64 {
    let e = p0(params, p);
    0.5 * (params.mc() / e).ln() - params.theta_c() * e
}

/// `dD^{ij}/dp^k = (p^i delta^{jk} + p^j delta^{ik}) / (mc p0) - p^k D^{ij} / p0^2`,
/// indexed as `[k][(i, j)]`.
pub fn diffusion_gradient(params: &PhysicalParams, p: &Vector3<f64>) -> [Matrix3<f64>; 3] {
    let mc = params.mc();
    let e = p0(params, p);
    let d = diffusion_matrix(params, p);
    std::array::from_fn(|k| {
        Matrix3::from_fn(|i, j| {
            let dik = if i == k { 1.0 } else { 0.0 };
            let djk = if j == k { 1.0 } else { 0.0 };
            (p[i] * djk + p[j] * dik) / (mc * e) - p[k] * d[(i, j)] / (e * e)
        })
    })
}

/// Row divergence `sum_j dD^{ij}/dp^j = 3 p^i / (mc p0)`.
pub fn diffusion_divergence(params: &PhysicalParams, p: &Vector3<f64>) -> Vector3<f64> {
    p * (3.0 / (params.mc() * p0(params, p)))
}

/// `|1 - mc/p0|` in the factored form
/// `|p|^2 / ((p0 + mc) p0)`, free of cancellation.
pub fn newtonian_residual(params: &PhysicalParams, p: &Vector3<f64>) -> f64 {
    let e = p0(params, p);
    p.norm_squared() / ((e + params.mc()) * e)
}
