//! Wang's spectral-gap criterion for the generator
//! `a^{ij} ∂_i ∂_j + b^j ∂_j` in `R^N`, with `y(t) = e^{β_y t} / t^{N-1}`.
//!
//! All exponentials are combined before evaluation: the outer integrand of
//! `G_y` carries `e^{β_y (r - t)} <= 1` and the inner one
//! `e^{-θc (p0(s) - p0(r)) + β_y (s - r)}`.

use crate::error::{Error, Result};
use crate::kinetic::physics::p0_radial;
use crate::kinetic::PhysicalParams;
use crate::quad::{integrate, integrate_with_breaks, Tolerance};

/// Inner integrals stop where the exponent has fallen this far below its peak.
pub const INNER_CUTOFF_EXPONENT: f64 = 70.0;
const INNER_TOL: f64 = 1e-11;
const OUTER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WangData {
    pub gamma: f64,
    /// `C(r) = ∫_1^r γ`.
    pub c_integral: f64,
    /// `inf_{|p|=r} a^{ij} p_i p_j / r²`.
    pub alpha: f64,
}

fn check_dimension(dim: u32) -> Result<f64> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension N must be >= 1".into()));
    }
    Ok(dim as f64)
}

/// `γ(r) = r (Tr a + p·b) / (a^{ij} p_i p_j) - 1/r`, isotropic so no sup is needed.
pub fn wang_gamma(params: &PhysicalParams, dim: u32, r: f64) -> Result<f64> {
    let n = check_dimension(dim)?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("r must be > 0, got {r}")));
    }
    let mc = params.mc();
    let e = p0_radial(params, r);
    let trace = (mc / e) * (n + r * r / (mc * mc));
    let app = r * r * e / mc;
    let pb = r * r * (n / (mc * e) - params.beta());
    Ok(r * (trace + pb) / app - 1.0 / r)
}

pub fn wang_data(params: &PhysicalParams, dim: u32, r: f64) -> Result<WangData> {
    let gamma = wang_gamma(params, dim, r)?;
    let c_integral = if r == 1.0 {
        0.0
    } else {
        let q = integrate(
            |s| wang_gamma(params, dim, s).unwrap_or(f64::NAN),
            1.0,
            r,
            Tolerance::relative(1e-12),
        )?;
        q.value
    };
    Ok(WangData {
        gamma,
        c_integral,
        alpha: p0_radial(params, r) / params.mc(),
    })
}

fn check_beta(params: &PhysicalParams, beta_y: f64) -> Result<()> {
    if !(beta_y > 0.0 && beta_y < params.theta_c()) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < beta_y < theta c = {}, got {beta_y}",
            params.theta_c()
        )));
    }
    Ok(())
}

/// Point where the inner exponent `-θc p0(s) + β_y s` peaks.
fn inner_peak(params: &PhysicalParams, beta_y: f64) -> f64 {
    let tc = params.theta_c();
    beta_y * params.mc() / (tc * tc - beta_y * beta_y).sqrt()
}

fn inner_integral(params: &PhysicalParams, beta_y: f64, r: f64, cutoff_scale: f64) -> Result<f64> {
    let tc = params.theta_c();
    let er = p0_radial(params, r);
    let phi = |s: f64| -tc * (p0_radial(params, s) - er) + beta_y * (s - r);
    let start = r.max(inner_peak(params, beta_y));
    let top = phi(start) - INNER_CUTOFF_EXPONENT * cutoff_scale;
    // The exponent decays at least linearly, with slope β_y - θc·s/p0(s), past the peak.
    let mut hi = start + 1.0;
    while phi(hi) > top {
        hi = start + 2.0 * (hi - start);
    }
    let mut breaks = vec![r];
    if start > r {
        breaks.push(start);
    }
    breaks.push(hi);
    let q = integrate_with_breaks(|s| phi(s).exp(), &breaks, Tolerance::relative(INNER_TOL))?;
    Ok(q.value)
}

fn g_with_cutoff(params: &PhysicalParams, dim: u32, beta_y: f64, t: f64, cutoff_scale: f64) -> Result<f64> {
    let n = check_dimension(dim)?;
    check_beta(params, beta_y)?;
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::Domain(format!("G_y needs t >= 1, got {t}")));
    }
    if t == 1.0 {
        return Ok(0.0);
    }
    let outer = |r: f64| {
        let inner = inner_integral(params, beta_y, r, cutoff_scale).unwrap_or(f64::NAN);
        (beta_y * (r - t) - (n - 1.0) * r.ln() - p0_radial(params, r).ln()).exp() * inner
    };
    let q = integrate(outer, 1.0, t, Tolerance::relative(OUTER_TOL))?;
    if !q.value.is_finite() {
        return Err(Error::Quadrature(format!("G_y({t}) is not finite")));
    }
    Ok(params.mc() * t.powf(n - 1.0) * q.value)
}

/// `G_y(t)` for `y(t) = e^{β_y t} / t^{N-1}`.
pub fn wang_g(params: &PhysicalParams, dim: u32, beta_y: f64, t: f64) -> Result<f64> {
    g_with_cutoff(params, dim, beta_y, t, 1.0)
}

/// `G_y(t)` with the inner cutoff exponent doubled; agrees with [`wang_g`] to quadrature accuracy.
pub fn wang_g_doubled_cutoff(params: &PhysicalParams, dim: u32, beta_y: f64, t: f64) -> Result<f64> {
    g_with_cutoff(params, dim, beta_y, t, 2.0)
}

/// `F(t) = t^{N-1} e^{-β_y t} ∫_1^t e^{β_y r} / r^N dr`.
pub fn wang_f(dim: u32, beta_y: f64, t: f64) -> Result<f64> {
    let n = check_dimension(dim)?;
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::Domain(format!("F needs t >= 1, got {t}")));
    }
    if t == 1.0 {
        return Ok(0.0);
    }
    let q = integrate(
        |r| (beta_y * (r - t) - n * r.ln()).exp(),
        1.0,
        t,
        Tolerance::relative(1e-12),
    )?;
    Ok(t.powf(n - 1.0) * q.value)
}

/// `mc / (θc - β_y) · e^{θc (sqrt(m²c² + 1) - 1)}`, so that `G_y <= prefactor · F`.
pub fn wang_prefactor(params: &PhysicalParams, beta_y: f64) -> Result<f64> {
    check_beta(params, beta_y)?;
    let tc = params.theta_c();
    Ok(params.mc() / (tc - beta_y) * (tc * (p0_radial(params, 1.0) - 1.0)).exp())
}
