//! Jüttner normalization `Z = ∫ exp(-theta c p0) dp`.
//!
//! Everything is computed for the peak-scaled density `exp(-theta c (p0 - mc))`
//! and the factor `exp(-xi)` is applied last.

use std::f64::consts::PI;

use super::physics::{juttner_scaled_radial, kinetic_momentum};
use super::PhysicalParams;
use crate::error::{Error, Result};
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::special::bessel_k2_scaled;

/// Largest `xi` for which `exp(-xi)` is comfortably representable.
pub const XI_LIMIT: f64 = 700.0;

/// Exponent below which the scaled radial integrand is treated as zero.
const TAIL_EXPONENT: f64 = 60.0;

/// Radius at which `theta c (p0 - mc)` reaches `k`.
fn radius_at_kinetic(params: &PhysicalParams, k: f64) -> f64 {
    let kin = k / params.theta_c();
    // p0 = mc + kin, r^2 = p0^2 - (mc)^2 = kin (kin + 2 mc)
    (kin * (kin + 2.0 * params.mc())).sqrt()
}

fn radial_breaks(params: &PhysicalParams, lo: f64, hi: f64) -> Vec<f64> {
    // Panels at kinetic exponents 1, 4, 16, ... keep the peak and tail resolved.
    let mut breaks = vec![lo];
    let mut k = 1.0;
    while k < TAIL_EXPONENT {
        let r = radius_at_kinetic(params, k);
        if r > lo && r < hi {
            breaks.push(r);
        }
        k *= 4.0;
    }
    breaks.push(hi);
    breaks
}

/// `4π ∫_lo^hi r^2 exp(-theta c (p0 - mc)) dr`.
pub fn scaled_radial_mass(params: &PhysicalParams, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let f = |r: f64| r * r * juttner_scaled_radial(params, r);
    let breaks = radial_breaks(params, lo, hi);
    let q = integrate_with_breaks(f, &breaks, Tolerance::relative(1e-13))?;
    Ok(4.0 * PI * q.value)
}

/// Radial cutoff beyond which the scaled integrand is below `exp(-60)` of its peak.
pub fn tail_cutoff(params: &PhysicalParams) -> f64 {
    radius_at_kinetic(params, TAIL_EXPONENT)
}

/// `Z e^{xi}` by adaptive radial quadrature.
pub fn partition_function_scaled(params: &PhysicalParams) -> Result<f64> {
    scaled_radial_mass(params, 0.0, tail_cutoff(params))
}

/// `Z` by adaptive radial quadrature, relative error well below `1e-10`.
pub fn partition_function(params: &PhysicalParams) -> Result<f64> {
    let xi = params.xi();
    if xi > XI_LIMIT {
        return Err(Error::Overflow { xi, limit: XI_LIMIT });
    }
    Ok(partition_function_scaled(params)? * (-xi).exp())
}

/// Closed form `4π (mc)^3 K_2(xi) / xi`.
pub fn partition_function_bessel(params: &PhysicalParams) -> Result<f64> {
    let xi = params.xi();
    if xi > XI_LIMIT {
        return Err(Error::Overflow { xi, limit: XI_LIMIT });
    }
    Ok(4.0 * PI * params.mc().powi(3) * bessel_k2_scaled(xi) * (-xi).exp() / xi)
}

/// Fraction of the Jüttner mass outside the ball `|p| > radius`.
///
/// The ball inscribed in a cubic grid gives an upper bound on the mass the
/// grid misses.
pub fn tail_fraction(params: &PhysicalParams, radius: f64) -> Result<f64> {
    let total = partition_function_scaled(params)?;
    let cut = tail_cutoff(params);
    if radius >= cut {
        // Bounded by the integrand at the cutoff times a generous width.
        let r = radius;
        let peak_free = (-params.theta_c() * kinetic_momentum(params, r)).exp();
        return Ok(4.0 * PI * r * r * peak_free * (r + 1.0 / params.theta_c()) / total);
    }
    Ok(scaled_radial_mass(params, radius, cut)? / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn unit_parameters_reference() {
        let p = PhysicalParams::new(1.0, 1.0, 1.0).unwrap();
        let z = partition_function(&p).unwrap();
        assert!(rel(z, 20.418_327_788_876_82) < 1e-11, "{z}");
    }

    #[test]
    fn matches_bessel_closed_form() {
        let cases = [
            (0.5, 189.756_809_422_662_5),
            (1.0, 20.418_327_788_876_82),
            (5.0, 0.013_342_830_851_714_36),
            (20.0, 3.976_969_542_590_693e-10),
        ];
        for (xi, reference) in cases {
            let p = PhysicalParams::new(1.0, 1.0, xi).unwrap();
            let q = partition_function(&p).unwrap();
            let b = partition_function_bessel(&p).unwrap();
            assert!(rel(q, b) < 1e-8, "xi={xi}: {q} vs {b}");
            assert!(rel(q, reference) < 1e-11, "xi={xi}: {q}");
        }
    }

    #[test]
    fn classical_limit_of_scaled_partition() {
        let p = PhysicalParams::new(1.0, 100.0, 1.0).unwrap();
        let z = partition_function_scaled(&p).unwrap();
        let gauss = (2.0 * PI).powf(1.5);
        assert!(rel(z, gauss) < 1e-2, "{z} vs {gauss}");
        assert!(z > gauss, "relativistic tails are heavier");
    }

    #[test]
    fn overflow_guard() {
        let p = PhysicalParams::new(1.0, 30.0, 1.0).unwrap();
        assert!(matches!(partition_function(&p), Err(Error::Overflow { .. })));
        assert!(partition_function_scaled(&p).is_ok());
    }

    #[test]
    fn tail_is_negligible_past_cutoff() {
        let p = PhysicalParams::new(1.0, 1.0, 1.0).unwrap();
        let z = partition_function_scaled(&p).unwrap();
        let longer = scaled_radial_mass(&p, 0.0, 2.0 * tail_cutoff(&p)).unwrap();
        assert!(rel(longer, z) < 1e-12);
        assert!(tail_fraction(&p, 0.0).unwrap() > 0.999_999);
        let t8 = tail_fraction(&p, 8.0).unwrap();
        assert!(t8 > 1e-3 && t8 < 5e-2, "{t8}");
        assert!(tail_fraction(&p, 100.0).unwrap() < 1e-30);
    }
}
