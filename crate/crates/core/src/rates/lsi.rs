//! Log-Sobolev constant from the Bakry-Émery curvature bound.
//!
//! With `Ric~ = a(p0) δ + b(p0) g` and `a < 0`, the ratio `Ric~(X,X)/g(X,X)`
//! is smallest for `X ∥ p`, where it equals `P(p0)`.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kinetic::physics::{metric, p0};
use crate::kinetic::PhysicalParams;

const DENSE_SAMPLES: usize = 20_001;
const BAKRY_RADII: usize = 2000;
const BAKRY_DIRECTIONS: usize = 8;

fn p_raw(params: &PhysicalParams, x: f64) -> f64 {
    let (m, c, th) = (params.m(), params.c(), params.theta());
    let mc = params.mc();
    (2.0 * th * c * x.powi(3) - 13.0 * x * x + 2.0 * th * m * m * c.powi(3) * x - mc * mc) / (4.0 * mc * x.powi(3))
}

/// `P(x) = (2θc x³ - 13x² + 2θm²c³x - m²c²) / (4mc x³)` on `x >= mc`.
pub fn p_rational(params: &PhysicalParams, x: f64) -> Result<f64> {
    if !(x >= params.mc()) {
        return Err(Error::Domain(format!("P(x) needs x >= mc = {}, got {x}", params.mc())));
    }
    Ok(p_raw(params, x))
}

/// Larger root of `13x² - 4θm²c³x + 3m²c² = 0`, where `P' = 0`; `None` if complex.
pub fn stationary_point(params: &PhysicalParams) -> Option<f64> {
    let (m, c, th) = (params.m(), params.c(), params.theta());
    let mc = params.mc();
    let disc = 4.0 * th * th * m * m * c.powi(4) - 39.0;
    (disc >= 0.0).then(|| (2.0 * th * m * m * c.powi(3) + mc * disc.sqrt()) / 13.0)
}

/// `min P` on `[mc, x_max]` by log-spaced sampling refined with golden section.
/// Independent of the stationarity quadratic.
pub fn p_minimum_dense(params: &PhysicalParams, x_max: f64) -> (f64, f64) {
    let mc = params.mc();
    let ratio = (x_max / mc).max(1.0 + 1e-12);
    let at = |i: usize| mc * ratio.powf(i as f64 / (DENSE_SAMPLES - 1) as f64);
    let best = (0..DENSE_SAMPLES)
        .min_by(|&a, &b| p_raw(params, at(a)).total_cmp(&p_raw(params, at(b))))
        .unwrap();
    let (mut lo, mut hi) = (at(best.saturating_sub(1)), at((best + 1).min(DENSE_SAMPLES - 1)));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if p_raw(params, a) <= p_raw(params, b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let x = 0.5 * (lo + hi);
    let (x, v) = [(x, p_raw(params, x)), (at(best), p_raw(params, at(best)))]
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    (x, v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSobolev {
    pub alpha: f64,
    /// `1/(2α) = min_{x >= mc} P(x)`.
    pub inverse_rate: f64,
    pub minimizer: f64,
    /// Minimum found by dense sampling, for comparison.
    pub dense_minimum: f64,
    /// Printed closed form: `(2θmc² - 7)/(2mc²)` on the first branch,
    /// `P` at the printed minimizer on the second.
    pub printed_inverse_rate: f64,
    /// Printed minimizer `(2/13)θmc² + (mc/13) sqrt(4θ²m²c⁴ - 39)`, second branch only.
    pub printed_minimizer: Option<f64>,
}

/// Log-Sobolev constant, absent for `θ <= θ0 = 7/(2mc²)`.
pub fn log_sobolev_constant(params: &PhysicalParams) -> Option<LogSobolev> {
    if params.theta() <= params.theta0() {
        return None;
    }
    let mc = params.mc();
    let (m, c, th) = (params.m(), params.c(), params.theta());
    let mut minimizer = mc;
    let mut inverse_rate = p_raw(params, mc);
    if let Some(x) = stationary_point(params).filter(|&x| x > mc) {
        let v = p_raw(params, x);
        if v < inverse_rate {
            minimizer = x;
            inverse_rate = v;
        }
    }
    let (_, dense_minimum) = p_minimum_dense(params, 100.0 * minimizer.max(mc));
    if (dense_minimum - inverse_rate).abs() > 1e-8 * inverse_rate.abs().max(1.0) {
        log::warn!("dense minimum {dense_minimum} disagrees with the stationary-point minimum {inverse_rate}");
    }
    let (printed_inverse_rate, printed_minimizer) = if th <= 4.0 / (m * c * c) {
        ((2.0 * th * m * c * c - 7.0) / (2.0 * m * c * c), None)
    } else {
        let x = 2.0 / 13.0 * th * m * c * c + mc / 13.0 * (4.0 * th * th * m * m * c.powi(4) - 39.0).sqrt();
        (p_raw(params, x), Some(x))
    };
    Some(LogSobolev {
        alpha: 1.0 / (2.0 * inverse_rate),
        inverse_rate,
        minimizer,
        dense_minimum,
        printed_inverse_rate,
        printed_minimizer,
    })
}

/// Bakry-Émery-Ricci tensor
/// `-(1 + 4cθp0)/(4 p0²) δ + (6θc p0³ - 12 p0² + 2θm²c³ p0 - m²c²)/(4mc p0³) g`.
pub fn bakry_emery_ricci(params: &PhysicalParams, p: &Vector3<f64>) -> Matrix3<f64> {
    let (m, c, th) = (params.m(), params.c(), params.theta());
    let mc = params.mc();
    let e = p0(params, p);
    let a = -(1.0 + 4.0 * c * th * e) / (4.0 * e * e);
    let b = (6.0 * th * c * e.powi(3) - 12.0 * e * e + 2.0 * th * m * m * c.powi(3) * e - mc * mc) / (4.0 * mc * e.powi(3));
    Matrix3::identity() * a + metric(params, p) * b
}

/// Smallest `Ric~(X,X)/g(X,X)` over probes with `p0 ∈ [mc, p0_probe_max]`.
/// Each radius is probed along `p`, across `p` and in random directions.
pub fn bakry_emery_bound(params: &PhysicalParams, p0_probe_max: f64) -> Result<f64> {
    let mc = params.mc();
    if !(p0_probe_max > mc) {
        return Err(Error::InvalidParameter(format!("probe range needs p0_max > mc = {mc}, got {p0_probe_max}")));
    }
    let r_max = (p0_probe_max * p0_probe_max - mc * mc).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(0xbe);
    let mut best = f64::INFINITY;
    for i in 0..BAKRY_RADII {
        let r = r_max * i as f64 / (BAKRY_RADII - 1) as f64;
        let p = Vector3::new(r, 0.0, 0.0);
        let ric = bakry_emery_ricci(params, &p);
        let g = metric(params, &p);
        let mut probe = |x: Vector3<f64>| {
            let ratio = x.dot(&(ric * x)) / x.dot(&(g * x));
            best = best.min(ratio);
        };
        probe(Vector3::x());
        probe(Vector3::y());
        for _ in 0..BAKRY_DIRECTIONS {
            probe(Vector3::from_fn(|_, _| StandardNormal.sample(&mut rng)));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(theta: f64) -> PhysicalParams {
        PhysicalParams::new(1.0, 1.0, theta).unwrap()
    }

    #[test]
    fn rational_function_values() {
        assert!((p_rational(&unit(4.0), 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(p_rational(&unit(3.5), 1.0).unwrap().abs() < 1e-15);
        assert!((p_rational(&unit(5.0), 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(p_rational(&unit(5.0), 0.9), Err(Error::Domain(_))));
    }

    #[test]
    fn no_constant_at_or_below_threshold() {
        assert!(log_sobolev_constant(&unit(3.5)).is_none());
        assert!(log_sobolev_constant(&unit(1.0)).is_none());
    }

    #[test]
    fn boundary_branch_at_theta_four() {
        let ls = log_sobolev_constant(&unit(4.0)).unwrap();
        assert!((ls.inverse_rate - 0.5).abs() < 1e-12);
        assert!((ls.minimizer - 1.0).abs() < 1e-12);
        assert!((ls.alpha - 1.0).abs() < 1e-12);
        assert!((ls.printed_inverse_rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn interior_branch_at_theta_five() {
        let ls = log_sobolev_constant(&unit(5.0)).unwrap();
        assert!((ls.minimizer - 1.370019205838973).abs() < 1e-12);
        assert!((ls.inverse_rate - 1.3624957364758163).abs() < 1e-12);
        assert!((ls.dense_minimum - ls.inverse_rate).abs() < 1e-10);
        assert!((ls.printed_inverse_rate - ls.inverse_rate).abs() < 1e-12);
    }

    #[test]
    fn printed_forms_differ_once_mc_is_not_one() {
        let p = PhysicalParams::new(2.0, 1.5, 3.0).unwrap();
        let ls = log_sobolev_constant(&p).unwrap();
        let x = ls.printed_minimizer.unwrap();
        assert!((x - ls.minimizer).abs() > 0.1);
        assert!((ls.dense_minimum - ls.inverse_rate).abs() < 1e-10);
    }

    #[test]
    fn numeric_minimum_matches_the_clamped_root_over_a_sweep() {
        for &(m, c, th) in &[(1.0, 1.0, 3.6), (0.5, 2.0, 2.0), (2.0, 0.7, 5.0), (1.0, 3.0, 10.0), (1.3, 1.1, 40.0)] {
            let p = PhysicalParams::new(m, c, th).unwrap();
            let ls = log_sobolev_constant(&p).unwrap();
            assert!(ls.inverse_rate > 0.0);
            let root = stationary_point(&p).map_or(p.mc(), |x| x.max(p.mc()));
            assert!((p_rational(&p, root).unwrap() - ls.inverse_rate).abs() < 1e-10, "{m} {c} {th}");
            assert!((ls.dense_minimum - ls.inverse_rate).abs() < 1e-10, "{m} {c} {th}");
        }
    }

    #[test]
    fn ricci_tensor_components() {
        let p = PhysicalParams::new(1.3, 1.7, 0.9).unwrap();
        let r = bakry_emery_ricci(&p, &Vector3::new(0.3, -0.7, 0.5));
        let expected = [
            ((0, 0), 0.0891016511513329),
            ((0, 1), 0.0288598643008596),
            ((0, 2), -0.0206141887863283),
            ((1, 1), 0.0341304810544575),
            ((1, 2), 0.0480997738347660),
            ((2, 2), 0.0671131831125828),
        ];
        for ((i, j), v) in expected {
            assert!((r[(i, j)] - v).abs() < 1e-13, "({i},{j})");
            assert_eq!(r[(i, j)], r[(j, i)]);
        }
    }

    #[test]
    fn radial_direction_attains_the_rational_function() {
        let p = unit(5.0);
        for r in [0.0, 0.5, 2.0, 7.0] {
            let q = Vector3::new(r, 0.0, 0.0);
            let x = Vector3::new(1.0, 0.0, 0.0);
            let ratio = x.dot(&(bakry_emery_ricci(&p, &q) * x)) / x.dot(&(metric(&p, &q) * x));
            assert!((ratio - p_rational(&p, p0(&p, &q)).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_bound_dominates_the_constant_above_threshold() {
        for th in [4.0, 5.0, 8.0] {
            let p = unit(th);
            let min_p = log_sobolev_constant(&p).unwrap().inverse_rate;
            assert!(bakry_emery_bound(&p, 50.0).unwrap() >= min_p - 1e-6);
        }
        assert!(bakry_emery_bound(&unit(1.0), 50.0).unwrap() <= 0.0);
    }
}
