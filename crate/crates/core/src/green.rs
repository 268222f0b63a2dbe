//! Exact transition densities of the classical kinetic Fokker-Planck equation
//! `∂_t f + p·∇_x f = Δ_p f + β ∇_p·(p f)` and reference solvers built on them.
//!
//! The two-point kernel is a Gaussian in `(x, p)` whose quadratic form `b`
//! couples coordinates only within each axis pair `(x_i, p_i)`, so every
//! quantity here factorizes over the three axes.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::kinetic::DistributionField;
use crate::quad::{integrate_with_breaks, GaussHermite, Tolerance};

/// `a(β, t) = (e^{βt} - 1) / β`.
pub fn a_coeff(beta: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    (beta * t).exp_m1() / beta
}

/// `g(s) = s (e^s + 1) / 2 - e^s + 1`, which starts at order `s^3`.
fn g_shape(s: f64) -> f64 {
    if s < 0.5 {
        // sum_{k>=3} s^k (k - 2) / (2 k!)
        let mut term = s * s / 2.0;
        let mut sum = 0.0;
        for k in 3..30 {
            term *= s / k as f64;
            let add = term * (k as f64 - 2.0) / 2.0;
            sum += add;
            if add < 1e-18 * sum {
                break;
            }
        }
        sum
    } else {
        let e = s.exp();
        s * (e + 1.0) / 2.0 - e + 1.0
    }
}

/// `t a(2β, t) - a(β, t)^2`, evaluated as `a(β, t) g(βt) / β` without cancellation.
pub fn kernel_denominator(beta: f64, t: f64) -> Result<f64> {
    let d = a_coeff(beta, t) * g_shape(beta * t) / beta;
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::KernelDenominator { t, beta });
    }
    Ok(d)
}

/// `(t, x, p, y, w)`: current position and momentum, and their values at time zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub t: f64,
    pub x: Vector3<f64>,
    pub p: Vector3<f64>,
    pub y: Vector3<f64>,
    pub w: Vector3<f64>,
}

impl KernelPoint {
    pub fn new(t: f64, x: Vector3<f64>, p: Vector3<f64>, y: Vector3<f64>, w: Vector3<f64>) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidParameter(format!("kernel time must be positive, got {t}")));
        }
        Ok(Self { t, x, p, y, w })
    }

    fn scaled(&self, alpha: f64) -> Self {
        Self {
            t: self.t,
            x: self.x * alpha,
            p: self.p * alpha,
            y: self.y * alpha,
            w: self.w * alpha,
        }
    }
}

/// Time-dependent constants shared by every axis.
#[derive(Debug, Clone, Copy)]
struct Geometry {
    beta: f64,
    t: f64,
    a: f64,
    growth: f64,
    delta: f64,
}

impl Geometry {
    fn new(beta: f64, t: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidParameter(format!("kernel time must be positive, got {t}")));
        }
        Ok(Self {
            beta,
            t,
            a: a_coeff(beta, t),
            growth: (beta * t).exp(),
            delta: kernel_denominator(beta, t)?,
        })
    }

    /// The two linear forms `(u, v)` whose weighted squares make up `b` on one axis.
    fn uv(&self, x: f64, p: f64, y: f64, w: f64) -> (f64, f64) {
        let u = self.beta * (x - y) + (p - w);
        let v = self.a * u + self.t * (w - p * self.growth);
        (u, v)
    }

    fn b_axis(&self, x: f64, p: f64, y: f64, w: f64) -> f64 {
        let (u, v) = self.uv(x, p, y, w);
        u * u + v * v / self.delta
    }

    fn b(&self, pt: &KernelPoint) -> f64 {
        (0..3).map(|i| self.b_axis(pt.x[i], pt.p[i], pt.y[i], pt.w[i])).sum()
    }

    /// `ln[β e^{βt} / (4π sqrt(Δ))]`, the per-axis normalizer.
    fn log_bracket(&self) -> f64 {
        self.beta.ln() + self.beta * self.t - (4.0 * PI).ln() - 0.5 * self.delta.ln()
    }
}

/// The quadratic form `b(t, x, p, y, w) >= 0`.
pub fn b_form(point: &KernelPoint, beta: f64) -> Result<f64> {
    Ok(Geometry::new(beta, point.t)?.b(point))
}

/// Bracket exponent and overall scale of the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    beta: f64,
    prefactor_exponent: u32,
    normalization_scale: f64,
}

impl KernelConfig {
    /// Uncalibrated configuration with the displayed exponent 6 and unit scale.
    pub fn new(beta: f64) -> Result<Self> {
        Self::with(beta, 6, 1.0)
    }

    pub fn with(beta: f64, prefactor_exponent: u32, normalization_scale: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        if prefactor_exponent != 3 && prefactor_exponent != 6 {
            return Err(Error::InvalidParameter(format!(
                "prefactor exponent must be 3 or 6, got {prefactor_exponent}"
            )));
        }
        if !(normalization_scale.is_finite() && normalization_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "normalization scale must be positive, got {normalization_scale}"
            )));
        }
        Ok(Self {
            beta,
            prefactor_exponent,
            normalization_scale,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn prefactor_exponent(&self) -> u32 {
        self.prefactor_exponent
    }

    pub fn normalization_scale(&self) -> f64 {
        self.normalization_scale
    }

    fn axis_log_prefactor(&self, geo: &Geometry) -> f64 {
        self.prefactor_exponent as f64 / 3.0 * geo.log_bracket()
    }
}

/// `ln ℱ(point)`.
pub fn kernel_log(point: &KernelPoint, config: &KernelConfig) -> Result<f64> {
    let geo = Geometry::new(config.beta, point.t)?;
    Ok(config.normalization_scale.ln() + config.prefactor_exponent as f64 * geo.log_bracket()
        - geo.b(point) / (4.0 * point.t))
}

pub fn kernel_eval(point: &KernelPoint, config: &KernelConfig) -> Result<f64> {
    Ok(kernel_log(point, config)?.exp())
}

/// `∫∫ ℱ dp dx` at fixed `(y, w)` by tensor-product Gauss-Hermite quadrature.
///
/// On each axis the affine map `(s1, s2) -> (u, v) = (2 sqrt(t) s1, 2 sqrt(tΔ) s2)`
/// diagonalizes `b`, and `(x, p)` are recovered from `(u, v)` before the kernel
/// is evaluated.
pub fn kernel_mass(config: &KernelConfig, t: f64, y: &Vector3<f64>, w: &Vector3<f64>, order: usize) -> Result<f64> {
    let geo = Geometry::new(config.beta, t)?;
    let gh = GaussHermite::new(order);
    let su = 2.0 * t.sqrt();
    let sv = 2.0 * (t * geo.delta).sqrt();
    // |d(x, p) / d(u, v)| = 1 / (β t e^{βt})
    let log_jac = su.ln() + sv.ln() - (config.beta * t * geo.growth).ln();
    let pre = config.axis_log_prefactor(&geo);
    let mut log_mass = config.normalization_scale.ln();
    for axis in 0..3 {
        let (yi, wi) = (y[axis], w[axis]);
        let mut sum = 0.0;
        for (s1, w1) in gh.nodes.iter().zip(&gh.weights) {
            for (s2, w2) in gh.nodes.iter().zip(&gh.weights) {
                let u = su * s1;
                let v = sv * s2;
                let p = (geo.a * u + t * wi - v) / (t * geo.growth);
                let x = yi + (u - (p - wi)) / config.beta;
                let log_f = pre - geo.b_axis(x, p, yi, wi) / (4.0 * t);
                sum += w1 * w2 * (log_f + s1 * s1 + s2 * s2 + log_jac).exp();
            }
        }
        log_mass += sum.ln();
    }
    Ok(log_mass.exp())
}

const CALIBRATION_ORDER: usize = 24;

/// Chooses the bracket exponent and scale that make `ℱ` a probability density
/// in `(x, p)` at every time.
///
/// The configured exponent is tried first. An exponent is accepted only if its
/// mass is the same at all probe times (relative drift at most `1e-5`).
pub fn kernel_calibrate(config: &KernelConfig, t_probes: &[f64]) -> Result<KernelConfig> {
    if t_probes.len() < 2 {
        return Err(Error::Calibration("at least two probe times are required".into()));
    }
    let origin = Vector3::zeros();
    let mut tried = Vec::new();
    let first = config.prefactor_exponent;
    for exponent in [first, 9 - first] {
        let unit = KernelConfig::with(config.beta, exponent, 1.0)?;
        let masses = t_probes
            .iter()
            .map(|&t| kernel_mass(&unit, t, &origin, &origin, CALIBRATION_ORDER))
            .collect::<Result<Vec<_>>>()?;
        let lo = masses.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = masses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi / lo - 1.0 <= 1e-5 {
            let calibrated = KernelConfig::with(config.beta, exponent, 1.0 / masses[0])?;
            if masses.iter().all(|m| (m / masses[0] - 1.0).abs() <= 1e-6) {
                log::debug!("kernel calibrated: exponent {exponent}, scale {}", 1.0 / masses[0]);
                return Ok(calibrated);
            }
        }
        tried.push(format!("exponent {exponent}: masses {masses:?}"));
    }
    Err(Error::Calibration(format!(
        "no exponent gives time-independent mass ({})",
        tried.join("; ")
    )))
}

/// `∫ ℱ(t, x, p, 0, w) dx`, by adaptive quadrature per axis.
pub fn kernel_p_marginal(config: &KernelConfig, t: f64, p: &Vector3<f64>, w: &Vector3<f64>) -> Result<f64> {
    let geo = Geometry::new(config.beta, t)?;
    let pre = config.axis_log_prefactor(&geo);
    let mut log_total = config.normalization_scale.ln();
    for axis in 0..3 {
        let (pi, wi) = (p[axis], w[axis]);
        let b = |x: f64| geo.b_axis(x, pi, 0.0, wi);
        // b is quadratic in x; three samples fix its curvature and vertex.
        let curv = 0.5 * (b(1.0) + b(-1.0) - 2.0 * b(0.0));
        let slope = 0.5 * (b(1.0) - b(-1.0));
        let center = -slope / (2.0 * curv);
        let sd = (2.0 * t / curv).sqrt();
        let b0 = b(center);
        let f = |x: f64| (-(b(x) - b0) / (4.0 * t)).exp();
        let r = integrate_with_breaks(
            f,
            &[center - 40.0 * sd, center - sd, center + sd, center + 40.0 * sd],
            Tolerance::relative(1e-13),
        )?;
        log_total += pre - b0 / (4.0 * t) + r.value.ln();
    }
    Ok(log_total.exp())
}

/// Outcome of [`kernel_gradient_bound_check`].
#[derive(Debug, Clone)]
pub struct GradientBoundReport {
    pub alpha_shrink: f64,
    /// Largest sampled `|∇_w ℱ| sqrt(t) / ℱ(α·)`.
    pub empirical_constant: f64,
    /// `(b / 4t, largest ratio)` per sampled level, in increasing level.
    pub level_maxima: Vec<(f64, f64)>,
    pub samples: usize,
    /// Every sampled ratio is finite.
    pub finite: bool,
    /// The supremum is not attained in the outermost level, so it does not
    /// keep growing into the Gaussian tail.
    pub saturated: bool,
}

impl GradientBoundReport {
    pub fn pass(&self) -> bool {
        self.finite && self.saturated
    }
}

const GRADIENT_TIMES: [f64; 7] = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0];
const GRADIENT_LEVELS: [f64; 7] = [0.25, 1.0, 4.0, 16.0, 64.0, 160.0, 400.0];

/// Samples `|∇_w ℱ(t, ·)| sqrt(t) / ℱ(t, α·)` for `t` in `[0.01, 10]` on shells of
/// fixed `b / 4t`, reaching deep into the Gaussian tail.
///
/// `alpha_shrink = 1` is accepted to exhibit the unbounded growth of the ratio.
pub fn kernel_gradient_bound_check(
    config: &KernelConfig,
    alpha_shrink: f64,
    sample_count: usize,
    seed: u64,
) -> Result<GradientBoundReport> {
    if !(alpha_shrink > 0.0 && alpha_shrink <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha_shrink must lie in (0, 1], got {alpha_shrink}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_cell = sample_count.div_ceil(GRADIENT_TIMES.len() * GRADIENT_LEVELS.len()).max(1);
    let mut level_max = vec![f64::NEG_INFINITY; GRADIENT_LEVELS.len()];
    let mut finite = true;
    let mut samples = 0;
    let normal3 = |rng: &mut ChaCha8Rng| {
        Vector3::from_fn(|_, _| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
    };
    for &t in &GRADIENT_TIMES {
        let geo = Geometry::new(config.beta, t)?;
        for (li, &level) in GRADIENT_LEVELS.iter().enumerate() {
            for _ in 0..per_cell {
                let raw = KernelPoint::new(t, normal3(&mut rng), normal3(&mut rng), normal3(&mut rng), normal3(&mut rng))?;
                let b0 = geo.b(&raw);
                let pt = raw.scaled((4.0 * t * level / b0).sqrt());
                let log_f = kernel_log(&pt, config)?;
                // ln ℱ is quadratic in w, so central differences are exact up to rounding.
                let h = 1e-3 * (1.0 + pt.w.norm());
                let grad = Vector3::from_fn(|i, _| {
                    let mut a = pt;
                    let mut b = pt;
                    a.w[i] += h;
                    b.w[i] -= h;
                    (geo.b(&b) - geo.b(&a)) / (4.0 * t * 2.0 * h)
                });
                let log_ratio = log_f + grad.norm().ln() + 0.5 * t.ln() - kernel_log(&pt.scaled(alpha_shrink), config)?;
                finite &= log_ratio.is_finite() || log_ratio == f64::NEG_INFINITY;
                level_max[li] = level_max[li].max(log_ratio);
                samples += 1;
            }
        }
    }
    let level_maxima: Vec<(f64, f64)> = GRADIENT_LEVELS.iter().zip(&level_max).map(|(&l, &m)| (l, m.exp())).collect();
    let empirical_constant = level_maxima.iter().map(|&(_, m)| m).fold(0.0, f64::max);
    let inner = level_maxima[..level_maxima.len() - 1].iter().map(|&(_, m)| m).fold(0.0, f64::max);
    let outer = level_maxima[level_maxima.len() - 1].1;
    Ok(GradientBoundReport {
        alpha_shrink,
        empirical_constant,
        level_maxima,
        samples,
        finite: finite && empirical_constant.is_finite(),
        saturated: outer < inner,
    })
}

/// Variance per component of the momentum process after time `t`.
pub fn ou_variance(beta: f64, t: f64) -> f64 {
    -(-2.0 * beta * t).exp_m1() / beta
}

/// Transition density of `dp = -β p dt + sqrt(2) dB` from `w` to `p` over time `t`.
pub fn ou_transition(beta: f64, t: f64, p: &Vector3<f64>, w: &Vector3<f64>) -> f64 {
    debug_assert!(t > 0.0);
    let var = ou_variance(beta, t);
    let mean = w * (-beta * t).exp();
    (-(p - mean).norm_squared() / (2.0 * var)).exp() / (2.0 * PI * var).powf(1.5)
}

/// `P(lo < X < hi)` for `X ~ N(mean, sd^2)`, accurate in both tails.
pub fn gaussian_interval(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    let q = |z: f64| 0.5 * erfc(z / std::f64::consts::SQRT_2);
    let zl = (lo - mean) / sd;
    let zh = (hi - mean) / sd;
    if zl >= 0.0 {
        q(zl) - q(zh)
    } else if zh <= 0.0 {
        q(-zh) - q(-zl)
    } else {
        1.0 - q(-zl) - q(zh)
    }
}

/// Largest tolerated fraction of the mass carried off the grid.
pub const CLASSICAL_TAIL_TOLERANCE: f64 = 1e-10;

/// Exact-in-time classical solution on the grid of `f0`.
///
/// Each cell of `f0` is treated as a point mass at its center and pushed
/// through the transition density; the result is cell-averaged with exact
/// Gaussian interval probabilities. The transition matrix factorizes, so the
/// three axes are processed as successive one-dimensional convolutions.
pub fn classical_homogeneous_solve(f0: &DistributionField, beta: f64, t: f64) -> Result<DistributionField> {
    if f0.representation() != crate::kinetic::Representation::Density {
        return Err(Error::InvalidParameter("classical solve expects a density field".into()));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(f0.clone());
    }
    let grid = *f0.grid();
    let n = grid.n();
    let h = grid.spacing();
    let sd = ou_variance(beta, t).sqrt();
    let decay = (-beta * t).exp();
    // transfer[i * n + j]: probability that mass at center j lands in cell i.
    let mut transfer = vec![0.0; n * n];
    let mut kept = vec![0.0; n];
    for j in 0..n {
        let mean = grid.coordinate(j) * decay;
        for i in 0..n {
            let c = grid.coordinate(i);
            let pij = gaussian_interval(c - 0.5 * h, c + 0.5 * h, mean, sd);
            transfer[i * n + j] = pij;
            kept[j] += pij;
        }
    }
    let input = f0.values();
    let lost: f64 = (0..grid.len())
        .map(|idx| {
            let [i, j, k] = grid.unindex(idx);
            input[idx] * (1.0 - kept[i] * kept[j] * kept[k])
        })
        .sum::<f64>()
        * grid.cell_volume();
    if f0.mass() > 0.0 && lost > CLASSICAL_TAIL_TOLERANCE * f0.mass() {
        return Err(Error::GridTail(format!(
            "classical solution at t = {t} leaves the grid: lost fraction {:e}",
            lost / f0.mass()
        )));
    }

    let mut cur = input.to_vec();
    let mut next = vec![0.0; cur.len()];
    for axis in 0..3 {
        let stride = n.pow(2 - axis as u32);
        for (idx, out) in next.iter_mut().enumerate() {
            let ijk = grid.unindex(idx);
            let i = ijk[axis];
            let base = idx - i * stride;
            *out = (0..n).map(|j| transfer[i * n + j] * cur[base + j * stride]).sum();
        }
        std::mem::swap(&mut cur, &mut next);
    }
    DistributionField::density(grid, cur)
}

/// `ln[(1 - e^{-2z}) / (2z)]`, the angular average of `e^{z cos}` relative to `e^z`.
fn log_sinhc_scaled(z: f64) -> f64 {
    if z < 1e-8 {
        -z
    } else {
        (-(-2.0 * z).exp_m1() / (2.0 * z)).ln()
    }
}

/// Isotropic classical solution at the given radii.
///
/// `f0` is the radial profile, assumed negligible beyond `r0_max`. The
/// angular-averaged transition density is
/// `(2πσ²)^{-3/2} exp(-(r - a)²/2σ²) (1 - e^{-2z}) / 2z` with `a = s e^{-βt}`
/// and `z = r a / σ²`.
pub fn classical_radial_solve(
    beta: f64,
    t: f64,
    f0: impl Fn(f64) -> f64,
    r0_max: f64,
    radii: &[f64],
) -> Result<Vec<f64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(radii.iter().map(|&r| f0(r)).collect());
    }
    let var = ou_variance(beta, t);
    let decay = (-beta * t).exp();
    let log_norm = -1.5 * (2.0 * PI * var).ln();
    radii
        .iter()
        .map(|&r| {
            let integrand = |s: f64| {
                let a = s * decay;
                let z = r * a / var;
                let log_k = log_norm - (r - a).powi(2) / (2.0 * var) + log_sinhc_scaled(z);
                4.0 * PI * s * s * f0(s) * log_k.exp()
            };
            let peak = r / decay;
            let width = var.sqrt() / decay;
            let mut breaks = vec![0.0];
            for b in [peak - 8.0 * width, peak - width, peak, peak + width, peak + 8.0 * width] {
                if b > *breaks.last().unwrap() && b < r0_max {
                    breaks.push(b);
                }
            }
            breaks.push(r0_max);
            let tol = Tolerance {
                abs_tol: 1e-300,
                rel_tol: 1e-12,
                max_intervals: 4000,
            };
            Ok(integrate_with_breaks(integrand, &breaks, tol)?.value)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic::MomentumGrid3;
    use std::f64::consts::E;

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn a_coeff_examples() {
        assert_eq!(a_coeff(1.0, 0.0), 0.0);
        assert!(rel(a_coeff(1.0, 1.0), E - 1.0) < 1e-15);
        assert!(rel(a_coeff(1e-8, 1.0), 1.0 + 5e-9) < 1e-15);
        let mut prev = 0.0;
        for k in 1..100 {
            let a = a_coeff(0.7, 0.1 * k as f64);
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn denominator_matches_naive_form_and_small_time_limit() {
        for (beta, t) in [(1.0, 1.0), (0.5, 3.0), (2.0, 0.3), (1.0, 0.6)] {
            let naive = t * a_coeff(2.0 * beta, t) - a_coeff(beta, t).powi(2);
            assert!(rel(kernel_denominator(beta, t).unwrap(), naive) < 1e-12);
        }
        // Δ ~ t^4 / 12 as t -> 0.
        let t = 1e-4;
        assert!(rel(kernel_denominator(1.0, t).unwrap(), t.powi(4) / 12.0) < 1e-3);
        assert!(kernel_denominator(1.0, 1e-120).is_err());
    }

    #[test]
    fn b_form_examples() {
        let z = Vector3::zeros();
        let pt = KernelPoint::new(0.7, v(1.0, 2.0, 3.0), z, v(1.0, 2.0, 3.0), z).unwrap();
        assert_eq!(b_form(&pt, 1.3).unwrap(), 0.0);
        let pt = KernelPoint::new(1.0, z, z, z, v(1.0, 0.0, 0.0)).unwrap();
        let expect = 1.0 + (E - 2.0).powi(2) / ((E * E - 1.0) / 2.0 - (E - 1.0).powi(2));
        let b = b_form(&pt, 1.0).unwrap();
        assert!(rel(b, expect) < 1e-13);
        assert!(rel(b, 3.131_623_485_173_171) < 1e-13);
    }

    #[test]
    fn b_form_is_nonnegative_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut n3 = || Vector3::from_fn(|_, _| 3.0 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
        for k in 0..10_000 {
            let t = 0.01 + (k % 100) as f64 * 0.1;
            let pt = KernelPoint::new(t, n3(), n3(), n3(), n3()).unwrap();
            assert!(b_form(&pt, 0.8).unwrap() >= 0.0);
        }
    }

    #[test]
    fn kernel_underflows_cleanly_and_is_even() {
        let cfg = KernelConfig::with(1.0, 3, 1.0).unwrap();
        let z = Vector3::zeros();
        let far = KernelPoint::new(1.0, z, v(100.0, 0.0, 0.0), z, z).unwrap();
        assert_eq!(kernel_eval(&far, &cfg).unwrap(), 0.0);
        assert!(kernel_log(&far, &cfg).unwrap().is_finite());
        let pt = KernelPoint::new(0.4, v(0.1, -0.2, 0.3), v(1.0, 0.5, -0.7), v(-0.3, 0.0, 0.2), v(0.2, 0.2, 0.1)).unwrap();
        let neg = pt.scaled(-1.0);
        assert_eq!(kernel_eval(&pt, &cfg).unwrap(), kernel_eval(&neg, &cfg).unwrap());
    }

    #[test]
    fn calibration_selects_exponent_three() {
        let cfg = kernel_calibrate(&KernelConfig::new(1.0).unwrap(), &[0.5, 1.0]).unwrap();
        assert_eq!(cfg.prefactor_exponent(), 3);
        assert!((cfg.normalization_scale() - 1.0).abs() < 1e-6);
        let z = Vector3::zeros();
        let m = kernel_mass(&cfg, 2.0, &z, &z, 24).unwrap();
        assert!((m - 1.0).abs() < 1e-6, "{m}");
        let m = kernel_mass(&cfg, 0.3, &v(1.0, -2.0, 0.5), &v(0.3, 0.0, -1.0), 24).unwrap();
        assert!((m - 1.0).abs() < 1e-6, "{m}");
    }

    #[test]
    fn rejected_exponent_has_time_dependent_mass() {
        let six = KernelConfig::new(1.0).unwrap();
        let z = Vector3::zeros();
        let m1 = kernel_mass(&six, 0.5, &z, &z, 24).unwrap();
        let m2 = kernel_mass(&six, 1.0, &z, &z, 24).unwrap();
        assert!((m1 / m2 - 1.0).abs() > 0.1, "{m1} {m2}");
    }

    #[test]
    fn p_marginal_is_the_ou_transition() {
        let cfg = KernelConfig::with(1.0, 3, 1.0).unwrap();
        let w = v(0.6, -0.2, 1.0);
        for p in [v(0.0, 0.0, 0.0), v(0.5, 0.1, 0.2), v(-1.0, 1.5, 0.3)] {
            let a = kernel_p_marginal(&cfg, 1.0, &p, &w).unwrap();
            let b = ou_transition(1.0, 1.0, &p, &w);
            assert!(rel(a, b) < 1e-5, "{a} vs {b}");
        }
        // At large time the marginal is the stationary Maxwellian of variance 1/β.
        let beta = 2.0;
        let cfg = KernelConfig::with(beta, 3, 1.0).unwrap();
        let p = v(0.3, 0.0, -0.4);
        let a = kernel_p_marginal(&cfg, 20.0, &p, &w).unwrap();
        let maxwell = (beta / (2.0 * PI)).powf(1.5) * (-beta * p.norm_squared() / 2.0).exp();
        assert!(rel(a, maxwell) < 1e-8);
    }

    #[test]
    fn gradient_bound_is_finite_for_strict_shrinkage() {
        let cfg = KernelConfig::with(1.0, 3, 1.0).unwrap();
        let r75 = kernel_gradient_bound_check(&cfg, 0.75, 700, 1).unwrap();
        let r50 = kernel_gradient_bound_check(&cfg, 0.5, 700, 1).unwrap();
        assert!(r75.pass() && r50.pass());
        assert!(r50.empirical_constant <= r75.empirical_constant);
        let r1 = kernel_gradient_bound_check(&cfg, 1.0, 700, 1).unwrap();
        assert!(!r1.saturated);
        assert!(r1.empirical_constant > 10.0 * r75.empirical_constant);
        assert!(kernel_gradient_bound_check(&cfg, 0.0, 10, 1).is_err());
    }

    #[test]
    fn ou_moments_and_limit() {
        let w = v(1.0, 0.0, 0.0);
        let t = 2f64.ln();
        assert!(rel(ou_variance(1.0, t), 0.75) < 1e-15);
        // Peak sits at the mean (0.5, 0, 0).
        let peak = ou_transition(1.0, t, &v(0.5, 0.0, 0.0), &w);
        assert!(rel(peak, (2.0 * PI * 0.75f64).powf(-1.5)) < 1e-14);
        let p = v(0.2, 0.4, -0.1);
        let stationary = ou_transition(0.5, 200.0, &p, &w);
        let maxwell = (0.5 / (2.0 * PI)).powf(1.5) * (-0.5 * p.norm_squared() / 2.0).exp();
        assert!(rel(stationary, maxwell) < 1e-12);
    }

    #[test]
    fn chapman_kolmogorov() {
        let beta = 0.8;
        let cases = [
            (0.3, 0.5, v(0.1, 0.2, -0.3), v(1.0, -0.5, 0.2)),
            (1.0, 0.2, v(0.0, 0.0, 0.0), v(0.5, 0.5, 0.5)),
            (0.1, 0.1, v(-0.4, 0.3, 0.0), v(-0.2, 0.1, 0.1)),
            (2.0, 1.5, v(1.0, 1.0, 1.0), v(-1.0, 2.0, 0.0)),
            (0.7, 0.7, v(0.3, -0.3, 0.6), v(0.0, 0.0, 1.0)),
        ];
        for (t1, t2, p, w) in cases {
            // Factorizes over axes; integrate each axis separately.
            let one_d = |beta: f64, t: f64, p: f64, w: f64| {
                let var = ou_variance(beta, t);
                (-(p - w * (-beta * t).exp()).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
            };
            let mut prod = 1.0;
            for i in 0..3 {
                let f = |q: f64| one_d(beta, t1, p[i], q) * one_d(beta, t2, q, w[i]);
                let r = integrate_with_breaks(f, &[-12.0, 0.0, 12.0], Tolerance::relative(1e-13)).unwrap();
                prod *= r.value;
            }
            assert!(rel(prod, ou_transition(beta, t1 + t2, &p, &w)) < 1e-8);
        }
    }

    fn gaussian_field(grid: MomentumGrid3, center: Vector3<f64>, sd: f64) -> DistributionField {
        DistributionField::from_fn(grid, |p| {
            (-(p - center).norm_squared() / (2.0 * sd * sd)).exp() / (2.0 * PI * sd * sd).powf(1.5)
        })
        .unwrap()
    }

    #[test]
    fn classical_solve_identity_mass_and_variance() {
        let grid = MomentumGrid3::new(41, 8.0).unwrap();
        let f0 = gaussian_field(grid, Vector3::zeros(), 0.7);
        assert_eq!(classical_homogeneous_solve(&f0, 1.0, 0.0).unwrap(), f0);
        let t = 0.6;
        let f = classical_homogeneous_solve(&f0, 1.0, t).unwrap();
        assert!(rel(f.mass(), f0.mass()) < 1e-10);
        let var: f64 = (0..grid.len())
            .map(|i| f.values()[i] * grid.center(i)[0].powi(2))
            .sum::<f64>()
            * grid.cell_volume()
            / f.mass();
        let var0: f64 = (0..grid.len())
            .map(|i| f0.values()[i] * grid.center(i)[0].powi(2))
            .sum::<f64>()
            * grid.cell_volume()
            / f0.mass();
        let h2 = grid.spacing().powi(2) / 12.0;
        // Point masses evolve exactly; cell averaging adds h^2/12.
        let expect = var0 * (-2.0 * t).exp() + ou_variance(1.0, t) + h2;
        assert!(rel(var, expect) < 1e-9, "{var} vs {expect}");
        assert!(rel(var0, 0.49) < 1e-6);
    }

    #[test]
    fn classical_solve_relaxes_to_the_maxwellian() {
        let grid = MomentumGrid3::new(25, 7.0).unwrap();
        let f0 = gaussian_field(grid, v(1.0, -0.5, 0.0), 0.6);
        let beta = 1.5;
        let f = classical_homogeneous_solve(&f0, beta, 30.0 / beta).unwrap();
        let sd = (1.0 / beta).sqrt();
        let h = grid.spacing();
        let l1: f64 = (0..grid.len())
            .map(|i| {
                let c = grid.center(i);
                let m: f64 = (0..3).map(|a| gaussian_interval(c[a] - h / 2.0, c[a] + h / 2.0, 0.0, sd)).product();
                (f.values()[i] - f0.mass() * m / grid.cell_volume()).abs()
            })
            .sum::<f64>()
            * grid.cell_volume();
        assert!(l1 < 1e-6, "{l1}");
    }

    #[test]
    fn classical_solve_rejects_leaking_grids() {
        let grid = MomentumGrid3::new(11, 2.0).unwrap();
        let f0 = gaussian_field(grid, Vector3::zeros(), 0.3);
        assert!(matches!(classical_homogeneous_solve(&f0, 0.1, 5.0), Err(Error::GridTail(_))));
    }

    #[test]
    fn classical_solve_satisfies_the_pde_to_second_order() {
        // Residual of ∂_t f - Δf - β∇·(pf) at interior cells around the center.
        let beta = 1.0;
        let t = 0.5;
        let mut residuals = Vec::new();
        let mut spacings = Vec::new();
        for n in [41, 81] {
            let grid = MomentumGrid3::new(n, 7.0).unwrap();
            let f0 = gaussian_field(grid, Vector3::zeros(), 0.8);
            let dt = 1e-3;
            let fm = classical_homogeneous_solve(&f0, beta, t - dt).unwrap();
            let fp = classical_homogeneous_solve(&f0, beta, t + dt).unwrap();
            let f = classical_homogeneous_solve(&f0, beta, t).unwrap();
            let h = grid.spacing();
            let c = n / 2;
            let mut worst: f64 = 0.0;
            for i in c - 2..=c + 2 {
                for j in c - 2..=c + 2 {
                    let idx = grid.index(i, j, c);
                    let dtf = (fp.values()[idx] - fm.values()[idx]) / (2.0 * dt);
                    let mut rhs = 3.0 * beta * f.values()[idx];
                    for (di, dj, dk) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
                        let up = grid.index(i + di, j + dj, c + dk);
                        let dn = grid.index(i - di, j - dj, c - dk);
                        let pa = grid.center(idx).dot(&v(di as f64, dj as f64, dk as f64));
                        rhs += (f.values()[up] - 2.0 * f.values()[idx] + f.values()[dn]) / (h * h);
                        rhs += beta * pa * (f.values()[up] - f.values()[dn]) / (2.0 * h);
                    }
                    worst = worst.max((dtf - rhs).abs());
                }
            }
            residuals.push(worst);
            spacings.push(h);
        }
        let slope = (residuals[0] / residuals[1]).ln() / (spacings[0] / spacings[1]).ln();
        assert!(slope >= 1.8, "residuals {residuals:?}, slope {slope}");
    }

    #[test]
    fn radial_solve_matches_gaussian_closed_form() {
        let beta: f64 = 1.0;
        let s0: f64 = 0.6;
        let f0 = |r: f64| (-r * r / (2.0 * s0 * s0)).exp() / (2.0 * PI * s0 * s0).powf(1.5);
        let t = 0.8;
        let var = s0 * s0 * (-2.0 * beta * t).exp() + ou_variance(beta, t);
        let radii = [0.0, 0.3, 1.0, 2.0, 4.0];
        let got = classical_radial_solve(beta, t, f0, 10.0, &radii).unwrap();
        for (r, g) in radii.iter().zip(&got) {
            let exact = (-r * r / (2.0 * var)).exp() / (2.0 * PI * var).powf(1.5);
            assert!(rel(*g, exact) < 1e-9, "r={r}: {g} vs {exact}");
        }
        assert_eq!(classical_radial_solve(beta, 0.0, f0, 10.0, &radii).unwrap()[1], f0(0.3));
    }
}
