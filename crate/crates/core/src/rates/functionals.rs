//! Entropy, dissipation and distance functionals of `h = f/J` against the
//! discrete Jüttner measure.

use crate::error::{Error, Result};
use crate::kinetic::physics::diffusion_matrix;
use crate::kinetic::{DistributionField, JuttnerMeasure, MomentumGrid3, Representation};
use nalgebra::Vector3;

/// Allowed deviation of `<h>_mu` from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;

/// Cells with `h` at or below this value are left out of `log h`.
pub const LOG_FLOOR: f64 = 1e-300;

fn relative_values<'a>(h: &'a DistributionField, mu: &JuttnerMeasure) -> Result<&'a [f64]> {
    if h.representation() != Representation::Relative {
        return Err(Error::InvalidParameter("expected a field in h = f/J form".into()));
    }
    if h.grid() != mu.grid() {
        return Err(Error::InvalidParameter("field and measure live on different grids".into()));
    }
    let mean = mu.mean(h.values());
    if (mean - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Normalization { mean });
    }
    Ok(h.values())
}

/// `h ln h - h + 1 >= 0`, with `0 ln 0 = 0` and a series near `h = 1`.
fn entropy_density(h: f64) -> f64 {
    let e = h - 1.0;
    if e.abs() < 0.1 {
        // sum_{k>=2} (-1)^k e^k / (k (k - 1))
        let mut pow = e * e;
        let mut sum = 0.0;
        for k in 2..20 {
            let kf = k as f64;
            let term = pow / (kf * (kf - 1.0));
            sum += if k % 2 == 0 { term } else { -term };
            if term.abs() <= 1e-18 * sum.abs() || pow == 0.0 {
                break;
            }
            pow *= e;
        }
        sum
    } else if h == 0.0 {
        1.0
    } else {
        h * h.ln() - e
    }
}

/// `Σ μ_k h_k ln h_k`, arranged as `Σ μ (h ln h - h + 1) + Σ μ (h - 1)`: the
/// first sum has nonnegative terms and the second vanishes for normalized `h`.
pub fn entropy_of(h: &[f64], weights: &[f64]) -> f64 {
    let mut phi = 0.0;
    let mut drift = 0.0;
    for (v, w) in h.iter().zip(weights) {
        phi += w * entropy_density(*v);
        drift += w * (v - 1.0);
    }
    phi + drift
}

/// `𝔇[h] = ∫ h ln h dμ`.
pub fn entropy(h: &DistributionField, mu: &JuttnerMeasure) -> Result<f64> {
    Ok(entropy_of(relative_values(h, mu)?, mu.weights()))
}

/// `𝔏[h - 1] = ∫ (h - 1)^2 dμ`.
pub fn l2_of(h: &[f64], weights: &[f64]) -> f64 {
    h.iter().zip(weights).map(|(v, w)| w * (v - 1.0).powi(2)).sum()
}

pub fn l2_functional(h: &DistributionField, mu: &JuttnerMeasure) -> Result<f64> {
    Ok(l2_of(relative_values(h, mu)?, mu.weights()))
}

/// `‖h - 1‖_{L^1(dμ)}`.
pub fn l1_of(h: &[f64], weights: &[f64]) -> f64 {
    h.iter().zip(weights).map(|(v, w)| w * (v - 1.0).abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsiszarKullback {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `‖h - 1‖_{L^1(dμ)} <= sqrt(2 𝔇[h])`.
pub fn csiszar_kullback_of(h: &[f64], weights: &[f64]) -> CsiszarKullback {
    let lhs = l1_of(h, weights);
    let entropy = entropy_of(h, weights);
    CsiszarKullback {
        lhs,
        rhs: (2.0 * entropy.max(0.0)).sqrt(),
        pass: csiszar_kullback_holds(lhs, entropy),
    }
}

/// `l1 <= sqrt(2 entropy)` up to rounding.
pub fn csiszar_kullback_holds(l1: f64, entropy: f64) -> bool {
    l1 <= (2.0 * entropy.max(0.0)).sqrt() + 1e-12
}

pub fn csiszar_kullback_check(h: &DistributionField, mu: &JuttnerMeasure) -> Result<CsiszarKullback> {
    Ok(csiszar_kullback_of(relative_values(h, mu)?, mu.weights()))
}

/// Second-order central difference along `axis`, one-sided on the boundary.
fn partial(grid: &MomentumGrid3, v: &[f64], idx: usize, axis: usize) -> f64 {
    let n = grid.n();
    let h = grid.spacing();
    let stride = n.pow(2 - axis as u32);
    let i = grid.unindex(idx)[axis];
    if i == 0 {
        (v[idx + stride] - v[idx]) / h
    } else if i + 1 == n {
        (v[idx] - v[idx - stride]) / h
    } else {
        (v[idx + stride] - v[idx - stride]) / (2.0 * h)
    }
}

fn gradient(grid: &MomentumGrid3, v: &[f64], idx: usize) -> Vector3<f64> {
    Vector3::new(partial(grid, v, idx, 0), partial(grid, v, idx, 1), partial(grid, v, idx, 2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dissipation {
    pub value: f64,
    /// μ-mass of the cells left out because `h <= LOG_FLOOR` there.
    pub excluded_mass: f64,
}

/// `𝔍[h] = ∫ ∂_i h D^{ij} ∂_j log h dμ` by central differences, with
/// `∂ log h` taken as `∂h / h`.
///
/// The metric enters through its inverse: with `g = D^{-1}`, the metric
/// inner product of the two gradients is the `D` contraction of the partials.
pub fn entropy_dissipation(h: &DistributionField, mu: &JuttnerMeasure) -> Result<Dissipation> {
    let values = relative_values(h, mu)?;
    let grid = mu.grid();
    let params = mu.params();
    let mut value = 0.0;
    let mut excluded_mass = 0.0;
    for (idx, w) in mu.weights().iter().enumerate() {
        let hk = values[idx];
        if hk <= LOG_FLOOR {
            excluded_mass += w;
            continue;
        }
        // ∂ log h = ∂h / h keeps every summand nonnegative.
        let gh = gradient(grid, values, idx);
        let d = diffusion_matrix(params, &grid.center(idx));
        value += w * gh.dot(&(d * gh)) / hk;
    }
    Ok(Dissipation { value, excluded_mass })
}

/// `∫ (1 + |p|^γ) |∇_p f|^2 dp` by central differences.
///
/// The position-gradient term weighted by `1 + |p|^ω` vanishes identically
/// for spatially homogeneous data, so `omega` does not enter the value.
pub fn gamma_weighted_grad(field: &DistributionField, omega: f64, gamma_exp: f64) -> Result<f64> {
    if field.representation() != Representation::Density {
        return Err(Error::InvalidParameter("expected a density field".into()));
    }
    if !(omega >= 0.0 && gamma_exp >= 0.0) {
        return Err(Error::InvalidParameter("weight exponents must be nonnegative".into()));
    }
    let grid = field.grid();
    let v = field.values();
    let sum: f64 = (0..grid.len())
        .map(|idx| {
            let p = grid.center(idx);
            (1.0 + p.norm().powf(gamma_exp)) * gradient(grid, v, idx).norm_squared()
        })
        .sum();
    Ok(sum * grid.cell_volume())
}
