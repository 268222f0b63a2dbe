use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::cg::pcg;
use super::DiscreteOperator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapOptions {
    /// Stop once the Rayleigh quotient changes by less than this, relatively.
    pub rel_tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            max_iterations: 300,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapEstimate {
    pub value: f64,
    pub iterations: usize,
    /// `‖K y - λ W y‖_{W^{-1}} / (λ ‖y‖_W)` at the returned eigenpair.
    pub residual: f64,
    /// Approximate eigenvector, μ-mean zero and unit μ-norm.
    pub mode: Vec<f64>,
}

fn remove_mean(v: &mut [f64], w: &[f64]) {
    let mean: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    v.iter_mut().for_each(|x| *x -= mean);
}

fn mu_norm(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| b * a * a).sum::<f64>().sqrt()
}

/// Smallest nonzero eigenvalue of `-L`, i.e. of the pencil `K y = λ W y` on the
/// μ-orthogonal complement of constants.
pub fn spectral_gap_estimate(op: &DiscreteOperator) -> Result<f64> {
    Ok(spectral_gap(op, GapOptions::default())?.value)
}

/// Inverse power iteration with the constant mode deflated. Each inner solve
/// `K y = W x` is a consistent singular system handled by CG in the μ inner
/// product, warm-started from `x / λ`.
pub fn spectral_gap(op: &DiscreteOperator, options: GapOptions) -> Result<GapEstimate> {
    let w = op.weights();
    let n = op.len();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    remove_mean(&mut x, w);
    let norm = mu_norm(&x, w);
    x.iter_mut().for_each(|v| *v /= norm);

    let apply = |v: &[f64], out: &mut [f64]| op.apply_k(v, out);
    let precondition = |r: &[f64], z: &mut [f64]| {
        for i in 0..r.len() {
            z[i] = r[i] / w[i];
        }
    };
    let mut lambda = f64::NAN;
    let mut ky = vec![0.0; n];
    for iteration in 1..=options.max_iterations {
        let b: Vec<f64> = x.iter().zip(w).map(|(a, b)| a * b).collect();
        let mut y: Vec<f64> = if lambda.is_finite() {
            x.iter().map(|v| v / lambda).collect()
        } else {
            vec![0.0; n]
        };
        pcg(apply, precondition, &b, &mut y, 1e-10, 10 * n)?;
        remove_mean(&mut y, w);
        let norm = mu_norm(&y, w);
        y.iter_mut().for_each(|v| *v /= norm);
        op.apply_k(&y, &mut ky);
        let next: f64 = y.iter().zip(&ky).map(|(a, b)| a * b).sum();
        let residual = (0..n)
            .map(|i| (ky[i] - next * w[i] * y[i]).powi(2) / w[i])
            .sum::<f64>()
            .sqrt()
            / next;
        let converged = iteration >= 3 && ((next - lambda) / next).abs() <= options.rel_tol;
        lambda = next;
        x = y;
        if converged {
            return Ok(GapEstimate {
                value: lambda,
                iterations: iteration,
                residual,
                mode: x,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: options.max_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fv::build_operator;
    use crate::kinetic::{MomentumGrid3, PhysicalParams};

    #[test]
    fn gap_is_positive_and_the_mode_is_an_eigenvector() {
        let grid = MomentumGrid3::new(13, 7.0).unwrap();
        let op = build_operator(grid, PhysicalParams::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        let est = spectral_gap(&op, GapOptions::default()).unwrap();
        assert!(est.value > 0.1 && est.value < 0.4, "{}", est.value);
        assert!(est.residual < 1e-3, "{}", est.residual);
        // Rayleigh quotients of other mean-zero vectors lie above the gap.
        let probe: Vec<f64> = (0..op.len()).map(|i| grid.center(i)[1].powi(3)).collect();
        let mut p = probe.clone();
        remove_mean(&mut p, op.weights());
        let rq = op.dirichlet_form(&p, &p) / mu_norm(&p, op.weights()).powi(2);
        assert!(rq >= est.value * (1.0 - 1e-9));
    }

    #[test]
    fn classical_regime_recovers_the_friction_rate() {
        let grid = MomentumGrid3::new(21, 8.0).unwrap();
        let op = build_operator(grid, PhysicalParams::new(1.0, 100.0, 1.0).unwrap()).unwrap();
        let gap = spectral_gap_estimate(&op).unwrap();
        assert!((gap - 1.0).abs() < 0.05, "{gap}");
    }
}
