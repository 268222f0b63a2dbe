use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    /// Final residual relative to the right-hand side, in the preconditioner norm.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for a symmetric positive (semi)definite
/// system, started from the contents of `x`.
///
/// Convergence is measured in the norm induced by the preconditioner:
/// `sqrt(r^T M^{-1} r) <= rel_tol * sqrt(b^T M^{-1} b)`. For singular systems
/// the right-hand side must be consistent.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    precondition: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgStats> {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];

    precondition(b, &mut z);
    let b_norm = dot(b, &z).max(0.0).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }

    apply(x, &mut q);
    for i in 0..n {
        r[i] = b[i] - q[i];
    }
    precondition(&r, &mut z);
    let mut rz = dot(&r, &z);
    let mut p = z.clone();
    let target = rel_tol * b_norm;
    let mut iterations = 0;
    while rz.max(0.0).sqrt() > target {
        if iterations >= max_iter || !rz.is_finite() {
            return Err(Error::SolverDivergence {
                iterations,
                residual: rz.max(0.0).sqrt() / b_norm,
            });
        }
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            // Search direction fell into the null space; the residual cannot shrink further.
            break;
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
    }
    let relative_residual = rz.max(0.0).sqrt() / b_norm;
    if relative_residual > rel_tol {
        return Err(Error::SolverDivergence {
            iterations,
            residual: relative_residual,
        });
    }
    Ok(CgStats {
        iterations,
        relative_residual,
    })
}
