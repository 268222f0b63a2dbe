//! Isotropic reduction. For `f = f(r)` the flux `D ∇h` is radial with
//! magnitude `(p0 / mc) h'(r)`, so the generator becomes a three-point
//! operator on spherical shells.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kinetic::physics::{kinetic_momentum, p0_radial};
use crate::kinetic::PhysicalParams;

/// `n` shells of equal width covering `[0, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    n: usize,
    r_max: f64,
}

impl RadialGrid {
    pub fn new(n: usize, r_max: f64) -> Result<Self> {
        if n < 2 || !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radial grid needs n >= 2 and r_max > 0, got n = {n}, r_max = {r_max}"
            )));
        }
        Ok(Self { n, r_max })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / self.n as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    /// Volume of shell `i`.
    pub fn volume(&self, i: usize) -> f64 {
        let h = self.spacing();
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        4.0 * PI * (b.powi(3) - a.powi(3)) / 3.0
    }

    /// `∫ f dp` of shell-averaged values.
    pub fn mass(&self, f: &[f64]) -> f64 {
        f.iter().enumerate().map(|(i, v)| v * self.volume(i)).sum()
    }
}

/// Three-point analogue of the 3D operator: weights `μ_i` and face couplings
/// `c_{i+1/2} = 4π r^2 J (p0 / mc) / (S Δr)` at interior faces.
#[derive(Debug, Clone)]
pub struct RadialOperator {
    grid: RadialGrid,
    weights: Vec<f64>,
    faces: Vec<f64>,
}

impl RadialOperator {
    pub fn new(params: &PhysicalParams, grid: RadialGrid) -> Self {
        let tc = params.theta_c();
        let jt = |r: f64| (-tc * kinetic_momentum(params, r)).exp();
        let raw: Vec<f64> = (0..grid.n).map(|i| jt(grid.center(i)) * grid.volume(i)).collect();
        let total: f64 = raw.iter().sum();
        let h = grid.spacing();
        let faces = (1..grid.n)
            .map(|i| {
                let r = i as f64 * h;
                4.0 * PI * r * r * jt(r) * p0_radial(params, r) / (params.mc() * total * h)
            })
            .collect();
        Self {
            grid,
            weights: raw.iter().map(|v| v / total).collect(),
            faces,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(W + dt K) x = W h` by the Thomas algorithm.
    fn implicit_step(&self, h: &[f64], dt: f64) -> Vec<f64> {
        let n = self.grid.n;
        let w = &self.weights;
        let c = &self.faces;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for i in 0..n {
            let left = if i > 0 { c[i - 1] } else { 0.0 };
            let right = if i + 1 < n { c[i] } else { 0.0 };
            diag[i] = w[i] + dt * (left + right);
        }
        for i in 0..n - 1 {
            off[i] = -dt * c[i];
        }
        let mut rhs: Vec<f64> = h.iter().zip(w).map(|(a, b)| a * b).collect();
        for i in 1..n {
            let m = off[i - 1] / diag[i - 1];
            diag[i] -= m * off[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        let mut x = vec![0.0; n];
        x[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (rhs[i] - off[i] * x[i + 1]) / diag[i];
        }
        x
    }

    fn to_density(&self, h: &[f64], mass: f64) -> Vec<f64> {
        (0..self.grid.n).map(|i| mass * h[i] * self.weights[i] / self.grid.volume(i)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RadialTrajectory {
    pub grid: RadialGrid,
    pub times: Vec<f64>,
    /// Shell-averaged `f` at each recorded time.
    pub densities: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
}

/// Implicit Euler for isotropic data `f0` given as shell averages on `grid`.
/// Records every `record_every` steps and at the final time.
pub fn radial_solve(
    params: &PhysicalParams,
    grid: RadialGrid,
    f0: &[f64],
    t_final: f64,
    dt: f64,
    record_every: usize,
) -> Result<RadialTrajectory> {
    if f0.len() != grid.n {
        return Err(Error::InvalidParameter(format!(
            "radial data has {} values for {} shells",
            f0.len(),
            grid.n
        )));
    }
    if f0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Domain("radial data must be finite and nonnegative".into()));
    }
    if !(t_final.is_finite() && t_final >= 0.0 && dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("need T >= 0 and dt > 0, got T = {t_final}, dt = {dt}")));
    }
    let op = RadialOperator::new(params, grid);
    let mass = grid.mass(f0);
    if mass <= 0.0 {
        return Err(Error::Domain("initial data has no mass".into()));
    }
    let mut h: Vec<f64> = (0..grid.n).map(|i| f0[i] * grid.volume(i) / (mass * op.weights[i])).collect();
    let steps = (t_final / dt).round() as usize;
    let dt = if steps > 0 { t_final / steps as f64 } else { dt };
    let every = record_every.max(1);
    let mut out = RadialTrajectory {
        grid,
        times: vec![0.0],
        densities: vec![f0.to_vec()],
        masses: vec![mass],
    };
    for step in 1..=steps {
        h = op.implicit_step(&h, dt);
        if step % every == 0 || step == steps {
            let f = op.to_density(&h, mass);
            out.masses.push(grid.mass(&f));
            out.densities.push(f);
            out.times.push(step as f64 * dt);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PhysicalParams {
        PhysicalParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn juttner_profile_is_stationary() {
        let p = params();
        let grid = RadialGrid::new(200, 20.0).unwrap();
        let f0: Vec<f64> = grid.centers().iter().map(|&r| (-p0_radial(&p, r)).exp()).collect();
        let traj = radial_solve(&p, grid, &f0, 1.0, 0.1, 1).unwrap();
        let last = traj.densities.last().unwrap();
        for (a, b) in last.iter().zip(&f0) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn conserves_mass_and_relaxes() {
        let p = params();
        let grid = RadialGrid::new(300, 25.0).unwrap();
        let f0: Vec<f64> = grid.centers().iter().map(|&r| (-(r - 2.0).powi(2)).exp()).collect();
        let traj = radial_solve(&p, grid, &f0, 20.0, 0.05, 10).unwrap();
        let m0 = traj.masses[0];
        assert!(traj.masses.iter().all(|m| ((m - m0) / m0).abs() < 1e-12));
        let last = traj.densities.last().unwrap();
        let zt = grid.mass(&grid.centers().iter().map(|&r| (-p0_radial(&p, r)).exp()).collect::<Vec<_>>());
        let l1: f64 = (0..grid.n())
            .map(|i| (last[i] - m0 * (-p0_radial(&p, grid.center(i))).exp() / zt).abs() * grid.volume(i))
            .sum();
        assert!(l1 / m0 < 1e-3, "{l1}");
    }
}
