//! Cell-centered Cartesian momentum grid and fields living on it.

use nalgebra::Vector3;

use super::physics::kinetic_momentum;
use super::PhysicalParams;
use crate::error::{Error, Result};

/// Uniform grid of `n^3` cells covering `[-p_max, p_max]^3`.
///
/// `n` is odd so that one cell is centered at the origin. Cells are stored
/// with the last axis fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid3 {
    n: usize,
    p_max: f64,
}

impl MomentumGrid3 {
    pub fn new(n: usize, p_max: f64) -> Result<Self> {
        if n < 3 || n % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "cells per axis must be odd and at least 3, got {n}"
            )));
        }
        if !(p_max.is_finite() && p_max > 0.0) {
            return Err(Error::InvalidParameter(format!("p_max must be positive, got {p_max}")));
        }
        Ok(Self { n, p_max })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.p_max / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Center coordinate of cell `i` along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        // Written symmetrically so that coordinate(i) == -coordinate(n-1-i) exactly.
        let h = (self.n as f64 - 1.0) / 2.0;
        (i as f64 - h) * self.spacing()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn center(&self, idx: usize) -> Vector3<f64> {
        let [i, j, k] = self.unindex(idx);
        Vector3::new(self.coordinate(i), self.coordinate(j), self.coordinate(k))
    }

    /// Index of the cell mirrored through the origin.
    pub fn mirror(&self, idx: usize) -> usize {
        let [i, j, k] = self.unindex(idx);
        let m = self.n - 1;
        self.index(m - i, m - j, m - k)
    }

    /// Cell containing `p`, or `None` outside the grid.
    pub fn locate(&self, p: &Vector3<f64>) -> Option<usize> {
        let h = self.spacing();
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            let s = (p[a] + self.p_max) / h;
            if !(s >= 0.0 && s < self.n as f64) {
                return None;
            }
            ijk[a] = s as usize;
        }
        Some(self.index(ijk[0], ijk[1], ijk[2]))
    }

    /// Whether the cell touches the grid boundary.
    pub fn is_boundary(&self, idx: usize) -> bool {
        self.unindex(idx).iter().any(|&i| i == 0 || i + 1 == self.n)
    }
}

/// The discrete Jüttner probability measure on a grid.
///
/// Weights are `exp(-theta c (p0 - mc))` at cell centers, normalized by their
/// own sum so that constants have unit mass exactly.
#[derive(Debug, Clone)]
pub struct JuttnerMeasure {
    grid: MomentumGrid3,
    params: PhysicalParams,
    weights: Vec<f64>,
    scaled_mass: f64,
}

impl JuttnerMeasure {
    pub fn new(grid: MomentumGrid3, params: PhysicalParams) -> Self {
        let dv = grid.cell_volume();
        let tc = params.theta_c();
        let raw: Vec<f64> = (0..grid.len())
            .map(|i| (-tc * kinetic_momentum(&params, grid.center(i).norm())).exp())
            .collect();
        let sum: f64 = raw.iter().sum();
        let weights = raw.iter().map(|w| w / sum).collect();
        Self {
            grid,
            params,
            weights,
            scaled_mass: sum * dv,
        }
    }

    pub fn grid(&self) -> &MomentumGrid3 {
        &self.grid
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// `mu_k`, summing to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Midpoint-rule approximation of `Z e^{xi}` on the grid.
    pub fn scaled_mass(&self) -> f64 {
        self.scaled_mass
    }

    /// `<h>_mu`.
    pub fn mean(&self, h: &[f64]) -> f64 {
        self.weights.iter().zip(h).map(|(w, v)| w * v).sum()
    }
}

/// Which unknown a [`DistributionField`] stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Cell-averaged density `f`.
    Density,
    /// `h` with `f_k = mass * h_k * mu_k / dp^3`, so `<h>_mu = 1` for a
    /// normalized field.
    Relative,
}

/// Nonnegative cell values with cached total mass `∫ f dp`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    grid: MomentumGrid3,
    values: Vec<f64>,
    representation: Representation,
    mass: f64,
}

fn check_values(grid: &MomentumGrid3, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::InvalidParameter(format!(
            "field has {} values for a grid of {} cells",
            values.len(),
            grid.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Domain(format!("field values must be finite and nonnegative, found {v}")));
    }
    Ok(())
}

impl DistributionField {
    pub fn density(grid: MomentumGrid3, values: Vec<f64>) -> Result<Self> {
        check_values(&grid, &values)?;
        let mass = values.iter().sum::<f64>() * grid.cell_volume();
        Ok(Self {
            grid,
            values,
            representation: Representation::Density,
            mass,
        })
    }

    /// Density sampled at cell centers.
    pub fn from_fn(grid: MomentumGrid3, f: impl Fn(&Vector3<f64>) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.center(i))).collect();
        Self::density(grid, values)
    }

    /// Relative field carrying the given total mass.
    pub fn relative(grid: MomentumGrid3, values: Vec<f64>, mass: f64) -> Result<Self> {
        check_values(&grid, &values)?;
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::InvalidParameter(format!("mass must be nonnegative, got {mass}")));
        }
        Ok(Self {
            grid,
            values,
            representation: Representation::Relative,
            mass,
        })
    }

    pub fn grid(&self) -> &MomentumGrid3 {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Converts to `h` normalized to `<h>_mu = 1`.
    pub fn to_relative(&self, measure: &JuttnerMeasure) -> Result<Self> {
        match self.representation {
            Representation::Relative => Ok(self.clone()),
            Representation::Density => {
                if self.mass <= 0.0 {
                    return Err(Error::Domain("cannot normalize a field of zero mass".into()));
                }
                let dv = self.grid.cell_volume();
                let values = self
                    .values
                    .iter()
                    .zip(measure.weights())
                    .map(|(f, w)| f * dv / (self.mass * w))
                    .collect();
                Self::relative(self.grid, values, self.mass)
            }
        }
    }

    pub fn to_density(&self, measure: &JuttnerMeasure) -> Result<Self> {
        match self.representation {
            Representation::Density => Ok(self.clone()),
            Representation::Relative => {
                let scale = self.mass / self.grid.cell_volume();
                let values = self
                    .values
                    .iter()
                    .zip(measure.weights())
                    .map(|(h, w)| scale * h * w)
                    .collect();
                Self::density(self.grid, values)
            }
        }
    }
}
