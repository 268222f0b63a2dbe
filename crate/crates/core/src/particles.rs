//! Euler-Maruyama oracle for the Itô SDE
//! `dp = (-(theta/m) p + div D) dt + sigma dB`, `sigma sigma^T = 2D`,
//! whose forward equation is `∂_t f = ∂_i (D^{ij} ∂_j f + (theta/m) p^i f)`.
//!
//! Expanding the forward operator of the SDE gives
//! `∂_i ∂_j (D^{ij} f) - ∂_i (a^i f) = ∂_i (D^{ij} ∂_j f) + ∂_i ((∂_j D^{ij} - a^i) f)`,
//! so matching requires `a^i = ∂_j D^{ij} - (theta/m) p^i`.
//!
//! Noise for particle `k` at step `s` is read from ChaCha8 stream `k` at word
//! offset `8 s`, so ensembles do not depend on thread scheduling.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kinetic::physics::{diffusion_divergence, juttner_scaled_radial, p0};
use crate::kinetic::{tail_cutoff, DistributionField, MomentumGrid3, PhysicalParams, Representation};

/// ChaCha words consumed per particle step (four `u64` draws).
const WORDS_PER_STEP: u128 = 8;
const SAMPLER_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const JUTTNER_TABLE: usize = 8192;

/// Itô drift `-(theta/m) p + div D`.
pub fn ito_drift(params: &PhysicalParams, p: &Vector3<f64>) -> Vector3<f64> {
    -params.beta() * p + diffusion_divergence(params, p)
}

/// Symmetric square root of `2D`.
pub fn diffusion_sqrt(params: &PhysicalParams, p: &Vector3<f64>) -> Matrix3<f64> {
    let mc = params.mc();
    let e = p0(params, p);
    let perp = (2.0 * mc / e).sqrt();
    let par = (2.0 * e / mc).sqrt();
    let r2 = p.norm_squared();
    if r2 == 0.0 {
        return Matrix3::identity() * perp;
    }
    let proj = p * p.transpose() / r2;
    Matrix3::identity() * perp + proj * (par - perp)
}

/// Largest admissible momentum before the run is declared unstable.
pub fn blow_up_limit(params: &PhysicalParams) -> f64 {
    1e3 * params.mc().max((params.m() / params.theta()).sqrt())
}

#[derive(Debug, Clone)]
pub enum InitialSampler {
    Point(Vector3<f64>),
    /// Isotropic Gaussian with per-axis standard deviation `sigma`.
    Gaussian { mean: Vector3<f64>, sigma: f64 },
    /// Normalized Jüttner law of the simulation parameters.
    Juttner,
    /// Piecewise-constant law of a density field, uniform within cells.
    Field(DistributionField),
}

/// Open-interval uniform from 53 random bits.
fn unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Three standard normals from exactly four `u64` draws.
fn normal3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let (u1, u2, u3, u4) = (unit(rng.next_u64()), unit(rng.next_u64()), unit(rng.next_u64()), unit(rng.next_u64()));
    let r1 = (-2.0 * u1.ln()).sqrt();
    let r2 = (-2.0 * u3.ln()).sqrt();
    Vector3::new(r1 * (2.0 * PI * u2).cos(), r1 * (2.0 * PI * u2).sin(), r2 * (2.0 * PI * u4).cos())
}

fn stream(seed: u64, particle: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(particle as u64);
    rng
}

/// Inverse-CDF table for `|p|` under the Jüttner law.
struct RadialTable {
    radii: Vec<f64>,
    cdf: Vec<f64>,
}

impl RadialTable {
    fn juttner(params: &PhysicalParams) -> Self {
        let r_max = tail_cutoff(params);
        let h = r_max / (JUTTNER_TABLE - 1) as f64;
        let radii: Vec<f64> = (0..JUTTNER_TABLE).map(|i| i as f64 * h).collect();
        let dens: Vec<f64> = radii.iter().map(|&r| r * r * juttner_scaled_radial(params, r)).collect();
        let mut cdf = vec![0.0; JUTTNER_TABLE];
        for i in 1..JUTTNER_TABLE {
            cdf[i] = cdf[i - 1] + 0.5 * h * (dens[i] + dens[i - 1]);
        }
        let total = cdf[JUTTNER_TABLE - 1];
        cdf.iter_mut().for_each(|v| *v /= total);
        Self { radii, cdf }
    }

    fn invert(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let s = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.radii[i - 1] + s * (self.radii[i] - self.radii[i - 1])
    }
}

enum Prepared<'a> {
    Point(Vector3<f64>),
    Gaussian(Vector3<f64>, f64),
    Juttner(RadialTable),
    Field(&'a MomentumGrid3, Vec<f64>),
}

impl Prepared<'_> {
    fn draw(&self, rng: &mut ChaCha8Rng) -> Vector3<f64> {
        match self {
            Prepared::Point(p) => *p,
            Prepared::Gaussian(mean, sigma) => mean + normal3(rng) * *sigma,
            Prepared::Juttner(table) => {
                let r = table.invert(unit(rng.next_u64()));
                let mut dir = normal3(rng);
                while dir.norm_squared() == 0.0 {
                    dir = normal3(rng);
                }
                dir.normalize() * r
            }
            Prepared::Field(grid, cdf) => {
                let u = unit(rng.next_u64());
                let idx = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
                let h = grid.spacing();
                let c = grid.center(idx);
                Vector3::new(
                    c[0] + h * (rng.random::<f64>() - 0.5),
                    c[1] + h * (rng.random::<f64>() - 0.5),
                    c[2] + h * (rng.random::<f64>() - 0.5),
                )
            }
        }
    }
}

/// `n` independent draws from `sampler`, deterministic in `seed`.
pub fn sample_initial(
    params: &PhysicalParams,
    sampler: &InitialSampler,
    n: usize,
    seed: u64,
) -> Result<Vec<Vector3<f64>>> {
    let prepared = match sampler {
        InitialSampler::Point(p) => Prepared::Point(*p),
        InitialSampler::Gaussian { mean, sigma } => {
            if !(sigma.is_finite() && *sigma >= 0.0) {
                return Err(Error::InvalidParameter(format!("Gaussian sigma must be >= 0, got {sigma}")));
            }
            Prepared::Gaussian(*mean, *sigma)
        }
        InitialSampler::Juttner => Prepared::Juttner(RadialTable::juttner(params)),
        InitialSampler::Field(field) => {
            let cdf = field_cdf(field)?;
            Prepared::Field(field.grid(), cdf)
        }
    };
    let salted = seed ^ SAMPLER_SALT;
    Ok((0..n)
        .into_par_iter()
        .map(|k| prepared.draw(&mut stream(salted, k)))
        .collect())
}

fn field_cdf(field: &DistributionField) -> Result<Vec<f64>> {
    if field.representation() != Representation::Density {
        return Err(Error::InvalidParameter("sampling needs a density field".into()));
    }
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = field
        .values()
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    if !(acc > 0.0) {
        return Err(Error::Domain("field has no mass".into()));
    }
    cdf.iter_mut().for_each(|v| *v /= acc);
    Ok(cdf)
}

#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    pub params: PhysicalParams,
    pub momenta: Vec<Vector3<f64>>,
    pub rng_seed: u64,
    pub dt: f64,
    pub steps_taken: u64,
}

impl ParticleEnsemble {
    pub fn new(params: PhysicalParams, momenta: Vec<Vector3<f64>>, rng_seed: u64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if momenta.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::Domain("initial momenta must be finite".into()));
        }
        Ok(Self {
            params,
            momenta,
            rng_seed,
            dt,
            steps_taken: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.steps_taken as f64 * self.dt
    }

    /// Takes `steps` further Euler-Maruyama steps. On blow-up the ensemble is
    /// left partially advanced and must be discarded.
    pub fn advance(&mut self, steps: u64) -> Result<()> {
        let params = self.params;
        let dt = self.dt;
        let sdt = dt.sqrt();
        let seed = self.rng_seed;
        let first = self.steps_taken;
        let limit = blow_up_limit(&params);
        self.momenta.par_iter_mut().enumerate().try_for_each(|(k, p)| {
            let mut rng = stream(seed, k);
            rng.set_word_pos(first as u128 * WORDS_PER_STEP);
            let mut q = *p;
            for s in first..first + steps {
                let xi = normal3(&mut rng);
                q += ito_drift(&params, &q) * dt + diffusion_sqrt(&params, &q) * xi * sdt;
                let norm = q.norm();
                if !(norm <= limit) {
                    return Err(Error::BlowUp { step: s + 1, norm, limit });
                }
            }
            *p = q;
            Ok(())
        })?;
        self.steps_taken += steps;
        Ok(())
    }

    /// Advances to absolute time `t` (rounded to the step grid).
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        let target = (t / self.dt).round() as u64;
        if target > self.steps_taken {
            self.advance(target - self.steps_taken)?;
        }
        Ok(())
    }

    /// Empirical mean and per-axis standard error.
    pub fn mean(&self) -> (Vector3<f64>, Vector3<f64>) {
        let n = self.len() as f64;
        let mean = self.momenta.iter().fold(Vector3::zeros(), |a, p| a + p) / n;
        let var = self
            .momenta
            .iter()
            .fold(Vector3::zeros(), |a: Vector3<f64>, p| a + (p - mean).component_mul(&(p - mean)))
            / (n - 1.0).max(1.0);
        (mean, var.map(|v| (v / n).sqrt()))
    }
}

/// Samples `n_particles` from `sampler` and integrates to `t_final`.
pub fn simulate(
    params: &PhysicalParams,
    n_particles: usize,
    dt: f64,
    t_final: f64,
    seed: u64,
    sampler: &InitialSampler,
) -> Result<ParticleEnsemble> {
    if n_particles == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::InvalidParameter(format!("T must be >= 0, got {t_final}")));
    }
    let momenta = sample_initial(params, sampler, n_particles, seed)?;
    let mut ensemble = ParticleEnsemble::new(*params, momenta, seed, dt)?;
    ensemble.advance_to(t_final)?;
    Ok(ensemble)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramComparison {
    /// `Σ |ρ_particles - ρ_field| Δp³`, plus the particle mass off the grid.
    pub l1: f64,
    /// `sqrt(K / n)` with `K` occupied cells.
    pub noise_floor: f64,
    pub occupied_cells: usize,
    pub outside_fraction: f64,
}

/// Cell counts of the ensemble on `grid`, and the number of particles off it.
pub fn histogram(ensemble: &ParticleEnsemble, grid: &MomentumGrid3) -> (Vec<u64>, u64) {
    let len = grid.len();
    ensemble
        .momenta
        .par_chunks(4096)
        .map(|chunk| {
            let mut counts = vec![0u64; len];
            let mut outside = 0u64;
            for p in chunk {
                match grid.locate(p) {
                    Some(i) => counts[i] += 1,
                    None => outside += 1,
                }
            }
            (counts, outside)
        })
        .reduce(
            || (vec![0u64; len], 0),
            |(mut a, oa), (b, ob)| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                (a, oa + ob)
            },
        )
}

/// L¹ distance between the ensemble's empirical law and the density `field`,
/// both normalized to unit mass.
pub fn compare_histogram(ensemble: &ParticleEnsemble, field: &DistributionField) -> Result<HistogramComparison> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if field.representation() != Representation::Density {
        return Err(Error::InvalidParameter("comparison needs a density field".into()));
    }
    let grid = field.grid();
    let mass = field.mass();
    if !(mass > 0.0) {
        return Err(Error::Domain("field has no mass".into()));
    }
    let (counts, outside) = histogram(ensemble, grid);
    let n = ensemble.len() as f64;
    let dv = grid.cell_volume();
    let mut l1 = outside as f64 / n;
    for (c, f) in counts.iter().zip(field.values()) {
        l1 += (*c as f64 / n - f * dv / mass).abs();
    }
    let occupied = counts.iter().filter(|&&c| c > 0).count();
    Ok(HistogramComparison {
        l1,
        noise_floor: (occupied as f64 / n).sqrt(),
        occupied_cells: occupied,
        outside_fraction: outside as f64 / n,
    })
}
