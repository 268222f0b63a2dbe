use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kinetic::partition::tail_fraction;
use crate::kinetic::physics::{diffusion_matrix, kinetic_momentum};
use crate::kinetic::{JuttnerMeasure, MomentumGrid3, PhysicalParams};
use nalgebra::Vector3;

/// Neighbor offsets of the 19-point stencil, center excluded.
pub(crate) const OFFSETS: [[i32; 3]; 18] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
    [-1, -1, 0],
    [-1, 1, 0],
    [1, -1, 0],
    [1, 1, 0],
    [-1, 0, -1],
    [-1, 0, 1],
    [1, 0, -1],
    [1, 0, 1],
    [0, -1, -1],
    [0, -1, 1],
    [0, 1, -1],
    [0, 1, 1],
];

fn slot(d: [i32; 3]) -> usize {
    OFFSETS
        .iter()
        .position(|o| *o == d)
        .expect("offset outside the 19-point stencil")
}

/// Equilibrium tail mass above which the grid is reported as too small.
pub const TAIL_WARNING: f64 = 1e-8;

/// Symmetric discretization of the generator in `h = f/J` form.
///
/// The Dirichlet form `∫ ∇h·D∇h dμ` is approximated on each dual cell (the
/// cube spanned by eight cell centers) by averaging the eight one-sided
/// gradients taken from its corners, with `J D` frozen at the cube center.
/// This yields the positive semidefinite matrix `K`, stored in difference form
/// `(K h)_k = Σ c_k,o (h_k - h_{k+o})` so that `K 1 = 0` holds exactly. The
/// generator is `L = -W^{-1} K` with `W = diag(μ)`.
///
/// Only interior dual cells exist, so no flux crosses the grid boundary.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    measure: JuttnerMeasure,
    coefficients: Vec<[f64; 18]>,
    strides: [isize; 18],
}

/// Builds the operator. Warns when the Jüttner mass outside the inscribed ball
/// exceeds [`TAIL_WARNING`].
pub fn build_operator(grid: MomentumGrid3, params: PhysicalParams) -> Result<DiscreteOperator> {
    let tail = tail_fraction(&params, grid.p_max())?;
    if tail > TAIL_WARNING {
        log::warn!(
            "equilibrium tail mass beyond |p| = {} is {tail:.3e}; the grid truncates the Jüttner state",
            grid.p_max()
        );
    }
    let measure = JuttnerMeasure::new(grid, params);
    let n = grid.n();
    let h = grid.spacing();
    let grid_sum = measure.scaled_mass() / grid.cell_volume();
    let scale = 1.0 / (8.0 * grid_sum * h * h);
    let tc = params.theta_c();

    let mut coefficients = vec![[0.0; 18]; grid.len()];
    let mut add = |k: usize, l: usize, d: [i32; 3], v: f64| {
        coefficients[k][slot(d)] += v;
        coefficients[l][slot([-d[0], -d[1], -d[2]])] += v;
    };
    for vi in 0..n - 1 {
        for vj in 0..n - 1 {
            for vk in 0..n - 1 {
                let corner = Vector3::new(
                    grid.coordinate(vi) + 0.5 * h,
                    grid.coordinate(vj) + 0.5 * h,
                    grid.coordinate(vk) + 0.5 * h,
                );
                let weight = (-tc * kinetic_momentum(&params, corner.norm())).exp();
                let a = diffusion_matrix(&params, &corner) * (weight * scale);
                if a.iter().any(|x| !x.is_finite()) || a[(0, 0)] <= 0.0 {
                    return Err(Error::Domain(format!("non-finite or indefinite flux tensor at {corner:?}")));
                }
                for bits in 0..8u32 {
                    let c = [(bits >> 2) & 1, (bits >> 1) & 1, bits & 1];
                    let base = grid.index(vi + c[0] as usize, vj + c[1] as usize, vk + c[2] as usize);
                    let sign: [i32; 3] = std::array::from_fn(|ax| if c[ax] == 0 { 1 } else { -1 });
                    let unit = |ax: usize| -> [i32; 3] {
                        let mut d = [0; 3];
                        d[ax] = sign[ax];
                        d
                    };
                    let target = |d: [i32; 3]| {
                        let [i, j, k] = grid.unindex(base);
                        grid.index(
                            (i as i32 + d[0]) as usize,
                            (j as i32 + d[1]) as usize,
                            (k as i32 + d[2]) as usize,
                        )
                    };
                    for ax in 0..3 {
                        let d = unit(ax);
                        add(base, target(d), d, a[(ax, ax)]);
                    }
                    for ax in 0..3 {
                        for bx in ax + 1..3 {
                            let coef = a[(ax, bx)] * (sign[ax] * sign[bx]) as f64;
                            let (da, db) = (unit(ax), unit(bx));
                            add(base, target(da), da, coef);
                            add(base, target(db), db, coef);
                            let cross = [da[0] - db[0], da[1] - db[1], da[2] - db[2]];
                            add(target(db), target(da), cross, -coef);
                        }
                    }
                }
            }
        }
    }
    let n = n as isize;
    let strides = OFFSETS.map(|o| (o[0] as isize * n + o[1] as isize) * n + o[2] as isize);
    Ok(DiscreteOperator {
        measure,
        coefficients,
        strides,
    })
}

impl DiscreteOperator {
    pub fn grid(&self) -> &MomentumGrid3 {
        self.measure.grid()
    }

    pub fn params(&self) -> &PhysicalParams {
        self.measure.params()
    }

    pub fn measure(&self) -> &JuttnerMeasure {
        &self.measure
    }

    /// `μ_k`, the diagonal of `W`.
    pub fn weights(&self) -> &[f64] {
        self.measure.weights()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `out = K h`.
    pub fn apply_k(&self, h: &[f64], out: &mut [f64]) {
        let last = h.len() as isize - 1;
        out.par_chunks_mut(1024).enumerate().for_each(|(chunk, block)| {
            for (r, o) in block.iter_mut().enumerate() {
                let k = chunk * 1024 + r;
                let hk = h[k];
                let c = &self.coefficients[k];
                let mut acc = 0.0;
                for s in 0..18 {
                    // Out-of-grid neighbors carry a zero coefficient; clamp keeps the read in bounds.
                    let l = (k as isize + self.strides[s]).clamp(0, last) as usize;
                    acc += c[s] * (hk - h[l]);
                }
                *o = acc;
            }
        });
    }

    /// `L h = -W^{-1} K h`.
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; h.len()];
        self.apply_k(h, &mut out);
        for (o, w) in out.iter_mut().zip(self.weights()) {
            *o = -*o / w;
        }
        out
    }

    /// `a^T K b`, the discrete Dirichlet form.
    pub fn dirichlet_form(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut kb = vec![0.0; b.len()];
        self.apply_k(b, &mut kb);
        a.iter().zip(&kb).map(|(x, y)| x * y).sum()
    }

    /// Diagonal of `K`.
    pub fn diagonal(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.iter().sum()).collect()
    }

    /// Number of stored off-diagonal couplings that are nonzero.
    pub fn nonzero_couplings(&self) -> usize {
        self.coefficients.iter().flatten().filter(|c| **c != 0.0).count()
    }
}
