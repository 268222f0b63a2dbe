use super::cg::{pcg, CgStats};
use super::DiscreteOperator;
use crate::error::{Error, Result};
use crate::kinetic::{DistributionField, Representation};
use crate::rates::functionals::{csiszar_kullback_holds, entropy_of, l1_of, l2_of, LOG_FLOOR};

/// Relative residual of the implicit solve in the μ-norm.
pub const CG_TOLERANCE: f64 = 1e-11;
/// Most consecutive step halvings attempted on a negative update.
pub const MAX_HALVINGS: u32 = 3;
/// `min h >= -NEGATIVITY_TOLERANCE * max h` is accepted; the remainder is clipped.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;

fn cg_cap(op: &DiscreteOperator) -> usize {
    10 * op.len()
}

/// Solves `(W + dt K) x = W h` by CG preconditioned with `W`, i.e. CG in the
/// μ inner product. Every residual then sums to zero, so `<x>_mu = <h>_mu` up
/// to rounding regardless of the stopping point.
fn implicit_solve(op: &DiscreteOperator, h: &[f64], dt: f64) -> Result<(Vec<f64>, CgStats)> {
    let w = op.weights();
    let b: Vec<f64> = h.iter().zip(w).map(|(v, w)| v * w).collect();
    let mut x = h.to_vec();
    let apply = |v: &[f64], out: &mut [f64]| {
        op.apply_k(v, out);
        for i in 0..v.len() {
            out[i] = w[i] * v[i] + dt * out[i];
        }
    };
    let precondition = |r: &[f64], z: &mut [f64]| {
        for i in 0..r.len() {
            z[i] = r[i] / w[i];
        }
    };
    let stats = pcg(apply, precondition, &b, &mut x, CG_TOLERANCE, cg_cap(op))?;
    Ok((x, stats))
}

/// Counters accumulated while stepping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepCounters {
    pub substeps: usize,
    pub halvings: usize,
    pub cg_iterations: usize,
}

fn advance(op: &DiscreteOperator, h: &[f64], dt: f64, depth: u32, counters: &mut StepCounters) -> Result<Vec<f64>> {
    let (mut x, stats) = implicit_solve(op, h, dt)?;
    counters.cg_iterations += stats.iterations;
    let max = x.iter().copied().fold(0.0, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -NEGATIVITY_TOLERANCE * max {
        if depth == MAX_HALVINGS {
            return Err(Error::Negativity {
                halvings: depth,
                min,
                max,
            });
        }
        log::debug!("negative update (min h = {min:.3e}, max h = {max:.3e}); halving dt = {dt:e}");
        counters.halvings += 1;
        let mid = advance(op, h, 0.5 * dt, depth + 1, counters)?;
        return advance(op, &mid, 0.5 * dt, depth + 1, counters);
    }
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    counters.substeps += 1;
    Ok(x)
}

fn check_relative(op: &DiscreteOperator, state: &DistributionField) -> Result<()> {
    if state.representation() != Representation::Relative {
        return Err(Error::InvalidParameter("implicit step expects a field in h = f/J form".into()));
    }
    if state.grid() != op.grid() {
        return Err(Error::InvalidParameter("state and operator live on different grids".into()));
    }
    Ok(())
}

/// One implicit Euler step `(I - dt L) h_new = h_old`, halving `dt` up to
/// [`MAX_HALVINGS`] times if the update turns negative.
pub fn step_implicit(op: &DiscreteOperator, state: &DistributionField, dt: f64) -> Result<DistributionField> {
    step_implicit_counted(op, state, dt, &mut StepCounters::default())
}

pub fn step_implicit_counted(
    op: &DiscreteOperator,
    state: &DistributionField,
    dt: f64,
    counters: &mut StepCounters,
) -> Result<DistributionField> {
    check_relative(op, state)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let x = advance(op, state.values(), dt, 0, counters)?;
    DistributionField::relative(*op.grid(), x, state.mass())
}

/// `(log h)^T K h`, the dissipation consistent with the discrete generator.
pub fn scheme_dissipation(op: &DiscreteOperator, h: &[f64]) -> f64 {
    let log_h: Vec<f64> = h.iter().map(|v| v.max(LOG_FLOOR).ln()).collect();
    op.dirichlet_form(&log_h, h)
}

/// Diagnostics of one trajectory snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    /// `∫ f dp`.
    pub mass: f64,
    pub entropy: f64,
    pub dissipation: f64,
    /// `𝔏[h - 1]`.
    pub l2_dist: f64,
    /// `‖f - J_M‖_{L^1(dp)}`.
    pub l1_dist: f64,
    /// `‖h - 1‖_{L^1(dμ)} <= sqrt(2 𝔇)` held.
    pub csiszar_kullback: bool,
}

pub fn diagnostics(op: &DiscreteOperator, state: &DistributionField, t: f64) -> Diagnostics {
    let h = state.values();
    let w = op.weights();
    let mean: f64 = h.iter().zip(w).map(|(v, w)| v * w).sum();
    let entropy = entropy_of(h, w);
    let l1 = l1_of(h, w);
    Diagnostics {
        t,
        mass: state.mass() * mean,
        entropy,
        dissipation: scheme_dissipation(op, h),
        l2_dist: l2_of(h, w),
        l1_dist: state.mass() * l1,
        csiszar_kullback: csiszar_kullback_holds(l1, entropy),
    }
}

#[derive(Debug, Clone)]
pub struct SolveTrajectory {
    pub records: Vec<Diagnostics>,
    pub final_state: DistributionField,
    pub counters: StepCounters,
    /// Time step actually used (`T` divided by the step count).
    pub dt: f64,
}

impl SolveTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Largest relative deviation of the mass from its initial value.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.records[0].mass;
        self.records
            .iter()
            .map(|r| ((r.mass - m0) / m0).abs())
            .fold(0.0, f64::max)
    }

    /// `(𝔇(t_{k+1}) - 𝔇(t_k)) / Δt + 𝔍(t_{k+1})` between consecutive records.
    pub fn entropy_identity_residuals(&self) -> Vec<f64> {
        self.records
            .windows(2)
            .map(|w| (w[1].entropy - w[0].entropy) / (w[1].t - w[0].t) + w[1].dissipation)
            .collect()
    }

    /// Every step lowered (or kept) the entropy, up to `slack`.
    pub fn entropy_monotone(&self, slack: f64) -> bool {
        self.records.windows(2).all(|w| w[1].entropy <= w[0].entropy + slack)
    }
}

/// Recording cadence for [`solve_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Record diagnostics every this many steps (and always at the end).
    pub record_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { record_every: 1 }
    }
}

/// Steps `f0` to `t_final`, recording diagnostics after every step.
pub fn solve(op: &DiscreteOperator, f0: &DistributionField, t_final: f64, dt: f64) -> Result<SolveTrajectory> {
    solve_with(op, f0, t_final, dt, SolveOptions::default())
}

fn warn_on_tail_leak(op: &DiscreteOperator, state: &DistributionField, t: f64) {
    let Ok(f) = state.to_density(op.measure()) else {
        return;
    };
    let grid = op.grid();
    let max = f.values().iter().copied().fold(0.0, f64::max);
    let edge = (0..grid.len())
        .filter(|&i| grid.is_boundary(i))
        .map(|i| f.values()[i])
        .fold(0.0, f64::max);
    if edge > 1e-8 * max {
        log::warn!("boundary density at t = {t} is {:.3e} of the peak; mass may be truncated", edge / max);
    }
}

pub fn solve_with(
    op: &DiscreteOperator,
    f0: &DistributionField,
    t_final: f64,
    dt: f64,
    options: SolveOptions,
) -> Result<SolveTrajectory> {
    if !(t_final.is_finite() && t_final > 0.0 && dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("need T > 0 and dt > 0, got T = {t_final}, dt = {dt}")));
    }
    if f0.mass() <= 0.0 {
        return Err(Error::Domain("initial data has no mass".into()));
    }
    let steps = ((t_final / dt).round() as usize).max(1);
    let dt = t_final / steps as f64;
    let every = options.record_every.max(1);

    let mut state = match f0.representation() {
        Representation::Density => f0.to_relative(op.measure())?,
        Representation::Relative => {
            check_relative(op, f0)?;
            let mean = op.measure().mean(f0.values());
            let values = f0.values().iter().map(|v| v / mean).collect();
            DistributionField::relative(*op.grid(), values, f0.mass())?
        }
    };
    warn_on_tail_leak(op, &state, 0.0);
    let mut counters = StepCounters::default();
    let mut records = vec![diagnostics(op, &state, 0.0)];
    for step in 1..=steps {
        state = step_implicit_counted(op, &state, dt, &mut counters)?;
        if step % every == 0 || step == steps {
            records.push(diagnostics(op, &state, step as f64 * dt));
        }
    }
    warn_on_tail_leak(op, &state, t_final);
    if counters.halvings > 0 {
        log::warn!("{} step halvings on negative updates over {steps} steps", counters.halvings);
    }
    Ok(SolveTrajectory {
        records,
        final_state: state,
        counters,
        dt,
    })
}
