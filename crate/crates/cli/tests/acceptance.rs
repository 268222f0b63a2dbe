//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rfpk_cli::experiments::{
    run_decay, run_kernel_check, run_mc_compare, run_newtonian_limit, solve_segmented, DecayOutput,
};
use rfpk_cli::RunConfig;
use rfpk_core::fv::{build_operator, spectral_gap_estimate, SolveTrajectory};
use rfpk_core::kinetic::physics::{diffusion_matrix, log_juttner, metric};
use rfpk_core::particles::diffusion_sqrt;
use rfpk_core::rates::{
    bakry_emery_bound, log_sobolev_constant, p_minimum_dense, wang_f, wang_g, BAKRY_PROBE_FACTOR, WANG_DIMENSION,
};
use rfpk_core::{DistributionField, MomentumGrid3, PhysicalParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn config(name: &str) -> RunConfig {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    RunConfig::load(&path, &[]).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn params(m: f64, c: f64, theta: f64) -> PhysicalParams {
    PhysicalParams::new(m, c, theta).unwrap()
}

fn juttner_field(p: &PhysicalParams, grid: MomentumGrid3) -> DistributionField {
    DistributionField::from_fn(grid, |q| log_juttner(p, q).exp()).unwrap()
}

fn shifted_field(p: &PhysicalParams, grid: MomentumGrid3) -> DistributionField {
    let shift = Vector3::new(1.0, 0.0, 0.0);
    DistributionField::from_fn(grid, |q| log_juttner(p, &(q - shift)).exp()).unwrap()
}

/// Trajectories produced along the way, for the mass and Csiszár-Kullback sweeps.
#[derive(Default)]
struct Ledger {
    runs: Vec<(&'static str, f64, usize, usize)>,
}

impl Ledger {
    fn keep(&mut self, name: &'static str, t: &SolveTrajectory) {
        let ck_fail = t.records.iter().filter(|r| !r.csiszar_kullback).count();
        self.runs.push((name, t.mass_drift(), t.records.len(), ck_fail));
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn equilibrium(ledger: &mut Ledger) -> Outcome {
    let p = params(1.0, 1.0, 1.0);
    let grid = MomentumGrid3::new(41, 8.0).unwrap();
    let start = Instant::now();
    let op = build_operator(grid, p).unwrap();
    let run = solve_segmented(&op, &juttner_field(&p, grid), 10.0, 1e-3, 1, &[]).unwrap();
    let elapsed = start.elapsed();
    let t = &run.trajectory;
    ledger.keep("equilibrium", t);
    let worst = t
        .records
        .iter()
        .map(|r| r.entropy.abs().max(r.dissipation.abs()).max(r.l2_dist.abs()).max(r.l1_dist.abs()))
        .fold(0.0, f64::max);
    let steps = t.records.len() - 1;
    outcome(
        worst <= 1e-10 && steps == 10_000 && elapsed <= Duration::from_secs(60),
        format!("{steps} steps, max diagnostic {worst:.2e} (<= 1e-10), {:.1} s (<= 60 s)", elapsed.as_secs_f64()),
    )
}

fn entropy_identity(ledger: &mut Ledger) -> Outcome {
    let p = params(1.0, 1.0, 1.0);
    let grid = MomentumGrid3::new(41, 8.0).unwrap();
    let op = build_operator(grid, p).unwrap();
    let f0 = shifted_field(&p, grid);
    let coarse = solve_segmented(&op, &f0, 0.5, 1e-3, 1, &[]).unwrap().trajectory;
    let fine = solve_segmented(&op, &f0, 0.5, 5e-4, 1, &[]).unwrap().trajectory;
    ledger.keep("entropy identity dt 1e-3", &coarse);
    ledger.keep("entropy identity dt 5e-4", &fine);
    let r1 = max_abs(&coarse.entropy_identity_residuals());
    let r2 = max_abs(&fine.entropy_identity_residuals());
    let slope = (r1 / r2).log2();
    let monotone = coarse.entropy_monotone(0.0) && fine.entropy_monotone(0.0);
    outcome(
        r1 <= 5e-3 && slope >= 0.9 && monotone,
        format!("max residual {r1:.3e} (<= 5e-3) at dt 1e-3, {r2:.3e} at dt 5e-4, order {slope:.3} (>= 0.9)"),
    )
}

fn log_sobolev(ledger: &mut Ledger) -> Outcome {
    let four = log_sobolev_constant(&params(1.0, 1.0, 4.0)).unwrap();
    let start = Instant::now();
    let decay = run_decay(&config("decay_theta4.toml")).unwrap();
    let elapsed = start.elapsed();
    ledger.keep("decay theta 4", &decay.trajectory);
    let reference = 1.0 / four.alpha;
    let five_params = params(1.0, 1.0, 5.0);
    let five = log_sobolev_constant(&five_params).unwrap();
    let (_, dense) = p_minimum_dense(&five_params, 1e3);
    let pass = (four.inverse_rate - 0.5).abs() <= 1e-12
        && decay.entropy_fit.rate >= 0.95 * reference
        && (five.inverse_rate - dense).abs() <= 1e-4
        && (five.inverse_rate - 1.36249).abs() <= 1e-4
        && elapsed <= Duration::from_secs(300);
    outcome(
        pass,
        format!(
            "theta 4: 1/(2 alpha) = {:.15}, entropy rate {:.4} vs 1/alpha {reference:.4} ({:.1} s); \
             theta 5: 1/(2 alpha) = {:.8}, dense minimum {dense:.8}",
            four.inverse_rate,
            decay.entropy_fit.rate,
            elapsed.as_secs_f64(),
            five.inverse_rate
        ),
    )
}

fn spectral_gap(ledger: &mut Ledger) -> Outcome {
    let decay: DecayOutput = run_decay(&config("decay_theta1.toml")).unwrap();
    ledger.keep("decay theta 1", &decay.trajectory);
    let ratio = decay.l2_fit.rate / (2.0 * decay.gap);
    let p = params(1.0, 1.0, 1.0);
    let beta_y = 0.5;
    let g: Vec<f64> = [1.0, 2.0, 5.0, 10.0, 50.0]
        .iter()
        .map(|&t| wang_g(&p, WANG_DIMENSION, beta_y, t).unwrap())
        .collect();
    let f_ratio = wang_f(WANG_DIMENSION, beta_y, 50.0).unwrap() / wang_f(WANG_DIMENSION, beta_y, 5.0).unwrap();
    let pass = decay.gap > 0.0
        && (ratio - 1.0).abs() <= 0.05
        && g[0] == 0.0
        && g[1..].iter().all(|v| v.is_finite())
        && f_ratio < 0.1;
    outcome(
        pass,
        format!(
            "gap {:.5}, L2 rate {:.5} = {ratio:.4} x 2 gap (within 5%); G = {g:?}; F(50)/F(5) = {f_ratio:.3e}",
            decay.gap, decay.l2_fit.rate
        ),
    )
}

fn classical_gap() -> Outcome {
    let p = params(1.0, 100.0, 1.0);
    let op = build_operator(MomentumGrid3::new(41, 8.0).unwrap(), p).unwrap();
    let gap = spectral_gap_estimate(&op).unwrap();
    outcome((gap - 1.0).abs() <= 0.03, format!("c = 100 gap {gap:.5} (1 within 3%)"))
}

fn newtonian_limit() -> Outcome {
    let start = Instant::now();
    let out = run_newtonian_limit(&config("newtonian_limit.toml")).unwrap();
    let elapsed = start.elapsed();
    let d: Vec<f64> = out.rows.iter().map(|r| r.l1_sup).collect();
    let c: Vec<f64> = out.rows.iter().map(|r| r.c).collect();
    let decreasing = d.windows(2).all(|w| w[1] < w[0]);
    outcome(
        decreasing && out.slope <= -0.5 && elapsed <= Duration::from_secs(600),
        format!(
            "c = {c:?}: sup distance {d:.4?}, log-log slope {:.3} (<= -0.5), {:.1} s",
            out.slope,
            elapsed.as_secs_f64()
        ),
    )
}

fn oracle_triangle() -> Outcome {
    let rows = run_mc_compare(&config("oracle_triangle.toml")).unwrap();
    let detail = rows
        .iter()
        .map(|r| {
            format!(
                "t {}: pde-mc {:.3e} (noise {:.3e}), pde-ou {:.3e}, mc-ou {:.3e}",
                r.t,
                r.l1_pde_vs_mc,
                r.noise_floor,
                r.l1_pde_vs_ou.unwrap_or(f64::NAN),
                r.l1_mc_vs_ou.unwrap_or(f64::NAN)
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(!rows.is_empty() && rows.iter().all(|r| r.pass()), detail)
}

fn kernel() -> Outcome {
    let out = run_kernel_check(&config("kernel_check.toml")).unwrap();
    let failed: Vec<&str> = out.checks.iter().filter(|c| !c.pass).map(|c| c.property.as_str()).collect();
    let marginal = out
        .checks
        .iter()
        .filter(|c| c.property.starts_with("marginal"))
        .map(|c| c.value)
        .fold(0.0, f64::max);
    outcome(
        out.all_pass() && out.gradient.finite && out.gradient.empirical_constant.is_finite(),
        format!(
            "exponent {}, {} checks, failed {failed:?}, marginal error {marginal:.2e} (<= 1e-5), gradient constant {:.3e}",
            out.calibrated.prefactor_exponent(),
            out.checks.len(),
            out.gradient.empirical_constant
        ),
    )
}

fn pointwise_identities() -> (f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut inverse, mut square, mut flux) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..2000 {
        let p = params(rng.random_range(0.2..5.0), rng.random_range(0.2..20.0), rng.random_range(0.1..10.0));
        let q = Vector3::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let d = diffusion_matrix(&p, &q);
        inverse = inverse.max((metric(&p, &q) * d - Matrix3::identity()).abs().max());
        let s = diffusion_sqrt(&p, &q);
        square = square.max(((s * s.transpose() - 2.0 * d).abs().max()) / d.abs().max());
        // D ∇ ln J + β p, with the gradient by central differences.
        let h = 1e-5;
        let grad = Vector3::from_fn(|i, _| {
            let e = Vector3::ith(i, h);
            (log_juttner(&p, &(q + e)) - log_juttner(&p, &(q - e))) / (2.0 * h)
        });
        let r = (d * grad + q * p.beta()).norm() / (1.0 + p.beta() * q.norm());
        flux = flux.max(r);
    }
    (inverse, square, flux)
}

fn inequalities(ledger: &Ledger) -> Outcome {
    let snapshots: usize = ledger.runs.iter().map(|r| r.2).sum();
    let ck_fail: usize = ledger.runs.iter().map(|r| r.3).sum();
    let (inverse, square, flux) = pointwise_identities();
    let mut curvature = Vec::new();
    for theta in [4.0, 5.0, 8.0] {
        let p = params(1.0, 1.0, theta);
        let bound = bakry_emery_bound(&p, BAKRY_PROBE_FACTOR * p.mc()).unwrap();
        let floor = log_sobolev_constant(&p).unwrap().inverse_rate;
        curvature.push((theta, bound, floor));
    }
    let curvature_ok = curvature.iter().all(|(_, b, f)| *b >= f - 1e-6);
    outcome(
        ck_fail == 0 && inverse <= 1e-6 && square <= 1e-6 && flux <= 1e-6 && curvature_ok,
        format!(
            "Csiszar-Kullback held on {}/{snapshots} snapshots; |gD - I| {inverse:.1e}, |ssT - 2D| {square:.1e}, \
             Juttner flux {flux:.1e}; curvature (theta, bound, min P) {curvature:.6?}",
            snapshots - ck_fail
        ),
    )
}

fn mass(ledger: &Ledger) -> Outcome {
    let worst = ledger.runs.iter().map(|r| r.1).fold(0.0, f64::max);
    let names: Vec<&str> = ledger.runs.iter().map(|r| r.0).collect();
    outcome(worst <= 1e-10, format!("max relative mass drift {worst:.2e} (<= 1e-10) over {names:?}"))
}

fn main() {
    let mut ledger = Ledger::default();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "equilibrium exactness", equilibrium(&mut ledger)));
    results.push((3, "discrete entropy identity", entropy_identity(&mut ledger)));
    results.push((4, "log-Sobolev rate", log_sobolev(&mut ledger)));
    results.push((5, "spectral gap below threshold", spectral_gap(&mut ledger)));
    results.push((6, "classical spectral gap", classical_gap()));
    results.push((7, "Newtonian limit", newtonian_limit()));
    results.push((8, "oracle triangle", oracle_triangle()));
    results.push((9, "classical Green function", kernel()));
    results.push((2, "mass conservation", mass(&ledger)));
    results.push((10, "functional inequalities", inequalities(&ledger)));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {n}: {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
