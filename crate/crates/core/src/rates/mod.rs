//! Functional-inequality machinery: entropy and dissipation functionals,
//! the log-Sobolev constant and its curvature bound, Wang's spectral-gap
//! criterion, and decay-rate fitting.

mod fit;
pub mod functionals;
mod lsi;
mod wang;

pub use fit::{fit_decay_rate, DecayFit, FLOOR_MARGIN, MIN_FIT_POINTS};
pub use functionals::{
    csiszar_kullback_check, entropy, entropy_dissipation, gamma_weighted_grad, l2_functional, CsiszarKullback,
    Dissipation,
};
pub use lsi::{
    bakry_emery_bound, bakry_emery_ricci, log_sobolev_constant, p_minimum_dense, p_rational, stationary_point,
    LogSobolev,
};
pub use wang::{
    wang_data, wang_f, wang_g, wang_g_doubled_cutoff, wang_gamma, wang_prefactor, WangData, INNER_CUTOFF_EXPONENT,
};

use crate::error::Result;
use crate::kinetic::PhysicalParams;

/// Times at which `G_y` is probed; `G_y(1) = 0` by construction.
pub const WANG_PROBE: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 50.0];
/// Momentum dimension used for the Wang criterion.
pub const WANG_DIMENSION: u32 = 3;
/// Curvature probes cover `p0 ∈ [mc, BAKRY_PROBE_FACTOR · mc]`.
pub const BAKRY_PROBE_FACTOR: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub params: PhysicalParams,
    pub theta0: f64,
    /// Present iff `θ > θ0`.
    pub log_sobolev: Option<LogSobolev>,
    pub bakry_emery_min: f64,
    pub beta_y: f64,
    /// `(t, G_y(t))` over [`WANG_PROBE`].
    pub wang_values: Vec<(f64, f64)>,
    pub wang_sup: f64,
    pub wang_prefactor: f64,
    pub gap_estimate: Option<f64>,
}

impl RateReport {
    pub fn lsi_inverse_rate(&self) -> Option<f64> {
        self.log_sobolev.map(|l| l.inverse_rate)
    }

    pub fn p_minimizer(&self) -> Option<f64> {
        self.log_sobolev.map(|l| l.minimizer)
    }
}

pub fn rate_report(params: &PhysicalParams, beta_y: f64, gap_estimate: Option<f64>) -> Result<RateReport> {
    let wang_values = WANG_PROBE
        .iter()
        .map(|&t| Ok((t, wang_g(params, WANG_DIMENSION, beta_y, t)?)))
        .collect::<Result<Vec<_>>>()?;
    let wang_sup = wang_values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(RateReport {
        params: *params,
        theta0: params.theta0(),
        log_sobolev: log_sobolev_constant(params),
        bakry_emery_min: bakry_emery_bound(params, BAKRY_PROBE_FACTOR * params.mc())?,
        beta_y,
        wang_values,
        wang_sup,
        wang_prefactor: wang_prefactor(params, beta_y)?,
        gap_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_at_threshold_has_no_constant() {
        let p = PhysicalParams::new(1.0, 1.0, 3.5).unwrap();
        let r = rate_report(&p, 0.5, None).unwrap();
        assert_eq!(r.theta0, 3.5);
        assert!(r.lsi_inverse_rate().is_none());
        assert_eq!(r.wang_values[0], (1.0, 0.0));
        assert!(r.wang_sup.is_finite());
    }

    #[test]
    fn report_above_threshold() {
        let p = PhysicalParams::new(1.0, 1.0, 5.0).unwrap();
        let r = rate_report(&p, 0.5, Some(1.0)).unwrap();
        assert!((r.lsi_inverse_rate().unwrap() - 1.3624957364758163).abs() < 1e-10);
        assert!(r.bakry_emery_min >= r.lsi_inverse_rate().unwrap() - 1e-6);
    }
}
