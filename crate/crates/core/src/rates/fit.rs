use crate::error::{Error, Result};

/// Fewest points a decay fit accepts.
pub const MIN_FIT_POINTS: usize = 5;
/// Values must exceed the floor by this factor to enter the fit.
pub const FLOOR_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `λ` in `value ≈ e^{intercept - λ t}`.
    pub rate: f64,
    pub intercept: f64,
    /// RMS residual of `log value`.
    pub rms_residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Least-squares line through `(t, log v)` over the leading run of samples
/// with `v > 10 · floor`. Later samples are ignored once one falls below.
pub fn fit_decay_rate(times: &[f64], values: &[f64], floor: f64) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidParameter(format!(
            "{} times for {} values",
            times.len(),
            values.len()
        )));
    }
    let threshold = FLOOR_MARGIN * floor.max(0.0);
    let used = values
        .iter()
        .take_while(|&&v| v.is_finite() && v > threshold && v > 0.0)
        .count();
    if used < MIN_FIT_POINTS {
        return Err(Error::WindowTooShort {
            points: used,
            required: MIN_FIT_POINTS,
        });
    }
    let t = &times[..used];
    let y: Vec<f64> = values[..used].iter().map(|v| v.ln()).collect();
    let n = used as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|a| (a - tm).powi(2)).sum();
    if !(stt > 0.0) {
        return Err(Error::InvalidParameter("fit times must not coincide".into()));
    }
    let sty: f64 = t.iter().zip(&y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let rms = (t.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit {
        rate: -slope,
        intercept,
        rms_residual: rms,
        window: (t[0], t[used - 1]),
        points: used,
    })
}
