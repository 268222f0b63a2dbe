//! Modified Bessel functions of the second kind for integer order 0, 1, 2.
//!
//! Below `x = 2` the convergent power series is used; above it Steed's
//! continued fraction for `K_0` and `K_1`. `K_2` follows from the upward
//! recurrence `K_2 = K_0 + (2/x) K_1`.

use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_SPLIT: f64 = 2.0;

fn series_k0_k1(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let ln_half = (0.5 * x).ln();

    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut harmonic = 0.0;
    let mut tail0 = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= y / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail0 += term * harmonic;
        if term < 1e-18 * i0 {
            break;
        }
    }
    let k0 = -(ln_half + EULER_GAMMA) * i0 + tail0;

    // psi(k+1) + psi(k+2) accumulated alongside the I_1 series.
    let mut term = 1.0;
    let mut i1 = 0.0;
    let mut tail1 = 0.0;
    let mut psi_a = -EULER_GAMMA;
    let mut psi_b = 1.0 - EULER_GAMMA;
    for k in 0..60 {
        if k > 0 {
            let kf = k as f64;
            term *= y / (kf * (kf + 1.0));
            psi_a += 1.0 / kf;
            psi_b += 1.0 / (kf + 1.0);
        }
        i1 += term;
        tail1 += term * (psi_a + psi_b);
        if k > 0 && term < 1e-18 * i1 {
            break;
        }
    }
    let i1 = 0.5 * x * i1;
    let k1 = 1.0 / x + ln_half * i1 - 0.25 * x * tail1;
    (k0, k1)
}

/// Steed's continued fraction: returns `(e^x K_0(x), e^x K_1(x))`.
fn steed_scaled_k0_k1(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    (k0, k0 * (x + 0.5 - h) / x)
}

fn steed_k0_k1(x: f64) -> (f64, f64) {
    let (k0, k1) = steed_scaled_k0_k1(x);
    let decay = (-x).exp();
    (k0 * decay, k1 * decay)
}

/// `(K_0(x), K_1(x))` for `x > 0`.
pub fn bessel_k0_k1(x: f64) -> (f64, f64) {
    assert!(x > 0.0, "K_n requires a positive argument");
    if x < SERIES_SPLIT {
        series_k0_k1(x)
    } else {
        steed_k0_k1(x)
    }
}

pub fn bessel_k2(x: f64) -> f64 {
    let (k0, k1) = bessel_k0_k1(x);
    k0 + 2.0 * k1 / x
}

/// `e^x K_2(x)`, finite for arguments where `K_2` itself underflows.
pub fn bessel_k2_scaled(x: f64) -> f64 {
    if x < SERIES_SPLIT {
        bessel_k2(x) * x.exp()
    } else {
        let (k0, k1) = steed_scaled_k0_k1(x);
        k0 + 2.0 * k1 / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values from 30-digit arbitrary-precision evaluation.
    #[test]
    fn k0_k1_reference_values() {
        let cases = [
            (0.5, 0.924_419_071_227_665_9, 1.656_441_120_003_301),
            (1.0, 0.421_024_438_240_708_3, 0.601_907_230_197_234_6),
            (2.0, 0.113_893_872_749_533_44, 0.139_865_881_816_522_43),
            (3.0, 0.034_739_504_386_279_25, 0.040_156_431_128_194_18),
            (10.0, 1.778_006_231_616_765e-5, 1.864_877_345_382_558_5e-5),
        ];
        for (x, k0, k1) in cases {
            let (a, b) = bessel_k0_k1(x);
            assert!(rel(a, k0) < 1e-13, "K0({x}) = {a}");
            assert!(rel(b, k1) < 1e-13, "K1({x}) = {b}");
        }
    }

    #[test]
    fn k2_reference_values() {
        let cases = [
            (0.5, 7.550_183_551_240_869),
            (1.0, 1.624_838_898_635_177_5),
            (5.0, 5.308_943_712_223_46e-3),
            (20.0, 6.329_543_612_292_228e-10),
        ];
        for (x, k2) in cases {
            assert!(rel(bessel_k2(x), k2) < 1e-13, "K2({x}) = {}", bessel_k2(x));
        }
    }

    #[test]
    fn scaled_k2_matches_and_survives_large_arguments() {
        assert!(rel(bessel_k2_scaled(20.0), 6.329_543_612_292_228e-10 * 20f64.exp()) < 1e-13);
        // Asymptotically e^x K_2(x) ~ sqrt(pi / 2x) (1 + 15/(8x)).
        let x = 1e4;
        let asym = (PI / (2.0 * x)).sqrt() * (1.0 + 15.0 / (8.0 * x) + 105.0 / (128.0 * x * x));
        assert!(rel(bessel_k2_scaled(x), asym) < 1e-9);
    }

    #[test]
    fn series_and_fraction_agree_at_the_split() {
        let (a0, a1) = series_k0_k1(2.0);
        let (b0, b1) = steed_k0_k1(2.0);
        assert!(rel(a0, b0) < 1e-14 && rel(a1, b1) < 1e-14);
    }
}
