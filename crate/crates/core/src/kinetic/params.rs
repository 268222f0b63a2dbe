use crate::error::{Error, Result};

/// Mass, speed of light and inverse bath temperature `theta = 1/(kT)`.
///
/// No units are imposed; all three are independent inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    m: f64,
    c: f64,
    theta: f64,
}

impl PhysicalParams {
    pub fn new(m: f64, c: f64, theta: f64) -> Result<Self> {
        for (name, v) in [("m", m), ("c", c), ("theta", theta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { m, c, theta })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mc(&self) -> f64 {
        self.m * self.c
    }

    /// Friction coefficient `theta / m`.
    pub fn beta(&self) -> f64 {
        self.theta / self.m
    }

    /// Dimensionless rest-energy ratio `theta m c^2`.
    pub fn xi(&self) -> f64 {
        self.theta * self.m * self.c * self.c
    }

    /// Threshold `7 / (2 m c^2)` above which the curvature bound is positive.
    pub fn theta0(&self) -> f64 {
        7.0 / (2.0 * self.m * self.c * self.c)
    }

    /// `theta c`, the rate of the Jüttner exponent per unit of `p0`.
    pub fn theta_c(&self) -> f64 {
        self.theta * self.c
    }

    pub fn with_c(&self, c: f64) -> Result<Self> {
        Self::new(self.m, c, self.theta)
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.m, self.c, theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_nonpositive_or_nonfinite() {
        assert!(PhysicalParams::new(0.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, f64::NAN).is_err());
        assert!(PhysicalParams::new(1.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn derived_constants() {
        let p = PhysicalParams::new(2.0, 3.0, 0.5).unwrap();
        assert_eq!(p.beta(), 0.25);
        assert_eq!(p.xi(), 9.0);
        assert_eq!(p.theta0(), 7.0 / 36.0);
        assert_eq!(PhysicalParams::new(1.0, 1.0, 1.0).unwrap().theta0(), 3.5);
    }

    proptest! {
        #[test]
        fn xi_invariant_under_mass_rescaling(
            m in 0.1f64..10.0, c in 0.1f64..10.0, th in 0.1f64..10.0, lambda in 0.1f64..10.0
        ) {
            let a = PhysicalParams::new(m, c, th).unwrap();
            let b = PhysicalParams::new(lambda * m, c, th / lambda).unwrap();
            prop_assert!(((a.xi() - b.xi()) / a.xi()).abs() < 1e-14);
        }
    }
}
