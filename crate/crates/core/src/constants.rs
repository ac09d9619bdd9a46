use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strength of the momentum-fluctuation coupling. Fixed; not a parameter.
pub const ALPHA: f64 = 0.5;

/// Physical constants shared by all solvers and diagnostics.
///
/// `c` only enters the relativistic solver; non-relativistic code never reads it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
    pub c: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64, c: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("mass", mass), ("c", c)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { hbar, mass, c })
    }

    /// Constants with `c` left at 1; for purely non-relativistic work.
    pub fn nonrelativistic(hbar: f64, mass: f64) -> Result<Self> {
        Self::new(hbar, mass, 1.0)
    }

    /// Diffusion coefficient D = hbar / 2m of the stochastic picture.
    /// Always derived, never stored.
    pub fn diffusion_coefficient(&self) -> f64 {
        self.hbar / (2.0 * self.mass)
    }

    pub fn alpha(&self) -> f64 {
        ALPHA
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive() {
        assert!(PhysicalConstants::new(0.0, 1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, -2.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn diffusion_is_derived() {
        let c = PhysicalConstants::new(2.0, 4.0, 1.0).unwrap();
        assert_eq!(c.diffusion_coefficient(), 0.25);
        assert_eq!(c.alpha(), 0.5);
    }
}
