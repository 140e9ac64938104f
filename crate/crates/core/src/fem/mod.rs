//! Linear-elastic finite elements on 4-node tetrahedra and the cached peak
//! stress oracle built on top of them.

pub mod element;
mod oracle;
mod solver;
pub mod sparse;

use serde::{Deserialize, Serialize};

pub use oracle::{StressEntry, StressOracle, StressSweep};
pub use solver::{assemble_stiffness, von_mises_field, FemModel};

use crate::error::{Error, Result};

/// Isotropic linear-elastic material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub young_modulus: f64,
    pub poisson_ratio: f64,
}

impl Material {
    pub fn new(young_modulus: f64, poisson_ratio: f64) -> Result<Self> {
        let m = Self {
            young_modulus,
            poisson_ratio,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.young_modulus > 0.0) || !self.young_modulus.is_finite() {
            return Err(Error::Validation(format!(
                "Young's modulus must be positive, got {}",
                self.young_modulus
            )));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(Error::Validation(format!(
                "Poisson ratio must lie in (-1, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        Ok(())
    }
}

impl Default for Material {
    /// 1 GPa, nu = 0.3.
    fn default() -> Self {
        Self {
            young_modulus: 1e9,
            poisson_ratio: 0.3,
        }
    }
}
