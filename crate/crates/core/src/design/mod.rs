//! Choosing which contact locations to simulate.
//!
//! The V-optimal relaxation is solved by projected gradient descent and
//! rounded greedily; four randomized or geometric baselines share the same
//! [`DesignSet`] output.

mod criteria;
mod greedy;
mod relaxation;
mod samplers;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use criteria::{phi_g, phi_g_subset, phi_v, phi_v_gradient, phi_v_subset, subset_weights};
pub use greedy::{find_c, greedy_round, potential, whiten};
pub use relaxation::{project_capped_simplex, solve_relaxation, Relaxation};
pub use samplers::{
    leverage_scores, sample_kmeans, sample_levscore, sample_probability, sample_uniform, weighted_without_replacement,
};

use crate::error::{Error, Result};

/// Training-set selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Greedy,
    Uniform,
    Levscore,
    Kmeans,
    Sampling,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Greedy,
        Method::Uniform,
        Method::Levscore,
        Method::Kmeans,
        Method::Sampling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::Uniform => "uniform",
            Method::Levscore => "levscore",
            Method::Kmeans => "kmeans",
            Method::Sampling => "sampling",
        }
    }

    /// Whether repeated trials with different seeds give different sets.
    pub fn is_randomized(self) -> bool {
        matches!(self, Method::Uniform | Method::Levscore | Method::Sampling)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Validation(format!("unknown design method '{s}'")))
    }
}

/// Selected training locations (region indices, in selection order).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSet {
    pub indices: Vec<usize>,
    pub method: Method,
    pub seed: Option<u64>,
}

impl DesignSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Tuning knobs of the relaxation and of the greedy rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignOptions {
    pub armijo_alpha: f64,
    pub armijo_beta: f64,
    pub max_backtracks: usize,
    /// Stop when Φ_V dropped by less than this fraction over `window` iterations.
    pub tolerance: f64,
    pub window: usize,
    pub max_iterations: usize,
    pub potential_alpha: f64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            armijo_alpha: 0.3,
            armijo_beta: 0.5,
            max_backtracks: 50,
            tolerance: 1e-6,
            window: 5,
            max_iterations: 500,
            potential_alpha: 1.0,
        }
    }
}

impl DesignOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.armijo_alpha > 0.0 && self.armijo_alpha <= 0.5) {
            return Err(Error::Validation(format!("armijo_alpha must lie in (0, 0.5], got {}", self.armijo_alpha)));
        }
        if !(self.armijo_beta > 0.0 && self.armijo_beta < 1.0) {
            return Err(Error::Validation(format!("armijo_beta must lie in (0, 1), got {}", self.armijo_beta)));
        }
        if !(self.potential_alpha > 0.0) || !self.potential_alpha.is_finite() {
            return Err(Error::Validation(format!("potential_alpha must be positive, got {}", self.potential_alpha)));
        }
        if !(self.tolerance >= 0.0) || self.window == 0 || self.max_iterations == 0 {
            return Err(Error::Validation("invalid relaxation stopping rule".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_budget(n: usize, n_fl: usize) -> Result<()> {
    if n_fl == 0 || n_fl > n {
        return Err(Error::Validation(format!("budget n_FL = {n_fl} must lie in 1..={n}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert!("random".parse::<Method>().is_err());
        assert_eq!("Greedy".parse::<Method>().unwrap(), Method::Greedy);
    }

    #[test]
    fn default_options_are_valid() {
        DesignOptions::default().validate().unwrap();
        let bad = DesignOptions {
            armijo_alpha: 0.7,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
