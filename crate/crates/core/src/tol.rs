use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by every stage of the pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Hermiticity check, relative to `max(1, |X|_F)`.
    pub herm: f64,
    /// Singular values below `rank * sigma_max` are treated as zero.
    pub rank: f64,
    /// Lie-closure residual threshold for unit-norm brackets.
    pub closure: f64,
    /// Principal-angle cosine slack for subspace intersections.
    pub intersect: f64,
    /// Minimum eigenvalue gap accepted by sector clustering.
    pub cluster_gap: f64,
    /// Block-structure and invariance residuals.
    pub block: f64,
    pub ode_rtol: f64,
    pub ode_atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: 1e-10,
            rank: 1e-9,
            closure: 1e-8,
            intersect: 1e-8,
            cluster_gap: 1e-6,
            block: 1e-8,
            ode_rtol: 1e-9,
            ode_atol: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {name} must be positive")));
        }
        let slot = match name {
            "herm" => &mut self.herm,
            "rank" => &mut self.rank,
            "closure" => &mut self.closure,
            "intersect" => &mut self.intersect,
            "cluster_gap" => &mut self.cluster_gap,
            "block" => &mut self.block,
            "ode_rtol" => &mut self.ode_rtol,
            "ode_atol" => &mut self.ode_atol,
            _ => return Err(Error::InvalidParameter(format!("unknown tolerance `{name}`"))),
        };
        *slot = value;
        Ok(())
    }

    /// Parses `NAME=VALUE`.
    pub fn apply_assignment(&mut self, s: &str) -> Result<()> {
        let (name, value) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected NAME=VALUE, got `{s}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad tolerance value `{value}`")))?;
        self.set(name.trim(), v)
    }
}
