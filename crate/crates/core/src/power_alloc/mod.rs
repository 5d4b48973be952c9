//! Uplink power allocation: the weighted energy–latency objective ν and its
//! coordinate-descent minimizer, plus the max-min energy-efficiency
//! (Dinkelbach) and max-sum-rate baselines.

mod coordinate;
mod dinkelbach;
mod max_sum;
mod objective;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coordinate::{coordinate_descent, stationarity_violations, CdReport};
pub use dinkelbach::{dinkelbach_maxmin_ee, DinkelbachConfig, DinkelbachReport, DinkelbachState};
pub use max_sum::{max_sum_rate, MaxSumConfig, MaxSumReport};
pub use objective::{nu_gradient, nu_objective, DerivativeTerms, EnergyLatencyObjective};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("user {user} has zero power: latency is infinite")]
    DegeneratePower { user: usize },
    #[error("invalid trade-off weights: {0}")]
    InvalidWeights(String),
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// θ₁ weighs energy, θ₂ latency. Any nonnegative pair with a positive sum is
/// accepted; only the ratio matters to the minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeoffWeights {
    pub theta1: f64,
    pub theta2: f64,
}

impl Default for TradeoffWeights {
    fn default() -> Self {
        Self { theta1: 1.0, theta2: 1.0 }
    }
}

impl TradeoffWeights {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self, PowerError> {
        let w = Self { theta1, theta2 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), PowerError> {
        let ok = |x: f64| x >= 0.0 && x.is_finite();
        if !ok(self.theta1) || !ok(self.theta2) {
            return Err(PowerError::InvalidWeights(format!(
                "({}, {}) must be finite and nonnegative",
                self.theta1, self.theta2
            )));
        }
        if self.theta1 + self.theta2 <= 0.0 {
            return Err(PowerError::InvalidWeights("θ₁ + θ₂ must be positive".into()));
        }
        Ok(())
    }

    /// The same direction rescaled to θ₁ + θ₂ = 1.
    pub fn normalized(&self) -> Self {
        let s = self.theta1 + self.theta2;
        Self {
            theta1: self.theta1 / s,
            theta2: self.theta2 / s,
        }
    }
}

/// Power-control coefficients p ∈ [0, 1]^K (fractions of pᵘ).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation(Vec<f64>);

impl PowerAllocation {
    pub fn new(p: Vec<f64>) -> Result<Self, PowerError> {
        if let Some((j, v)) = p
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(PowerError::InvalidAllocation(format!("p[{j}] = {v} outside [0, 1]")));
        }
        Ok(Self(p))
    }

    pub fn full(k: usize) -> Self {
        Self(vec![1.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for PowerAllocation {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Coordinate-descent settings. η applies to ν in normalized units
/// (see [`EnergyLatencyObjective`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub eta: f64,
    pub eps_grad: f64,
    pub eps_outer: f64,
    pub max_sweeps: usize,
    pub max_inner: usize,
    pub p_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta: 0.05,
            eps_grad: 1e-6,
            eps_outer: 1e-5,
            max_sweeps: 200,
            max_inner: 20_000,
            p_floor: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), PowerError> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.eta) || !pos(self.eps_grad) || !pos(self.eps_outer) {
            return Err(PowerError::InvalidConfig("η, ε̄ and ε must be positive".into()));
        }
        if self.max_sweeps == 0 || self.max_inner == 0 {
            return Err(PowerError::InvalidConfig("iteration caps must be positive".into()));
        }
        if !(self.p_floor > 0.0 && self.p_floor < 1.0) {
            return Err(PowerError::InvalidConfig("p_floor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Total implementation cost of M APs with N antennas each, M(1 + cN).
pub fn antenna_cost(aps: usize, antennas: usize, cost_per_antenna: f64) -> f64 {
    aps as f64 * (1.0 + cost_per_antenna * antennas as f64)
}
