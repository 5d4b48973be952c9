//! Per-user uplink energy/latency and the number of FL rounds a budget affords.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{EstimationStats, RateModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BudgetError {
    #[error("budgets must be positive, got latency {latency_s} s and energy {energy_j} J")]
    InvalidBudget { latency_s: f64, energy_j: f64 },
    #[error("energy and latency vectors differ in length")]
    DimensionMismatch,
}

/// Total uplink latency 𝓛 (s) and energy 𝓔 (J) available for training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    pub latency_s: f64,
    pub energy_j: f64,
}

impl Default for BudgetSpec {
    fn default() -> Self {
        Self { latency_s: 200.0, energy_j: 200.0 }
    }
}

impl BudgetSpec {
    pub fn new(latency_s: f64, energy_j: f64) -> Result<Self, BudgetError> {
        let b = Self { latency_s, energy_j };
        b.validate()?;
        Ok(b)
    }

    /// Infinite budgets are allowed (one side then never binds).
    pub fn validate(&self) -> Result<(), BudgetError> {
        if !(self.latency_s > 0.0) || !(self.energy_j > 0.0) {
            return Err(BudgetError::InvalidBudget {
                latency_s: self.latency_s,
                energy_j: self.energy_j,
            });
        }
        Ok(())
    }
}

/// Per-user cost of one model upload.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLatency {
    /// E_j = pᵘ p_j ℓ_j (J).
    pub energy: Vec<f64>,
    /// ℓ_j = bd / R_j (s); +∞ for users with zero power.
    pub latency: Vec<f64>,
}

impl EnergyLatency {
    /// From rates in bit/s, payload b·d bits and max power pᵘ.
    pub fn from_rates(rates: &[f64], p: &[f64], payload_bits: f64, p_u: f64) -> Self {
        let latency: Vec<f64> = rates
            .iter()
            .map(|&r| if r > 0.0 { payload_bits / r } else { f64::INFINITY })
            .collect();
        let energy = latency
            .iter()
            .zip(p)
            .map(|(&l, &pj)| if pj == 0.0 { 0.0 } else { p_u * pj * l })
            .collect();
        Self { energy, latency }
    }

    /// Users whose latency is infinite (silent users).
    pub fn silent_users(&self) -> Vec<usize> {
        (0..self.latency.len())
            .filter(|&j| self.latency[j].is_infinite())
            .collect()
    }
}

pub fn energy_latency(stats: &EstimationStats, p: &[f64]) -> EnergyLatency {
    let model = RateModel::new(stats);
    EnergyLatency::from_rates(
        &model.rates(p),
        p,
        stats.params.payload_bits(),
        stats.params.max_power_w,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub energy: Vec<f64>,
    pub latency: Vec<f64>,
    /// max_j ℓ_j: a synchronous round waits for the slowest upload.
    pub ell_bar: f64,
    /// Σ_j E_j.
    pub e_bar: f64,
    pub t_max: f64,
    pub t: u64,
}

/// T_max = min(𝓛/ℓ̄, 𝓔/Ē), T = ⌊T_max⌋. A silent user makes ℓ̄ infinite
/// and therefore T = 0.
pub fn t_max(el: &EnergyLatency, budget: &BudgetSpec) -> Result<BudgetReport, BudgetError> {
    budget.validate()?;
    if el.energy.len() != el.latency.len() {
        return Err(BudgetError::DimensionMismatch);
    }
    let ell_bar = el.latency.iter().copied().fold(0.0, f64::max);
    let e_bar: f64 = el.energy.iter().sum();
    let t_max = (budget.latency_s / ell_bar).min(budget.energy_j / e_bar);
    Ok(BudgetReport {
        energy: el.energy.clone(),
        latency: el.latency.clone(),
        ell_bar,
        e_bar,
        t_max,
        t: if t_max.is_finite() { t_max.floor() as u64 } else { u64::MAX },
    })
}
