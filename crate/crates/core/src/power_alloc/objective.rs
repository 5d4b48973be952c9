use std::f64::consts::LN_2;

use super::{PowerError, TradeoffWeights};
use crate::channel::{EstimationStats, RateModel};

/// ν(p) = Σ_j θ₁E_j + θ₂ℓ_j with ℓ_j = bd/R_j and E_j = pᵘp_jℓ_j.
///
/// Internally everything is expressed per user as
/// ψ_j = (θ₁pᵘp_j + θ₂) / log₂(1 + SINR_j), and ν = s·Σψ_j with
/// s = bd / ((1 − τ_p/τ_c)B). The `*_normalized` methods drop s, which keeps
/// gradients O(1) for realistic b·d and B.
#[derive(Debug, Clone)]
pub struct EnergyLatencyObjective {
    model: RateModel,
    weights: TradeoffWeights,
    p_u: f64,
    scale: f64,
}

impl EnergyLatencyObjective {
    pub fn new(stats: &EstimationStats, weights: TradeoffWeights) -> Result<Self, PowerError> {
        weights.validate()?;
        let params = &stats.params;
        Ok(Self {
            model: RateModel::new(stats),
            weights,
            p_u: params.max_power_w,
            scale: params.payload_bits() / (params.prelog() * params.bandwidth_hz),
        })
    }

    pub fn model(&self) -> &RateModel {
        &self.model
    }

    pub fn weights(&self) -> TradeoffWeights {
        self.weights
    }

    /// Same instance, different weights.
    pub fn with_weights(&self, weights: TradeoffWeights) -> Result<Self, PowerError> {
        weights.validate()?;
        Ok(Self { weights, ..self.clone() })
    }

    /// Seconds per unit of normalized ν.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn users(&self) -> usize {
        self.model.users()
    }

    fn check(&self, p: &[f64]) -> Result<(), PowerError> {
        if p.len() != self.users() {
            return Err(PowerError::InvalidAllocation(format!(
                "expected {} entries, got {}",
                self.users(),
                p.len()
            )));
        }
        Ok(())
    }

    /// ψ_k. At p_k = 0 this is +∞ unless θ₂ = 0, where the limit
    /// θ₁pᵘ·D_k·ln2 / A_k is returned.
    pub fn psi(&self, p: &[f64], k: usize) -> Result<f64, PowerError> {
        let TradeoffWeights { theta1, theta2 } = self.weights;
        let d = self.model.denominator(p, k);
        if p[k] == 0.0 {
            if theta2 > 0.0 {
                return Err(PowerError::DegeneratePower { user: k });
            }
            return Ok(theta1 * self.p_u * d * LN_2 / self.model.signal[k]);
        }
        let se = (p[k] * self.model.signal[k] / d).ln_1p() / LN_2;
        Ok((theta1 * self.p_u * p[k] + theta2) / se)
    }

    pub fn value_normalized(&self, p: &[f64]) -> Result<f64, PowerError> {
        self.check(p)?;
        let mut total = 0.0;
        for k in 0..self.users() {
            total += self.psi(p, k)?;
        }
        Ok(total)
    }

    pub fn value(&self, p: &[f64]) -> Result<f64, PowerError> {
        Ok(self.scale * self.value_normalized(p)?)
    }

    /// ∂ν/∂p_j in normalized units: the own-user quotient plus the sum of
    /// cross terms through every other user's interference.
    pub fn partial_normalized(&self, p: &[f64], j: usize) -> Result<f64, PowerError> {
        self.check(p)?;
        self.coordinate(p, j).derivative(p[j])
    }

    pub fn partial(&self, p: &[f64], j: usize) -> Result<f64, PowerError> {
        Ok(self.scale * self.partial_normalized(p, j)?)
    }

    pub fn derivative_terms(&self, p: &[f64]) -> DerivativeTerms {
        DerivativeTerms::compute(&self.model, p)
    }

    /// Everything about ν as a function of p_j alone, with the other
    /// powers frozen at their values in `p`.
    pub(crate) fn coordinate(&self, p: &[f64], j: usize) -> CoordinateTerms {
        let m = &self.model;
        let k = m.users();
        let mut b_tilde = vec![0.0; k];
        let mut c_tilde = vec![0.0; k];
        for kp in (0..k).filter(|&kp| kp != j) {
            b_tilde[kp] = m.gain[kp][j];
            c_tilde[kp] = denominator_without(m, p, kp, j);
        }
        CoordinateTerms {
            j,
            signal: m.signal.clone(),
            b_bar: m.gain[j][j],
            c_bar: denominator_without(m, p, j, j),
            b_tilde,
            c_tilde,
            others: p.to_vec(),
            weights: self.weights,
            p_u: self.p_u,
        }
    }
}

/// Σ_{i≠skip} G[k][i] p_i + n_k.
fn denominator_without(m: &RateModel, p: &[f64], k: usize, skip: usize) -> f64 {
    m.gain[k]
        .iter()
        .zip(p)
        .enumerate()
        .filter(|(i, _)| *i != skip)
        .fold(m.noise[k], |acc, (_, (g, pi))| acc + g * pi)
}

pub(crate) struct CoordinateTerms {
    j: usize,
    signal: Vec<f64>,
    b_bar: f64,
    c_bar: f64,
    b_tilde: Vec<f64>,
    c_tilde: Vec<f64>,
    others: Vec<f64>,
    weights: TradeoffWeights,
    p_u: f64,
}

impl CoordinateTerms {
    pub(crate) fn derivative(&self, x: f64) -> Result<f64, PowerError> {
        let TradeoffWeights { theta1, theta2 } = self.weights;
        if x <= 0.0 {
            return Err(PowerError::DegeneratePower { user: self.j });
        }
        let a = self.signal[self.j];
        let (b, c) = (self.b_bar, self.c_bar);
        let se = (x * a / (b * x + c)).ln_1p() / LN_2;
        let l_bar = a * c / (((a + b) * x + c) * (b * x + c) * LN_2);
        let mut grad = (theta1 * self.p_u * se - (theta1 * self.p_u * x + theta2) * l_bar) / (se * se);

        for (kp, &pk) in self.others.iter().enumerate() {
            if kp == self.j {
                continue;
            }
            let (bt, ct, ak) = (self.b_tilde[kp], self.c_tilde[kp], self.signal[kp]);
            if pk == 0.0 {
                if theta2 > 0.0 {
                    return Err(PowerError::DegeneratePower { user: kp });
                }
                grad += theta1 * self.p_u * bt * LN_2 / ak;
                continue;
            }
            let inner = bt * x + ct;
            let se_k = (pk * ak / inner).ln_1p() / LN_2;
            let l_tilde = -bt * ak * pk / (inner * (inner + ak * pk) * LN_2);
            grad -= (theta1 * self.p_u * pk + theta2) * l_tilde / (se_k * se_k);
        }
        Ok(grad)
    }
}

/// The closed-form pieces of ∂ν, evaluated at one allocation.
///
/// For user j: SINR_j = Ā_j p_j / (B̄_j p_j + C̄_j) and L̄_j = ∂log₂(1+SINR_j)/∂p_j.
/// For k' ≠ j, viewed as a function of p_j:
/// SINR_k' = Ā_k' p_k' / (B̃[k'][j] p_j + C̃[k'][j]) and
/// L̃[k'][j] = ∂log₂(1+SINR_k')/∂p_j ≤ 0. Diagonals of the tilde matrices
/// are unused and left at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeTerms {
    pub a_bar: Vec<f64>,
    pub b_bar: Vec<f64>,
    pub c_bar: Vec<f64>,
    pub l_bar: Vec<f64>,
    pub b_tilde: Vec<Vec<f64>>,
    pub c_tilde: Vec<Vec<f64>>,
    pub l_tilde: Vec<Vec<f64>>,
}

impl DerivativeTerms {
    pub fn compute(model: &RateModel, p: &[f64]) -> Self {
        let k = model.users();
        let a_bar = model.signal.clone();
        let b_bar: Vec<f64> = (0..k).map(|j| model.gain[j][j]).collect();
        let c_bar: Vec<f64> = (0..k).map(|j| denominator_without(model, p, j, j)).collect();
        let l_bar = (0..k)
            .map(|j| {
                let (a, b, c, x) = (a_bar[j], b_bar[j], c_bar[j], p[j]);
                a * c / (((a + b) * x + c) * (b * x + c) * LN_2)
            })
            .collect();
        let mut b_tilde = vec![vec![0.0; k]; k];
        let mut c_tilde = vec![vec![0.0; k]; k];
        let mut l_tilde = vec![vec![0.0; k]; k];
        for kp in 0..k {
            for j in (0..k).filter(|&j| j != kp) {
                let bt = model.gain[kp][j];
                let ct = denominator_without(model, p, kp, j);
                let inner = bt * p[j] + ct;
                b_tilde[kp][j] = bt;
                c_tilde[kp][j] = ct;
                l_tilde[kp][j] =
                    -bt * a_bar[kp] * p[kp] / (inner * (inner + a_bar[kp] * p[kp]) * LN_2);
            }
        }
        Self { a_bar, b_bar, c_bar, l_bar, b_tilde, c_tilde, l_tilde }
    }
}

/// ν(p) in joules + seconds, weighted by θ.
pub fn nu_objective(
    stats: &EstimationStats,
    p: &[f64],
    weights: TradeoffWeights,
) -> Result<f64, PowerError> {
    EnergyLatencyObjective::new(stats, weights)?.value(p)
}

/// ∂ν/∂p_j in the same units as [`nu_objective`].
pub fn nu_gradient(
    stats: &EstimationStats,
    p: &[f64],
    weights: TradeoffWeights,
    j: usize,
) -> Result<f64, PowerError> {
    EnergyLatencyObjective::new(stats, weights)?.partial(p, j)
}
