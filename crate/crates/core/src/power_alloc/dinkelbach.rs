use rand::Rng;
use serde::{Deserialize, Serialize};

use super::max_sum::se_gradient;
use super::{PowerAllocation, PowerError};
use crate::channel::{EstimationStats, RateModel};
use crate::rng;

/// Settings for max-min energy efficiency, min_k log₂(1+SINR_k)/(ζ₁pᵘp_k + ζ₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DinkelbachConfig {
    /// Inverse amplifier efficiency.
    pub zeta1: f64,
    /// Static circuit power per user, in watts. The 0.1 W default is the
    /// usual per-device figure in cell-free energy-efficiency models; T for
    /// this baseline is sensitive to it (small values push every user toward
    /// minimal power and a long latency).
    pub zeta2: f64,
    pub tol: f64,
    pub max_outer: usize,
    /// Projected-subgradient steps per inner solve.
    pub inner_steps: usize,
    /// c in the step length c/√t.
    pub step_scale: f64,
    /// Seeded random starting points per inner solve, on top of the warm
    /// start and all-ones.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for DinkelbachConfig {
    fn default() -> Self {
        Self {
            zeta1: 1.0,
            zeta2: 0.1,
            tol: 1e-6,
            max_outer: 50,
            inner_steps: 500,
            step_scale: 0.1,
            restarts: 2,
            seed: 0,
        }
    }
}

impl DinkelbachConfig {
    pub fn validate(&self) -> Result<(), PowerError> {
        let nonneg = |x: f64| x >= 0.0 && x.is_finite();
        if !nonneg(self.zeta1) || !nonneg(self.zeta2) || self.zeta1 + self.zeta2 == 0.0 {
            return Err(PowerError::InvalidConfig("need ζ₁, ζ₂ ≥ 0 with ζ₁ + ζ₂ ≠ 0".into()));
        }
        if !(self.tol > 0.0) || !(self.step_scale > 0.0) {
            return Err(PowerError::InvalidConfig("tol and step scale must be positive".into()));
        }
        if self.max_outer == 0 || self.inner_steps == 0 {
            return Err(PowerError::InvalidConfig("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DinkelbachState {
    pub lambda: f64,
    pub phi: f64,
    pub zeta1: f64,
    pub zeta2: f64,
}

#[derive(Debug, Clone)]
pub struct DinkelbachReport {
    pub allocation: PowerAllocation,
    /// λ before the first update (0) and after every update.
    pub lambda_trace: Vec<f64>,
    /// φ at every outer iteration.
    pub phi_trace: Vec<f64>,
    pub state: DinkelbachState,
    pub converged: bool,
}

struct Problem<'a> {
    model: &'a RateModel,
    p_u: f64,
    zeta1: f64,
    zeta2: f64,
    floor: f64,
}

impl Problem<'_> {
    fn cost(&self, p: &[f64], k: usize) -> f64 {
        self.zeta1 * self.p_u * p[k] + self.zeta2
    }

    /// min_k {S_k − λ(ζ₁pᵘp_k + ζ₂)}.
    fn residual(&self, p: &[f64], lambda: f64) -> f64 {
        (0..p.len())
            .map(|k| self.model.spectral_efficiency(p, k) - lambda * self.cost(p, k))
            .fold(f64::INFINITY, f64::min)
    }

    /// min_k S_k / (ζ₁pᵘp_k + ζ₂).
    fn ratio(&self, p: &[f64]) -> f64 {
        (0..p.len())
            .map(|k| self.model.spectral_efficiency(p, k) / self.cost(p, k))
            .fold(f64::INFINITY, f64::min)
    }

    /// Projected subgradient ascent on the residual from `start`, returning
    /// the best iterate seen (the start included).
    fn ascend(&self, start: Vec<f64>, lambda: f64, cfg: &DinkelbachConfig) -> (Vec<f64>, f64) {
        let k = start.len();
        let mut p = start;
        let mut best = (p.clone(), self.residual(&p, lambda));
        let mut vals = vec![0.0; k];
        let mut dir = vec![0.0; k];
        let mut part = vec![0.0; k];
        for t in 1..=cfg.inner_steps {
            for (kk, v) in vals.iter_mut().enumerate() {
                *v = self.model.spectral_efficiency(&p, kk) - lambda * self.cost(&p, kk);
            }
            let low = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let slack = 1e-12 * low.abs().max(1.0);
            // Averaging over all near-active users keeps symmetric users symmetric.
            dir.iter_mut().for_each(|d| *d = 0.0);
            for kk in (0..k).filter(|&kk| vals[kk] <= low + slack) {
                se_gradient(self.model, &p, kk, &mut part);
                part[kk] -= lambda * self.zeta1 * self.p_u;
                dir.iter_mut().zip(&part).for_each(|(d, g)| *d += g);
            }
            let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            if norm == 0.0 || !norm.is_finite() {
                break;
            }
            let step = cfg.step_scale / (t as f64).sqrt();
            for (x, d) in p.iter_mut().zip(&dir) {
                *x = (*x + step * d / norm).clamp(self.floor, 1.0);
            }
            let h = self.residual(&p, lambda);
            if h > best.1 {
                best = (p.clone(), h);
            }
        }
        best
    }
}

/// Generalized Dinkelbach iteration for max-min energy efficiency.
///
/// Each outer step maximizes min_k {S_k(p) − λ(ζ₁pᵘp_k + ζ₂)} from the
/// previous maximizer, all-ones and `restarts` seeded random points. A new
/// point replaces the warm start only if it improves the residual without
/// lowering the ratio, which keeps λ nondecreasing in floating point too.
/// Stops once φ ≤ tol.
pub fn dinkelbach_maxmin_ee(
    stats: &EstimationStats,
    cfg: &DinkelbachConfig,
) -> Result<DinkelbachReport, PowerError> {
    cfg.validate()?;
    let model = RateModel::new(stats);
    let k = model.users();
    let problem = Problem {
        model: &model,
        p_u: stats.params.max_power_w,
        zeta1: cfg.zeta1,
        zeta2: cfg.zeta2,
        floor: if cfg.zeta2 > 0.0 { 0.0 } else { 1e-6 },
    };

    let mut lambda = 0.0;
    let mut phi = f64::INFINITY;
    let mut p = vec![1.0; k];
    let mut lambda_trace = vec![lambda];
    let mut phi_trace = Vec::new();
    let mut converged = false;

    for outer in 0..cfg.max_outer {
        let warm_h = problem.residual(&p, lambda);
        let mut starts = Vec::with_capacity(2 + cfg.restarts);
        if p.iter().any(|&x| x != 1.0) {
            starts.push(vec![1.0; k]);
        }
        for r in 0..cfg.restarts {
            let mut g = rng::stream(cfg.seed, &[rng::tag::DINKELBACH, outer as u64, r as u64]);
            starts.push((0..k).map(|_| g.random_range(problem.floor..=1.0)).collect());
        }
        let mut best = problem.ascend(p.clone(), lambda, cfg);
        for s in starts {
            let cand = problem.ascend(s, lambda, cfg);
            if cand.1 > best.1 {
                best = cand;
            }
        }
        if best.1 > warm_h && problem.ratio(&best.0) >= lambda {
            p = best.0;
        }
        phi = problem.residual(&p, lambda);
        lambda = problem.ratio(&p);
        phi_trace.push(phi);
        lambda_trace.push(lambda);
        if phi <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(DinkelbachReport {
        allocation: PowerAllocation::new(p)?,
        lambda_trace,
        phi_trace,
        state: DinkelbachState { lambda, phi, zeta1: cfg.zeta1, zeta2: cfg.zeta2 },
        converged,
    })
}
