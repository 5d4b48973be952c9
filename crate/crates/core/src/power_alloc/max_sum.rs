use std::f64::consts::LN_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PowerAllocation, PowerError};
use crate::channel::{EstimationStats, RateModel};
use crate::rng;

/// ∂log₂(1+SINR_k)/∂p_i for every i, written into `out`.
pub(super) fn se_gradient(model: &RateModel, p: &[f64], k: usize, out: &mut [f64]) {
    let d = model.denominator(p, k);
    let a = model.signal[k];
    let t = d + p[k] * a;
    let common = a / (t * d * LN_2);
    for (i, o) in out.iter_mut().enumerate() {
        *o = if i == k {
            common * (d - model.gain[k][k] * p[k])
        } else {
            -common * model.gain[k][i] * p[k]
        };
    }
}

const SCALE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaxSumConfig {
    /// Stop a start once no coordinate moves by more than this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for MaxSumConfig {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 20_000, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct MaxSumReport {
    pub allocation: PowerAllocation,
    /// Σ_k R_k(p*) in bit/s.
    pub sum_rate: f64,
    /// Index into [all-ones, all-half, random, random] of the winning start.
    pub best_start: usize,
    pub converged: bool,
}

/// Projected gradient ascent on Σ_k log₂(1 + SINR_k) over [0,1]^K from four
/// starts (all-ones, all-half, two seeded random points). The step adapts:
/// it doubles after an accepted move and halves until the objective does
/// not decrease. On equal objectives the earlier start wins.
///
/// Each coordinate's step is scaled by max(p_j, SCALE_FLOOR). Curvature of the
/// log terms grows like 1/p_j², and weak users are the ones max-sum drives
/// toward zero, so an unscaled step crawls there for tens of thousands of
/// iterations.
pub fn max_sum_rate(stats: &EstimationStats, cfg: &MaxSumConfig) -> Result<MaxSumReport, PowerError> {
    if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(PowerError::InvalidConfig("max-sum needs tol > 0 and max_iter ≥ 1".into()));
    }
    let model = RateModel::new(stats);
    let k = model.users();
    let mut starts = vec![vec![1.0; k], vec![0.5; k]];
    for r in 0..2 {
        let mut g = rng::stream(cfg.seed, &[rng::tag::MAX_SUM, r]);
        starts.push((0..k).map(|_| g.random_range(0.0..=1.0)).collect());
    }

    let mut best: Option<(usize, Vec<f64>, f64, bool)> = None;
    for (idx, start) in starts.into_iter().enumerate() {
        let (p, v, ok) = ascend(&model, start, cfg);
        if best.as_ref().is_none_or(|b| v > b.2) {
            best = Some((idx, p, v, ok));
        }
    }
    let (best_start, p, v, converged) = best.expect("at least one start");
    Ok(MaxSumReport {
        sum_rate: model.prelog * model.bandwidth_hz * v,
        allocation: PowerAllocation::new(p)?,
        best_start,
        converged,
    })
}

fn sum_se(model: &RateModel, p: &[f64]) -> f64 {
    (0..model.users()).map(|k| model.spectral_efficiency(p, k)).sum()
}

fn ascend(model: &RateModel, mut p: Vec<f64>, cfg: &MaxSumConfig) -> (Vec<f64>, f64, bool) {
    let k = model.users();
    let mut value = sum_se(model, &p);
    let mut grad = vec![0.0; k];
    let mut part = vec![0.0; k];
    let mut step = 1.0;
    for _ in 0..cfg.max_iter {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for kk in 0..k {
            se_gradient(model, &p, kk, &mut part);
            grad.iter_mut().zip(&part).for_each(|(g, d)| *g += d);
        }
        let mut moved = 0.0;
        loop {
            let cand: Vec<f64> = p
                .iter()
                .zip(&grad)
                .map(|(x, g)| (x + step * x.max(SCALE_FLOOR) * g).clamp(0.0, 1.0))
                .collect();
            let shift = cand
                .iter()
                .zip(&p)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if shift <= cfg.tol {
                break;
            }
            let v = sum_se(model, &cand);
            if v >= value {
                moved = shift;
                p = cand;
                value = v;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if moved <= cfg.tol {
            return (p, value, true);
        }

    }
    (p, value, false)
}
