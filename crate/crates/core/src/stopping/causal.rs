use serde::{Deserialize, Serialize};

use super::bounds::{convex_upper_bound, BoundParams};
use super::search::{best_threshold, EpsilonGrid};
use super::{score, Runner, SmoothObjective, StoppingError, StoppingProblem, StoppingTrace, Termination};

/// Stops at the first i with g_i − g_{i−1} > 0. Starts from g₀ = (1 − β)f₀.
pub fn causal_derivative_stop<O: SmoothObjective>(
    prob: &StoppingProblem<O>,
) -> Result<StoppingTrace, StoppingError> {
    prob.validate()?;
    let mut runner = Runner::start(prob)?;
    let mut prev_g = runner.last().g;
    loop {
        let i = runner.advance(prob)?;
        let g = runner.last().g;
        if g - prev_g > 0.0 {
            return Ok(runner.finish(Termination::CausalRule));
        }
        if i == prob.horizon {
            return Ok(runner.finish(Termination::Horizon));
        }
        prev_g = g;
    }
}

/// How the unseen part of f is filled in before re-solving for ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predictor {
    /// Bound anchored at w₀, solved once.
    Fixed,
    /// Bound re-anchored at the latest iterate every `refresh_every`
    /// iterations, with the observed values kept for the past.
    Sequential { refresh_every: usize },
    /// Observed values so far, then min(f_i, bound anchored at w₀); re-solved
    /// every iteration.
    MinPrediction,
}

#[derive(Debug, Clone)]
pub struct CausalOutcome {
    pub trace: StoppingTrace,
    /// ε in force at i = 1..=stop.
    pub thresholds: Vec<f64>,
    /// (iteration at which the solve ran, predicted stop index).
    pub predicted_stops: Vec<(usize, usize)>,
    /// Iterations where the observed f exceeded the bound it was predicted by.
    pub bound_violations: Vec<usize>,
}

struct Predictions<'a> {
    bounds: &'a BoundParams,
    cumulative: Vec<f64>,
    beta: f64,
    horizon: usize,
    grid: &'a EpsilonGrid,
}

impl Predictions<'_> {
    /// Predicted f_0..f_K from the observed `history` (f_0..f_i).
    fn sequence(&self, predictor: Predictor, history: &[f64], anchor: usize) -> Vec<f64> {
        let i = history.len() - 1;
        let f0 = history[0];
        let mut p = Vec::with_capacity(self.horizon + 1);
        match predictor {
            Predictor::Fixed | Predictor::Sequential { .. } => {
                let fm = history[anchor];
                p.extend_from_slice(&history[..=anchor]);
                p.extend(
                    (anchor + 1..=self.horizon)
                        .map(|k| convex_upper_bound(self.bounds, fm, k - anchor)),
                );
                // Observed values beyond the anchor only matter if they broke
                // the bound; never predict below what was seen.
                for k in anchor + 1..=i {
                    p[k] = p[k].max(history[k]);
                }
            }
            Predictor::MinPrediction => {
                let fi = history[i];
                p.extend_from_slice(history);
                p.extend(
                    (i + 1..=self.horizon).map(|k| fi.min(convex_upper_bound(self.bounds, f0, k))),
                );
            }
        }
        p
    }

    fn solve(&self, predicted: &[f64]) -> (f64, usize) {
        let mut delta = Vec::with_capacity(predicted.len());
        delta.push(0.0);
        delta.extend(predicted.windows(2).map(|w| (w[1] - w[0]).abs()));
        let g: Vec<f64> = predicted
            .iter()
            .zip(&self.cumulative)
            .map(|(&f, &c)| score(self.beta, c, f))
            .collect();
        let s = best_threshold(&delta, &g, self.grid);
        (s.epsilon, s.stop_index)
    }
}

/// Threshold policy driven by an upper-bound prediction of the future.
///
/// Whenever the predictor says so, the exhaustive ε search is re-run on the
/// predicted sequence. That search picks ε_c together with the index at which
/// the predicted run crosses it; GD stops once it reaches that index (at
/// once, if a refresh moves the index into the past). Observed values enter
/// only through the predictor, so for `MinPrediction` this is the same as
/// comparing ε_c with the observed Δ_i.
pub fn causal_upper_bound_stop<O: SmoothObjective>(
    prob: &StoppingProblem<O>,
    bounds: &BoundParams,
    predictor: Predictor,
    grid: &EpsilonGrid,
) -> Result<CausalOutcome, StoppingError> {
    prob.validate()?;
    if let Predictor::Sequential { refresh_every: 0 } = predictor {
        return Err(StoppingError::InvalidProblem("refresh_every must be at least 1".into()));
    }
    let pred = Predictions {
        bounds,
        cumulative: prob.cost.cumulative(prob.horizon),
        beta: prob.beta,
        horizon: prob.horizon,
        grid,
    };
    let mut runner = Runner::start(prob)?;
    let mut history: Vec<f64> = runner.f_history().collect();
    let mut anchor = 0;
    let mut predicted = pred.sequence(predictor, &history, anchor);
    let (mut eps, mut stop) = pred.solve(&predicted);
    let mut predicted_stops = vec![(0, stop)];
    let mut thresholds = Vec::new();
    let mut bound_violations = Vec::new();

    loop {
        let i = runner.advance(prob)?;
        let fi = runner.last().f;
        history.push(fi);

        let violated = match predictor {
            Predictor::MinPrediction => fi > convex_upper_bound(bounds, history[0], i),
            _ => fi > predicted[i],
        };
        if violated {
            bound_violations.push(i);
        }
        let refresh = match predictor {
            Predictor::Fixed => violated,
            Predictor::Sequential { refresh_every } => {
                if i % refresh_every == 0 {
                    anchor = i;
                }
                violated || i % refresh_every == 0
            }
            Predictor::MinPrediction => true,
        };
        if refresh {
            predicted = pred.sequence(predictor, &history, anchor);
            (eps, stop) = pred.solve(&predicted);
            predicted_stops.push((i, stop));
        }
        thresholds.push(eps);

        if i >= stop {
            return Ok(CausalOutcome {
                trace: runner.finish(Termination::CausalRule),
                thresholds,
                predicted_stops,
                bound_violations,
            });
        }
        if i == prob.horizon {
            return Ok(CausalOutcome {
                trace: runner.finish(Termination::Horizon),
                thresholds,
                predicted_stops,
                bound_violations,
            });
        }
    }
}

pub fn fixed_causal_stop<O: SmoothObjective>(
    prob: &StoppingProblem<O>,
    bounds: &BoundParams,
    grid: &EpsilonGrid,
) -> Result<CausalOutcome, StoppingError> {
    causal_upper_bound_stop(prob, bounds, Predictor::Fixed, grid)
}

/// `refresh_every = usize::MAX` never refreshes and matches the fixed rule.
pub fn sequential_causal_stop<O: SmoothObjective>(
    prob: &StoppingProblem<O>,
    bounds: &BoundParams,
    refresh_every: usize,
    grid: &EpsilonGrid,
) -> Result<CausalOutcome, StoppingError> {
    causal_upper_bound_stop(prob, bounds, Predictor::Sequential { refresh_every }, grid)
}

pub fn min_prediction_stop<O: SmoothObjective>(
    prob: &StoppingProblem<O>,
    bounds: &BoundParams,
    grid: &EpsilonGrid,
) -> Result<CausalOutcome, StoppingError> {
    causal_upper_bound_stop(prob, bounds, Predictor::MinPrediction, grid)
}
