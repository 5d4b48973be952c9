//! Cost-aware stopping for gradient descent.
//!
//! Running iteration i costs c_i. A threshold policy stops at the first
//! i ≥ 1 with Δ_i = |f(w_i) − f(w_{i−1})| < ε_i, and the run is scored by
//!
//! g = β·Σ_{k≤i⋆} c_k + (1 − β)·f(w_{i⋆}).
//!
//! This module holds the problem definition and the literal GD-with-threshold
//! runner; `search` finds the best constant threshold, `causal` holds the
//! rules that only look at the past (plus an analytic bound on the future),
//! and `bounds` the convergence-rate bounds those rules use.

mod bounds;
mod causal;
mod search;

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bounds::{convex_upper_bound, strongly_convex_bound, BoundParams};
pub use causal::{
    causal_derivative_stop, causal_upper_bound_stop, fixed_causal_stop, min_prediction_stop,
    sequential_causal_stop, CausalOutcome, Predictor,
};
pub use search::{
    best_threshold, matched_constant_epsilon, optimal_constant_epsilon, EpsilonGrid, EpsilonSearch,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoppingError {
    #[error("objective became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("invalid stopping problem: {0}")]
    InvalidProblem(String),
    #[error("threshold sequence has {got} entries, horizon is {horizon}")]
    ThresholdLength { got: usize, horizon: usize },
}

/// Per-iteration cost c_i, i ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSchedule {
    Constant { c: f64 },
    /// c_i = slope·i.
    Linear { slope: f64 },
    /// c_i = exp(rate·i) − offset.
    Exponential { rate: f64, offset: f64 },
    /// c_i = delta before `deadline`, +∞ from `deadline` on.
    HardDeadline { delta: f64, deadline: usize },
}

impl CostSchedule {
    pub const CONSTANT: Self = Self::Constant { c: 0.0002 };
    pub const LINEAR: Self = Self::Linear { slope: 0.002 };
    pub const EXPONENTIAL: Self = Self::Exponential { rate: 0.01, offset: 1.0 };

    pub fn cost(&self, i: usize) -> f64 {
        let x = i as f64;
        match *self {
            Self::Constant { c } => c,
            Self::Linear { slope } => slope * x,
            Self::Exponential { rate, offset } => (rate * x).exp() - offset,
            Self::HardDeadline { delta, deadline } => {
                if i < deadline {
                    delta
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Linear { .. } => "linear",
            Self::Exponential { .. } => "exponential",
            Self::HardDeadline { .. } => "hard_deadline",
        }
    }

    /// Every c_i must be positive; checked on i = 1.
    pub fn validate(&self) -> Result<(), StoppingError> {
        let ok = match *self {
            Self::Constant { c } => c > 0.0 && c.is_finite(),
            Self::Linear { slope } => slope > 0.0 && slope.is_finite(),
            Self::Exponential { rate, offset } => rate > 0.0 && rate.exp() - offset > 0.0,
            Self::HardDeadline { delta, deadline } => delta > 0.0 && delta.is_finite() && deadline >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(StoppingError::InvalidProblem(format!("{self:?} has a non-positive cost")))
        }
    }

    /// C_i = Σ_{k≤i} c_k for i = 0..=horizon.
    pub fn cumulative(&self, horizon: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(horizon + 1);
        let mut acc = 0.0;
        out.push(acc);
        for i in 1..=horizon {
            acc += self.cost(i);
            out.push(acc);
        }
        out
    }
}

/// β·C + (1 − β)·f, with β = 0 ignoring C entirely (so an infinite deadline
/// cost does not turn into NaN).
pub fn score(beta: f64, cumulative_cost: f64, f: f64) -> f64 {
    let cost = if beta == 0.0 { 0.0 } else { beta * cumulative_cost };
    let value = if beta == 1.0 { 0.0 } else { (1.0 - beta) * f };
    cost + value
}

pub trait SmoothObjective {
    fn value(&self, w: &[f64]) -> f64;
    fn gradient(&self, w: &[f64]) -> Vec<f64>;
}

/// f(w) = ½(w − c)ᵀH(w − c), so f⋆ = 0 at w⋆ = c.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    hessian: Vec<Vec<f64>>,
    center: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl Quadratic {
    /// w₁² + (w₂ − 1)².
    pub fn reference() -> Self {
        Self::with_spectrum::<rand_chacha::ChaCha8Rng>(&[2.0, 2.0], vec![0.0, 1.0], None)
    }

    /// H = Q·diag(eigs)·Qᵀ with Q a random rotation drawn from `rotation`
    /// (identity when `None`).
    pub fn with_spectrum<R: Rng>(eigs: &[f64], center: Vec<f64>, rotation: Option<&mut R>) -> Self {
        let n = eigs.len();
        assert_eq!(center.len(), n);
        let q = match rotation {
            Some(rng) => random_orthonormal(n, rng),
            None => (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        };
        let hessian = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| q[i][k] * eigs[k] * q[j][k]).sum())
                    .collect()
            })
            .collect();
        Self { hessian, center, eigenvalues: eigs.to_vec() }
    }

    pub fn smoothness(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(0.0, f64::max)
    }

    pub fn strong_convexity(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn minimizer(&self) -> &[f64] {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

fn random_orthonormal<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for c in &cols {
            let proj: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= proj * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    // Column k of Q is cols[k].
    (0..n).map(|i| (0..n).map(|k| cols[k][i]).collect()).collect()
}

impl SmoothObjective for Quadratic {
    fn value(&self, w: &[f64]) -> f64 {
        let d: Vec<f64> = w.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        0.5 * self
            .hessian
            .iter()
            .zip(&d)
            .map(|(row, di)| di * row.iter().zip(&d).map(|(h, dj)| h * dj).sum::<f64>())
            .sum::<f64>()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = w.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        self.hessian
            .iter()
            .map(|row| row.iter().zip(&d).map(|(h, dj)| h * dj).sum())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct StoppingProblem<O = Quadratic> {
    pub objective: O,
    pub w0: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub horizon: usize,
    pub cost: CostSchedule,
}

impl StoppingProblem<Quadratic> {
    /// f = w₁² + (w₂ − 1)² from (4, −3) with α = 0.05, β = 0.5 and a
    /// 25 000-iteration horizon.
    pub fn reference(cost: CostSchedule) -> Self {
        Self {
            objective: Quadratic::reference(),
            w0: vec![4.0, -3.0],
            alpha: 0.05,
            beta: 0.5,
            horizon: 25_000,
            cost,
        }
    }
}

impl<O: SmoothObjective> StoppingProblem<O> {
    pub fn validate(&self) -> Result<(), StoppingError> {
        if !(self.alpha > 0.0) || !(0.0..=1.0).contains(&self.beta) || self.horizon == 0 {
            return Err(StoppingError::InvalidProblem(
                "need α > 0, 0 ≤ β ≤ 1 and a horizon of at least 1".into(),
            ));
        }
        self.cost.validate()
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_cost(mut self, cost: CostSchedule) -> Self {
        self.cost = cost;
        self
    }

    fn step(&self, w: &[f64]) -> Vec<f64> {
        let g = self.objective.gradient(w);
        w.iter().zip(&g).map(|(a, b)| a - self.alpha * b).collect()
    }
}

/// The unstopped GD run w_0..w_K with f and Δ (Δ[0] is unused and 0).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub w: Vec<Vec<f64>>,
    pub f: Vec<f64>,
    pub delta: Vec<f64>,
}

impl Trajectory {
    pub fn compute<O: SmoothObjective>(prob: &StoppingProblem<O>) -> Result<Self, StoppingError> {
        prob.validate()?;
        let mut w = vec![prob.w0.clone()];
        let mut f = vec![prob.objective.value(&prob.w0)];
        if !f[0].is_finite() {
            return Err(StoppingError::NonFinite { iteration: 0 });
        }
        let mut delta = vec![0.0];
        for i in 1..=prob.horizon {
            let next = prob.step(&w[i - 1]);
            let fi = prob.objective.value(&next);
            if !fi.is_finite() {
                return Err(StoppingError::NonFinite { iteration: i });
            }
            delta.push((fi - f[i - 1]).abs());
            f.push(fi);
            w.push(next);
        }
        Ok(Self { w, f, delta })
    }

    pub fn horizon(&self) -> usize {
        self.f.len() - 1
    }

    /// g_i for i = 0..=K under (β, schedule).
    pub fn scores(&self, beta: f64, cost: &CostSchedule) -> Vec<f64> {
        cost.cumulative(self.horizon())
            .iter()
            .zip(&self.f)
            .map(|(&c, &f)| score(beta, c, f))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Threshold,
    Horizon,
    CausalRule,
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Threshold => "threshold",
            Self::Horizon => "horizon",
            Self::CausalRule => "causal_rule",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub i: usize,
    pub w: Vec<f64>,
    pub f: f64,
    /// Δ_i; 0 for the starting point.
    pub delta: f64,
    /// c_i; 0 for the starting point.
    pub cost: f64,
    pub cumulative_cost: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingTrace {
    /// Records for i = 0..=stop_index.
    pub records: Vec<IterationRecord>,
    pub stop_index: usize,
    pub g_star: f64,
    pub f_at_stop: f64,
    pub terminated_by: Termination,
}

impl StoppingTrace {
    /// CSV with header `i,f_i,delta_i,c_i,g_i,stopped`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,f_i,delta_i,c_i,g_i,stopped\n");
        for r in &self.records {
            let stopped = u8::from(r.i == self.stop_index);
            let _ = writeln!(out, "{},{},{},{},{},{}", r.i, r.f, r.delta, r.cost, r.g, stopped);
        }
        out
    }
}

/// Threshold ε_i: one value for every iteration, or one per iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Threshold {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl Threshold {
    fn at(&self, i: usize) -> f64 {
        match self {
            Self::Constant(e) => *e,
            Self::Sequence(s) => s[i - 1],
        }
    }
}

/// Runs GD, paying c_i for every executed iteration, and freezes w at the
/// first i with Δ_i < ε_i (or at the horizon).
pub fn run_with_threshold<O: SmoothObjective>(
    prob: &StoppingProblem<O>,
    eps: &Threshold,
) -> Result<StoppingTrace, StoppingError> {
    prob.validate()?;
    match eps {
        Threshold::Constant(e) if !(*e >= 0.0) => {
            return Err(StoppingError::InvalidProblem("ε must be nonnegative".into()))
        }
        Threshold::Sequence(s) if s.len() != prob.horizon => {
            return Err(StoppingError::ThresholdLength { got: s.len(), horizon: prob.horizon })
        }
        Threshold::Sequence(s) if s.iter().any(|e| !(*e >= 0.0)) => {
            return Err(StoppingError::InvalidProblem("ε must be nonnegative".into()))
        }
        _ => {}
    }
    let mut runner = Runner::start(prob)?;
    loop {
        let i = runner.advance(prob)?;
        let delta = runner.last().delta;
        if delta < eps.at(i) {
            return Ok(runner.finish(Termination::Threshold));
        }
        if i == prob.horizon {
            return Ok(runner.finish(Termination::Horizon));
        }
    }
}

/// Incremental GD with cost bookkeeping, shared by all the policies.
pub(crate) struct Runner {
    records: Vec<IterationRecord>,
    beta: f64,
}

impl Runner {
    pub(crate) fn start<O: SmoothObjective>(prob: &StoppingProblem<O>) -> Result<Self, StoppingError> {
        let f = prob.objective.value(&prob.w0);
        if !f.is_finite() {
            return Err(StoppingError::NonFinite { iteration: 0 });
        }
        Ok(Self {
            records: vec![IterationRecord {
                i: 0,
                w: prob.w0.clone(),
                f,
                delta: 0.0,
                cost: 0.0,
                cumulative_cost: 0.0,
                g: score(prob.beta, 0.0, f),
            }],
            beta: prob.beta,
        })
    }

    pub(crate) fn last(&self) -> &IterationRecord {
        self.records.last().expect("runner always holds w_0")
    }

    pub(crate) fn f_history(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.f)
    }

    /// Executes one GD step and returns its index.
    pub(crate) fn advance<O: SmoothObjective>(&mut self, prob: &StoppingProblem<O>) -> Result<usize, StoppingError> {
        let prev = self.last();
        let i = prev.i + 1;
        let w = prob.step(&prev.w);
        let f = prob.objective.value(&w);
        if !f.is_finite() {
            return Err(StoppingError::NonFinite { iteration: i });
        }
        let cost = prob.cost.cost(i);
        let cumulative_cost = prev.cumulative_cost + cost;
        let delta = (f - prev.f).abs();
        self.records.push(IterationRecord {
            i,
            w,
            f,
            delta,
            cost,
            cumulative_cost,
            g: score(self.beta, cumulative_cost, f),
        });
        Ok(i)
    }

    pub(crate) fn finish(self, terminated_by: Termination) -> StoppingTrace {
        let last = self.last();
        StoppingTrace {
            stop_index: last.i,
            g_star: last.g,
            f_at_stop: last.f,
            terminated_by,
            records: self.records,
        }
    }
}
