//! Desk-scale federated averaging: local minibatch SGD at every user, then a
//! ρ-weighted average at the server, for a fixed number of synchronous rounds.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid weights ρ: {0}")]
    InvalidRho(String),
    #[error("minibatch of {batch} exceeds the {samples} samples held by user {user}")]
    BatchTooLarge { user: usize, batch: usize, samples: usize },
    #[error("invalid FL configuration: {0}")]
    InvalidConfig(String),
}

/// A user's empirical loss f_j over its local samples.
pub trait LocalObjective: Sync {
    fn samples(&self) -> usize;
    fn dim(&self) -> usize;
    /// Mean loss over every local sample.
    fn loss(&self, w: &[f64]) -> f64;
    /// Mean gradient over the samples in `batch`.
    fn gradient(&self, w: &[f64], batch: &[usize]) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Multinomial logistic regression with an L2 penalty. The model is a
    /// classes × (features + 1) matrix stored row-major; the last column is
    /// the bias. Labels are class indices.
    Softmax { classes: usize, l2: f64 },
    /// ½(xᵀw − y)².
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    /// Class index (softmax) or regression target (least squares).
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserData {
    pub data: Dataset,
    pub loss: Loss,
}

fn features(x: &[f64]) -> usize {
    x.len()
}

impl LocalObjective for UserData {
    fn samples(&self) -> usize {
        self.data.y.len()
    }

    fn dim(&self) -> usize {
        let f = self.data.x.first().map_or(0, |x| features(x));
        match self.loss {
            Loss::Softmax { classes, .. } => classes * (f + 1),
            Loss::LeastSquares => f,
        }
    }

    fn loss(&self, w: &[f64]) -> f64 {
        let n = self.samples();
        match self.loss {
            Loss::Softmax { classes, l2 } => {
                let mut total = 0.0;
                let mut probs = vec![0.0; classes];
                for (x, &y) in self.data.x.iter().zip(&self.data.y) {
                    softmax_probs(w, x, classes, &mut probs);
                    total -= probs[y as usize].max(f64::MIN_POSITIVE).ln();
                }
                total / n as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
            }
            Loss::LeastSquares => {
                let total: f64 = self
                    .data
                    .x
                    .iter()
                    .zip(&self.data.y)
                    .map(|(x, y)| {
                        let r = dot(x, w) - y;
                        0.5 * r * r
                    })
                    .sum();
                total / n as f64
            }
        }
    }

    fn gradient(&self, w: &[f64], batch: &[usize]) -> Vec<f64> {
        let mut g = vec![0.0; w.len()];
        let scale = 1.0 / batch.len() as f64;
        match self.loss {
            Loss::Softmax { classes, l2 } => {
                let f = w.len() / classes - 1;
                let mut probs = vec![0.0; classes];
                for &i in batch {
                    let x = &self.data.x[i];
                    softmax_probs(w, x, classes, &mut probs);
                    probs[self.data.y[i] as usize] -= 1.0;
                    for (c, &pc) in probs.iter().enumerate() {
                        let row = &mut g[c * (f + 1)..(c + 1) * (f + 1)];
                        for (gi, xi) in row.iter_mut().zip(x) {
                            *gi += scale * pc * xi;
                        }
                        row[f] += scale * pc;
                    }
                }
                g.iter_mut().zip(w).for_each(|(gi, wi)| *gi += l2 * wi);
            }
            Loss::LeastSquares => {
                for &i in batch {
                    let x = &self.data.x[i];
                    let r = dot(x, w) - self.data.y[i];
                    g.iter_mut().zip(x).for_each(|(gi, xi)| *gi += scale * r * xi);
                }
            }
        }
        g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softmax_probs(w: &[f64], x: &[f64], classes: usize, out: &mut [f64]) {
    let f = x.len();
    for (c, o) in out.iter_mut().enumerate().take(classes) {
        let row = &w[c * (f + 1)..(c + 1) * (f + 1)];
        *o = dot(&row[..f], x) + row[f];
    }
    let top = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for o in out.iter_mut() {
        *o = (*o - top).exp();
        z += *o;
    }
    out.iter_mut().for_each(|o| *o /= z);
}

/// `steps` minibatch SGD steps from `w_in`. A batch equal to the dataset
/// size is deterministic full-batch descent; otherwise each step draws
/// `batch` distinct indices from `rng`.
pub fn local_update<O: LocalObjective + ?Sized>(
    w_in: &[f64],
    data: &O,
    steps: usize,
    alpha: f64,
    batch: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let n = data.samples();
    assert!(batch >= 1 && batch <= n, "batch {batch} must lie in 1..={n}");
    let full: Vec<usize> = (0..n).collect();
    let mut w = w_in.to_vec();
    for _ in 0..steps {
        let picked;
        let idx: &[usize] = if batch == n {
            &full
        } else {
            picked = index::sample(rng, n, batch).into_vec();
            &picked
        };
        let g = data.gradient(&w, idx);
        w.iter_mut().zip(&g).for_each(|(wi, gi)| *wi -= alpha * gi);
    }
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalModel {
    pub w: Vec<f64>,
    pub round: usize,
}

/// w = Σ_j ρ_j w_j, accumulated in user order.
pub fn aggregate(locals: &[Vec<f64>], rho: &[f64], round: usize) -> Result<GlobalModel, FlError> {
    if locals.len() != rho.len() || locals.is_empty() {
        return Err(FlError::DimensionMismatch { expected: rho.len(), got: locals.len() });
    }
    let d = locals[0].len();
    if let Some(bad) = locals.iter().find(|w| w.len() != d) {
        return Err(FlError::DimensionMismatch { expected: d, got: bad.len() });
    }
    let mut w: Vec<f64> = locals[0].iter().map(|v| rho[0] * v).collect();
    for (local, &r) in locals.iter().zip(rho).skip(1) {
        w.iter_mut().zip(local).for_each(|(a, v)| *a += r * v);
    }
    Ok(GlobalModel { w, round })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlConfig {
    /// L, local SGD steps per round.
    pub local_steps: usize,
    /// α_t = alpha / (1 + alpha_decay·t).
    pub alpha: f64,
    pub alpha_decay: f64,
    /// ξ, minibatch size per local step.
    pub batch: usize,
    /// Data-fraction weights; `None` means proportional to |D_j|.
    pub rho: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for FlConfig {
    fn default() -> Self {
        Self {
            local_steps: 5,
            alpha: 0.05,
            alpha_decay: 0.0,
            batch: 50,
            rho: None,
            seed: 0,
        }
    }
}

impl FlConfig {
    pub fn step_size(&self, round: usize) -> f64 {
        self.alpha / (1.0 + self.alpha_decay * round as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Softmax,
    LeastSquares,
}

/// Recipe for a synthetic federated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub samples_per_user: usize,
    pub features: usize,
    pub classes: usize,
    /// Standard deviation of class means around the origin (softmax).
    pub separation: f64,
    /// Observation noise std (least squares) or within-class std (softmax).
    pub noise: f64,
    pub l2: f64,
}

impl Default for TaskSpec {
    fn default() -> Self {
        Self {
            kind: TaskKind::Softmax,
            samples_per_user: 500,
            features: 15,
            classes: 10,
            separation: 1.0,
            noise: 1.0,
            l2: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub users: Vec<UserData>,
    /// Weights that generated the targets (least squares only).
    pub true_minimizer: Option<Vec<f64>>,
}

impl SyntheticTask {
    /// Draws `users` disjoint local datasets.
    pub fn generate(spec: &TaskSpec, users: usize, seed: u64) -> Self {
        let mut g = rng::stream(seed, &[rng::tag::FL_DATA]);
        let normal = |g: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(g) };
        match spec.kind {
            TaskKind::Softmax => {
                let means: Vec<Vec<f64>> = (0..spec.classes)
                    .map(|_| (0..spec.features).map(|_| spec.separation * normal(&mut g)).collect())
                    .collect();
                let loss = Loss::Softmax { classes: spec.classes, l2: spec.l2 };
                let users = (0..users)
                    .map(|_| {
                        let mut x = Vec::with_capacity(spec.samples_per_user);
                        let mut y = Vec::with_capacity(spec.samples_per_user);
                        for _ in 0..spec.samples_per_user {
                            let c = g.random_range(0..spec.classes);
                            x.push(means[c].iter().map(|m| m + spec.noise * normal(&mut g)).collect());
                            y.push(c as f64);
                        }
                        UserData { data: Dataset { x, y }, loss }
                    })
                    .collect();
                Self { users, true_minimizer: None }
            }
            TaskKind::LeastSquares => {
                let w_star: Vec<f64> = (0..spec.features).map(|_| normal(&mut g)).collect();
                let users = (0..users)
                    .map(|_| {
                        let mut x = Vec::with_capacity(spec.samples_per_user);
                        let mut y = Vec::with_capacity(spec.samples_per_user);
                        for _ in 0..spec.samples_per_user {
                            let xi: Vec<f64> = (0..spec.features).map(|_| normal(&mut g)).collect();
                            y.push(dot(&xi, &w_star) + spec.noise * normal(&mut g));
                            x.push(xi);
                        }
                        UserData { data: Dataset { x, y }, loss: Loss::LeastSquares }
                    })
                    .collect();
                Self { users, true_minimizer: Some(w_star) }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.users.first().map_or(0, |u| u.dim())
    }

    /// ρ_j = |D_j| / Σ|D|.
    pub fn data_weights(&self) -> Vec<f64> {
        let total: usize = self.users.iter().map(|u| u.samples()).sum();
        self.users
            .iter()
            .map(|u| u.samples() as f64 / total as f64)
            .collect()
    }

    /// f(w) = Σ_j ρ_j f_j(w).
    pub fn global_loss(&self, w: &[f64], rho: &[f64]) -> f64 {
        self.users
            .iter()
            .zip(rho)
            .map(|(u, r)| r * u.loss(w))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: GlobalModel,
    /// f(w_t) for t = 0..=T (entry 0 is the initial model).
    pub loss_trace: Vec<f64>,
}

fn resolve_rho(task: &SyntheticTask, cfg: &FlConfig) -> Result<Vec<f64>, FlError> {
    let rho = cfg.rho.clone().unwrap_or_else(|| task.data_weights());
    if rho.len() != task.users.len() {
        return Err(FlError::InvalidRho(format!(
            "{} weights for {} users",
            rho.len(),
            task.users.len()
        )));
    }
    if rho.iter().any(|&r| !(r >= 0.0)) || (rho.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(FlError::InvalidRho("weights must be nonnegative and sum to 1".into()));
    }
    Ok(rho)
}

/// Runs `rounds` synchronous FedAvg rounds from the zero model.
///
/// User j's minibatches in round t come from the stream (seed, t, j), so a
/// run of T rounds is an exact prefix of any longer run.
pub fn train(task: &SyntheticTask, cfg: &FlConfig, rounds: usize) -> Result<TrainOutcome, FlError> {
    if task.users.is_empty() {
        return Err(FlError::InvalidConfig("task has no users".into()));
    }
    if cfg.batch == 0 || !(cfg.alpha >= 0.0) || !(cfg.alpha_decay >= 0.0) {
        return Err(FlError::InvalidConfig("batch ≥ 1, α ≥ 0 and decay ≥ 0 required".into()));
    }
    for (j, u) in task.users.iter().enumerate() {
        if cfg.batch > u.samples() {
            return Err(FlError::BatchTooLarge { user: j, batch: cfg.batch, samples: u.samples() });
        }
    }
    let rho = resolve_rho(task, cfg)?;
    let mut model = GlobalModel { w: vec![0.0; task.dim()], round: 0 };
    let mut loss_trace = vec![task.global_loss(&model.w, &rho)];
    for t in 1..=rounds {
        let alpha = cfg.step_size(t - 1);
        let locals: Vec<Vec<f64>> = task
            .users
            .par_iter()
            .enumerate()
            .map(|(j, u)| {
                let mut g = rng::stream(cfg.seed, &[rng::tag::FL_ROUND, t as u64, j as u64]);
                local_update(&model.w, u, cfg.local_steps, alpha, cfg.batch, &mut g)
            })
            .collect();
        model = aggregate(&locals, &rho, t)?;
        loss_trace.push(task.global_loss(&model.w, &rho));
    }
    Ok(TrainOutcome { model, loss_trace })
}
