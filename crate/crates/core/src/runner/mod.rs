//! Experiment orchestration: config → seeded Monte Carlo runs → CSV tables.
//!
//! Every scenario is computed into in-memory [`Table`]s first and written
//! afterwards, so the bytes depend only on (config, seeds). Seeds run in
//! parallel and are collected back in list order.

mod config;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

pub use config::{
    AntennaSweep, ExperimentConfig, FlSection, GridSection, Scenario, StoppingSection, ThetaSweep,
};

use crate::budget::{energy_latency, t_max, BudgetReport};
use crate::channel::{realize, EstimationStats, SystemParams};
use crate::fedavg::{train, SyntheticTask};
use crate::power_alloc::{
    antenna_cost, coordinate_descent, dinkelbach_maxmin_ee, max_sum_rate, DinkelbachConfig,
    MaxSumConfig, TradeoffWeights,
};
use crate::stopping::{
    causal_derivative_stop, fixed_causal_stop, min_prediction_stop, optimal_constant_epsilon, run_with_threshold,
    sequential_causal_stop, BoundParams, Quadratic, StoppingError, StoppingProblem, StoppingTrace,
    Threshold,
};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("stopping experiment failed: {0}")]
    Stopping(#[from] StoppingError),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

/// One CSV file: fixed header, rows already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&'static str]) -> Self {
        Self { name: name.to_string(), header: header.to_vec(), rows: Vec::new() }
    }

    /// RFC 4180 with LF line endings.
    pub fn to_csv(&self) -> Result<Vec<u8>, RunnerError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| RunnerError::Io(e.into_error()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    /// Runs whose solver did not converge or failed; nonzero maps to exit code 2.
    pub nonconverged: usize,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, RunnerError> {
        std::fs::create_dir_all(dir)?;
        self.tables
            .iter()
            .map(|t| {
                let path = dir.join(format!("{}.csv", t.name));
                std::fs::write(&path, t.to_csv()?)?;
                Ok(path)
            })
            .collect()
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, RunnerError> {
    cfg.validate()?;
    match cfg.scenario {
        Scenario::PowallocCompare => run_powalloc_compare(cfg),
        Scenario::ThetaSweep => run_theta_sweep(cfg),
        Scenario::AntennaSweep => run_antenna_sweep(cfg),
        Scenario::StoppingSuite => run_stopping_suite(cfg),
        Scenario::FlEnd2end => run_fl_end2end(cfg),
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ours,
    Dinkelbach,
    MaxSum,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ours, Method::Dinkelbach, Method::MaxSum];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ours => "ours",
            Self::Dinkelbach => "dinkelbach",
            Self::MaxSum => "max_sum",
        }
    }
}

/// A solved allocation and what it buys under the budget.
#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Method,
    pub allocation: Vec<f64>,
    pub budget: Option<BudgetReport>,
    pub converged: bool,
    pub error: Option<String>,
}

impl MethodResult {
    pub fn status(&self) -> String {
        match (&self.error, self.converged) {
            (Some(e), _) => format!("error: {e}"),
            (None, true) => "ok".into(),
            (None, false) => "not_converged".into(),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none() && self.converged
    }

    pub fn rounds(&self) -> u64 {
        self.budget.as_ref().map_or(0, |b| b.t)
    }
}

/// Solves one method on one realization; the seed drives the randomized
/// restarts of the baselines.
pub fn solve_method(
    method: Method,
    stats: &EstimationStats,
    cfg: &ExperimentConfig,
    weights: TradeoffWeights,
    seed: u64,
) -> MethodResult {
    let k = stats.params.users;
    let solved = match method {
        Method::Ours => coordinate_descent(stats, weights, &cfg.solver, &vec![1.0; k])
            .map(|r| (r.allocation.into_vec(), r.converged)),
        Method::Dinkelbach => {
            dinkelbach_maxmin_ee(stats, &DinkelbachConfig { seed, ..cfg.dinkelbach })
                .map(|r| (r.allocation.into_vec(), r.converged))
        }
        Method::MaxSum => max_sum_rate(stats, &MaxSumConfig { seed, ..cfg.max_sum })
            .map(|r| (r.allocation.into_vec(), r.converged)),
    };
    match solved {
        Ok((allocation, converged)) => {
            let budget = t_max(&energy_latency(stats, &allocation), &cfg.budget);
            let (budget, error) = match budget {
                Ok(b) => (Some(b), None),
                Err(e) => (None, Some(e.to_string())),
            };
            MethodResult { method, allocation, budget, converged, error }
        }
        Err(e) => MethodResult {
            method,
            allocation: Vec::new(),
            budget: None,
            converged: false,
            error: Some(e.to_string()),
        },
    }
}

/// Trains once for the longest requested run; shorter runs are exact
/// prefixes, so each method reads its final loss off the same trace.
struct FlRun {
    trace: Vec<f64>,
    cap: usize,
}

impl FlRun {
    fn train(cfg: &ExperimentConfig, users: usize, seed: u64, rounds: &[u64]) -> Result<Self, String> {
        let cap = cfg.fl.max_rounds;
        let longest = rounds.iter().map(|&t| t.min(cap as u64) as usize).max().unwrap_or(0);
        let task = SyntheticTask::generate(&cfg.task, users, seed);
        let out = train(&task, &cfg.fl.fl_config(seed), longest).map_err(|e| e.to_string())?;
        Ok(Self { trace: out.loss_trace, cap })
    }

    fn trained(&self, t: u64) -> usize {
        t.min(self.cap as u64) as usize
    }

    fn final_loss(&self, t: u64) -> f64 {
        self.trace[self.trained(t)]
    }
}

fn realize_or_config_error(params: &SystemParams, seed: u64) -> Result<EstimationStats, RunnerError> {
    realize(params, seed).map_err(|e| RunnerError::Config(e.to_string()))
}

fn run_powalloc_compare(cfg: &ExperimentConfig) -> Result<RunOutput, RunnerError> {
    let per_seed: Vec<(u64, Vec<MethodResult>, Result<FlRun, String>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let stats = realize_or_config_error(&cfg.system, seed)?;
            let results: Vec<MethodResult> = Method::ALL
                .iter()
                .map(|&m| solve_method(m, &stats, cfg, cfg.weights, seed))
                .collect();
            let rounds: Vec<u64> = results.iter().map(MethodResult::rounds).collect();
            let fl = FlRun::train(cfg, cfg.system.users, seed, &rounds);
            Ok((seed, results, fl))
        })
        .collect::<Result<_, RunnerError>>()?;

    let mut summary = Table::new(
        "powalloc_compare",
        &["method", "seed", "T", "T_max", "E_bar", "ell_bar", "final_loss", "status"],
    );
    let mut traces = Table::new("fl_traces", &["method", "seed", "round", "loss"]);
    let mut nonconverged = 0;
    for (seed, results, fl) in &per_seed {
        for r in results {
            let (t, t_max, e_bar, ell_bar) = match &r.budget {
                Some(b) => (b.t.to_string(), num(b.t_max), num(b.e_bar), num(b.ell_bar)),
                None => ("0".into(), "NaN".into(), "NaN".into(), "NaN".into()),
            };
            let mut status = r.status();
            let final_loss = match fl {
                Ok(fl) => {
                    let rounds = fl.trained(r.rounds());
                    for (round, loss) in fl.trace[..=rounds].iter().enumerate() {
                        traces.rows.push(vec![
                            r.method.name().into(),
                            seed.to_string(),
                            round.to_string(),
                            num(*loss),
                        ]);
                    }
                    num(fl.final_loss(r.rounds()))
                }
                Err(e) => {
                    status = format!("error: {e}");
                    "NaN".into()
                }
            };
            if !r.ok() || fl.is_err() {
                nonconverged += 1;
            }
            summary.rows.push(vec![
                r.method.name().into(),
                seed.to_string(),
                t,
                t_max,
                e_bar,
                ell_bar,
                final_loss,
                status,
            ]);
        }
    }
    Ok(RunOutput { tables: vec![summary, traces], nonconverged, warnings: Vec::new() })
}

fn run_theta_sweep(cfg: &ExperimentConfig) -> Result<RunOutput, RunnerError> {
    let points = &cfg.theta_sweep.as_ref().expect("validated").points;
    let per_seed: Vec<(u64, Vec<MethodResult>, Result<FlRun, String>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let stats = realize_or_config_error(&cfg.system, seed)?;
            let results: Vec<MethodResult> = points
                .iter()
                .map(|&(t1, t2)| {
                    let w = TradeoffWeights { theta1: t1, theta2: t2 };
                    solve_method(Method::Ours, &stats, cfg, w, seed)
                })
                .collect();
            let rounds: Vec<u64> = results.iter().map(MethodResult::rounds).collect();
            let fl = FlRun::train(cfg, cfg.system.users, seed, &rounds);
            Ok((seed, results, fl))
        })
        .collect::<Result<_, RunnerError>>()?;

    let mut table = Table::new(
        "theta_sweep",
        &["theta1", "theta2", "seed", "T", "T_max", "E_bar", "ell_bar", "final_loss", "status"],
    );
    let mut nonconverged = 0;
    for (seed, results, fl) in &per_seed {
        for (&(t1, t2), r) in points.iter().zip(results) {
            let (t, t_max, e_bar, ell_bar) = match &r.budget {
                Some(b) => (b.t.to_string(), num(b.t_max), num(b.e_bar), num(b.ell_bar)),
                None => ("0".into(), "NaN".into(), "NaN".into(), "NaN".into()),
            };
            let (final_loss, status) = match fl {
                Ok(fl) => (num(fl.final_loss(r.rounds())), r.status()),
                Err(e) => ("NaN".into(), format!("error: {e}")),
            };
            if !r.ok() || fl.is_err() {
                nonconverged += 1;
            }
            table.rows.push(vec![
                num(t1),
                num(t2),
                seed.to_string(),
                t,
                t_max,
                e_bar,
                ell_bar,
                final_loss,
                status,
            ]);
        }
    }
    Ok(RunOutput { tables: vec![table], nonconverged, warnings: Vec::new() })
}

fn run_antenna_sweep(cfg: &ExperimentConfig) -> Result<RunOutput, RunnerError> {
    let sweep = cfg.antenna_sweep.as_ref().expect("validated");
    let mut warnings = Vec::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for &pair in &sweep.pairs {
        if pairs.contains(&pair) {
            warnings.push(format!("duplicate antenna pair (M, N) = {pair:?} ignored"));
        } else {
            pairs.push(pair);
        }
    }
    let per_seed: Vec<(u64, Vec<MethodResult>, Result<FlRun, String>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let results = pairs
                .iter()
                .map(|&(aps, antennas)| {
                    let params = SystemParams { aps, antennas, ..cfg.system.clone() };
                    let stats = realize_or_config_error(&params, seed)?;
                    Ok(solve_method(Method::Ours, &stats, cfg, cfg.weights, seed))
                })
                .collect::<Result<Vec<_>, RunnerError>>()?;
            let rounds: Vec<u64> = results.iter().map(MethodResult::rounds).collect();
            let fl = FlRun::train(cfg, cfg.system.users, seed, &rounds);
            Ok((seed, results, fl))
        })
        .collect::<Result<_, RunnerError>>()?;

    let mut table = Table::new(
        "antenna_sweep",
        &["M", "N", "MN", "cost", "seed", "T", "final_loss", "status"],
    );
    let mut nonconverged = 0;
    for (seed, results, fl) in &per_seed {
        for (&(m, n), r) in pairs.iter().zip(results) {
            let (final_loss, status) = match fl {
                Ok(fl) => (num(fl.final_loss(r.rounds())), r.status()),
                Err(e) => ("NaN".into(), format!("error: {e}")),
            };
            if !r.ok() || fl.is_err() {
                nonconverged += 1;
            }
            table.rows.push(vec![
                m.to_string(),
                n.to_string(),
                (m * n).to_string(),
                num(antenna_cost(m, n, sweep.cost_per_antenna)),
                seed.to_string(),
                r.rounds().to_string(),
                final_loss,
                status,
            ]);
        }
    }
    Ok(RunOutput { tables: vec![table], nonconverged, warnings })
}

struct PolicyRun {
    policy: &'static str,
    trace: StoppingTrace,
    epsilon: Option<f64>,
    bound_violations: usize,
}

fn stopping_policies(
    prob: &StoppingProblem,
    s: &StoppingSection,
) -> Result<Vec<PolicyRun>, RunnerError> {
    let grid = s.grid.grid()?;
    let bounds = BoundParams::for_quadratic(&prob.objective, &prob.w0);

    let nc = optimal_constant_epsilon(prob, &grid)?;
    let literal = run_with_threshold(prob, &Threshold::Constant(nc.epsilon))?;
    if literal.stop_index != nc.stop_index || literal.g_star != nc.g_star {
        return Err(RunnerError::Internal(format!(
            "threshold search predicted stop {} (g = {}), literal run gave {} (g = {})",
            nc.stop_index, nc.g_star, literal.stop_index, literal.g_star
        )));
    }
    let fixed = fixed_causal_stop(prob, &bounds, &grid)?;
    let seq = sequential_causal_stop(prob, &bounds, s.refresh_every, &grid)?;
    let min = min_prediction_stop(prob, &bounds, &grid)?;
    Ok(vec![
        PolicyRun { policy: "noncausal_opt", trace: literal, epsilon: Some(nc.epsilon), bound_violations: 0 },
        PolicyRun {
            policy: "derivative",
            trace: causal_derivative_stop(prob)?,
            epsilon: None,
            bound_violations: 0,
        },
        PolicyRun {
            policy: "fixed_bound",
            epsilon: fixed.thresholds.last().copied(),
            bound_violations: fixed.bound_violations.len(),
            trace: fixed.trace,
        },
        PolicyRun {
            policy: "sequential",
            epsilon: seq.thresholds.last().copied(),
            bound_violations: seq.bound_violations.len(),
            trace: seq.trace,
        },
        PolicyRun {
            policy: "min_predict",
            epsilon: min.thresholds.last().copied(),
            bound_violations: min.bound_violations.len(),
            trace: min.trace,
        },
    ])
}

fn run_stopping_suite(cfg: &ExperimentConfig) -> Result<RunOutput, RunnerError> {
    let s = cfg.stopping.as_ref().expect("validated");
    let combos: Vec<_> = s
        .schedules
        .iter()
        .flat_map(|&c| s.betas.iter().map(move |&b| (c, b)))
        .collect();
    let runs: Vec<Vec<PolicyRun>> = combos
        .par_iter()
        .map(|&(cost, beta)| {
            let prob = StoppingProblem {
                objective: Quadratic::reference(),
                w0: s.w0.clone(),
                alpha: s.alpha,
                beta,
                horizon: s.horizon,
                cost,
            };
            stopping_policies(&prob, s)
        })
        .collect::<Result<_, _>>()?;

    let mut summary = Table::new(
        "stopping_summary",
        &[
            "schedule",
            "beta",
            "policy",
            "i_star",
            "g_star",
            "f_at_stop",
            "epsilon",
            "terminated_by",
            "bound_violations",
        ],
    );
    let mut traces = Table::new(
        "stopping_traces",
        &["schedule", "beta", "policy", "i", "f_i", "delta_i", "c_i", "g_i", "stopped"],
    );
    for (&(cost, beta), policies) in combos.iter().zip(&runs) {
        for p in policies {
            let t = &p.trace;
            summary.rows.push(vec![
                cost.label().into(),
                num(beta),
                p.policy.into(),
                t.stop_index.to_string(),
                num(t.g_star),
                num(t.f_at_stop),
                p.epsilon.map_or_else(String::new, num),
                t.terminated_by.label().into(),
                p.bound_violations.to_string(),
            ]);
            for r in &t.records {
                traces.rows.push(vec![
                    cost.label().into(),
                    num(beta),
                    p.policy.into(),
                    r.i.to_string(),
                    num(r.f),
                    num(r.delta),
                    num(r.cost),
                    num(r.g),
                    u8::from(r.i == t.stop_index).to_string(),
                ]);
            }
        }
    }
    Ok(RunOutput { tables: vec![summary, traces], nonconverged: 0, warnings: Vec::new() })
}

fn run_fl_end2end(cfg: &ExperimentConfig) -> Result<RunOutput, RunnerError> {
    let per_seed: Vec<(u64, MethodResult, Result<FlRun, String>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let stats = realize_or_config_error(&cfg.system, seed)?;
            let r = solve_method(Method::Ours, &stats, cfg, cfg.weights, seed);
            let fl = FlRun::train(cfg, cfg.system.users, seed, &[r.rounds()]);
            Ok((seed, r, fl))
        })
        .collect::<Result<_, RunnerError>>()?;

    let mut summary = Table::new(
        "fl_end2end",
        &["seed", "T", "rounds_trained", "initial_loss", "final_loss", "status"],
    );
    let mut traces = Table::new("fl_end2end_traces", &["seed", "round", "loss"]);
    let mut nonconverged = 0;
    for (seed, r, fl) in &per_seed {
        if !r.ok() || fl.is_err() {
            nonconverged += 1;
        }
        match fl {
            Ok(fl) => {
                let rounds = fl.trained(r.rounds());
                summary.rows.push(vec![
                    seed.to_string(),
                    r.rounds().to_string(),
                    rounds.to_string(),
                    num(fl.trace[0]),
                    num(fl.trace[rounds]),
                    r.status(),
                ]);
                for (round, loss) in fl.trace[..=rounds].iter().enumerate() {
                    traces.rows.push(vec![seed.to_string(), round.to_string(), num(*loss)]);
                }
            }
            Err(e) => summary.rows.push(vec![
                seed.to_string(),
                r.rounds().to_string(),
                "0".into(),
                "NaN".into(),
                "NaN".into(),
                format!("error: {e}"),
            ]),
        }
    }
    Ok(RunOutput { tables: vec![summary, traces], nonconverged, warnings: Vec::new() })
}
