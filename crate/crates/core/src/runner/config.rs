use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunnerError;
use crate::budget::BudgetSpec;
use crate::channel::SystemParams;
use crate::fedavg::{FlConfig, TaskSpec};
use crate::power_alloc::{DinkelbachConfig, MaxSumConfig, SolverConfig, TradeoffWeights};
use crate::stopping::{CostSchedule, EpsilonGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Scenario {
    PowallocCompare,
    ThetaSweep,
    AntennaSweep,
    StoppingSuite,
    FlEnd2end,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PowallocCompare => "powalloc_compare",
            Self::ThetaSweep => "theta_sweep",
            Self::AntennaSweep => "antenna_sweep",
            Self::StoppingSuite => "stopping_suite",
            Self::FlEnd2end => "fl_end2end",
        }
    }

    fn seeded(&self) -> bool {
        !matches!(self, Self::StoppingSuite)
    }
}

/// FedAvg settings for a run. The stream seed is the realization seed, and
/// the data weights are proportional to local dataset sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlSection {
    pub local_steps: usize,
    pub alpha: f64,
    pub alpha_decay: f64,
    pub batch: usize,
    /// Cap on trained rounds, so an effectively unlimited budget still
    /// finishes.
    pub max_rounds: usize,
}

impl Default for FlSection {
    fn default() -> Self {
        let d = FlConfig::default();
        Self {
            local_steps: d.local_steps,
            alpha: d.alpha,
            alpha_decay: d.alpha_decay,
            batch: d.batch,
            max_rounds: 1000,
        }
    }
}

impl FlSection {
    pub fn fl_config(&self, seed: u64) -> FlConfig {
        FlConfig {
            local_steps: self.local_steps,
            alpha: self.alpha,
            alpha_decay: self.alpha_decay,
            batch: self.batch,
            rho: None,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSweep {
    /// (θ₁, θ₂) pairs.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaSweep {
    /// (M, N) pairs.
    pub pairs: Vec<(usize, usize)>,
    #[serde(default = "one")]
    pub cost_per_antenna: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Also try every observed Δ as a threshold (see `EpsilonGrid`).
    pub adaptive: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { lo: 1e-5, hi: 0.25, points: 25_000, adaptive: true }
    }
}

impl GridSection {
    pub fn grid(&self) -> Result<EpsilonGrid, RunnerError> {
        if !(self.lo >= 0.0 && self.hi >= self.lo && self.hi.is_finite()) {
            return Err(RunnerError::Config("stopping.grid needs 0 ≤ lo ≤ hi < ∞".into()));
        }
        Ok(EpsilonGrid::linspace(self.lo, self.hi, self.points)
            .map_err(|e| RunnerError::Config(e.to_string()))?
            .adaptive(self.adaptive))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingSection {
    pub schedules: Vec<CostSchedule>,
    pub betas: Vec<f64>,
    pub w0: Vec<f64>,
    pub alpha: f64,
    pub horizon: usize,
    pub refresh_every: usize,
    pub grid: GridSection,
}

impl Default for StoppingSection {
    fn default() -> Self {
        Self {
            schedules: vec![CostSchedule::CONSTANT, CostSchedule::LINEAR, CostSchedule::EXPONENTIAL],
            betas: vec![0.5],
            w0: vec![4.0, -3.0],
            alpha: 0.05,
            horizon: 25_000,
            refresh_every: 1,
            grid: GridSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub system: SystemParams,
    #[serde(default)]
    pub weights: TradeoffWeights,
    #[serde(default)]
    pub budget: BudgetSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub dinkelbach: DinkelbachConfig,
    #[serde(default)]
    pub max_sum: MaxSumConfig,
    #[serde(default)]
    pub fl: FlSection,
    #[serde(default)]
    pub task: TaskSpec,
    #[serde(default)]
    pub theta_sweep: Option<ThetaSweep>,
    #[serde(default)]
    pub antenna_sweep: Option<AntennaSweep>,
    #[serde(default)]
    pub stopping: Option<StoppingSection>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunnerError> {
        let cfg: Self = toml::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunnerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunnerError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        let cfg_err = |e: &dyn std::fmt::Display| RunnerError::Config(e.to_string());
        self.system.validate().map_err(|e| cfg_err(&e))?;
        self.weights.validate().map_err(|e| cfg_err(&e))?;
        self.budget.validate().map_err(|e| cfg_err(&e))?;
        self.solver.validate().map_err(|e| cfg_err(&e))?;
        self.dinkelbach.validate().map_err(|e| cfg_err(&e))?;
        if self.fl.batch == 0 || self.fl.batch > self.task.samples_per_user {
            return Err(RunnerError::Config(
                "fl.batch must lie in 1..=task.samples_per_user".into(),
            ));
        }
        if !(self.fl.alpha >= 0.0) || !(self.fl.alpha_decay >= 0.0) {
            return Err(RunnerError::Config("fl.alpha and fl.alpha_decay must be ≥ 0".into()));
        }
        if self.scenario.seeded() && self.seeds.is_empty() {
            return Err(RunnerError::Config(format!(
                "scenario {} needs a nonempty seed list",
                self.scenario.name()
            )));
        }
        match self.scenario {
            Scenario::ThetaSweep => {
                let sweep = self.theta_sweep.as_ref().ok_or_else(|| missing("theta_sweep"))?;
                for &(t1, t2) in &sweep.points {
                    TradeoffWeights::new(t1, t2).map_err(|e| cfg_err(&e))?;
                }
            }
            Scenario::AntennaSweep => {
                let sweep = self.antenna_sweep.as_ref().ok_or_else(|| missing("antenna_sweep"))?;
                if sweep.pairs.iter().any(|&(m, n)| m == 0 || n == 0) {
                    return Err(RunnerError::Config("antenna_sweep pairs need M, N ≥ 1".into()));
                }
                if !(sweep.cost_per_antenna >= 0.0) {
                    return Err(RunnerError::Config("cost_per_antenna must be ≥ 0".into()));
                }
            }
            Scenario::StoppingSuite => {
                let s = self.stopping.as_ref().ok_or_else(|| missing("stopping"))?;
                if s.betas.iter().any(|b| !(0.0..=1.0).contains(b)) {
                    return Err(RunnerError::Config("stopping.betas must lie in [0, 1]".into()));
                }
                if s.w0.len() != 2 || s.horizon == 0 || !(s.alpha > 0.0) || s.refresh_every == 0 {
                    return Err(RunnerError::Config(
                        "stopping needs a 2-entry w0, horizon ≥ 1, alpha > 0, refresh_every ≥ 1"
                            .into(),
                    ));
                }
                for c in &s.schedules {
                    c.validate().map_err(|e| cfg_err(&e))?;
                }
                s.grid.grid()?;
            }
            Scenario::PowallocCompare | Scenario::FlEnd2end => {}
        }
        Ok(())
    }
}

fn missing(section: &str) -> RunnerError {
    RunnerError::Config(format!("scenario needs a [{section}] section"))
}
