//! Uplink power allocation for federated learning over cell-free massive MIMO,
//! and a cost-aware framework for deciding when to stop an iterative solver.
//!
//! The pipeline is `channel` → `power_alloc` → `budget` → `fedavg`, wired
//! together (with the `stopping` experiments) by `runner`.

pub mod budget;
pub mod channel;
pub mod fedavg;
pub mod power_alloc;
pub mod rng;
pub mod runner;
pub mod stopping;

pub use budget::{energy_latency, t_max, BudgetReport, BudgetSpec, EnergyLatency};
pub use channel::{
    assign_pilots, generate_network, mmse_stats, noise_power, EstimationStats, NetworkRealization,
    PilotAssignment, RateModel, SystemParams,
};
pub use power_alloc::{PowerAllocation, SolverConfig, TradeoffWeights};
