//! Trace the energy–latency trade-off by moving θ₂ against a fixed θ₁.

use cellfree_fl::budget::{energy_latency, t_max, BudgetSpec};
use cellfree_fl::channel::{realize, SystemParams};
use cellfree_fl::power_alloc::{coordinate_descent, SolverConfig, TradeoffWeights};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let params = SystemParams::default();
    let stats = realize(&params, seed)?;
    let cfg = SolverConfig::default();
    let budget = BudgetSpec::default();
    let k = params.users;

    println!("{:>8} {:>8} {:>9} {:>10} {:>10} {:>5}", "θ₂/θ₁", "mean p", "sweeps", "ℓ̄ (s)", "Ē (J)", "T");
    let mut warm = vec![1.0; k];
    for theta2 in [0.001, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 100.0] {
        let r = coordinate_descent(&stats, TradeoffWeights::new(1.0, theta2)?, &cfg, &warm)?;
        let b = t_max(&energy_latency(&stats, &r.allocation), &budget)?;
        let mean = r.allocation.iter().sum::<f64>() / k as f64;
        println!(
            "{:>8} {:>8.4} {:>9} {:>10.4} {:>10.4} {:>5}",
            theta2, mean, r.sweeps, b.ell_bar, b.e_bar, b.t
        );
        // Neighbouring weights have neighbouring optima.
        warm = r.allocation.into_vec();
    }
    Ok(())
}
