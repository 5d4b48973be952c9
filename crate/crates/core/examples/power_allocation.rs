//! Solve one network realization with the energy–latency allocation and both
//! baselines, and show what each buys under a 200 s / 200 J budget.

use cellfree_fl::budget::{energy_latency, t_max, BudgetSpec};
use cellfree_fl::channel::{realize, SystemParams};
use cellfree_fl::power_alloc::{
    coordinate_descent, dinkelbach_maxmin_ee, max_sum_rate, DinkelbachConfig, MaxSumConfig,
    SolverConfig, TradeoffWeights,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let params = SystemParams::default();
    let stats = realize(&params, seed)?;
    let budget = BudgetSpec::default();
    let k = params.users;

    let ours = coordinate_descent(&stats, TradeoffWeights::new(1.0, 1.0)?, &SolverConfig::default(), &vec![1.0; k])?;
    println!(
        "ours: {} sweeps, converged {}, {} stalls, ν = {:.4}",
        ours.sweeps, ours.converged, ours.stalls, ours.nu
    );
    let dink = dinkelbach_maxmin_ee(&stats, &DinkelbachConfig { seed, ..Default::default() })?;
    println!(
        "dinkelbach: {} outer steps, converged {}, λ = {:.4}",
        dink.phi_trace.len(),
        dink.converged,
        dink.state.lambda
    );
    let ms = max_sum_rate(&stats, &MaxSumConfig { seed, ..Default::default() })?;
    println!(
        "max_sum: start {}, converged {}, Σ R = {:.3} Mbit/s",
        ms.best_start,
        ms.converged,
        ms.sum_rate / 1e6
    );

    println!("\n{:<11} {:>5} {:>9} {:>9} {:>8} {:>8}", "method", "T", "E_bar/J", "ell_bar/s", "min p", "max p");
    for (name, p) in [("ours", &ours.allocation), ("dinkelbach", &dink.allocation), ("max_sum", &ms.allocation)] {
        let r = t_max(&energy_latency(&stats, p), &budget)?;
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(0.0, f64::max);
        println!(
            "{:<11} {:>5} {:>9.4} {:>9.4} {:>8.4} {:>8.4}",
            name, r.t, r.e_bar, r.ell_bar, lo, hi
        );
    }
    Ok(())
}
