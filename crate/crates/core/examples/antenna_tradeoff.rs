//! Same total antenna count, spread over more or fewer APs: deployment cost
//! M(1 + cN) against the rounds the allocation affords.

use cellfree_fl::budget::{energy_latency, t_max, BudgetSpec};
use cellfree_fl::channel::{realize, SystemParams};
use cellfree_fl::power_alloc::{antenna_cost, coordinate_descent, SolverConfig, TradeoffWeights};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    let seeds = 1..=3u64;
    println!("{:>4} {:>4} {:>8} {:>8}", "M", "N", "cost", "mean T");
    for (m, n) in [(64, 1), (32, 2), (16, 4), (8, 8), (4, 16)] {
        let params = SystemParams { aps: m, antennas: n, ..SystemParams::default() };
        let mut total = 0;
        for seed in seeds.clone() {
            let stats = realize(&params, seed)?;
            let r = coordinate_descent(&stats, TradeoffWeights::default(), &SolverConfig::default(), &vec![1.0; params.users])?;
            total += t_max(&energy_latency(&stats, &r.allocation), &BudgetSpec::default())?.t;
        }
        println!("{:>4} {:>4} {:>8} {:>8.1}", m, n, antenna_cost(m, n, c), total as f64 / 3.0);
    }
    Ok(())
}
