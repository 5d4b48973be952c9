//! How many rounds a latency/energy budget affords, and which side binds.

use cellfree_fl::budget::{energy_latency, t_max, BudgetSpec};
use cellfree_fl::channel::{realize, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = SystemParams::default();
    let stats = realize(&params, 1)?;
    let el = energy_latency(&stats, &vec![1.0; params.users]);
    let slowest = el.latency.iter().copied().fold(0.0, f64::max);
    println!("full power: slowest upload {slowest:.3} s, round energy {:.4} J", el.energy.iter().sum::<f64>());

    println!("{:>10} {:>10} {:>8} {:>6} {:>8}", "latency/s", "energy/J", "T_max", "T", "binding");
    for (l, e) in [(200.0, 200.0), (200.0, 20.0), (50.0, 200.0), (1000.0, 1.0), (f64::INFINITY, 200.0)] {
        let r = t_max(&el, &BudgetSpec::new(l, e)?)?;
        let binding = if l / r.ell_bar <= e / r.e_bar { "latency" } else { "energy" };
        println!("{:>10} {:>10} {:>8.2} {:>6} {:>8}", l, e, r.t_max, r.t, binding);
    }
    Ok(())
}
