//! Run a scenario config through the library (no CLI) and summarize the
//! tables it would write.

use cellfree_fl::runner::{run, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/theta_sweep.toml".into());
    let mut cfg = ExperimentConfig::load(path.as_ref())?;
    if cfg.seeds.len() > 2 {
        cfg.seeds.truncate(2);
    }
    let out = run(&cfg)?;
    println!("{}: {} run(s) not converged", cfg.scenario.name(), out.nonconverged);
    for w in &out.warnings {
        println!("warning: {w}");
    }
    for t in &out.tables {
        println!("\n{}.csv — {} rows", t.name, t.rows.len());
        println!("  {}", t.header.join(","));
        for row in t.rows.iter().take(4) {
            println!("  {}", row.join(","));
        }
    }
    Ok(())
}
