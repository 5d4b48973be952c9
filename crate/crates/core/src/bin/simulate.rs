use std::path::PathBuf;
use std::process::ExitCode;

use cellfree_fl::runner::{run, ExperimentConfig, Scenario};
use clap::Parser;

/// Run a simulation scenario and write its CSV tables.
///
/// Exit codes: 0 success, 1 config error, 2 a solver did not converge.
#[derive(Parser)]
#[command(version)]
struct Cli {
    scenario: Scenario,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds replacing the config's list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    if cfg.scenario != cli.scenario {
        eprintln!(
            "config error: config is for {}, command line asked for {}",
            cfg.scenario.name(),
            cli.scenario.name()
        );
        return ExitCode::from(1);
    }
    if let Some(seeds) = cli.seeds {
        cfg.seeds = seeds;
    }
    let Some(out_dir) = cli.out.or_else(|| cfg.output_dir.clone()) else {
        eprintln!("config error: no output directory (use --out or output_dir)");
        return ExitCode::from(1);
    };

    let output = match run(&cfg) {
        Ok(o) => o,
        Err(e @ cellfree_fl::runner::RunnerError::Config(_)) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    match output.write(&out_dir) {
        Ok(paths) if !cli.quiet => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Ok(_) => {}
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    }
    if output.nonconverged > 0 {
        if !cli.quiet {
            eprintln!("{} run(s) did not converge; see the status column", output.nonconverged);
        }
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
