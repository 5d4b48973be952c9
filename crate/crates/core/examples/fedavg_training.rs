//! Allocate power, turn the budget into a round count, and train FedAvg on a
//! synthetic softmax task for exactly that many rounds.

use cellfree_fl::budget::{energy_latency, t_max, BudgetSpec};
use cellfree_fl::channel::{realize, SystemParams};
use cellfree_fl::fedavg::{train, FlConfig, SyntheticTask, TaskSpec};
use cellfree_fl::power_alloc::{coordinate_descent, SolverConfig, TradeoffWeights};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = 3;
    let params = SystemParams::default();
    let stats = realize(&params, seed)?;
    let p = coordinate_descent(&stats, TradeoffWeights::default(), &SolverConfig::default(), &vec![1.0; params.users])?;
    let t = t_max(&energy_latency(&stats, &p.allocation), &BudgetSpec::default())?.t as usize;
    println!("budget affords {t} rounds");

    let task = SyntheticTask::generate(&TaskSpec::default(), params.users, seed);
    let out = train(&task, &FlConfig { seed, ..FlConfig::default() }, t.min(1000))?;
    println!("model dimension {}", task.dim());
    for (round, loss) in out.loss_trace.iter().enumerate().step_by(20) {
        println!("round {round:>4}  loss {loss:.5}");
    }
    println!("final  {:>4}  loss {:.5}", out.model.round, out.loss_trace.last().unwrap());
    Ok(())
}
