//! Exhaustive ε search across the cost weight β, plus a threshold sequence
//! reproduced by a single matched constant.

use cellfree_fl::stopping::{
    matched_constant_epsilon, optimal_constant_epsilon, run_with_threshold, CostSchedule, EpsilonGrid,
    StoppingProblem, Threshold,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = EpsilonGrid::reference();
    let deadline = CostSchedule::HardDeadline { delta: 0.001, deadline: 40 };
    println!("{:>5} {:<14} {:>10} {:>6} {:>12}", "β", "schedule", "ε⋆", "stop", "g⋆");
    for beta in [0.0, 0.25, 0.5, 0.75, 1.0] {
        for cost in [CostSchedule::CONSTANT, CostSchedule::LINEAR, CostSchedule::EXPONENTIAL, deadline] {
            let s = optimal_constant_epsilon(&StoppingProblem::reference(cost).with_beta(beta), &grid)?;
            println!("{:>5} {:<14} {:>10.5} {:>6} {:>12.6}", beta, cost.label(), s.epsilon, s.stop_index, s.g_star);
        }
    }

    let prob = StoppingProblem::reference(CostSchedule::LINEAR);
    let seq: Vec<f64> = (1..=prob.horizon).map(|i| 1e-4 * i as f64).collect();
    let run = run_with_threshold(&prob, &Threshold::Sequence(seq.clone()))?;
    let eps = matched_constant_epsilon(&run, seq[run.stop_index - 1]).ok_or("no matching constant")?;
    let constant = run_with_threshold(&prob, &Threshold::Constant(eps))?;
    println!(
        "\nε_i = 1e-4·i stops at {} (g = {:.6}); constant ε = {eps:.6} stops at {} (g = {:.6})",
        run.stop_index, run.g_star, constant.stop_index, constant.g_star
    );
    Ok(())
}
