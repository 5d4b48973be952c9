//! Compare the stopping policies on w₁² + (w₂ − 1)² for the three cost schedules.

use cellfree_fl::stopping::{
    causal_derivative_stop, fixed_causal_stop, min_prediction_stop, optimal_constant_epsilon,
    sequential_causal_stop, BoundParams, CostSchedule, EpsilonGrid, StoppingProblem,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let beta: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.5);
    // Pass "adaptive" as second argument to extend the grid with each searched sequence's Δ values.
    let adaptive = std::env::args().nth(2).is_some_and(|a| a == "adaptive");
    let grid = EpsilonGrid::reference().adaptive(adaptive);
    println!("β = {beta}, adaptive grid: {adaptive}");
    println!("{:<12} {:<14} {:>6} {:>12} {:>12}", "schedule", "policy", "stop", "g", "ε");
    for cost in [CostSchedule::CONSTANT, CostSchedule::LINEAR, CostSchedule::EXPONENTIAL] {
        let prob = StoppingProblem::reference(cost).with_beta(beta);
        let bounds = BoundParams::for_quadratic(&prob.objective, &prob.w0);

        let nc = optimal_constant_epsilon(&prob, &grid)?;
        let row = |policy: &str, stop: usize, g: f64, eps: Option<f64>| {
            let eps = eps.map_or_else(|| "-".to_string(), |e| format!("{e:.4}"));
            println!("{:<12} {:<14} {:>6} {:>12.6} {:>12}", cost.label(), policy, stop, g, eps);
        };
        row("noncausal_opt", nc.stop_index, nc.g_star, Some(nc.epsilon));

        let d = causal_derivative_stop(&prob)?;
        row("derivative", d.stop_index, d.g_star, None);

        let fixed = fixed_causal_stop(&prob, &bounds, &grid)?;
        row("fixed_bound", fixed.trace.stop_index, fixed.trace.g_star, fixed.thresholds.last().copied());

        let seq = sequential_causal_stop(&prob, &bounds, 1, &grid)?;
        row("sequential", seq.trace.stop_index, seq.trace.g_star, seq.thresholds.last().copied());

        let min = min_prediction_stop(&prob, &bounds, &grid)?;
        row("min_predict", min.trace.stop_index, min.trace.g_star, min.thresholds.last().copied());
    }
    Ok(())
}
