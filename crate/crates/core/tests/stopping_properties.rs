use cellfree_fl::rng;
use cellfree_fl::stopping::{
    best_threshold, fixed_causal_stop, matched_constant_epsilon, optimal_constant_epsilon,
    run_with_threshold, strongly_convex_bound, BoundParams, CostSchedule, EpsilonGrid, Quadratic,
    SmoothObjective, StoppingProblem, Threshold, Trajectory,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn quadratic(g: &mut ChaCha8Rng, dim: usize, alpha_times_l: f64, horizon: usize) -> StoppingProblem {
    let eigs: Vec<f64> = (0..dim).map(|_| g.random_range(0.2..4.0)).collect();
    let center: Vec<f64> = (0..dim).map(|_| g.random_range(-2.0..2.0)).collect();
    let q = Quadratic::with_spectrum(&eigs, center.clone(), Some(g));
    let w0 = center.iter().map(|c| c + g.random_range(-6.0..6.0)).collect();
    StoppingProblem {
        alpha: alpha_times_l / q.smoothness(),
        objective: q,
        w0,
        beta: 0.5,
        horizon,
        cost: CostSchedule::CONSTANT,
    }
}

/// The first i with Δ_i < ε, else K.
fn stop_for(delta: &[f64], eps: f64) -> usize {
    let k = delta.len() - 1;
    (1..=k).find(|&i| delta[i] < eps).unwrap_or(k)
}

/// Convex GD with α ≤ 1/L: every Δ_i is strictly smaller than the one
/// before, checked until Δ is within a few ulps of f₀ (past that, f is at
/// rounding level and Δ is noise).
#[test]
fn progress_strictly_shrinks() {
    let mut g = rng::stream(21, &[0]);
    let mut checked = 0;
    for case in 0..100 {
        let dim = 2 + case % 4;
        let step = g.random_range(0.3..=1.0);
        let prob = quadratic(&mut g, dim, step, 400);
        let t = Trajectory::compute(&prob).unwrap();
        let floor = 1e-12 * t.f[0];
        for i in 2..=t.horizon() {
            if t.delta[i - 1] <= floor {
                break;
            }
            assert!(t.delta[i] < t.delta[i - 1], "case {case}: Δ_{i} = {} ≥ Δ_{} = {}", t.delta[i], i - 1, t.delta[i - 1]);
            checked += 1;
        }
    }
    assert!(checked > 1000);
}

/// On strictly shrinking Δ, a smaller threshold never stops earlier, and an
/// earlier stop always comes from a strictly larger threshold. The converse
/// of the first direction only holds up to ties: different ε can share a stop.
#[test]
fn threshold_order_matches_stop_order() {
    let mut g = rng::stream(22, &[0]);
    let grid = EpsilonGrid::reference().adaptive(true);
    let mut pairs = 0;
    for case in 0..60 {
        let mut prob = quadratic(&mut g, 2, 1.0, 300);
        prob.cost = [CostSchedule::CONSTANT, CostSchedule::LINEAR, CostSchedule::EXPONENTIAL][case % 3];
        let t = Trajectory::compute(&prob).unwrap();
        let k = (2..=t.horizon()).find(|&i| t.delta[i] >= t.delta[i - 1]).map_or(t.horizon(), |i| i - 1);
        let delta = &t.delta[..=k];

        // Causal vs non-causal threshold, both as constants on the same trace.
        let prob_k = StoppingProblem { horizon: k, ..prob.clone() };
        let nc = optimal_constant_epsilon(&prob_k, &grid).unwrap();
        let bounds = BoundParams::for_quadratic(&prob.objective, &prob.w0);
        let c = fixed_causal_stop(&prob_k, &bounds, &grid).unwrap();
        let eps_c_raw = *c.thresholds.last().unwrap();
        let Some(eps_c) = matched_constant_epsilon(&c.trace, eps_c_raw) else { continue };
        let (i_nc, i_c) = (stop_for(delta, nc.epsilon), stop_for(delta, eps_c));
        assert_eq!(i_c, c.trace.stop_index);
        if eps_c <= nc.epsilon {
            assert!(i_nc <= i_c, "case {case}: ε_c {eps_c} ≤ ε_nc {} but i_nc {i_nc} > i_c {i_c}", nc.epsilon);
        }
        if i_nc < i_c {
            assert!(eps_c < nc.epsilon, "case {case}: stops {i_nc} < {i_c} from ε_c {eps_c} ≥ ε_nc {}", nc.epsilon);
        }

        // Same relation over arbitrary threshold pairs.
        for _ in 0..50 {
            let a = 10f64.powf(g.random_range(-8.0..0.0));
            let b = 10f64.powf(g.random_range(-8.0..0.0));
            let (sa, sb) = (stop_for(delta, a), stop_for(delta, b));
            if a <= b {
                assert!(sb <= sa, "ε {a} ≤ {b} but stops {sa} < {sb}");
            }
            if sb < sa {
                assert!(a < b, "stops {sb} < {sa} from ε {b} ≤ {a}");
            }
            pairs += 1;
        }
    }
    assert!(pairs > 0);
}

/// g at the searched ε is never beaten by any other grid value.
#[test]
fn searched_threshold_is_argmin_over_grid() {
    let grid = EpsilonGrid::reference();
    for beta in [0.0, 0.25, 0.5, 0.75, 1.0] {
        for cost in [
            CostSchedule::CONSTANT,
            CostSchedule::LINEAR,
            CostSchedule::EXPONENTIAL,
            CostSchedule::HardDeadline { delta: 0.001, deadline: 40 },
        ] {
            let prob = StoppingProblem::reference(cost).with_beta(beta);
            let t = Trajectory::compute(&prob).unwrap();
            let scores = t.scores(beta, &cost);
            let best = best_threshold(&t.delta, &scores, &grid);
            for &e in grid.values() {
                assert!(best.g_star <= scores[stop_for(&t.delta, e)], "β {beta} {}: ε {e}", cost.label());
            }
        }
    }
}

/// Any increasing ε sequence stops where its own value at the stop, as a
/// constant, stops — whenever Δ at that stop is a new running minimum.
#[test]
fn increasing_sequence_matches_its_own_constant() {
    let mut g = rng::stream(23, &[0]);
    let mut literal = 0;
    for case in 0..40 {
        let mut prob = quadratic(&mut g, 3, 1.0, 200);
        prob.cost = CostSchedule::LINEAR;
        let mut e = g.random_range(0.0..1e-3);
        let seq: Vec<f64> = (0..prob.horizon)
            .map(|_| {
                e += g.random_range(0.0..1e-3);
                e
            })
            .collect();
        let run = run_with_threshold(&prob, &Threshold::Sequence(seq.clone())).unwrap();
        let at_stop = seq[run.stop_index - 1];
        let constant = run_with_threshold(&prob, &Threshold::Constant(at_stop)).unwrap();
        if constant.stop_index == run.stop_index {
            literal += 1;
            assert_eq!(constant.g_star, run.g_star);
        }
        let eps = matched_constant_epsilon(&run, at_stop).expect("strictly shrinking Δ");
        let matched = run_with_threshold(&prob, &Threshold::Constant(eps)).unwrap();
        assert_eq!((matched.stop_index, matched.g_star), (run.stop_index, run.g_star), "case {case}");
    }
    assert!(literal > 0);
}

/// With step 2/(L + μ), f − f⋆ stays under (L/2)·q^{2i}·‖w₀ − w⋆‖².
#[test]
fn strongly_convex_bound_holds() {
    let mut g = rng::stream(24, &[0]);
    for case in 0..50 {
        let mut prob = quadratic(&mut g, 2 + case % 3, 1.0, 300);
        let (l, mu) = (prob.objective.smoothness(), prob.objective.strong_convexity());
        prob.alpha = 2.0 / (l + mu);
        let b = BoundParams::for_quadratic(&prob.objective, &prob.w0);
        let t = Trajectory::compute(&prob).unwrap();
        for (i, &f) in t.f.iter().enumerate() {
            let bound = strongly_convex_bound(&b, b.radius_sq, i).unwrap();
            assert!(f <= bound * (1.0 + 1e-9) + 1e-15 * t.f[0], "case {case}, i {i}: f {f} > bound {bound}");
        }
        assert_eq!(prob.objective.value(prob.objective.minimizer()), 0.0);
    }
}
