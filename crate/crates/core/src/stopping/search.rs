use super::{StoppingError, StoppingProblem, StoppingTrace, SmoothObjective, Termination, Trajectory};

/// Candidate constant thresholds, ascending and deduplicated.
///
/// An adaptive grid is additionally extended, per search, with the Δ values
/// of the sequence being searched. Every reachable stop index then has a
/// threshold on the grid, so the search returns the exact optimum over stop
/// indices instead of the best one the fixed points happen to reach.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonGrid {
    values: Vec<f64>,
    adaptive: bool,
}

impl EpsilonGrid {
    pub fn new(mut values: Vec<f64>) -> Result<Self, StoppingError> {
        if values.is_empty() || values.iter().any(|e| !(*e >= 0.0)) {
            return Err(StoppingError::InvalidProblem(
                "ε grid must be nonempty and nonnegative".into(),
            ));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(Self { values, adaptive: false })
    }

    pub fn adaptive(mut self, on: bool) -> Self {
        self.adaptive = on;
        self
    }

    pub fn is_adaptive(&self) -> bool {
        self.adaptive
    }

    /// n points evenly spaced on [lo, hi], plus 0 and +∞ so that "never
    /// stop early" and "stop after one step" are always available.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Self, StoppingError> {
        let mut v = Vec::with_capacity(n + 2);
        v.push(0.0);
        match n {
            0 => {}
            1 => v.push(lo),
            _ => v.extend((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)),
        }
        v.push(f64::INFINITY);
        Self::new(v)
    }

    /// {0} ∪ linspace(1e-5, 0.25, 25 000) ∪ {+∞}.
    pub fn reference() -> Self {
        Self::linspace(1e-5, 0.25, 25_000).expect("static grid is valid")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSearch {
    pub epsilon: f64,
    pub stop_index: usize,
    pub g_star: f64,
}

fn merged(base: &[f64], delta: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = base.iter().chain(delta).copied().filter(|e| *e >= 0.0).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Best constant threshold for a given sequence.
///
/// `delta[i]` is Δ_i for i = 1..=K (entry 0 is ignored) and `g[i]` the score
/// of stopping at i. The stop index for ε is the first i with Δ_i < ε, i.e.
/// one past the prefix whose running minimum stays ≥ ε, or K. Grid values
/// are scanned in ascending order with a strict improvement test, so ties go
/// to the smallest ε.
pub fn best_threshold(delta: &[f64], g: &[f64], grid: &EpsilonGrid) -> EpsilonSearch {
    let horizon = delta.len() - 1;
    assert!(horizon >= 1 && g.len() == delta.len());
    let mut run_min = Vec::with_capacity(horizon);
    let mut m = f64::INFINITY;
    for &d in &delta[1..] {
        m = m.min(d);
        run_min.push(m);
    }
    // prefix = #{i : run_min_i ≥ ε}, nonincreasing as ε grows.
    let mut prefix = horizon;
    let mut best: Option<EpsilonSearch> = None;
    let extended;
    let values = if grid.adaptive {
        extended = merged(&grid.values, &delta[1..]);
        &extended[..]
    } else {
        &grid.values[..]
    };
    for &eps in values {
        while prefix > 0 && run_min[prefix - 1] < eps {
            prefix -= 1;
        }
        let stop = if prefix < horizon { prefix + 1 } else { horizon };
        if best.is_none_or(|b| g[stop] < b.g_star) {
            best = Some(EpsilonSearch { epsilon: eps, stop_index: stop, g_star: g[stop] });
        }
    }
    best.expect("grid is nonempty")
}

/// Exhaustive search over a constant-threshold grid with full knowledge of
/// the trajectory.
pub fn optimal_constant_epsilon<O: SmoothObjective>(
    prob: &StoppingProblem<O>,
    grid: &EpsilonGrid,
) -> Result<EpsilonSearch, StoppingError> {
    let traj = Trajectory::compute(prob)?;
    Ok(best_threshold(&traj.delta, &traj.scores(prob.beta, &prob.cost), grid))
}

/// A constant threshold that reproduces the stop of a run driven by a
/// threshold sequence: min(ε_t, min_{i<t} Δ_i). Returns `None` when Δ_t is
/// not strictly below every earlier Δ, in which case no constant can.
pub fn matched_constant_epsilon(trace: &StoppingTrace, eps_at_stop: f64) -> Option<f64> {
    let t = trace.stop_index;
    let earlier = trace.records[1..t]
        .iter()
        .map(|r| r.delta)
        .fold(f64::INFINITY, f64::min);
    match trace.terminated_by {
        Termination::Horizon => Some(earlier.min(trace.records[t].delta)),
        _ => {
            let e = eps_at_stop.min(earlier);
            (trace.records[t].delta < e).then_some(e)
        }
    }
}
