use super::objective::CoordinateTerms;
use super::{EnergyLatencyObjective, PowerAllocation, PowerError, SolverConfig, TradeoffWeights};
use crate::channel::EstimationStats;

#[derive(Debug, Clone)]
pub struct CdReport {
    pub allocation: PowerAllocation,
    /// ν(p*) with the caller's weights (J + s).
    pub nu: f64,
    /// Normalized ν (θ rescaled to sum to one) at the start and after every
    /// sweep. Nonincreasing by construction. Moves too small for ν's rounding
    /// to register advance it by the integrated derivative, so it can sit a
    /// few ulps away from a fresh evaluation at the same point.
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    /// False when `max_sweeps` ran out before the outer tolerance and the
    /// stationarity check were both met; `allocation` is then the last iterate.
    pub converged: bool,
    /// Inner steps abandoned because no halving of η decreased ν and no
    /// bracketed root of ∂ν_j was found.
    pub stalls: usize,
}

/// Sweeps users 0..K; each runs projected gradient steps on its own power
/// until |∂ν_j| ≤ ε̄ or it presses against a bound. A step that would not
/// decrease ν is halved until it does, so every accepted move is a descent
/// move on the exact objective. When halving runs out, the user moves to the
/// bisected zero of ∂ν_j on the near side of the minimum instead.
///
/// Terminates when a sweep moves no power by more than ε and every user
/// passes the stationarity test at the final point.
pub fn coordinate_descent(
    stats: &EstimationStats,
    weights: TradeoffWeights,
    cfg: &SolverConfig,
    p_init: &[f64],
) -> Result<CdReport, PowerError> {
    cfg.validate()?;
    let reported = EnergyLatencyObjective::new(stats, weights)?;
    let obj = reported.with_weights(weights.normalized())?;
    let k = obj.users();
    if p_init.len() != k {
        return Err(PowerError::InvalidAllocation(format!(
            "p_init has {} entries, expected {k}",
            p_init.len()
        )));
    }
    PowerAllocation::new(p_init.to_vec())?;

    let mut p: Vec<f64> = p_init.iter().map(|&x| x.clamp(cfg.p_floor, 1.0)).collect();
    let mut current = obj.value_normalized(&p)?;
    let mut trace = vec![current];
    let mut converged = false;
    let mut stalls = 0;
    let mut sweeps = 0;

    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let start = p.clone();
        for j in 0..k {
            let terms = obj.coordinate(&p, j);
            for _ in 0..cfg.max_inner {
                let x = p[j];
                let g = terms.derivative(x)?;
                if at_rest(x, g, cfg) {
                    break;
                }
                let mut step = cfg.eta;
                let mut accepted = false;
                while step > 1e-12 * cfg.eta {
                    let cand = (x - step * g).clamp(cfg.p_floor, 1.0);
                    if cand == x {
                        break;
                    }
                    p[j] = cand;
                    let v = obj.value_normalized(&p)?;
                    if v <= current {
                        current = v;
                        accepted = true;
                        break;
                    }
                    p[j] = x;
                    step *= 0.5;
                }
                if !accepted {
                    // Near a sharply curved minimum the decrease from any step
                    // is below the rounding of ν while |∂ν_j| is still above
                    // ε̄, so comparing evaluated ν values cannot see it. ∂ν_j
                    // has one sign on [x, root) (ν has a single minimum in
                    // p_j), so the move to the starting-side end of a
                    // bisection bracket is a strict decrease; its size comes
                    // from integrating ∂ν_j instead of re-evaluating ν.
                    let target = (x - cfg.eta * g).clamp(cfg.p_floor, 1.0);
                    if let Some(r) = bisect_root(&terms, x, target)?.filter(|&r| r != x) {
                        let drop = integrate(&terms, x, r)?;
                        if drop <= 0.0 {
                            p[j] = r;
                            current += drop;
                            continue;
                        }
                    }
                    stalls += 1;
                    break;
                }
            }
        }
        trace.push(current);
        let moved = p
            .iter()
            .zip(&start)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if moved <= cfg.eps_outer && stationarity_violations(&obj, &p, cfg)?.is_empty() {
            converged = true;
            break;
        }
    }

    Ok(CdReport {
        nu: reported.value(&p)?,
        allocation: PowerAllocation::new(p)?,
        objective_trace: trace,
        sweeps,
        converged,
        stalls,
    })
}

/// Zero of ∂ν_j between `a` and `b`, if the derivative changes sign there.
fn bisect_root(terms: &CoordinateTerms, a: f64, b: f64) -> Result<Option<f64>, PowerError> {
    let ga = terms.derivative(a)?;
    if terms.derivative(b)?.signum() == ga.signum() {
        return Ok(None);
    }
    let (mut lo, mut hi) = (a, b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let gm = terms.derivative(mid)?;
        if gm == 0.0 {
            return Ok(Some(mid));
        }
        if gm.signum() == ga.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // The end on the starting side never crosses the minimizer.
    Ok(Some(lo))
}

/// ∫_a^b ∂ν_j by five-point Gauss–Legendre.
fn integrate(terms: &CoordinateTerms, a: f64, b: f64) -> Result<f64, PowerError> {
    const NODES: [(f64, f64); 5] = [
        (0.0, 0.568_888_888_888_888_9),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
        (0.906_179_845_938_664, 0.236_926_885_056_189_08),
    ];
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut sum = 0.0;
    for (x, w) in NODES {
        sum += w * terms.derivative(mid + half * x)?;
    }
    Ok(half * sum)
}

fn at_rest(x: f64, g: f64, cfg: &SolverConfig) -> bool {
    g.abs() <= cfg.eps_grad || (x >= 1.0 && g < 0.0) || (x <= cfg.p_floor && g > 0.0)
}

/// Users failing the boundary-aware stationarity test at `p`: neither
/// |∂ν_j| ≤ ε̄, nor p_j = 1 with ∂ν_j < 0, nor p_j = p_floor with ∂ν_j > 0.
/// Gradients are taken in the objective's normalized units.
pub fn stationarity_violations(
    obj: &EnergyLatencyObjective,
    p: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<usize>, PowerError> {
    let mut bad = Vec::new();
    for j in 0..p.len() {
        if !at_rest(p[j], obj.partial_normalized(p, j)?, cfg) {
            bad.push(j);
        }
    }
    Ok(bad)
}
