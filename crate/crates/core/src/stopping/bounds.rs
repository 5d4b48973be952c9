use super::Quadratic;

/// Constants of an L-smooth convex objective: L, R² ≥ ‖w − w⋆‖² over the
/// iterates, and μ when the objective is also strongly convex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub smoothness: f64,
    pub radius_sq: f64,
    pub strong_convexity: Option<f64>,
}

impl BoundParams {
    /// L and μ from the spectrum, R² = ‖w₀ − w⋆‖² (GD with α ≤ 2/L never
    /// moves farther from w⋆).
    pub fn for_quadratic(q: &Quadratic, w0: &[f64]) -> Self {
        let radius_sq = w0.iter().zip(q.minimizer()).map(|(a, b)| (a - b).powi(2)).sum();
        let mu = q.strong_convexity();
        Self {
            smoothness: q.smoothness(),
            radius_sq,
            strong_convexity: (mu > 0.0).then_some(mu),
        }
    }
}

/// 2·L·f₀·R² / (i + 4): the O(1/i) GD bound scaled by f₀ so that it stays
/// an upper bound whenever f₀ ≥ 1.
pub fn convex_upper_bound(b: &BoundParams, f0: f64, i: usize) -> f64 {
    2.0 * b.smoothness * f0 * b.radius_sq / (i as f64 + 4.0)
}

/// (L/2)·((κ−1)/(κ+1))^{2i}·‖w₀ − w⋆‖² with κ = L/μ, for step 2/(L + μ);
/// `None` without μ.
pub fn strongly_convex_bound(b: &BoundParams, dist0_sq: f64, i: usize) -> Option<f64> {
    let mu = b.strong_convexity?;
    let kappa = b.smoothness / mu;
    let q = (kappa - 1.0) / (kappa + 1.0);
    Some(0.5 * b.smoothness * q.powi(2 * i as i32) * dist0_sq)
}
