//! Network geometry, MMSE channel-estimation statistics and uplink rates.
//!
//! Matrices indexed by AP and user are stored as `[m][k]` (M rows, K columns).

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

/// AP antennas sit this far above the user plane (m).
pub const HEIGHT_OFFSET_M: f64 = 10.0;
/// Pathloss at 1 m (dB).
pub const PATHLOSS_INTERCEPT_DB: f64 = -30.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),
    #[error("allocation has {got} entries, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Deployment and link-budget parameters. Defaults are the reference
/// scenario: 16 APs × 4 antennas, 20 users, 20 MHz, τ_c = 200, τ_p = 10,
/// 100 mW, 7 dB noise figure, 1 km wrap-around square, exponent 3.67,
/// 32-bit entries, d = 462 410.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    pub aps: usize,
    pub antennas: usize,
    pub users: usize,
    pub bandwidth_hz: f64,
    pub coherence_len: usize,
    pub pilot_len: usize,
    pub max_power_w: f64,
    pub noise_figure_db: f64,
    /// Normalized per-pilot SNR ρ_p. `None` means pᵘ/σ², i.e. pilots sent
    /// at full power.
    pub pilot_snr: Option<f64>,
    pub area_side_m: f64,
    pub pathloss_exponent: f64,
    pub bits_per_entry: f64,
    pub model_dim: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            aps: 16,
            antennas: 4,
            users: 20,
            bandwidth_hz: 20e6,
            coherence_len: 200,
            pilot_len: 10,
            max_power_w: 0.1,
            noise_figure_db: 7.0,
            pilot_snr: None,
            area_side_m: 1000.0,
            pathloss_exponent: 3.67,
            bits_per_entry: 32.0,
            model_dim: 462_410.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |msg: &str| Err(ChannelError::InvalidParams(msg.to_string()));
        if self.aps == 0 || self.antennas == 0 || self.users == 0 {
            return bad("M, N and K must all be at least 1");
        }
        if self.pilot_len == 0 || self.pilot_len >= self.coherence_len {
            return bad("need 0 < tau_p < tau_c");
        }
        if !(self.bandwidth_hz > 0.0) || !self.bandwidth_hz.is_finite() {
            return bad("bandwidth must be positive");
        }
        if !(self.max_power_w > 0.0) || !self.max_power_w.is_finite() {
            return bad("p_u must be positive");
        }
        if !(self.area_side_m > 0.0) || !self.area_side_m.is_finite() {
            return bad("area side must be positive");
        }
        if !self.noise_figure_db.is_finite() || !self.pathloss_exponent.is_finite() {
            return bad("noise figure and pathloss exponent must be finite");
        }
        if let Some(rho) = self.pilot_snr {
            if !(rho > 0.0) || !rho.is_finite() {
                return bad("pilot SNR must be positive");
            }
        }
        if !(self.bits_per_entry > 0.0) || !(self.model_dim > 0.0) {
            return bad("b and d must be positive");
        }
        Ok(())
    }

    /// σ² in watts.
    pub fn sigma2(&self) -> f64 {
        noise_power(self.bandwidth_hz, self.noise_figure_db)
    }

    pub fn rho_p(&self) -> f64 {
        self.pilot_snr
            .unwrap_or_else(|| self.max_power_w / self.sigma2())
    }

    /// Total pilot energy p_p = τ_p·ρ_p.
    pub fn pilot_energy(&self) -> f64 {
        self.pilot_len as f64 * self.rho_p()
    }

    /// Fraction of the coherence block left for data, 1 − τ_p/τ_c.
    pub fn prelog(&self) -> f64 {
        1.0 - self.pilot_len as f64 / self.coherence_len as f64
    }

    /// Payload per upload, b·d (bits).
    pub fn payload_bits(&self) -> f64 {
        self.bits_per_entry * self.model_dim
    }
}

/// Thermal noise −174 dBm/Hz + 10·log₁₀B + NF, returned in watts.
pub fn noise_power(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    let dbm = -174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db;
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub ap_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
    /// β[m][k], linear scale.
    pub beta: Vec<Vec<f64>>,
    pub seed: u64,
}

impl NetworkRealization {
    /// Builds a realization from explicit β (used for hand-made instances).
    pub fn from_beta(beta: Vec<Vec<f64>>) -> Self {
        let m = beta.len();
        let k = beta.first().map_or(0, Vec::len);
        Self {
            ap_positions: vec![[0.0, 0.0]; m],
            user_positions: vec![[0.0, 0.0]; k],
            beta,
            seed: 0,
        }
    }

    pub fn aps(&self) -> usize {
        self.beta.len()
    }

    pub fn users(&self) -> usize {
        self.beta.first().map_or(0, Vec::len)
    }
}

fn torus_delta(a: f64, b: f64, side: f64) -> f64 {
    let d = (a - b).abs();
    d.min(side - d)
}

/// Large-scale fading (linear) at 3-D distance `d` metres.
pub fn pathloss(d: f64, exponent: f64) -> f64 {
    let db = PATHLOSS_INTERCEPT_DB - 10.0 * exponent * d.log10();
    10f64.powf(db / 10.0)
}

/// β between two planar points on the wrap-around square.
pub fn large_scale_fading(ap: [f64; 2], user: [f64; 2], params: &SystemParams) -> f64 {
    let side = params.area_side_m;
    let dx = torus_delta(ap[0], user[0], side);
    let dy = torus_delta(ap[1], user[1], side);
    let d = (dx * dx + dy * dy + HEIGHT_OFFSET_M * HEIGHT_OFFSET_M).sqrt();
    pathloss(d, params.pathloss_exponent)
}

/// Drops APs and users uniformly on the square and computes β.
pub fn generate_network(
    params: &SystemParams,
    seed: u64,
) -> Result<NetworkRealization, ChannelError> {
    params.validate()?;
    let side = params.area_side_m;
    let mut rng = rng::stream(seed, &[rng::tag::NETWORK]);
    let mut drop = |n: usize| -> Vec<[f64; 2]> {
        (0..n)
            .map(|_| [rng.random_range(0.0..side), rng.random_range(0.0..side)])
            .collect()
    };
    let ap_positions = drop(params.aps);
    let user_positions = drop(params.users);
    let beta = ap_positions
        .iter()
        .map(|&ap| {
            user_positions
                .iter()
                .map(|&u| large_scale_fading(ap, u, params))
                .collect()
        })
        .collect();
    Ok(NetworkRealization {
        ap_positions,
        user_positions,
        beta,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotAssignment {
    pub pilot_index: Vec<usize>,
    /// |φ_jᴴφ_j'|², which is 1 for a shared pilot and 0 otherwise.
    pub cross_corr2: Vec<Vec<f64>>,
    pub pilot_len: usize,
}

impl PilotAssignment {
    pub fn from_indices(pilot_index: Vec<usize>, pilot_len: usize) -> Self {
        let cross_corr2 = pilot_index
            .iter()
            .map(|a| {
                pilot_index
                    .iter()
                    .map(|b| if a == b { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        Self {
            pilot_index,
            cross_corr2,
            pilot_len,
        }
    }

    pub fn is_orthogonal(&self) -> bool {
        let mut seen = vec![false; self.pilot_len];
        self.pilot_index
            .iter()
            .all(|&t| !std::mem::replace(&mut seen[t], true))
    }
}

/// Users are ranked by total gain Σ_m β_m^j (strongest first, index breaks
/// ties). The first τ_p get distinct pilots; each later user picks the pilot
/// whose current holders overlap least with it, measured as
/// Σ_m β_m^j · Σ_{i on pilot} β_m^i. Lowest pilot index wins ties.
pub fn assign_pilots(realization: &NetworkRealization, tau_p: usize) -> PilotAssignment {
    let k = realization.users();
    let beta = &realization.beta;
    assert!(tau_p >= 1, "tau_p must be at least 1");
    if k <= tau_p {
        return PilotAssignment::from_indices((0..k).collect(), tau_p);
    }
    let total: Vec<f64> = (0..k).map(|j| beta.iter().map(|row| row[j]).sum()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| total[b].total_cmp(&total[a]).then(a.cmp(&b)));

    let mut index = vec![0usize; k];
    // pilot_load[t][m] = Σ β_m^i over users i already holding pilot t.
    let mut pilot_load = vec![vec![0.0; beta.len()]; tau_p];
    for (rank, &j) in order.iter().enumerate() {
        let t = if rank < tau_p {
            rank
        } else {
            let contamination = |t: usize| -> f64 {
                beta.iter()
                    .zip(&pilot_load[t])
                    .map(|(row, load)| row[j] * load)
                    .sum()
            };
            let mut best = 0;
            let mut best_c = contamination(0);
            for t in 1..tau_p {
                let c = contamination(t);
                if c < best_c {
                    best = t;
                    best_c = c;
                }
            }
            best
        };
        index[j] = t;
        for (m, row) in beta.iter().enumerate() {
            pilot_load[t][m] += row[j];
        }
    }
    PilotAssignment::from_indices(index, tau_p)
}

/// Everything the rate expression needs from channel estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationStats {
    pub c: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    pub p_p: f64,
    pub pilots: PilotAssignment,
    pub params: SystemParams,
    pub beta: Vec<Vec<f64>>,
}

impl EstimationStats {
    pub fn users(&self) -> usize {
        self.pilots.pilot_index.len()
    }

    pub fn aps(&self) -> usize {
        self.beta.len()
    }
}

/// MMSE scaling c_m^j = √p_p β_m^j / (p_p Σ_j' β_m^j' |φ_j'ᴴφ_j|² + 1) and
/// estimate variance γ_m^j = √p_p β_m^j c_m^j.
pub fn mmse_stats(
    realization: &NetworkRealization,
    pilots: &PilotAssignment,
    params: &SystemParams,
) -> EstimationStats {
    mmse_stats_with_energy(realization, pilots, params, params.pilot_energy())
}

/// As [`mmse_stats`] but with an explicit pilot energy p_p.
pub fn mmse_stats_with_energy(
    realization: &NetworkRealization,
    pilots: &PilotAssignment,
    params: &SystemParams,
    p_p: f64,
) -> EstimationStats {
    let k = realization.users();
    let sqrt_pp = p_p.sqrt();
    let phi = &pilots.cross_corr2;
    let mut c = Vec::with_capacity(realization.aps());
    let mut gamma = Vec::with_capacity(realization.aps());
    for row in &realization.beta {
        let mut c_row = Vec::with_capacity(k);
        let mut g_row = Vec::with_capacity(k);
        for j in 0..k {
            let contamination: f64 = (0..k).map(|i| row[i] * phi[i][j]).sum();
            let cj = sqrt_pp * row[j] / (p_p * contamination + 1.0);
            c_row.push(cj);
            g_row.push(sqrt_pp * row[j] * cj);
        }
        c.push(c_row);
        gamma.push(g_row);
    }
    EstimationStats {
        c,
        gamma,
        p_p,
        pilots: pilots.clone(),
        params: params.clone(),
        beta: realization.beta.clone(),
    }
}

/// Convenience: realization → pilots → statistics.
pub fn realize(params: &SystemParams, seed: u64) -> Result<EstimationStats, ChannelError> {
    let net = generate_network(params, seed)?;
    let pilots = assign_pilots(&net, params.pilot_len);
    Ok(mmse_stats(&net, &pilots, params))
}

fn check_len(stats: &EstimationStats, p: &[f64]) -> Result<(), ChannelError> {
    if p.len() != stats.users() {
        return Err(ChannelError::DimensionMismatch {
            expected: stats.users(),
            got: p.len(),
        });
    }
    Ok(())
}

/// Noise term I_M^j and pilot-contamination term I_p^j for every user.
pub fn interference_terms(
    stats: &EstimationStats,
    p: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), ChannelError> {
    check_len(stats, p)?;
    let k = stats.users();
    let n = stats.params.antennas as f64;
    let scale = stats.params.sigma2() / stats.params.max_power_w;
    let mut i_m = vec![0.0; k];
    let mut i_p = vec![0.0; k];
    for j in 0..k {
        i_m[j] = stats.gamma.iter().map(|row| n * scale * row[j]).sum();
        for jp in (0..k).filter(|&jp| jp != j) {
            let overlap = stats.pilots.cross_corr2[j][jp];
            if overlap == 0.0 {
                continue;
            }
            let coherent: f64 = stats
                .gamma
                .iter()
                .zip(&stats.beta)
                .map(|(g, b)| n * g[j] * b[jp] / b[j])
                .sum();
            i_p[j] += p[jp] * overlap * coherent * coherent;
        }
    }
    Ok((i_m, i_p))
}

/// Achievable uplink rate of user `j` in bit/s, evaluated term by term.
pub fn uplink_rate(stats: &EstimationStats, p: &[f64], j: usize) -> Result<f64, ChannelError> {
    let (i_m, i_p) = interference_terms(stats, p)?;
    if p[j] == 0.0 {
        return Ok(0.0);
    }
    let n = stats.params.antennas as f64;
    let array_gain: f64 = stats.gamma.iter().map(|row| n * row[j]).sum();
    let mut leakage = 0.0;
    for (jp, &pj) in p.iter().enumerate() {
        let s: f64 = stats
            .gamma
            .iter()
            .zip(&stats.beta)
            .map(|(g, b)| n * g[j] * b[jp])
            .sum();
        leakage += pj * s;
    }
    let sinr = p[j] * array_gain * array_gain / (leakage + i_p[j] + i_m[j]);
    Ok(stats.params.prelog() * stats.params.bandwidth_hz * (1.0 + sinr).log2())
}

/// The rate expression collapsed to SINR_k = p_k A_k / (Σ_j G[k][j] p_j + n_k).
///
/// Every denominator is affine in p, so precomputing A, G and n once per
/// realization makes all solver evaluations O(K) per user.
#[derive(Debug, Clone, PartialEq)]
pub struct RateModel {
    /// A_k = (Σ_m N γ_m^k)².
    pub signal: Vec<f64>,
    /// G[k][k] = Σ_m N γ^k β^k; off-diagonal entries add the coherent
    /// pilot-contamination term.
    pub gain: Vec<Vec<f64>>,
    /// n_k = Σ_m N σ² γ_m^k / pᵘ.
    pub noise: Vec<f64>,
    pub prelog: f64,
    pub bandwidth_hz: f64,
}

impl RateModel {
    pub fn new(stats: &EstimationStats) -> Self {
        let k = stats.users();
        let n = stats.params.antennas as f64;
        let scale = stats.params.sigma2() / stats.params.max_power_w;
        let mut signal = vec![0.0; k];
        let mut noise = vec![0.0; k];
        let mut gain = vec![vec![0.0; k]; k];
        for kk in 0..k {
            let a: f64 = stats.gamma.iter().map(|row| n * row[kk]).sum();
            signal[kk] = a * a;
            noise[kk] = stats.gamma.iter().map(|row| n * scale * row[kk]).sum();
            for j in 0..k {
                let mut leak = 0.0;
                let mut coherent = 0.0;
                for (g, b) in stats.gamma.iter().zip(&stats.beta) {
                    leak += n * g[kk] * b[j];
                    coherent += n * g[kk] * b[j] / b[kk];
                }
                let overlap = if j == kk { 0.0 } else { stats.pilots.cross_corr2[kk][j] };
                gain[kk][j] = leak + overlap * coherent * coherent;
            }
        }
        Self {
            signal,
            gain,
            noise,
            prelog: stats.params.prelog(),
            bandwidth_hz: stats.params.bandwidth_hz,
        }
    }

    pub fn users(&self) -> usize {
        self.signal.len()
    }

    /// Σ_j G[k][j] p_j + n_k.
    pub fn denominator(&self, p: &[f64], k: usize) -> f64 {
        self.gain[k]
            .iter()
            .zip(p)
            .fold(self.noise[k], |acc, (g, pj)| acc + g * pj)
    }

    pub fn sinr(&self, p: &[f64], k: usize) -> f64 {
        p[k] * self.signal[k] / self.denominator(p, k)
    }

    /// log₂(1 + SINR_k), in bit/s/Hz before the prelog.
    pub fn spectral_efficiency(&self, p: &[f64], k: usize) -> f64 {
        self.sinr(p, k).ln_1p() / std::f64::consts::LN_2
    }

    /// Rate in bit/s.
    pub fn rate(&self, p: &[f64], k: usize) -> f64 {
        self.prelog * self.bandwidth_hz * self.spectral_efficiency(p, k)
    }

    pub fn rates(&self, p: &[f64]) -> Vec<f64> {
        (0..self.users()).map(|k| self.rate(p, k)).collect()
    }
}
