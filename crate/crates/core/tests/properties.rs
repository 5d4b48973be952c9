use cellfree_fl::budget::{t_max, BudgetSpec, EnergyLatency};
use cellfree_fl::channel::{
    assign_pilots, generate_network, interference_terms, mmse_stats, realize, RateModel,
    SystemParams,
};
use cellfree_fl::fedavg::aggregate;
use cellfree_fl::power_alloc::{coordinate_descent, EnergyLatencyObjective, SolverConfig, TradeoffWeights};
use cellfree_fl::rng;
use proptest::prelude::*;
use rand::Rng;

fn small_params() -> impl Strategy<Value = SystemParams> {
    (1usize..=6, 1usize..=4, 1usize..=10, 1usize..=8).prop_map(|(aps, antennas, users, pilot_len)| {
        SystemParams { aps, antennas, users, pilot_len, ..SystemParams::default() }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn realization_is_deterministic(params in small_params(), seed in any::<u64>()) {
        let a = generate_network(&params, seed).unwrap();
        let b = generate_network(&params, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let pa = assign_pilots(&a, params.pilot_len);
        prop_assert_eq!(&pa, &assign_pilots(&b, params.pilot_len));
        prop_assert_eq!(mmse_stats(&a, &pa, &params), mmse_stats(&b, &pa, &params));
    }

    #[test]
    fn estimate_variance_below_prior(params in small_params(), seed in any::<u64>()) {
        let s = realize(&params, seed).unwrap();
        for (g_row, b_row) in s.gamma.iter().zip(&s.beta) {
            for (&g, &b) in g_row.iter().zip(b_row) {
                prop_assert!(g > 0.0 && g <= b, "γ = {g}, β = {b}");
            }
        }
    }

    #[test]
    fn orthogonal_pilots_mean_no_contamination(
        params in small_params(),
        seed in any::<u64>(),
        p in prop::collection::vec(0.0f64..=1.0, 10),
    ) {
        let params = SystemParams { pilot_len: params.users.max(params.pilot_len), ..params };
        let s = realize(&params, seed).unwrap();
        let (_, i_p) = interference_terms(&s, &p[..params.users]).unwrap();
        prop_assert!(i_p.iter().all(|&x| x == 0.0));
    }

    /// Over a grid of p_j: own rate never drops, everyone else's never rises.
    #[test]
    fn rate_monotone_in_powers(seed in any::<u64>()) {
        let params = SystemParams { aps: 4, antennas: 2, users: 6, pilot_len: 3, ..SystemParams::default() };
        let s = realize(&params, seed).unwrap();
        let model = RateModel::new(&s);
        let mut g = rng::stream(seed, &[1]);
        let mut p: Vec<f64> = (0..6).map(|_| g.random_range(0.0..=1.0)).collect();
        let j = g.random_range(0..6);
        let mut prev: Option<Vec<f64>> = None;
        for step in 0..=50 {
            p[j] = step as f64 / 50.0;
            let r = model.rates(&p);
            if let Some(q) = &prev {
                for k in 0..6 {
                    if k == j {
                        prop_assert!(r[k] >= q[k], "own rate fell at p_j = {}", p[j]);
                    } else {
                        prop_assert!(r[k] <= q[k], "user {k} gained from p_{j} = {}", p[j]);
                    }
                }
            }
            prev = Some(r);
        }
    }

    /// Each per-user term as a function of its own power has contiguous
    /// sublevel sets on a 1e-3 grid: once it starts rising it never falls.
    #[test]
    fn per_user_term_is_quasiconvex(seed in any::<u64>(), theta1 in 0.0f64..=1.0, theta2 in 0.01f64..=1.0) {
        let params = SystemParams { aps: 4, antennas: 2, users: 5, pilot_len: 3, ..SystemParams::default() };
        let s = realize(&params, seed).unwrap();
        let obj = EnergyLatencyObjective::new(&s, TradeoffWeights::new(theta1, theta2).unwrap()).unwrap();
        let mut g = rng::stream(seed, &[2]);
        let mut p: Vec<f64> = (0..5).map(|_| g.random_range(0.05..=1.0)).collect();
        for j in 0..5 {
            let vals: Vec<f64> = (1..=1000)
                .map(|i| {
                    p[j] = i as f64 * 1e-3;
                    obj.psi(&p, j).unwrap()
                })
                .collect();
            let turn = vals.windows(2).position(|w| w[1] > w[0]);
            if let Some(t) = turn {
                let falls = vals[t..].windows(2).any(|w| w[1] < w[0]);
                prop_assert!(!falls, "user {j}: ψ rises at grid {t} then falls again");
            }
            p[j] = g.random_range(0.05..=1.0);
        }
    }

    #[test]
    fn budget_scaling(
        energy in prop::collection::vec(1e-3f64..10.0, 1..8),
        lat_scale in 1e-3f64..10.0,
        shift in -4i32..=4,
        s in 0.01f64..100.0,
    ) {
        let el = EnergyLatency {
            latency: energy.iter().map(|e| e * lat_scale).collect(),
            energy,
        };
        let base = t_max(&el, &BudgetSpec::new(200.0, 150.0).unwrap()).unwrap();
        // Powers of two scale without rounding.
        let two = 2f64.powi(shift);
        let exact = t_max(&el, &BudgetSpec::new(200.0 * two, 150.0 * two).unwrap()).unwrap();
        prop_assert_eq!(exact.t_max, base.t_max * two);
        let any = t_max(&el, &BudgetSpec::new(200.0 * s, 150.0 * s).unwrap()).unwrap();
        prop_assert!((any.t_max - base.t_max * s).abs() <= 1e-14 * base.t_max * s);
    }

    #[test]
    fn budget_monotone_in_costs(
        energy in prop::collection::vec(1e-3f64..10.0, 1..8),
        grow in 1.0f64..3.0,
        j in 0usize..8,
    ) {
        let el = EnergyLatency { latency: energy.clone(), energy };
        let j = j % el.energy.len();
        let b = BudgetSpec::default();
        let base = t_max(&el, &b).unwrap().t;
        let mut slower = el.clone();
        slower.latency[j] *= grow;
        let mut hungrier = el.clone();
        hungrier.energy[j] *= grow;
        prop_assert!(t_max(&slower, &b).unwrap().t <= base);
        prop_assert!(t_max(&hungrier, &b).unwrap().t <= base);
    }

    #[test]
    fn aggregation_permutation_equivariant(
        locals in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 4), 2..7),
        raw in prop::collection::vec(0.1f64..1.0, 7),
        seed in any::<u64>(),
    ) {
        let k = locals.len();
        let total: f64 = raw[..k].iter().sum();
        let rho: Vec<f64> = raw[..k].iter().map(|r| r / total).collect();
        let mut order: Vec<usize> = (0..k).collect();
        let mut g = rng::stream(seed, &[3]);
        for i in (1..k).rev() {
            order.swap(i, g.random_range(0..=i));
        }
        let a = aggregate(&locals, &rho, 1).unwrap();
        let pl: Vec<Vec<f64>> = order.iter().map(|&i| locals[i].clone()).collect();
        let pr: Vec<f64> = order.iter().map(|&i| rho[i]).collect();
        let b = aggregate(&pl, &pr, 1).unwrap();
        // Summation order differs, so equality is up to rounding.
        for (x, y) in a.w.iter().zip(&b.w) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}

/// Scaling both weights leaves the minimizer where it was.
#[test]
fn theta_scale_invariance() {
    let params = SystemParams { users: 10, pilot_len: 5, ..SystemParams::default() };
    let cfg = SolverConfig::default();
    for seed in 1..=5 {
        let s = realize(&params, seed).unwrap();
        for (t1, t2) in [(1.0, 1.0), (0.3, 1.0), (1.0, 0.05)] {
            let base = coordinate_descent(&s, TradeoffWeights::new(t1, t2).unwrap(), &cfg, &[1.0; 10]).unwrap();
            for c in [2.0, 0.01, 37.5] {
                let scaled =
                    coordinate_descent(&s, TradeoffWeights::new(c * t1, c * t2).unwrap(), &cfg, &[1.0; 10]).unwrap();
                let gap = base
                    .allocation
                    .as_slice()
                    .iter()
                    .zip(scaled.allocation.as_slice())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(gap <= 1e-6, "seed {seed}, θ = ({t1}, {t2}) × {c}: p* moved by {gap:e}");
                let ratio = scaled.nu / base.nu;
                assert!((ratio - c).abs() <= 1e-9 * c, "ν scaled by {ratio}, want {c}");
            }
        }
    }
}
