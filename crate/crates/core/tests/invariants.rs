//! Property tests: structural invariants that must hold for every valid
//! model, not just the tuned reference cases.

use ladder_core::increments::{IncrementModel, ModelSpec};
use ladder_core::ladder::{
    base_marginal_upper, enumerate_bruteforce, genf_check, marginal_nonneg_probs,
    spitzer_recurrence, survival_dp, survival_dp_rational,
};
use ladder_core::large_dev::{fuk_nagaev_bound, FN_DEFAULT_C};
use ladder_core::monte_carlo::estimate_tail;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;

/// Random centred lattice law on sites ⊆ {−2,…,2}: ±1 always present and
/// one of their weights absorbs the imbalance, so the mean is exactly 0.
fn centred_lattice(extras: [bool; 3], raw: [i64; 5], drift_num: u32) -> IncrementModel {
    let mut sites = vec![-1i64, 1];
    for (on, s) in extras.iter().zip([-2i64, 0, 2]) {
        if *on {
            sites.push(s);
        }
    }
    let mut weights: Vec<i64> = sites.iter().enumerate().map(|(i, _)| raw[i]).collect();
    let imbalance: i64 = sites.iter().zip(&weights).map(|(s, w)| s * w).sum();
    if imbalance > 0 {
        weights[0] += imbalance;
    } else {
        weights[1] -= imbalance;
    }
    let total: i64 = weights.iter().sum();
    let atoms: Vec<(i64, BigRational)> = sites
        .iter()
        .zip(&weights)
        .map(|(&s, &w)| (s, BigRational::new(BigInt::from(w), BigInt::from(total))))
        .collect();
    let drift = BigRational::new(BigInt::from(drift_num), BigInt::from(64));
    IncrementModel::lattice_from_rationals(1.0, &atoms, drift).expect("balanced law is valid")
}

fn weight_strategy() -> impl Strategy<Value = [i64; 5]> {
    [1i64..=9, 1..=9, 1..=9, 1..=9, 1..=9]
}

fn pareto_corpus() -> IncrementModel {
    IncrementModel::from_spec(ModelSpec::ParetoTail {
        span: 1.0,
        exponent: 3.5,
        coeff: 13.5,
        start: 10,
        drift: Some("0.05".into()),
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The three exact routes agree, and the kill masses plus the final
    /// survival conserve probability.
    #[test]
    fn routes_agree_on_random_models(
        extras in any::<[bool; 3]>(),
        raw in weight_strategy(),
        drift_num in 0u32..=8,
        n in 6u64..=10,
    ) {
        let model = centred_lattice(extras, raw, drift_num);
        let dp = survival_dp(&model, n).unwrap();
        let bf = enumerate_bruteforce(&model, n).unwrap();
        let exact = survival_dp_rational(&model, n).unwrap();
        for k in 0..=n as usize {
            let e = exact[k].to_f64().unwrap();
            prop_assert!((dp.probs[k] - bf.probs[k]).abs() <= 1e-12);
            prop_assert!((dp.probs[k] - e).abs() <= 1e-12);
        }
        let killed: f64 = dp.kill_masses().iter().sum();
        prop_assert!((killed + dp.probs[n as usize] - 1.0).abs() <= 1e-12);
        dp.validate().unwrap();
    }

    /// Survival is entrywise nonincreasing in the drift for a fixed base.
    #[test]
    fn drift_dominates_survival(
        extras in any::<[bool; 3]>(),
        raw in weight_strategy(),
        d1 in 0u32..=10,
        bump in 1u32..=10,
    ) {
        let low = centred_lattice(extras, raw, d1);
        let high = centred_lattice(extras, raw, d1 + bump);
        let t_low = survival_dp(&low, 40).unwrap();
        let t_high = survival_dp(&high, 40).unwrap();
        for (l, h) in t_low.probs.iter().zip(&t_high.probs) {
            prop_assert!(h <= &(l + 1e-12), "P must fall as drift grows: {h} vs {l}");
        }
    }

    /// The truncated second moment is nondecreasing in its cutoff.
    #[test]
    fn truncated_second_moment_is_monotone(
        extras in any::<[bool; 3]>(),
        raw in weight_strategy(),
        u1 in 0.0f64..30.0,
        du in 0.0f64..30.0,
    ) {
        for model in [centred_lattice(extras, raw, 0), pareto_corpus()] {
            let v1 = model.truncated_second_moment(u1).unwrap();
            let v2 = model.truncated_second_moment(u1 + du).unwrap();
            prop_assert!(v2 >= v1 - 1e-15);
        }
    }

    /// The two-piece moment bound dominates the exact centred marginals.
    #[test]
    fn fuk_nagaev_dominates_marginals(
        extras in any::<[bool; 3]>(),
        raw in weight_strategy(),
        n in 4u64..=64,
        mult in 1u32..=8,
    ) {
        for model in [centred_lattice(extras, raw, 0), pareto_corpus()] {
            let x = mult as f64 * model.norming_c(n).unwrap();
            let exact = base_marginal_upper(&model, n, &[x]).unwrap()[0];
            let bound = fuk_nagaev_bound(&model, n, x, FN_DEFAULT_C).unwrap();
            prop_assert!(bound >= exact - 1e-15, "bound {bound} < marginal {exact} at n={n}, x={x}");
        }
    }

    /// Monte Carlo estimates depend only on (model, horizon, paths, seed).
    #[test]
    fn monte_carlo_is_seed_deterministic(seed in any::<u64>()) {
        let model = IncrementModel::biased_pm1("0.1").unwrap();
        // 5000 paths spans two scheduling blocks
        let r1 = estimate_tail(&model, 12, 5_000, seed).unwrap();
        let r2 = estimate_tail(&model, 12, 5_000, seed).unwrap();
        prop_assert_eq!(r1.value.to_bits(), r2.value.to_bits());
        prop_assert_eq!(r1.std_error.to_bits(), r2.std_error.to_bits());
    }

    /// The fluctuation identity holds at random drifts, both as a
    /// recurrence and coefficientwise in the generating function.
    #[test]
    fn spitzer_identity_at_random_drift(
        extras in any::<[bool; 3]>(),
        raw in weight_strategy(),
        drift_num in 0u32..=8,
    ) {
        let model = centred_lattice(extras, raw, drift_num);
        let n = 60u64;
        let marginals = marginal_nonneg_probs(&model, n).unwrap();
        let rec = spitzer_recurrence(&marginals).unwrap();
        let dp = survival_dp(&model, n).unwrap();
        for (r, d) in rec.iter().zip(&dp.probs).skip(1) {
            prop_assert!((r - d).abs() / d <= 1e-10, "recurrence {r} vs DP {d}");
        }
        prop_assert!(genf_check(&dp.probs, &marginals, 20).unwrap() <= 1e-10);
    }
}
