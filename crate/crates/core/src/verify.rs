//! Release-gate checks: ten numbered cross-validations tying the exact
//! routes, the limit formulas, the bounds, and the samplers together.
//!
//! Each check compares two independent computations of the same quantity
//! (or a computation against a frozen closed form) with tolerances pinned
//! here, and reports one pass/fail line.  Two checks are expected to fail
//! on structural grounds and are kept red on purpose rather than loosened:
//!
//! * check 7 asks the closed-bridge n^{−3/2}e^{−nξ} predictor to *converge*
//!   to the exact tail, but its bridge constant (E e^{ξτ} − 1)/(e^ξ − 1)
//!   differs from the true prefactor by the fixed factor √q(√q + √p)
//!   ≈ 1.0899 at a = 0.2, so the relative error saturates near 8% instead
//!   of decaying — the observed errors increase toward that plateau;
//! * check 10 asks the plain-sampling standard error to dominate the
//!   tilted one at na² = 80, where the target probability is ~5·10⁻²²:
//!   plain sampling sees zero survivors at any feasible path budget, its
//!   sample standard error degenerates to exactly 0, and the comparison
//!   is ill-posed (the tilted route is the only one producing an estimate
//!   at all).
//!
//! The suite is deterministic: every randomized ingredient uses a fixed
//! seed, so reruns produce identical lines.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::increments::{IncrementModel, ModelSpec};
use crate::ladder;
use crate::large_dev::{self, RateMode, FN_DEFAULT_C};
use crate::limits;
use crate::monte_carlo;
use crate::numeric::kahan_sum;
use crate::stable::StableParams;

/// Outcome of one numbered check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    /// One-line report, stable across reruns.
    pub fn line(&self) -> String {
        format!(
            "[{}] {:02} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn check<F>(id: u32, name: &'static str, body: F) -> CheckResult
where
    F: FnOnce() -> Result<(bool, String)>,
{
    match body() {
        Ok((passed, detail)) => CheckResult {
            id,
            name,
            passed,
            detail,
        },
        Err(e) => CheckResult {
            id,
            name,
            passed: false,
            detail: format!("errored: {e}"),
        },
    }
}

/// Run all ten checks in order.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        criterion_01(),
        criterion_02(),
        criterion_03(),
        criterion_04(),
        criterion_05(),
        criterion_06(),
        criterion_07(),
        criterion_08(),
        criterion_09(),
        criterion_10(),
    ]
}

/// Checks that fail for documented structural reasons (see module docs);
/// the integration gate treats these as expected-red.
pub const EXPECTED_RED: [u32; 2] = [7, 10];

fn pareto_corpus(exponent: f64, coeff: f64, start: u64, drift: &str) -> Result<IncrementModel> {
    IncrementModel::from_spec(ModelSpec::ParetoTail {
        span: 1.0,
        exponent,
        coeff,
        start,
        drift: Some(drift.into()),
    })
}

/// 1: the dynamic program and path enumeration agree to near machine
/// precision on random bounded lattice laws.
pub fn criterion_01() -> CheckResult {
    check(1, "oracle equivalence (DP vs enumeration)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0AC1);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            // random support ⊆ {−2,…,2}; ±1 always present so the law can
            // be centred exactly by balancing integer weights
            let mut sites = vec![-1i64, 1];
            for extra in [-2i64, 0, 2] {
                if rng.gen_bool(0.5) {
                    sites.push(extra);
                }
            }
            let mut weights: Vec<i64> = sites.iter().map(|_| rng.gen_range(1..=9)).collect();
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
            let drift = BigRational::new(BigInt::from(rng.gen_range(0..=4u32)), BigInt::from(16));
            let model = IncrementModel::lattice_from_rationals(1.0, &atoms, drift)?;
            // horizon capped so the enumeration stays within its own guard
            let n = match sites.len() {
                2 | 3 => 14,
                4 => 11,
                _ => 9,
            };
            let dp = ladder::survival_dp(&model, n)?;
            let bf = ladder::enumerate_bruteforce(&model, n)?;
            for (d, b) in dp.probs.iter().zip(&bf.probs) {
                worst = worst.max((d - b).abs());
            }
        }
        Ok((
            worst <= 1e-12,
            format!("20 random lattice laws, horizons ≤ 14: max |DP − enumeration| = {worst:.2e} (tol 1e-12)"),
        ))
    })
}

/// 2: the fluctuation-identity route (marginals → recurrence) reproduces
/// the DP table, and the generating-function identity holds coefficientwise.
pub fn criterion_02() -> CheckResult {
    check(2, "Spitzer recurrence & generating function", || {
        let models = [
            IncrementModel::symmetric_pm1(),
            IncrementModel::biased_pm1("0.1")?,
            IncrementModel::biased_pm1("0.02")?,
        ];
        let mut worst_rel: f64 = 0.0;
        let mut worst_genf: f64 = 0.0;
        for model in &models {
            let marginals = ladder::marginal_nonneg_probs(model, 500)?;
            let rec = ladder::spitzer_recurrence(&marginals)?;
            let dp = ladder::survival_dp(model, 500)?;
            for (r, d) in rec.iter().zip(&dp.probs).skip(1) {
                worst_rel = worst_rel.max((r - d).abs() / d);
            }
            worst_genf = worst_genf.max(ladder::genf_check(&dp.probs, &marginals, 50)?);
        }
        Ok((
            worst_rel <= 1e-10 && worst_genf <= 1e-10,
            format!("n ≤ 500 on ±1/p-biased: max rel |recurrence − DP| = {worst_rel:.2e}, genf residual ≤ order 50 = {worst_genf:.2e} (tol 1e-10)"),
        ))
    })
}

/// 3: golden closed forms of the Brownian limit: the r = 1 moment constant
/// equals √(π/2) and the correction solves its integral equation.
pub fn criterion_03() -> CheckResult {
    check(3, "golden closed forms (Brownian limit)", || {
        let p2 = StableParams::new(2.0, 0.0)?;
        let k1 = limits::moment_constant(1.0, &p2)?;
        let golden = (std::f64::consts::PI / 2.0).sqrt();
        let k_err = (k1 - golden).abs();
        let mut res_max: f64 = 0.0;
        for u in [0.25, 0.5, 1.0, 2.0, 4.0] {
            res_max = res_max.max(limits::integral_equation_residual(
                &p2,
                &limits::brownian_correction,
                u,
            )?);
        }
        Ok((
            k_err <= 1e-8 && res_max <= 1e-6,
            format!("|K(1) − √(π/2)| = {k_err:.2e} (tol 1e-8); integral-equation residual ≤ {res_max:.2e} on u ∈ {{0.25..4}} (tol 1e-6)"),
        ))
    })
}

/// 4: Laplace-transform characterization of the correction at α = 2.
pub fn criterion_04() -> CheckResult {
    check(4, "Laplace transform characterization", || {
        let p2 = StableParams::new(2.0, 0.0)?;
        let mut worst: f64 = 0.0;
        let mut parts = String::new();
        for lambda in [0.5, 1.0, 2.0] {
            let lhs = limits::laplace_lhs(&p2, lambda, &limits::brownian_correction)?;
            let rhs = limits::laplace_rhs(&p2, lambda)?;
            let rel = (lhs / rhs - 1.0).abs();
            worst = worst.max(rel);
            let _ = write!(parts, " λ={lambda}: {rel:.2e}");
        }
        Ok((
            worst <= 1e-5,
            format!("transform identity rel errors{parts} (tol 1e-5)"),
        ))
    })
}

/// 5: transition law — the drifted/zero-drift tail ratio converges to the
/// closed correction 1 − F(√v) as a ↓ 0 along n = v/a².
pub fn criterion_05() -> CheckResult {
    check(5, "transition law convergence", || {
        let vs = [0.25, 1.0, 4.0];
        let drifts: [(&str, f64); 3] = [("0.1", 0.1), ("0.05", 0.05), ("0.02", 0.02)];
        let mut errs = [[0.0f64; 3]; 3];
        for (i, (label, a)) in drifts.iter().enumerate() {
            let n_max = (4.0 / (a * a)).round() as u64;
            let table = ladder::survival_dp(&IncrementModel::biased_pm1(label)?, n_max)?;
            for (j, &v) in vs.iter().enumerate() {
                let n = (v / (a * a)).round() as u64;
                let ratio =
                    table.probs[n as usize] / limits::zero_tail_symmetric_pm1(n);
                let predicted = limits::brownian_correction(v.sqrt())?;
                errs[i][j] = (ratio / predicted - 1.0).abs();
            }
        }
        let mut passed = true;
        let mut parts = String::new();
        for (j, &v) in vs.iter().enumerate() {
            passed &= errs[2][j] <= 0.10 && errs[2][j] < errs[0][j];
            let _ = write!(
                parts,
                " v={v}: {:.1}% → {:.1}% → {:.1}%;",
                100.0 * errs[0][j],
                100.0 * errs[1][j],
                100.0 * errs[2][j]
            );
        }
        Ok((
            passed,
            format!("ratio-vs-correction errors over a = 0.1 → 0.05 → 0.02:{parts} need ≤ 10% at a = 0.02 and shrinking"),
        ))
    })
}

/// 6: moment law a·Eτ → 1 on the p-biased family, by direct summation and
/// by the fluctuation-series predictor (whose series value is (ln 2)/2).
pub fn criterion_06() -> CheckResult {
    check(6, "moment law a·Eτ → 1", || {
        let mut passed = true;
        let mut parts = String::new();
        for (label, a, tol) in [("0.1", 0.1, 0.05), ("0.05", 0.05, 0.03), ("0.02", 0.02, 0.02)] {
            let model = IncrementModel::biased_pm1(label)?;
            let xi = large_dev::rate_xi(&model, RateMode::Mgf)?.xi;
            let n = (3.0 / xi).ceil() as u64;
            let etau = ladder::survival_dp(&model, n)?.expected_tau().value;
            let err = (a * etau - 1.0).abs();
            passed &= err <= tol;
            let _ = write!(parts, " a={a}: |a·Eτ − 1| = {err:.2e} (tol {tol});");
        }
        let model = IncrementModel::biased_pm1("0.02")?;
        let predictor = limits::expectation_finite_variance(&model, 0.02, 10_000)?;
        let series_err = (0.02 * predictor - 1.0).abs();
        passed &= series_err <= 1e-3;
        Ok((
            passed,
            format!("DP-summed:{parts} series predictor |a·Eτ̂ − 1| = {series_err:.2e} (tol 1e-3)"),
        ))
    })
}

/// 7: the closed-bridge n^{−3/2}e^{−nξ} predictor at a = 0.2 — expected
/// red: its error is required to decrease along n ∈ {1000, 2000, 4000}
/// but provably saturates at the bridge/prefactor gap instead.
pub fn criterion_07() -> CheckResult {
    check(7, "large-deviation prefactor (finite variance)", || {
        let model = IncrementModel::biased_pm1("0.2")?;
        let table = ladder::survival_dp(&model, 4000)?;
        // exact prefactor exceeds the bridge form by √q(√q+√p) at p-biased
        let (p, q) = (0.4f64, 0.6f64);
        let gap = q + (p * q).sqrt();
        let mut errs = Vec::new();
        let mut errs_exact = Vec::new();
        for n in [1000u64, 2000, 4000] {
            let predicted = large_dev::ld_normal_predict(&model, &table, n)?.value;
            let exact = table.probs[n as usize];
            errs.push((predicted / exact - 1.0).abs());
            errs_exact.push((predicted * gap / exact - 1.0).abs());
        }
        let within = errs[1] <= 0.25;
        let decreasing = errs[1] < errs[0] && errs[2] < errs[1];
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|e| format!("{:.2}%", 100.0 * e))
                .collect::<Vec<_>>()
                .join(" → ")
        };
        Ok((
            within && decreasing,
            format!(
                "errors at n = 1000/2000/4000: {} (≤ 25% at 2000: {}). Structural: the closed bridge undershoots the true prefactor by √q(√q+√p) = {gap:.4}, so errors climb toward {:.2}% instead of decreasing; rescaled by that constant they fall {} — the shape n^{{-3/2}}e^{{-nξ}} is right, the required convergence is not attainable in this form",
                fmt(&errs),
                within,
                100.0 * (1.0 - 1.0 / gap),
                fmt(&errs_exact)
            ),
        ))
    })
}

/// 8: one-jump law on the infinite-variance corpus: DP/predictor ratio
/// inside [0.5, 2] once na/c_n ≥ 10, approaching 1 across doublings.
pub fn criterion_08() -> CheckResult {
    check(8, "one-jump law (infinite variance)", || {
        let a = 0.3;
        let model = pareto_corpus(1.5, 0.05, 1, "0.3")?;
        let ns = [833u64, 1666, 3332, 6664];
        let table = ladder::survival_dp(&model, ns[3])?;
        // E τ: summed table plus polynomial completion — P(τ>k) decays like
        // k^{−3/2} here, so Σ_{k>N} ≈ 2N·P(τ>N)
        let horizon = ns[3] as usize;
        let etau =
            kahan_sum(table.probs.iter().copied()) + 2.0 * horizon as f64 * table.probs[horizon];
        let mut ratios = Vec::new();
        let mut parts = String::new();
        let mut u_min = f64::INFINITY;
        for &n in &ns {
            let u = n as f64 * a / model.norming_c(n)?;
            u_min = u_min.min(u);
            let predicted = large_dev::ld_heavy_predict(&model, etau, n)?;
            let ratio = table.probs[n as usize] / predicted;
            ratios.push(ratio);
            let _ = write!(parts, " n={n} (u={u:.1}): {ratio:.3};");
        }
        let inside = ratios.iter().all(|r| (0.5..=2.0).contains(r));
        let monotone = ratios
            .windows(2)
            .all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
        Ok((
            u_min >= 10.0 && inside && monotone,
            format!("DP/one-jump ratios:{parts} all in [0.5, 2] with |ratio − 1| decreasing across doublings (Eτ ≈ {etau:.2})"),
        ))
    })
}

/// 9: the moment bound dominates exact marginals everywhere tested, and
/// the shape statistic P(τ>n)(na)²/(Eτ·V(na)) stays bounded on n ∈
/// [n_a, 100·n_a].
pub fn criterion_09() -> CheckResult {
    check(9, "Fuk–Nagaev & shape bounds", || {
        let corpus = [
            IncrementModel::symmetric_pm1(),
            pareto_corpus(1.5, 0.05, 1, "0.3")?,
            pareto_corpus(3.5, 13.5, 10, "0.05")?,
        ];
        let mut min_margin = f64::INFINITY;
        for model in &corpus {
            for n in [8u64, 64, 256] {
                let c_n = model.norming_c(n)?;
                let xs: Vec<f64> = [1.0, 2.0, 4.0, 10.0].iter().map(|m| m * c_n).collect();
                let exact = ladder::base_marginal_upper(model, n, &xs)?;
                for (&x, &e) in xs.iter().zip(&exact) {
                    let bound = large_dev::fuk_nagaev_bound(model, n, x, FN_DEFAULT_C)?;
                    min_margin = min_margin.min(bound - e);
                }
            }
        }
        let dominates = min_margin >= -1e-15;
        let mut stat_max: f64 = 0.0;
        for (label, a) in [("0.1", 0.1), ("0.05", 0.05)] {
            let model = pareto_corpus(3.5, 13.5, 10, label)?;
            let n_a = model.boundary_n_a(a)?;
            let horizon = 100 * n_a;
            let table = ladder::survival_dp(&model, horizon)?;
            // polynomial completion: P(τ>k) ~ k^{−7/2} ⇒ Σ_{k>N} ≈ N·P_N/2.5
            let etau = kahan_sum(table.probs.iter().copied())
                + horizon as f64 * table.probs[horizon as usize] / 2.5;
            for m in [1u64, 2, 4, 8, 16, 32, 64, 100] {
                let n = m * n_a;
                let na = n as f64 * a;
                let stat = table.probs[n as usize] * na * na
                    / (etau * model.truncated_second_moment(na)?);
                stat_max = stat_max.max(stat);
            }
        }
        Ok((
            dominates && stat_max <= 10.0,
            format!("min (bound − marginal) = {min_margin:.2e} over corpus grid (needs ≥ 0); shape statistic ≤ {stat_max:.3} on [n_a, 100·n_a] at a ∈ {{0.1, 0.05}} (cap 10)"),
        ))
    })
}

/// 10: Monte Carlo statistics — expected red on the tilted-vs-plain clause:
/// at na² = 80 the plain estimator's sample standard error degenerates to
/// exactly zero (no survivors at any feasible budget), so "tilted ≤ plain"
/// cannot hold even though tilting is the only usable route there.
pub fn criterion_10() -> CheckResult {
    check(10, "Monte Carlo statistics", || {
        // (i) bitwise reproducibility
        let biased = IncrementModel::biased_pm1("0.1")?;
        let r1 = monte_carlo::estimate_tail(&biased, 64, 30_000, 77)?;
        let r2 = monte_carlo::estimate_tail(&biased, 64, 30_000, 77)?;
        let bit_equal = r1.value.to_bits() == r2.value.to_bits()
            && r1.std_error.to_bits() == r2.std_error.to_bits();
        // (ii) CI coverage on P(τ > 3) = 3/8
        let symmetric = IncrementModel::symmetric_pm1();
        let mut covered = 0u32;
        for rep in 0..100u64 {
            let est = monte_carlo::estimate_tail(&symmetric, 3, 2_000, 9_000 + rep)?;
            covered += est.ci95_covers(0.375) as u32;
        }
        let coverage_ok = (90..=99).contains(&covered);
        // (iii) tilted vs plain at na² = 80
        let deep = IncrementModel::biased_pm1("0.2")?;
        let n = 2_000u64;
        let plain = monte_carlo::estimate_tail(&deep, n, 200_000, 5)?;
        let tilted = monte_carlo::tilted_estimate_tail(&deep, n, 200_000, 5)?;
        let exact = ladder::survival_dp(&deep, n)?.probs[n as usize];
        let stderr_ok = tilted.std_error <= plain.std_error;
        Ok((
            bit_equal && coverage_ok && stderr_ok,
            format!(
                "reruns bitwise equal: {bit_equal}; CI coverage {covered}/100 (needs 90–99); at na² = 80: plain saw {} survivors in 2·10⁵ paths (std err {:.1e}) while tilted gives {:.3e} ± {:.1e} against exact {exact:.3e} (right order; the nominal ± is optimistic at this depth because the surviving-path weights are skewed) — the plain std error is degenerate, so the required tilted ≤ plain comparison fails structurally",
                (plain.value * plain.paths as f64).round(),
                plain.std_error,
                tilted.value,
                tilted.std_error
            ),
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_result_lines_are_stable() {
        let r = CheckResult {
            id: 3,
            name: "demo",
            passed: true,
            detail: "x = 1".into(),
        };
        assert_eq!(r.line(), "[PASS] 03 demo: x = 1");
        assert_eq!(EXPECTED_RED, [7, 10]);
    }
}
