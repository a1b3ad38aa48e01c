//! Large-deviation regime: Cramér rates and series, the bridge-corrected
//! prefactor for light tails, the one-big-jump predictor and Fuk–Nagaev
//! upper bound for regularly varying tails, and the regime classifier.
//!
//! For light-tailed increments with mean −a the survival probability
//! decays as P(τ⁽ᵃ⁾ > n) ≍ n^{−3/2} e^{−nξ} with rate
//!   ξ = −ln inf_h E e^{hX⁽ᵃ⁾} = I(t)|_{t = a/σ},
//! where I is the Legendre transform of the standardised cumulant
//! function. The Cramér–Petrov series organises I as
//!   I(t) = t²/2 − t³·λ(t),   λ(t) = Σ_{j≥0} λ_j t^j,
//! computed here by power-series reversion of Λ'(z) = t. Truncating λ
//! after m coefficients leaves an error ≍ λ_m t^{m+3} in ξ, so halving
//! a shrinks the ξ-discrepancy by ≈ 2^{m+3} — a checkable signature.
//!
//! The subexponential prefactor is fixed by the tilted stopping-time
//! bridge: P(τ > n) ≈ B_n · n^{−3/2} e^{−nξ} / (a√(2π)) with
//!   B_n = (E[e^{ξτ}; τ ≤ n] − 1)/(e^ξ − 1),
//! the partial expectation read off an exact survival table. B_n is
//! within a few percent of 2·Eτ at moderate horizons but converges to
//! a slightly larger limit; on the ±1 lattice at a = 0.2 the limiting
//! overshoot of the (2Eτ)-flavoured constant is q + √(pq) ≈ 1.09, so
//! this predictor is expected to settle ~8% under the exact constant —
//! the residual error of the n^{−3/2}-corollary itself, reproduced here
//! deliberately rather than patched.
//!
//! For regularly varying right tails of index t < 2 (or t > 2 past the
//! one-jump boundary) a single large increment dominates:
//! P(τ > n) ~ Eτ·P(X ≥ na), bounded above via Fuk–Nagaev by
//!   n·P(X ≥ x/3) + C·(n·V(x)/x²)²  at x = na.
//!
//! Regime boundaries are expressed through u = an/c_n (u < 0.1 drift
//! negligible, u ≤ 10 transition zone) and, for finite-variance heavy
//! tails (t > 2), through w = na²/ln(1/a): the one-jump term wins once
//! w exceeds ≈ 2√(t−2) and loses below ≈ 0.5√(t−2); the strip between
//! is genuinely contested and flagged `unresolved`. The √(t−2) scale is
//! a pragmatic interpolation — exact at the t ↓ 2 collapse and within
//! the known boundary's slack elsewhere — not a sharp constant; treat
//! any verdict inside (or near) the strip as advisory.

use crate::error::{Error, Result};
use crate::increments::IncrementModel;
use crate::ladder::LadderTailTable;
use crate::numeric::series::PowerSeries;
use crate::numeric::special::normal_sf;
use crate::numeric::Kahan;

/// Rate and tilt for the light-tail exponential decay.
#[derive(Debug, Clone, Copy)]
pub struct RatePair {
    /// the argmin tilt h₀ of the drifted MGF
    pub h0: f64,
    /// the decay rate ξ = −ln M(h₀)
    pub xi: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum RateMode {
    /// minimise the MGF directly (exact up to root-finding)
    Mgf,
    /// Cramér series with the first `terms` coefficients of λ
    Series { terms: usize },
}

/// λ and the reverted saddle series z(t), plus σ, shared by the public
/// entry points.
fn cramer_data(model: &IncrementModel, count: usize) -> Result<(Vec<f64>, PowerSeries, f64)> {
    if count == 0 {
        return Err(Error::OutOfRange("need at least one series term".into()));
    }
    let sigma2 = model.sigma2()?;
    let sigma = sigma2.sqrt();
    let order = count + 3;
    if matches!(model, IncrementModel::Gaussian(_)) {
        let mut z = PowerSeries::identity(order);
        z.c[1] = 1.0;
        return Ok((vec![0.0; count], z, sigma));
    }
    // Standardised cumulant function Λ(s) = s²/2 + Σ_{j≥3} γ_j s^j/j!.
    let mut lambda_cgf = PowerSeries::zeros(order);
    lambda_cgf.c[2] = 0.5;
    let mut fact = 2.0;
    for j in 3..=order {
        fact *= j as f64;
        let kappa = model.cumulant(j as u32)?;
        lambda_cgf.c[j] = kappa / sigma.powi(j as i32) / fact;
    }
    // Revert Λ'(z) = t, i.e. z = t − P(z) with P(s) = Λ'(s) − s
    // (valuation 2); each substitution pass gains one order.
    let mut p = PowerSeries::zeros(order);
    for j in 3..=order {
        p.c[j - 1] = lambda_cgf.c[j] * j as f64;
    }
    let t_series = PowerSeries::identity(order);
    let mut z = t_series.clone();
    for _ in 0..order {
        z = t_series.sub(&p.compose(&z)?);
    }
    // I(t) = t·z(t) − Λ(z(t)); sanity: I = t²/2 + O(t³).
    let i_series = t_series.mul(&z).sub(&lambda_cgf.compose(&z)?);
    if (i_series.c[2] - 0.5).abs() > 1e-9 || i_series.c[0].abs() > 1e-12 {
        return Err(Error::Inconsistent(format!(
            "Legendre series reversion drifted: I = {:?}…",
            &i_series.c[..3.min(i_series.c.len())]
        )));
    }
    // t²/2 − I(t) = t³·λ(t).
    let lam = (0..count).map(|j| -i_series.c[j + 3]).collect();
    Ok((lam, z, sigma))
}

/// First `count` coefficients of the Cramér–Petrov series λ(t) for the
/// model's standardised increment. Errors for analytic-tail models
/// (the required cumulants do not exist).
pub fn cramer_coefficients(model: &IncrementModel, count: usize) -> Result<Vec<f64>> {
    cramer_data(model, count).map(|(lam, _, _)| lam)
}

/// The decay rate ξ and tilt h₀, by direct MGF minimisation or by the
/// truncated Cramér series.
pub fn rate_xi(model: &IncrementModel, mode: RateMode) -> Result<RatePair> {
    let a = model.a();
    if a == 0.0 {
        return Ok(RatePair { h0: 0.0, xi: 0.0 });
    }
    if a < 0.0 {
        return Err(Error::OutOfRange(
            "decay rate needs negative drift (a > 0)".into(),
        ));
    }
    match mode {
        RateMode::Mgf => {
            // M' < 0 at 0; bracket the sign change by doubling, then bisect.
            let mut lo = 0.0f64;
            let mut hi = 1.0f64.max(2.0 * a);
            let mut tries = 0;
            while model.mgf(hi)?.1 <= 0.0 {
                lo = hi;
                hi *= 2.0;
                tries += 1;
                if tries > 60 {
                    return Err(Error::NoConvergence(
                        "MGF derivative never turns positive".into(),
                    ));
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if model.mgf(mid)?.1 < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let h0 = 0.5 * (lo + hi);
            Ok(RatePair {
                h0,
                xi: -model.mgf(h0)?.0.ln(),
            })
        }
        RateMode::Series { terms } => {
            let (lam, z, sigma) = cramer_data(model, terms)?;
            let t = a / sigma;
            let mut lam_t = 0.0;
            for (j, &l) in lam.iter().enumerate() {
                lam_t += l * t.powi(j as i32);
            }
            Ok(RatePair {
                h0: z.eval(t) / sigma,
                xi: 0.5 * t * t - t * t * t * lam_t,
            })
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LdNormalPrediction {
    /// bridge-corrected prefactor form B_n·n^{−3/2}e^{−nξ}/(a√(2π))
    pub value: f64,
    /// the theorem-shaped form 2Eτ·Φ̄(√n·a/σ)·e^{n(t²/2−ξ)}/n
    pub gaussian_form: f64,
    pub xi: f64,
    pub h0: f64,
    /// B_n = (E[e^{ξτ}; τ≤n] − 1)/(e^ξ − 1)
    pub bridge: f64,
}

/// Light-tail survival predictor at horizon `n`, with the bridge factor
/// read from an exact survival table (whose horizon caps the partial
/// expectation; extend the table to ≥ n for the honest B_n).
pub fn ld_normal_predict(
    model: &IncrementModel,
    table: &LadderTailTable,
    n: u64,
) -> Result<LdNormalPrediction> {
    if n == 0 {
        return Err(Error::OutOfRange("prediction horizon must be ≥ 1".into()));
    }
    let a = model.a();
    let rate = rate_xi(model, RateMode::Mgf)?;
    let xi = rate.xi;
    // E e^{ξτ} in closed form for the skip-free lattice (the descending
    // passage generating function evaluated at its singularity gives
    // √(q/p)); otherwise the tilted kill sum over the whole table,
    // whose quality is capped by the table horizon.
    let e_xi_tau = if model.is_biased_pm1() {
        let q = (1.0 + a) / 2.0;
        (q / (1.0 - q)).sqrt()
    } else {
        table.tilted_kill_sum(xi)
    };
    let bridge = (e_xi_tau - 1.0) / (xi.exp() - 1.0);
    let nf = n as f64;
    let value = bridge / (a * (2.0 * std::f64::consts::PI).sqrt()) * nf.powf(-1.5)
        * (-nf * xi).exp();
    // Theorem-shaped variant; for √n·t deep in the normal tail, fold
    // Φ̄'s exponential factor analytically to dodge underflow.
    let sigma = model.sigma2()?.sqrt();
    let t = a / sigma;
    let x = nf.sqrt() * t;
    let etau = table.expected_tau().value;
    let gaussian_form = if x < 8.0 {
        2.0 * etau / nf * normal_sf(x) * (nf * (0.5 * t * t - xi)).exp()
    } else {
        let ln_phi_ratio = -(x * (2.0 * std::f64::consts::PI).sqrt()).ln()
            + (1.0 - x.powi(-2) + 3.0 * x.powi(-4)).ln();
        (2.0 * etau / nf) * (ln_phi_ratio - nf * xi).exp()
    };
    Ok(LdNormalPrediction {
        value,
        gaussian_form,
        xi,
        h0: rate.h0,
        bridge,
    })
}

/// One-big-jump predictor P(τ > n) ≈ Eτ·P(X ≥ na) for regularly
/// varying tails past the one-jump boundary.
pub fn ld_heavy_predict(model: &IncrementModel, etau: f64, n: u64) -> Result<f64> {
    let a = model.a();
    if !(a > 0.0) || !(etau >= 1.0) {
        return Err(Error::OutOfRange(
            "one-jump predictor needs a > 0 and Eτ ≥ 1".into(),
        ));
    }
    Ok(etau * model.base_tail(n as f64 * a)?)
}

/// Default constant in the Fuk–Nagaev quadratic term; `calibrate-fn`
/// in the CLI estimates a sharper one per model family.
pub const FN_DEFAULT_C: f64 = 8.0;

/// Fuk–Nagaev-style upper bound n·P(X ≥ x/3) + C·(n·V(x)/x²)² for
/// P(max jump sum ≥ x), with V the truncated second moment.
pub fn fuk_nagaev_bound(model: &IncrementModel, n: u64, x: f64, c: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::OutOfRange("bound threshold must be > 0".into()));
    }
    let v = model.truncated_second_moment(x)?;
    let nf = n as f64;
    Ok(nf * model.base_tail(x / 3.0)? + c * (nf * v / (x * x)).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// u < 0.1: the drift has not yet bent the zero-drift tail
    Zero,
    /// moderate u: zero-drift tail times the transition correction
    Transition,
    /// light tails past the moderate zone: Cramér decay
    LdNormal,
    /// regularly varying tails past the one-jump boundary
    LdTail,
}

#[derive(Debug, Clone)]
pub struct RegimeCall {
    pub regime: Regime,
    /// u = an/c_n
    pub u: f64,
    /// w = na²/ln(1/a), only for finite-variance regularly varying tails
    pub w: Option<f64>,
    /// true inside the contested strip w ∈ [0.5, 2]·√(t−2)
    pub unresolved: bool,
    pub note: String,
}

/// Classify which predictor family applies at horizon n.
pub fn regime_classify(model: &IncrementModel, n: u64) -> Result<RegimeCall> {
    let a = model.a();
    if a < 0.0 {
        return Err(Error::OutOfRange(
            "classification assumes nonpositive mean (a ≥ 0)".into(),
        ));
    }
    let c_n = model.norming_c(n)?;
    let u = a * n as f64 / c_n;
    let tail_exponent = match model {
        IncrementModel::Lattice(l) => l.tail.as_ref().map(|t| t.exponent),
        IncrementModel::Gaussian(_) => None,
    };
    if u < 0.1 {
        return Ok(RegimeCall {
            regime: Regime::Zero,
            u,
            w: None,
            unresolved: false,
            note: "drift negligible at this horizon; use the zero-drift tail".into(),
        });
    }
    match tail_exponent {
        None => Ok(if u <= 10.0 {
            RegimeCall {
                regime: Regime::Transition,
                u,
                w: None,
                unresolved: false,
                note: "moderate zone: zero-drift tail times the transition correction".into(),
            }
        } else {
            RegimeCall {
                regime: Regime::LdNormal,
                u,
                w: None,
                unresolved: false,
                note: "light tail past the moderate zone: Cramér decay".into(),
            }
        }),
        Some(t) if t <= 2.0 => Ok(if u <= 10.0 {
            RegimeCall {
                regime: Regime::Transition,
                u,
                w: None,
                unresolved: false,
                note: "moderate zone of an infinite-variance tail".into(),
            }
        } else {
            RegimeCall {
                regime: Regime::LdTail,
                u,
                w: None,
                unresolved: false,
                note: "infinite variance: a single big jump dominates".into(),
            }
        }),
        Some(t) => {
            // Finite-variance regularly varying tail: the one-jump term
            // competes with the transition law inside the moderate zone.
            let ln1a = if a < 1.0 { (1.0 / a).ln() } else { 0.05 };
            let w = n as f64 * a * a / ln1a;
            let s = (t - 2.0).sqrt();
            let (regime, unresolved, note) = if s == 0.0 || w > 2.0 * s {
                (
                    Regime::LdTail,
                    false,
                    "one-jump boundary crossed: Eτ·P(X ≥ na) applies".to_string(),
                )
            } else if w < 0.5 * s {
                (
                    Regime::Transition,
                    false,
                    if u <= 10.0 {
                        "below the one-jump window: transition correction applies".to_string()
                    } else {
                        "deep moderate zone, one-jump window not reached; \
                         transition correction (very small) applies"
                            .to_string()
                    },
                )
            } else {
                (
                    if w >= s { Regime::LdTail } else { Regime::Transition },
                    true,
                    format!(
                        "contested strip: w = {w:.3} vs √(t−2) = {s:.3}; \
                         neither picture is proven here"
                    ),
                )
            };
            Ok(RegimeCall {
                regime,
                u,
                w: Some(w),
                unresolved,
                note,
            })
        }
    }
}

/// Conjectured second-order refinement of the one-jump predictor: the
/// big jump at step k must clear the remaining drift a(n−k), so
/// P(τ > n) ≈ Σ_k P(τ > k−1)·P(X ≥ a(n−k+1)), completed with
/// (Eτ − Σ P(τ > k−1))·P(X ≥ na) past the table horizon. Unproven;
/// gated behind `experimental`.
pub fn conjecture_two_term(
    model: &IncrementModel,
    table: &LadderTailTable,
    etau: f64,
    n: u64,
    experimental: bool,
) -> Result<f64> {
    if !experimental {
        return Err(Error::Unsupported(
            "two-term refinement is conjectural; enable it explicitly".into(),
        ));
    }
    let a = model.a();
    if !(a > 0.0) {
        return Err(Error::OutOfRange("refinement needs a > 0".into()));
    }
    let cap = (n as usize).min(table.n());
    let mut acc = Kahan::new();
    let mut surv_partial = Kahan::new();
    for k in 1..=cap {
        let p_surv = table.probs[k - 1];
        let thresh = a * (n as f64 - k as f64 + 1.0);
        acc.add(p_surv * model.base_tail(thresh.max(0.0))?);
        surv_partial.add(p_surv);
    }
    let remainder = (etau - surv_partial.value()).max(0.0);
    acc.add(remainder * model.base_tail(n as f64 * a)?);
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::increments::{IncrementModel, ModelSpec};
    use crate::ladder::survival_dp;

    fn pareto_model(a: &str, h: f64, t: f64, c: f64, x0: u64) -> IncrementModel {
        IncrementModel::from_spec(ModelSpec::ParetoTail {
            span: h,
            exponent: t,
            coeff: c,
            start: x0,
            drift: Some(a.into()),
        })
        .unwrap()
    }

    #[test]
    fn cramer_series_of_symmetric_lattice() {
        // ln cosh reversion: I(t) = t·atanh t + ½ln(1−t²)
        //                         = t²/2 + t⁴/12 + t⁶/30 + t⁸/56 + …
        let m = IncrementModel::symmetric_pm1();
        let lam = cramer_coefficients(&m, 6).unwrap();
        let expected = [0.0, -1.0 / 12.0, 0.0, -1.0 / 30.0, 0.0, -1.0 / 56.0];
        for (j, (&got, &want)) in lam.iter().zip(expected.iter()).enumerate() {
            assert!((got - want).abs() < 1e-10, "λ_{j} = {got} vs {want}");
        }
    }

    #[test]
    fn gaussian_rate_is_quadratic() {
        let g = IncrementModel::gaussian_unit(0.2).unwrap();
        assert!(cramer_coefficients(&g, 4).unwrap().iter().all(|&l| l == 0.0));
        let r = rate_xi(&g, RateMode::Mgf).unwrap();
        assert!((r.h0 - 0.2).abs() < 1e-9, "h0 = {}", r.h0);
        assert!((r.xi - 0.02).abs() < 1e-12, "xi = {}", r.xi);
        let rs = rate_xi(&g, RateMode::Series { terms: 2 }).unwrap();
        assert!((rs.xi - 0.02).abs() < 1e-12);
    }

    #[test]
    fn biased_lattice_rate_closed_form() {
        // ξ = −ln 2√(pq) = −½ln(1−a²), h₀ = ½ln(q/p).
        let m = IncrementModel::biased_pm1("0.2").unwrap();
        let r = rate_xi(&m, RateMode::Mgf).unwrap();
        let xi_exact = -0.5 * (1.0 - 0.04f64).ln();
        let h0_exact = 0.5 * 1.5f64.ln();
        assert!((r.xi - xi_exact).abs() < 1e-12, "xi = {}", r.xi);
        assert!((r.h0 - h0_exact).abs() < 1e-9, "h0 = {}", r.h0);
        // The series closes in on the same rate as terms grow.
        let mut errs = Vec::new();
        for terms in [1usize, 2, 4, 6] {
            let rs = rate_xi(&m, RateMode::Series { terms }).unwrap();
            errs.push((rs.xi - xi_exact).abs());
        }
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "errors {errs:?}");
        assert!(errs[3] < 1e-7, "6-term series error {}", errs[3]);
    }

    #[test]
    fn series_truncation_scales_as_two_to_m_plus_three() {
        // With m coefficients the ξ-error is ≍ λ_m·t^{m+3}: halving a
        // divides the discrepancy by ≈ 2^{m+3}. On two-point laws the
        // even-index λ_j are themselves ∝ a (they vanish in the
        // symmetric limit), which would add an extra halving at even m;
        // odd m isolates the clean scaling.
        for (m, expect) in [(1usize, 16.0f64), (3, 64.0)] {
            let d = |a: &str| -> f64 {
                let model = IncrementModel::biased_pm1(a).unwrap();
                let exact = rate_xi(&model, RateMode::Mgf).unwrap().xi;
                let ser = rate_xi(&model, RateMode::Series { terms: m }).unwrap().xi;
                (ser - exact).abs()
            };
            let ratio = d("0.1") / d("0.05");
            assert!(
                (ratio / expect - 1.0).abs() < 0.3,
                "m = {m}: ratio {ratio} vs 2^{}",
                m + 3
            );
        }
    }

    #[test]
    fn heavy_tails_have_no_rate() {
        let m = pareto_model("0.25", 1.0, 3.5, 13.5, 10);
        assert!(rate_xi(&m, RateMode::Mgf).is_err());
        assert!(rate_xi(&m, RateMode::Series { terms: 2 }).is_err());
    }

    #[test]
    fn ld_normal_prediction_tracks_dp() {
        let m = IncrementModel::biased_pm1("0.2").unwrap();
        let table = survival_dp(&m, 4000).unwrap();
        let mut errs = Vec::new();
        for n in [1000u64, 2000, 4000] {
            let p = ld_normal_predict(&m, &table, n).unwrap();
            let rel = (p.value / table.probs[n as usize] - 1.0).abs();
            errs.push(rel);
        }
        // The corollary's constant sits below the exact skip-free one by
        // q + √(pq) ≈ 1.09 at a = 0.2, so the relative error *grows*
        // with n toward ≈ 8.25%; at moderate n it is partially masked
        // by finite-n corrections of the opposite sign.
        assert!(errs[1] <= 0.25, "n=2000 error {:.4}", errs[1]);
        assert!(
            errs[0] < errs[1] && errs[1] < errs[2],
            "errors should climb toward the prefactor gap: {errs:?}"
        );
        assert!(
            (0.06..0.09).contains(&errs[2]),
            "n=4000 error {:.4} should sit near the 8.25% gap",
            errs[2]
        );
        // Bridge limit vs 2Eτ: (√(q/p)−1)/(e^ξ−1) = 10.899 vs 10.
        let p4000 = ld_normal_predict(&m, &table, 4000).unwrap();
        let etau = table.expected_tau().value;
        let ratio = p4000.bridge / (2.0 * etau);
        assert!((1.05..1.13).contains(&ratio), "bridge ratio {ratio:.4}");
        // The theorem-shaped form keeps σ and the plain 2Eτ flavour, so
        // it sits ≈ 11% under the bridge form at a = 0.2.
        let shape = p4000.gaussian_form / p4000.value;
        assert!((0.85..0.95).contains(&shape), "form ratio {shape:.4}");
    }

    #[test]
    fn one_jump_predictor_and_bound() {
        let m = pareto_model("0.25", 1.0, 3.5, 13.5, 10);
        let v = ld_heavy_predict(&m, 4.0, 1000).unwrap();
        assert!(v > 0.0 && v < 1e-4, "one-jump value {v:e}");
        // Fuk–Nagaev dominates the one-jump value and decreases in x.
        let b1 = fuk_nagaev_bound(&m, 1000, 250.0, FN_DEFAULT_C).unwrap();
        let b2 = fuk_nagaev_bound(&m, 1000, 500.0, FN_DEFAULT_C).unwrap();
        assert!(b1 > b2 && b2 > v, "bounds {b1:e}, {b2:e} vs {v:e}");
    }

    #[test]
    fn regime_scan_light_tail() {
        let m = IncrementModel::biased_pm1("0.01").unwrap();
        assert_eq!(regime_classify(&m, 50).unwrap().regime, Regime::Zero);
        let mid = regime_classify(&m, 10_000).unwrap();
        assert_eq!(mid.regime, Regime::Transition);
        assert!((mid.u - 1.0).abs() < 0.05, "u = {}", mid.u);
        assert_eq!(
            regime_classify(&m, 20_000_000).unwrap().regime,
            Regime::LdNormal
        );
    }

    #[test]
    fn regime_scan_heavy_tails() {
        // Infinite variance: straight to the one-jump regime past u = 10.
        let inf = pareto_model("0.3", 1.0, 1.5, 0.05, 1);
        let call = regime_classify(&inf, 200_000).unwrap();
        assert_eq!(call.regime, Regime::LdTail);
        assert!(!call.unresolved);
        // Finite variance (t = 3.5): w = na²/ln(1/a) against √(t−2).
        let fin = pareto_model("0.05", 1.0, 3.5, 13.5, 10);
        let far = regime_classify(&fin, 4000).unwrap();
        assert_eq!(far.regime, Regime::LdTail, "w = {:?}", far.w);
        assert!(!far.unresolved);
        let strip = regime_classify(&fin, 1000).unwrap();
        assert!(strip.unresolved, "w = {:?}", strip.w);
        let below = regime_classify(&fin, 400).unwrap();
        assert_eq!(below.regime, Regime::Transition, "w = {:?}", below.w);
        assert!(!below.unresolved);
        // A drift too weak for the horizon lands in the zero regime.
        let weak = pareto_model("0.002", 1.0, 3.5, 13.5, 10);
        let zero = regime_classify(&weak, 100).unwrap();
        assert_eq!(zero.regime, Regime::Zero, "u = {}", zero.u);
    }

    #[test]
    fn two_term_refinement_is_gated_and_sane() {
        let m = pareto_model("0.25", 1.0, 3.5, 13.5, 10);
        let table = survival_dp(&m, 200).unwrap();
        let etau = table.expected_tau().value;
        assert!(conjecture_two_term(&m, &table, etau, 1000, false).is_err());
        let two = conjecture_two_term(&m, &table, etau, 1000, true).unwrap();
        let one = ld_heavy_predict(&m, etau, 1000).unwrap();
        assert!(two >= 0.99 * one, "two-term {two:e} vs one-term {one:e}");
        assert!(two < 10.0 * one, "two-term {two:e} suspiciously large");
    }
}

