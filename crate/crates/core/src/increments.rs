//! Increment models: a zero-mean base law X together with a drift
//! a ≥ 0, representing the family X⁽ᵃ⁾ = X − a.
//!
//! Everything downstream consumes distribution-level quantities defined
//! here: the truncated second moment V(u) = E[X²; |X| ≤ u], the norming
//! sequence c_n = sup{u : u⁻²V(u) > n⁻¹} (taken as the *last* crossing,
//! clamped below by the smallest support magnitude; V/u² need not be
//! monotone), the boundary index n_a = min{n ≥ 1 : an > c_n}, cumulants
//! of the drifted law, and the moment generating function where it
//! exists.
//!
//! Three families are supported:
//! * `lattice` — atoms on integer multiples of a span h, exact decimal
//!   masses, centred (mean 0) base plus a drift that must be a rational
//!   multiple of h so the drifted walk stays on an arithmetic grid;
//! * `biased_pm1` — steps ±1 with P(+1) = (1−a)/2; the drift is built
//!   into the masses rather than subtracted, giving closed-form oracles
//!   (skip-free hitting identities); its norming quantities are those of
//!   the symmetric ±1 law;
//! * `gaussian_unit` — N(−a, 1), no exact route, used by Monte Carlo and
//!   the predictors;
//! * `pareto_tail` — a lattice with analytic right tail
//!   P(X ≥ kh) = c·(kh)^{−t} for k ≥ k0 and a bulk at sites {−1, 0}
//!   balancing the mean to zero; the tail is never materialised as a
//!   finite atom list, all sums against it are closed-form or truncated
//!   with Euler–Maclaurin completion.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::special::{hurwitz_tail, normal_pdf, normal_sf};
use crate::numeric::{series::PowerSeries, Kahan};

/// JSON model descriptor. Probabilities and drifts are exact decimal
/// strings to avoid parse drift; spans are JSON numbers and are taken
/// at their exact binary value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Lattice {
        span: f64,
        /// site (integer, as map key string) → probability (decimal string)
        mass: BTreeMap<String, String>,
        #[serde(default)]
        drift: Option<String>,
    },
    BiasedPm1 {
        drift: String,
    },
    GaussianUnit {
        drift: f64,
    },
    ParetoTail {
        span: f64,
        /// tail exponent t in P(X ≥ x) = coeff·x^{−t}
        exponent: f64,
        coeff: f64,
        /// first tail site k0 ≥ 1: the analytic tail covers x ≥ k0·span
        start: u64,
        #[serde(default)]
        drift: Option<String>,
    },
}

/// Analytic right-tail continuation of a Pareto-type lattice model:
/// P(X ≥ k·span) = coeff·(k·span)^{−exponent} for sites k ≥ start.
#[derive(Debug, Clone, Copy)]
pub struct ParetoTailSpec {
    pub exponent: f64,
    pub coeff: f64,
    pub start: u64,
}

impl ParetoTailSpec {
    /// Survivor function at site k (k ≥ start): P(X ≥ k·span).
    pub fn survivor(&self, k: u64, span: f64) -> f64 {
        self.coeff * (k as f64 * span).powf(-self.exponent)
    }

    /// Atom mass at site k ≥ start.
    pub fn mass(&self, k: u64, span: f64) -> f64 {
        self.survivor(k, span) - self.survivor(k + 1, span)
    }
}

#[derive(Debug, Clone)]
pub struct LatticeModel {
    /// lattice span h > 0
    pub span: f64,
    /// base-law atoms (site, mass), ascending sites; for `pareto_tail`
    /// only the bulk below `tail.start`
    pub atoms: Vec<(i64, f64)>,
    /// exact masses when the descriptor provided them exactly
    atoms_exact: Option<Vec<(i64, BigRational)>>,
    /// external drift a ≥ 0 (zero for biased_pm1, whose drift is intrinsic)
    pub drift: f64,
    /// a/h as an exact reduced fraction (num, den)
    drift_ratio: (i64, u64),
    /// mean of the atom law in value units (0 for centred bases)
    pub intrinsic_mean: f64,
    /// analytic tail continuation, if any
    pub tail: Option<ParetoTailSpec>,
    /// atoms of the law whose V/c_n norm the walk (differs from `atoms`
    /// only for biased_pm1, which is normed by the symmetric ±1 law)
    norming_atoms: Vec<(i64, f64)>,
    label: &'static str,
    hash: String,
    descriptor: String,
}

#[derive(Debug, Clone)]
pub struct GaussianModel {
    pub drift: f64,
    hash: String,
    descriptor: String,
}

#[derive(Debug, Clone)]
pub enum IncrementModel {
    Lattice(LatticeModel),
    Gaussian(GaussianModel),
}

/// Parse a signed decimal string (optional exponent) into an exact rational.
pub fn parse_decimal_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a decimal number: {s:?}"));
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| bad())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (sign, digits) = match mant.strip_prefix('-') {
        Some(d) => (-1, d),
        None => (1, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(i) => (&digits[..i], &digits[i + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let joined = format!("{int_part}{frac_part}");
    let numer: BigInt = joined.parse().map_err(|_| bad())?;
    let scale = frac_part.len() as i64 - exp;
    let pow10 = |n: u32| {
        let mut v = BigInt::one();
        for _ in 0..n {
            v *= 10;
        }
        v
    };
    let mut value = BigRational::from_integer(numer * BigInt::from(sign));
    if scale > 0 {
        value /= BigRational::from_integer(pow10(scale as u32));
    } else if scale < 0 {
        value *= BigRational::from_integer(pow10((-scale) as u32));
    }
    Ok(value)
}

/// Reduce a/h to an exact small fraction p/q (q ≤ 4096). The span is
/// taken at its exact binary value, so spans should be binary-exact
/// (1.0, 0.5, 0.25, …) when a nonzero drift is used with a lattice
/// model; otherwise the ratio is effectively irrational and rejected.
fn drift_ratio(a: &BigRational, span: f64) -> Result<(i64, u64)> {
    if a.is_zero() {
        return Ok((0, 1));
    }
    let h = BigRational::from_float(span)
        .ok_or_else(|| Error::InvalidModel(format!("span {span} is not finite")))?;
    let ratio = a / &h;
    let q = ratio.denom();
    let p = ratio.numer();
    if q > &BigInt::from(4096) {
        return Err(Error::Unsupported(format!(
            "drift/span ratio {p}/{q} is not a small rational; the drifted walk \
             would leave any tractable arithmetic grid"
        )));
    }
    Ok((
        p.to_i64().ok_or_else(|| {
            Error::Unsupported("drift/span numerator exceeds the supported range".into())
        })?,
        q.to_u64().unwrap(),
    ))
}

fn rational_to_canonical(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn hash_descriptor(desc: &str) -> String {
    let digest = Sha256::digest(desc.as_bytes());
    hex::encode(digest)[..16].to_string()
}

impl IncrementModel {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("model JSON: {e}")))?;
        Self::from_spec(spec)
    }

    pub fn from_spec(spec: ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Lattice { span, mass, drift } => {
                let drift = drift.as_deref().unwrap_or("0");
                build_lattice(span, &mass, drift)
            }
            ModelSpec::BiasedPm1 { drift } => build_biased(&drift),
            ModelSpec::GaussianUnit { drift } => {
                if !(drift >= 0.0 && drift.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "drift must be a finite nonnegative number, got {drift}"
                    )));
                }
                let descriptor = format!("{{\"kind\":\"gaussian_unit\",\"drift\":\"{drift:e}\"}}");
                let hash = hash_descriptor(&descriptor);
                Ok(IncrementModel::Gaussian(GaussianModel {
                    drift,
                    hash,
                    descriptor,
                }))
            }
            ModelSpec::ParetoTail {
                span,
                exponent,
                coeff,
                start,
                drift,
            } => build_pareto(span, exponent, coeff, start, drift.as_deref().unwrap_or("0")),
        }
    }

    /// Convenience constructors used throughout the tests.
    pub fn symmetric_pm1() -> Self {
        Self::lattice_from_rationals(
            1.0,
            &[(-1, BigRational::new(1.into(), 2.into())), (1, BigRational::new(1.into(), 2.into()))],
            BigRational::zero(),
        )
        .expect("symmetric ±1 is a valid model")
    }

    pub fn biased_pm1(a: &str) -> Result<Self> {
        build_biased(a)
    }

    pub fn gaussian_unit(a: f64) -> Result<Self> {
        Self::from_spec(ModelSpec::GaussianUnit { drift: a })
    }

    /// Exact-rational lattice constructor (bypasses decimal parsing).
    pub fn lattice_from_rationals(
        span: f64,
        atoms: &[(i64, BigRational)],
        drift: BigRational,
    ) -> Result<Self> {
        build_lattice_exact(span, atoms.to_vec(), drift, "lattice")
    }

    pub fn label(&self) -> &'static str {
        match self {
            IncrementModel::Lattice(l) => l.label,
            IncrementModel::Gaussian(_) => "gaussian_unit",
        }
    }

    pub fn hash(&self) -> &str {
        match self {
            IncrementModel::Lattice(l) => &l.hash,
            IncrementModel::Gaussian(g) => &g.hash,
        }
    }

    pub fn descriptor(&self) -> &str {
        match self {
            IncrementModel::Lattice(l) => &l.descriptor,
            IncrementModel::Gaussian(g) => &g.descriptor,
        }
    }

    /// Total drift a = −E X⁽ᵃ⁾ ≥ 0, whether external or intrinsic.
    pub fn a(&self) -> f64 {
        match self {
            IncrementModel::Lattice(l) => l.drift - l.intrinsic_mean,
            IncrementModel::Gaussian(g) => g.drift,
        }
    }

    pub fn as_lattice(&self) -> Result<&LatticeModel> {
        match self {
            IncrementModel::Lattice(l) => Ok(l),
            IncrementModel::Gaussian(_) => Err(Error::Unsupported(
                "this operation needs a lattice model".into(),
            )),
        }
    }

    pub fn is_biased_pm1(&self) -> bool {
        matches!(self, IncrementModel::Lattice(l) if l.label == "biased_pm1")
    }

    /// Truncated second moment V(u) = E[X²; |X| ≤ u] of the norming
    /// (zero-mean) base law; closed interval, so lattice jumps at
    /// support magnitudes are included at u equal to them.
    pub fn truncated_second_moment(&self, u: f64) -> Result<f64> {
        if !u.is_finite() || u < 0.0 {
            return Err(Error::OutOfRange(format!("V(u) needs finite u ≥ 0, got {u}")));
        }
        match self {
            IncrementModel::Gaussian(_) => {
                // ∫_{−u}^{u} x²φ(x)dx = 1 − 2uφ(u) − 2Φ̄(u)
                Ok(1.0 - 2.0 * u * normal_pdf(u) - 2.0 * normal_sf(u))
            }
            IncrementModel::Lattice(l) => {
                let mut acc = Kahan::new();
                for &(site, m) in &l.norming_atoms {
                    let x = site as f64 * l.span;
                    if x.abs() <= u {
                        acc.add(x * x * m);
                    }
                }
                if let Some(tail) = &l.tail {
                    let kmax = (u / l.span).floor() as u64;
                    if kmax >= tail.start {
                        for k in tail.start..=kmax {
                            let x = k as f64 * l.span;
                            acc.add(x * x * tail.mass(k, l.span));
                        }
                    }
                }
                Ok(acc.value())
            }
        }
    }

    /// Second moment E X² of the base law (error when infinite).
    pub fn base_second_moment(&self) -> Result<f64> {
        match self {
            IncrementModel::Gaussian(_) => Ok(1.0),
            IncrementModel::Lattice(l) => {
                let mut acc = Kahan::new();
                for &(site, m) in &l.norming_atoms {
                    let x = site as f64 * l.span;
                    acc.add(x * x * m);
                }
                if let Some(tail) = &l.tail {
                    if tail.exponent <= 2.0 {
                        return Err(Error::Unsupported(format!(
                            "E X² is infinite for tail exponent {}",
                            tail.exponent
                        )));
                    }
                    acc.add(pareto_raw_moment(tail, l.span, 2)?);
                }
                Ok(acc.value())
            }
        }
    }

    /// Smallest support magnitude of the base law (used to clamp c_n).
    fn u_min(&self) -> f64 {
        match self {
            IncrementModel::Gaussian(_) => 0.0,
            IncrementModel::Lattice(l) => l
                .norming_atoms
                .iter()
                .filter(|&&(s, m)| s != 0 && m > 0.0)
                .map(|&(s, _)| (s as f64 * l.span).abs())
                .fold(f64::INFINITY, f64::min)
                .min(match &l.tail {
                    Some(t) => t.start as f64 * l.span,
                    None => f64::INFINITY,
                }),
        }
    }

    /// Norming sequence c_n: the last u with u⁻²V(u) > n⁻¹ (equivalently
    /// the largest √(n·V(·)) over support points still above the ray),
    /// clamped below by the smallest support magnitude. For the Gaussian
    /// base at n ≤ 4 the ray never crosses V/u² and we fall back to the
    /// asymptotic scale √n.
    pub fn norming_c(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::OutOfRange("norming_c needs n ≥ 1".into()));
        }
        let nf = n as f64;
        match self {
            IncrementModel::Gaussian(_) => {
                // Find the last crossing of g(u) = n·V(u) − u² by bisection
                // on the decreasing branch of V/u².
                let g = |u: f64| nf * self.truncated_second_moment(u).unwrap() - u * u;
                let mut hi = nf.sqrt();
                if g(hi) >= 0.0 {
                    // can only happen through rounding at huge n; nudge up
                    while g(hi) >= 0.0 {
                        hi *= 2.0;
                    }
                }
                // V/u² peaks near u ≈ 1.5 with value ≈ 0.21; for n ≤ 4 there
                // is no crossing at all.
                let mut lo = 1.5;
                if g(lo) <= 0.0 {
                    return Ok(nf.sqrt());
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
            IncrementModel::Lattice(l) => {
                let u_min = self.u_min();
                if !u_min.is_finite() {
                    return Err(Error::InvalidModel(
                        "degenerate law: V vanishes identically".into(),
                    ));
                }
                let mut candidates: Vec<f64> = l
                    .norming_atoms
                    .iter()
                    .filter(|&&(s, m)| s != 0 && m > 0.0)
                    .map(|&(s, _)| (s as f64 * l.span).abs())
                    .collect();
                if let Some(tail) = &l.tail {
                    // Cap the scan with the fixed point of u ↦ √(n·V(u)).
                    let mut cap = (tail.start as f64 * l.span).max(u_min);
                    for _ in 0..200 {
                        let next = (nf * self.truncated_second_moment(cap)?).sqrt() + l.span;
                        if next <= cap {
                            break;
                        }
                        cap = next;
                    }
                    let kmax = (cap / l.span).ceil() as u64 + 1;
                    for k in tail.start..=kmax {
                        candidates.push(k as f64 * l.span);
                    }
                }
                candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
                candidates.dedup();
                let mut best = u_min;
                for v in candidates {
                    let vv = self.truncated_second_moment(v)?;
                    if vv > v * v / nf {
                        best = best.max((nf * vv).sqrt());
                    }
                }
                Ok(best)
            }
        }
    }

    /// Boundary index n_a = min{n ≥ 1 : a·n > c_n}.
    pub fn boundary_n_a(&self, a: f64) -> Result<u64> {
        if !(a > 0.0) {
            return Err(Error::OutOfRange("boundary_n_a needs a > 0".into()));
        }
        let crossed = |n: u64| -> Result<bool> { Ok(a * n as f64 > self.norming_c(n)?) };
        // Small n: plain scan.
        for n in 1..=4096u64 {
            if crossed(n)? {
                return Ok(n);
            }
        }
        // Large n: c_n grows like n^{1/α} with α > 1, so the predicate is
        // eventually monotone; bracket by doubling, then bisect for the
        // first true point and validate both sides.
        let mut hi = 8192u64;
        while !crossed(hi)? {
            hi = hi
                .checked_mul(2)
                .ok_or_else(|| Error::TooLarge("n_a exceeds u64 range".into()))?;
            if hi > (1u64 << 50) {
                return Err(Error::TooLarge(
                    "n_a not found below 2^50; drift too small for this model".into(),
                ));
            }
        }
        let mut lo = 4096u64; // known false
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if crossed(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if !(crossed(hi)? && !crossed(hi - 1)?) {
            return Err(Error::Inconsistent(
                "a·n − c_n changed sign more than once near the boundary".into(),
            ));
        }
        Ok(hi)
    }

    /// k-th cumulant of the drifted law X⁽ᵃ⁾ (κ₁ = −a; κ_j for j ≥ 2 is
    /// drift-invariant). Exact rational arithmetic when the atoms are
    /// exact; errors for heavy-tail models when the moment of order k
    /// does not exist (k ≥ tail exponent).
    pub fn cumulant(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Err(Error::OutOfRange("cumulant order must be ≥ 1".into()));
        }
        if k == 1 {
            return Ok(-self.a());
        }
        match self {
            IncrementModel::Gaussian(_) => Ok(if k == 2 { 1.0 } else { 0.0 }),
            IncrementModel::Lattice(l) => {
                if let Some(tail) = &l.tail {
                    if (k as f64) >= tail.exponent {
                        return Err(Error::OutOfRange(format!(
                            "moment of order {k} does not exist (tail exponent {})",
                            tail.exponent
                        )));
                    }
                }
                let central = self.central_moments_of_atoms(k as usize)?;
                // Cumulants from central moments via the CGF power series:
                // K(s) = ln Σ_j μ_j s^j/j!, κ_k = k!·[s^k] K.
                let m = k as usize;
                let mut mgf = PowerSeries::zeros(m);
                let mut fact = 1.0;
                for j in 0..=m {
                    if j > 0 {
                        fact *= j as f64;
                    }
                    mgf.c[j] = central[j] / fact;
                }
                // ln(1 + A) with A = mgf − 1 (valuation ≥ 2 here)
                let mut a_ser = mgf;
                a_ser.c[0] = 0.0;
                let mut log = PowerSeries::zeros(m);
                let mut pow = PowerSeries::zeros(m);
                pow.c[0] = 1.0;
                for j in 1..=m {
                    pow = pow.mul(&a_ser);
                    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                    log = log.add(&pow.scale(sign / j as f64));
                }
                let mut fact = 1.0;
                for j in 1..=m {
                    fact *= j as f64;
                }
                Ok(log.c[m] * fact)
            }
        }
    }

    /// Central moments μ_0..μ_m of the increment law about its mean.
    fn central_moments_of_atoms(&self, m: usize) -> Result<Vec<f64>> {
        let l = self.as_lattice()?;
        if let Some(exact) = &l.atoms_exact {
            // Exact path: mean and moments in rational arithmetic.
            let h = BigRational::from_float(l.span).unwrap();
            let mut mean = BigRational::zero();
            for (site, mass) in exact {
                mean += BigRational::from_integer(BigInt::from(*site)) * &h * mass;
            }
            let mut out = Vec::with_capacity(m + 1);
            for j in 0..=m {
                let mut s = BigRational::zero();
                for (site, mass) in exact {
                    let x = BigRational::from_integer(BigInt::from(*site)) * &h - &mean;
                    let mut p = BigRational::one();
                    for _ in 0..j {
                        p *= &x;
                    }
                    s += p * mass;
                }
                out.push(s.to_f64().ok_or_else(|| {
                    Error::Inconsistent("rational moment does not fit in f64".into())
                })?);
            }
            return Ok(out);
        }
        // Float path (pareto tails): raw moments about 0, then centre.
        let mut raw = vec![0.0; m + 1];
        for (j, slot) in raw.iter_mut().enumerate() {
            let mut acc = Kahan::new();
            for &(site, mass) in &l.atoms {
                acc.add((site as f64 * l.span).powi(j as i32) * mass);
            }
            if let Some(tail) = &l.tail {
                if j > 0 {
                    acc.add(pareto_raw_moment(tail, l.span, j as u32)?);
                } else {
                    acc.add(tail.survivor(tail.start, l.span));
                }
            }
            *slot = acc.value();
        }
        let mean = raw[1] / raw[0];
        let mut central = vec![0.0; m + 1];
        for (j, slot) in central.iter_mut().enumerate() {
            let mut acc = Kahan::new();
            let mut binom = 1.0;
            for i in 0..=j {
                // C(j,i)·raw[i]·(−mean)^{j−i}
                acc.add(binom * raw[i] * (-mean).powi((j - i) as i32));
                binom = binom * (j - i) as f64 / (i + 1) as f64;
            }
            *slot = acc.value();
        }
        central[0] = 1.0;
        Ok(central)
    }

    /// Variance of the drifted law.
    pub fn sigma2(&self) -> Result<f64> {
        self.cumulant(2)
    }

    /// P(X ≥ x) for the zero-mean base law (the quantity entering the
    /// heavy-tail predictor and the Fuk–Nagaev bound).
    pub fn base_tail(&self, x: f64) -> Result<f64> {
        match self {
            IncrementModel::Gaussian(_) => Ok(normal_sf(x)),
            IncrementModel::Lattice(l) => {
                let mut acc = Kahan::new();
                for &(site, m) in &l.norming_atoms {
                    if site as f64 * l.span >= x {
                        acc.add(m);
                    }
                }
                if let Some(tail) = &l.tail {
                    let k_lo = (x / l.span).ceil().max(tail.start as f64) as u64;
                    if x <= tail.start as f64 * l.span {
                        acc.add(tail.survivor(tail.start, l.span));
                    } else {
                        acc.add(tail.survivor(k_lo, l.span));
                    }
                }
                Ok(acc.value())
            }
        }
    }

    /// Moment generating function M(s) = E e^{sX⁽ᵃ⁾} of the drifted law
    /// and its derivative. Errors when the MGF does not exist on s > 0
    /// (analytic heavy tails).
    pub fn mgf(&self, s: f64) -> Result<(f64, f64)> {
        match self {
            IncrementModel::Gaussian(g) => {
                let m = (0.5 * s * s - g.drift * s).exp();
                Ok((m, m * (s - g.drift)))
            }
            IncrementModel::Lattice(l) => {
                if l.tail.is_some() && s > 0.0 {
                    return Err(Error::Unsupported(
                        "MGF does not exist on s > 0 for the analytic-tail model".into(),
                    ));
                }
                let a_ext = l.drift;
                let mut m = Kahan::new();
                let mut dm = Kahan::new();
                for &(site, mass) in &l.atoms {
                    let x = site as f64 * l.span - a_ext;
                    let e = (s * x).exp() * mass;
                    m.add(e);
                    dm.add(e * x);
                }
                Ok((m.value(), dm.value()))
            }
        }
    }
}

fn pareto_raw_moment(tail: &ParetoTailSpec, span: f64, j: u32) -> Result<f64> {
    // Σ_{k≥k0} (kh)^j (T_k − T_{k+1}) by Abel summation:
    //   = (k0 h)^j T_{k0} + Σ_{k>k0} ((kh)^j − ((k−1)h)^j) T_k,
    // with the increment expanded exactly in powers of k.
    let t = tail.exponent;
    if j as f64 >= t {
        return Err(Error::OutOfRange(format!(
            "raw moment {j} diverges for tail exponent {t}"
        )));
    }
    let k0 = tail.start;
    let hj = span.powi(j as i32);
    let mut acc = Kahan::new();
    acc.add(hj * (k0 as f64).powi(j as i32) * tail.survivor(k0, span));
    // ((k)^j − (k−1)^j) = Σ_{i<j} C(j,i) k^i (−1)^{j−1−i}... expand via
    // binomial of (k−1)^j and cancel the leading term.
    // T_k = c·h^{−t}·k^{−t}.
    let scale = tail.coeff * span.powf(-t) * hj;
    let mut binom = 1.0;
    for i in 0..j {
        // coefficient of k^i in k^j − (k−1)^j is −C(j,i)(−1)^{j−i}
        let c = -binom * if (j - i) % 2 == 0 { 1.0 } else { -1.0 };
        let s = t - i as f64; // exponent of Σ k^{i−t}
        acc.add(scale * c * hurwitz_tail(s, k0 + 1)?);
        binom = binom * (j - i) as f64 / (i + 1) as f64;
    }
    Ok(acc.value())
}

fn validate_atoms_exact(atoms: &[(i64, BigRational)]) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::InvalidModel("empty support".into()));
    }
    let mut sum = BigRational::zero();
    for (site, mass) in atoms {
        if mass.is_negative() {
            return Err(Error::InvalidModel(format!("negative mass at site {site}")));
        }
        sum += mass;
    }
    let err = (&sum - BigRational::one()).abs();
    if err > BigRational::new(1.into(), BigInt::from(10u64.pow(12))) {
        return Err(Error::InvalidModel(format!(
            "masses sum to {} (must be 1 within 1e-12)",
            sum.to_f64().unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

fn build_lattice(span: f64, mass: &BTreeMap<String, String>, drift: &str) -> Result<IncrementModel> {
    let mut atoms = Vec::with_capacity(mass.len());
    for (site, prob) in mass {
        let s: i64 = site
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("lattice site {site:?} is not an integer")))?;
        atoms.push((s, parse_decimal_rational(prob)?));
    }
    atoms.sort_by_key(|&(s, _)| s);
    build_lattice_exact(span, atoms, parse_decimal_rational(drift)?, "lattice")
}

fn build_lattice_exact(
    span: f64,
    mut atoms: Vec<(i64, BigRational)>,
    drift: BigRational,
    label: &'static str,
) -> Result<IncrementModel> {
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::InvalidModel(format!("span must be positive, got {span}")));
    }
    // Canonicalize: ascending sites, duplicates merged, dead sites dropped.
    // Downstream geometry (min_site, kill planning) and the descriptor hash
    // rely on this order, so it must not depend on how the caller listed
    // the support.
    atoms.sort_by_key(|&(s, _)| s);
    let mut merged: Vec<(i64, BigRational)> = Vec::with_capacity(atoms.len());
    for (site, mass) in atoms {
        match merged.last_mut() {
            Some((last, acc)) if *last == site => *acc += mass,
            _ => merged.push((site, mass)),
        }
    }
    merged.retain(|(_, m)| !m.is_zero());
    let atoms = merged;
    validate_atoms_exact(&atoms)?;
    if drift.is_negative() {
        return Err(Error::InvalidModel("drift must be ≥ 0".into()));
    }
    let mut mean_sites = BigRational::zero();
    for (site, mass) in &atoms {
        mean_sites += BigRational::from_integer(BigInt::from(*site)) * mass;
    }
    let intrinsic_mean = mean_sites.to_f64().unwrap() * span;
    if label == "lattice" && intrinsic_mean.abs() > 1e-12 {
        return Err(Error::InvalidModel(format!(
            "base law must have mean 0 within 1e-12, got {intrinsic_mean:.3e}"
        )));
    }
    let ratio = drift_ratio(&drift, span)?;
    let atoms_f: Vec<(i64, f64)> = atoms
        .iter()
        .map(|(s, m)| (*s, m.to_f64().unwrap()))
        .collect();
    let norming_atoms = if label == "biased_pm1" {
        vec![(-1i64, 0.5), (1i64, 0.5)]
    } else {
        atoms_f.clone()
    };
    let mut descriptor = String::new();
    write!(
        descriptor,
        "{{\"kind\":\"{label}\",\"span\":\"{}\",\"drift\":\"{}\",\"mass\":{{",
        rational_to_canonical(&BigRational::from_float(span).unwrap()),
        rational_to_canonical(&drift),
    )
    .unwrap();
    for (i, (site, mass)) in atoms.iter().enumerate() {
        if i > 0 {
            descriptor.push(',');
        }
        write!(descriptor, "\"{site}\":\"{}\"", rational_to_canonical(mass)).unwrap();
    }
    descriptor.push_str("}}");
    let hash = hash_descriptor(&descriptor);
    Ok(IncrementModel::Lattice(LatticeModel {
        span,
        atoms: atoms_f,
        atoms_exact: Some(atoms),
        drift: drift.to_f64().unwrap(),
        drift_ratio: ratio,
        intrinsic_mean,
        tail: None,
        norming_atoms,
        label,
        hash,
        descriptor,
    }))
}

fn build_biased(drift: &str) -> Result<IncrementModel> {
    let a = parse_decimal_rational(drift)?;
    if a.is_negative() || a >= BigRational::one() {
        return Err(Error::InvalidModel(format!(
            "biased_pm1 needs drift in [0, 1), got {drift}"
        )));
    }
    let half = BigRational::new(1.into(), 2.into());
    let p = &half * (BigRational::one() - &a); // P(+1) = (1−a)/2
    let q = BigRational::one() - &p;
    build_lattice_exact(1.0, vec![(-1, q), (1, p)], BigRational::zero(), "biased_pm1")
}

fn build_pareto(
    span: f64,
    exponent: f64,
    coeff: f64,
    start: u64,
    drift: &str,
) -> Result<IncrementModel> {
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::InvalidModel(format!("span must be positive, got {span}")));
    }
    if !(exponent > 1.0) || (exponent - 2.0).abs() < 1e-9 {
        return Err(Error::InvalidModel(format!(
            "tail exponent must satisfy t > 1, t ≠ 2 (got {exponent}); t ∈ (1,2) gives a \
             stable limit with α = t, t > 2 a Gaussian limit"
        )));
    }
    if !(coeff > 0.0) || start == 0 {
        return Err(Error::InvalidModel(
            "tail coefficient must be positive and the tail start site ≥ 1".into(),
        ));
    }
    let tail = ParetoTailSpec {
        exponent,
        coeff,
        start,
    };
    let tail_mass = tail.survivor(start, span);
    if !(tail_mass < 0.5) {
        return Err(Error::InvalidModel(format!(
            "tail mass at the start site is {tail_mass:.3}; must be < 0.5"
        )));
    }
    // Tail mean Σ_{k≥k0} kh·m_k = h(k0·T_{k0} + Σ_{k>k0} T_k).
    let tail_mean = pareto_raw_moment(&tail, span, 1)?;
    // Bulk: site −1 balances the tail mean, site 0 absorbs the rest.
    let q1 = tail_mean / span;
    let q0 = 1.0 - tail_mass - q1;
    if q1 < 0.0 || q0 < 0.0 {
        return Err(Error::InvalidModel(format!(
            "cannot centre the law: bulk masses would be ({q0:.4}, {q1:.4}); \
             reduce the tail coefficient or move the tail start outward"
        )));
    }
    let drift = parse_decimal_rational(drift)?;
    if drift.is_negative() {
        return Err(Error::InvalidModel("drift must be ≥ 0".into()));
    }
    let ratio = drift_ratio(&drift, span)?;
    let atoms_f = vec![(-1i64, q1), (0i64, q0)];
    let descriptor = format!(
        "{{\"kind\":\"pareto_tail\",\"span\":\"{}\",\"exponent\":\"{exponent:e}\",\"coeff\":\"{coeff:e}\",\"start\":\"{start}\",\"drift\":\"{}\"}}",
        rational_to_canonical(&BigRational::from_float(span).unwrap()),
        rational_to_canonical(&drift),
    );
    let hash = hash_descriptor(&descriptor);
    Ok(IncrementModel::Lattice(LatticeModel {
        span,
        atoms: atoms_f.clone(),
        atoms_exact: None,
        drift: drift.to_f64().unwrap(),
        drift_ratio: ratio,
        intrinsic_mean: 0.0,
        tail: Some(tail),
        norming_atoms: atoms_f,
        label: "pareto_tail",
        hash,
        descriptor,
    }))
}

impl LatticeModel {
    /// a/h as an exact reduced fraction.
    pub fn drift_ratio(&self) -> (i64, u64) {
        self.drift_ratio
    }

    /// Most negative support site of the drift-free atom law.
    pub fn min_site(&self) -> i64 {
        self.atoms.first().map(|&(s, _)| s).unwrap_or(0)
    }

    /// Largest bulk site (tail models continue beyond it analytically).
    pub fn max_bulk_site(&self) -> i64 {
        self.atoms.last().map(|&(s, _)| s).unwrap_or(0)
    }

    /// Exact atom masses, when the descriptor supplied them exactly.
    pub fn exact_atoms(&self) -> Option<&[(i64, BigRational)]> {
        self.atoms_exact.as_deref()
    }

    /// The zero-mean, zero-drift walk that norms this model (only the
    /// tilted ±1 family is normed by a law other than its own base).
    pub fn norming_base_model(&self) -> IncrementModel {
        let descriptor = format!("{{\"norming_base_of\":{}}}", self.descriptor);
        let hash = hash_descriptor(&descriptor);
        let half = BigRational::new(1.into(), 2.into());
        let atoms_exact = if self.label == "biased_pm1" {
            Some(vec![(-1i64, half.clone()), (1i64, half)])
        } else if self.drift == 0.0 {
            self.atoms_exact.clone()
        } else {
            None
        };
        IncrementModel::Lattice(LatticeModel {
            span: self.span,
            atoms: self.norming_atoms.clone(),
            atoms_exact,
            drift: 0.0,
            drift_ratio: (0, 1),
            intrinsic_mean: 0.0,
            tail: self.tail,
            norming_atoms: self.norming_atoms.clone(),
            label: self.label,
            hash,
            descriptor,
        })
    }
}
