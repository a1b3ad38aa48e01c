//! Exact computation of the ladder-epoch tail P(τ⁽ᵃ⁾ > n), where
//! τ⁽ᵃ⁾ = min{k ≥ 1 : S_k⁽ᵃ⁾ < 0}, by three independent routes:
//!
//! * a lattice dynamic program (`survival_dp`) that walks the *base*
//!   lattice and kills mass against a moving threshold — with drift
//!   a = (p/q)·h the event S_k⁽ᵃ⁾ ≥ 0 is the exact integer comparison
//!   s·q ≥ k·p at site s, so no refinement of the grid is ever needed;
//! * the recurrence n·P(τ>n) = Σ_{j<n} P(τ>j)·b_{n−j} with
//!   b_k = P(S_k⁽ᵃ⁾ ≥ 0) (`spitzer_recurrence` on `marginal_nonneg_probs`),
//!   which is the derivative of the generating-function identity
//!   Σ P(τ>n)zⁿ = exp{Σ zᵏ/k·b_k} enforced by `genf_check`;
//! * exhaustive path enumeration (`enumerate_bruteforce`) for tiny n.
//!
//! Throughout, "survive" means S_k⁽ᵃ⁾ ≥ 0 (weak), consistent with the
//! strict definition of τ; on lattices the two readings differ and the
//! generating-function identity pins this one.
//!
//! The DP never renormalizes. Two absorbers keep the live band narrow:
//! mass at a site s after k of n steps is *alive for good* when even
//! the most negative continuation stays at or above the threshold,
//! i.e. (s + (n−k)·d)·q ≥ n·p with d the most negative jump (the
//! threshold deficit j·p/q − (j−k)·d is monotone in j, so checking the
//! endpoint is exact); such mass moves to a scalar absorber with zero
//! error. Heavy analytic tails contribute their exact survivor mass
//! beyond the materialised kernel to the same absorber. Killed mass is
//! logged with its overshoot so E[S_τ; τ ≤ n] and E[τ; τ ≤ n] come out
//! of the same pass (Wald checks downstream).
//!
//! Kernels with more than a few dozen atoms are convolved by FFT with
//! a cached kernel spectrum; small kernels use direct scatter. Both
//! paths feed the same kill/absorb postprocessing, and results are
//! deterministic.

use num_rational::BigRational;
use num_traits::Zero;
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::increments::{IncrementModel, LatticeModel};
use crate::numeric::{kahan_sum, series::PowerSeries, Kahan};

/// Which algorithm produced a table (provenance for dumps and reports).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    SurvivalDp,
    RationalDp,
    BruteForce,
    SpitzerRecurrence,
    MonteCarlo,
    Predictor,
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Route::SurvivalDp => "dp",
            Route::RationalDp => "dp-rational",
            Route::BruteForce => "bruteforce",
            Route::SpitzerRecurrence => "spitzer",
            Route::MonteCarlo => "mc",
            Route::Predictor => "predictor",
        };
        f.write_str(s)
    }
}

/// Numerical bookkeeping of one `survival_dp` run.
#[derive(Debug, Clone, Default)]
pub struct DpDiagnostics {
    /// mass parked in the alive-for-good absorber at the horizon
    pub absorbed_alive: f64,
    /// total killed mass = 1 − P(τ > n)
    pub killed: f64,
    /// E[S_τ⁽ᵃ⁾; τ ≤ n] accumulated from kill overshoots
    pub e_s_tau_partial: f64,
    /// E[τ; τ ≤ n]
    pub e_tau_partial: f64,
    /// |negative FFT roundoff| clamped to zero (0 for the direct path)
    pub clamped_negative: f64,
}

/// Finite tail table P(τ⁽ᵃ⁾ > j), j = 0..=n, with provenance.
#[derive(Debug, Clone)]
pub struct LadderTailTable {
    pub a: f64,
    pub model_hash: String,
    pub route: Route,
    pub probs: Vec<f64>,
    pub diagnostics: Option<DpDiagnostics>,
}

/// E τ from a finite table: the partial sum Σ_{j≤n} P(τ>j) plus a
/// geometric completion fitted to the last ratio. The completion is an
/// estimate, not a bound; `tail` reports its size so callers can check
/// it is negligible at their horizon.
#[derive(Debug, Clone, Copy)]
pub struct EtauEstimate {
    pub partial: f64,
    pub tail: f64,
    pub value: f64,
}

impl LadderTailTable {
    pub fn n(&self) -> usize {
        self.probs.len() - 1
    }

    /// Structural sanity: starts at 1, stays in [0,1], nonincreasing.
    pub fn validate(&self) -> Result<()> {
        if self.probs.is_empty() || (self.probs[0] - 1.0).abs() > 1e-12 {
            return Err(Error::Inconsistent("table must start at P(τ>0) = 1".into()));
        }
        for w in self.probs.windows(2) {
            if w[1] > w[0] + 1e-12 || !(0.0..=1.0 + 1e-12).contains(&w[1]) {
                return Err(Error::Inconsistent(format!(
                    "table not nonincreasing in [0,1]: {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    /// Kill-mass sequence P(τ = k) = P(τ>k−1) − P(τ>k), k = 1..=n.
    pub fn kill_masses(&self) -> Vec<f64> {
        self.probs.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect()
    }

    /// E τ via Σ_{j≥0} P(τ>j) with geometric tail completion. The
    /// per-step ratio is fitted over a 16-step window because lattice
    /// periodicity makes single-step ratios degenerate (on ±1 the
    /// epoch is odd, so consecutive entries pair up exactly).
    pub fn expected_tau(&self) -> EtauEstimate {
        let partial = kahan_sum(self.probs.iter().copied());
        let n = self.n();
        let w = 16.min(n);
        let tail = if self.probs[n] == 0.0 {
            0.0
        } else if w >= 1 && self.probs[n - w] > 0.0 {
            let r = (self.probs[n] / self.probs[n - w]).powf(1.0 / w as f64);
            if r < 1.0 {
                self.probs[n] * r / (1.0 - r)
            } else {
                f64::INFINITY
            }
        } else {
            0.0
        };
        EtauEstimate {
            partial,
            tail,
            value: partial + tail,
        }
    }

    /// E[e^{ξτ}; τ ≤ n] = Σ_k e^{ξk}·P(τ = k).
    pub fn tilted_kill_sum(&self, xi: f64) -> f64 {
        kahan_sum(
            self.kill_masses()
                .iter()
                .enumerate()
                .map(|(i, &m)| ((i + 1) as f64 * xi).exp() * m),
        )
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    let d = a.div_euclid(b);
    if a.rem_euclid(b) != 0 {
        d + 1
    } else {
        d
    }
}

/// Explicit jump list of the step law up to jump ≤ jmax, plus the
/// survivor mass of the analytic tail beyond jmax (zero when bounded).
fn materialize_kernel(l: &LatticeModel, jmax: i64) -> Result<(Vec<(i64, f64)>, f64)> {
    let mut atoms = l.atoms.clone();
    let mut residual = 0.0;
    if let Some(t) = &l.tail {
        if jmax > 5_000_000 {
            return Err(Error::TooLarge(format!(
                "materialised kernel would need {jmax} sites; reduce the horizon \
                 or enlarge the span"
            )));
        }
        if jmax < t.start as i64 {
            residual = t.survivor(t.start, l.span);
        } else {
            for k in t.start..=(jmax as u64) {
                atoms.push((k as i64, t.mass(k, l.span)));
            }
            residual = t.survivor(jmax as u64 + 1, l.span);
        }
    }
    atoms.sort_by_key(|&(s, _)| s);
    Ok((atoms, residual))
}

/// Cached-spectrum FFT convolution of a fixed kernel with varying inputs.
struct FftConv {
    size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kspec: Vec<Complex<f64>>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    klen: usize,
}

impl FftConv {
    fn new(kernel: &[f64], max_input: usize) -> Self {
        let size = (max_input + kernel.len()).next_power_of_two();
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let mut kspec = vec![Complex::new(0.0, 0.0); size];
        for (i, &k) in kernel.iter().enumerate() {
            kspec[i].re = k;
        }
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        let mut scratch = vec![Complex::new(0.0, 0.0); scratch_len];
        fwd.process_with_scratch(&mut kspec, &mut scratch);
        FftConv {
            size,
            fwd,
            inv,
            kspec,
            buf: vec![Complex::new(0.0, 0.0); size],
            scratch,
            klen: kernel.len(),
        }
    }

    /// out[o] = Σ_i input[i]·kernel[o−i], o = 0..input.len()+klen−1.
    fn convolve(&mut self, input: &[f64], out: &mut Vec<f64>) {
        let out_len = input.len() + self.klen - 1;
        debug_assert!(out_len <= self.size);
        for c in self.buf.iter_mut() {
            *c = Complex::new(0.0, 0.0);
        }
        for (i, &v) in input.iter().enumerate() {
            self.buf[i].re = v;
        }
        self.fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (b, k) in self.buf.iter_mut().zip(&self.kspec) {
            *b *= k;
        }
        self.inv.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = 1.0 / self.size as f64;
        out.clear();
        out.extend(self.buf[..out_len].iter().map(|c| c.re * scale));
    }
}

const DIRECT_KERNEL_LIMIT: usize = 64;

/// One step of mass transport: state over sites [lo, lo+len) convolved
/// with the kernel; writes the raw landing distribution into `out`
/// starting at site lo + min_jump. Chooses FFT or direct scatter.
struct Stepper {
    kernel: Vec<(i64, f64)>,
    min_jump: i64,
    max_jump: i64,
    residual: f64,
    fft: Option<FftConv>,
    /// dense kernel, index (jump − min_jump), for the FFT path
    dense: Vec<f64>,
}

impl Stepper {
    fn new(l: &LatticeModel, jmax: i64, max_band: usize) -> Result<Self> {
        let (kernel, residual) = materialize_kernel(l, jmax)?;
        let min_jump = kernel.first().map(|&(s, _)| s).unwrap_or(0);
        let max_jump = kernel.last().map(|&(s, _)| s).unwrap_or(0);
        let mut dense = Vec::new();
        let fft = if kernel.len() > DIRECT_KERNEL_LIMIT {
            dense = vec![0.0; (max_jump - min_jump + 1) as usize];
            for &(s, m) in &kernel {
                dense[(s - min_jump) as usize] += m;
            }
            Some(FftConv::new(&dense, max_band))
        } else {
            None
        };
        Ok(Stepper {
            kernel,
            min_jump,
            max_jump,
            residual,
            fft,
            dense,
        })
    }

    fn clamp_negatives(out: &mut [f64]) -> f64 {
        let mut clamped = 0.0;
        for v in out.iter_mut() {
            if *v < 0.0 {
                clamped -= *v;
                *v = 0.0;
            }
        }
        clamped
    }

    /// Returns (out_lo, clamped_negative_mass); `out` holds the landing
    /// masses for sites out_lo..out_lo+out.len().
    fn advance(&mut self, state: &[f64], lo: i64, out: &mut Vec<f64>) -> (i64, f64) {
        let out_lo = lo + self.min_jump;
        match &mut self.fft {
            Some(conv) => {
                conv.convolve(state, out);
                let clamped = Self::clamp_negatives(out);
                (out_lo, clamped)
            }
            None => {
                let span = (self.max_jump - self.min_jump) as usize + state.len();
                out.clear();
                out.resize(span, 0.0);
                for (i, &m) in state.iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    for &(j, mj) in &self.kernel {
                        out[i + (j - self.min_jump) as usize] += m * mj;
                    }
                }
                let _ = &self.dense;
                (out_lo, 0.0)
            }
        }
    }
}

/// Per-step integer geometry of the moving-threshold survival DP.
struct SurvivalPlan {
    /// t[k]: smallest alive site after k steps (s·q ≥ k·p)
    t: Vec<i64>,
    /// a_bound[k]: sites ≥ this are alive for good (absorber)
    a_bound: Vec<i64>,
    jmax: i64,
    max_band: usize,
}

fn survival_plan(l: &LatticeModel, n: usize) -> SurvivalPlan {
    let (p, q) = l.drift_ratio();
    let (p, q) = (p as i128, q as i128);
    let d = l.min_site() as i128;
    let nn = n as i128;
    let mut t = vec![0i64; n + 1];
    let mut a_bound = vec![0i64; n + 1];
    for k in 1..=n {
        let kk = k as i128;
        t[k] = ceil_div(kk * p, q) as i64;
        let worst = (nn * p - (nn - kk) * d * q).max(kk * p);
        a_bound[k] = ceil_div(worst, q) as i64;
    }
    // Kernel reach: enough to jump from any band site past its absorber.
    let mut jmax = l.max_bulk_site().max(1);
    if l.tail.is_some() {
        let mut lo_prev = 0i64;
        for k in 1..=n {
            jmax = jmax.max(a_bound[k] - lo_prev);
            lo_prev = t[k];
        }
    }
    // Dry run for the maximum band width (for FFT sizing).
    let bulk_reach = if l.tail.is_some() { i64::MAX / 4 } else { jmax };
    let mut max_band = 1usize;
    let mut hi_prev = 0i64;
    for k in 1..=n {
        let hi = (a_bound[k] - 1).min(hi_prev.saturating_add(bulk_reach));
        let lo = t[k];
        if hi >= lo {
            max_band = max_band.max((hi - lo + 1) as usize);
            hi_prev = hi;
        } else {
            break;
        }
    }
    SurvivalPlan {
        t,
        a_bound,
        jmax,
        max_band,
    }
}

/// P(τ⁽ᵃ⁾ > j) for j = 0..=n by exact lattice DP with a moving kill
/// threshold (see module docs). Lattice models only.
pub fn survival_dp(model: &IncrementModel, n: u64) -> Result<LadderTailTable> {
    let l = model.as_lattice()?;
    let n = usize::try_from(n).map_err(|_| Error::TooLarge("horizon exceeds usize".into()))?;
    let (p, q) = l.drift_ratio();
    let (p, q) = (p as i128, q as i128);
    let plan = survival_plan(l, n);
    let mut stepper = Stepper::new(l, plan.jmax, plan.max_band)?;
    let bulk_reach = if l.tail.is_some() {
        i64::MAX / 4
    } else {
        stepper.max_jump
    };

    let mut probs = vec![0.0; n + 1];
    probs[0] = 1.0;
    let mut state = vec![1.0f64];
    let mut lo = 0i64;
    let mut hi = 0i64;
    let mut absorber = 0.0f64;
    let mut band_total = 1.0f64;
    let mut diag = DpDiagnostics::default();
    let mut out: Vec<f64> = Vec::new();

    for k in 1..=n {
        if state.is_empty() {
            probs[k] = absorber;
            continue;
        }
        let (out_lo, clamped) = stepper.advance(&state, lo, &mut out);
        diag.clamped_negative += clamped;
        // Jumps beyond the materialised kernel land past the absorber
        // bound from every band site by construction of jmax.
        absorber += stepper.residual * band_total;
        let out_hi = out_lo + out.len() as i64 - 1;
        let tk = plan.t[k];
        let ak = plan.a_bound[k];
        let new_hi = (ak - 1).min(hi.saturating_add(bulk_reach));
        // Killed mass: sites below the threshold, with exact overshoot
        // value h·(s·q − k·p)/q.
        let kill_end = tk.min(out_hi + 1);
        for s in out_lo..kill_end {
            let m = out[(s - out_lo) as usize];
            if m == 0.0 {
                continue;
            }
            diag.killed += m;
            let overshoot = l.span * ((s as i128 * q - k as i128 * p) as f64) / q as f64;
            diag.e_s_tau_partial += m * overshoot;
            diag.e_tau_partial += m * k as f64;
        }
        // Absorbed mass: sites at or above the alive-for-good bound.
        if out_hi >= ak {
            let start = (ak.max(out_lo) - out_lo) as usize;
            absorber += kahan_sum(out[start..].iter().copied());
        }
        // Remaining band.
        if new_hi >= tk && tk <= out_hi && new_hi >= out_lo {
            let from = (tk.max(out_lo) - out_lo) as usize;
            let to = (new_hi.min(out_hi) - out_lo) as usize;
            state.clear();
            state.extend_from_slice(&out[from..=to]);
            lo = tk.max(out_lo);
            hi = new_hi.min(out_hi);
        } else {
            state.clear();
        }
        band_total = kahan_sum(state.iter().copied());
        probs[k] = band_total + absorber;
    }
    diag.absorbed_alive = absorber;
    let table = LadderTailTable {
        a: model.a(),
        model_hash: model.hash().to_string(),
        route: Route::SurvivalDp,
        probs,
        diagnostics: Some(diag),
    };
    table.validate()?;
    Ok(table)
}

/// Exact-rational survival DP for calibrating float error; bounded
/// lattice models with exact masses, n ≤ 64.
pub fn survival_dp_rational(model: &IncrementModel, n: u64) -> Result<Vec<BigRational>> {
    let l = model.as_lattice()?;
    if n > 64 {
        return Err(Error::TooLarge("rational DP is capped at n = 64".into()));
    }
    if l.tail.is_some() {
        return Err(Error::Unsupported(
            "rational DP needs a bounded lattice model".into(),
        ));
    }
    let atoms = l
        .exact_atoms()
        .ok_or_else(|| Error::Unsupported("rational DP needs exact masses".into()))?;
    let n = n as usize;
    let (p, q) = l.drift_ratio();
    let (p, q) = (p as i128, q as i128);
    let mut state: std::collections::BTreeMap<i64, BigRational> = std::collections::BTreeMap::new();
    state.insert(0, BigRational::from_integer(1.into()));
    let mut probs = Vec::with_capacity(n + 1);
    probs.push(BigRational::from_integer(1.into()));
    for k in 1..=n {
        let mut next: std::collections::BTreeMap<i64, BigRational> = std::collections::BTreeMap::new();
        for (s, m) in &state {
            for (j, mj) in atoms {
                let site = s + j;
                if (site as i128) * q >= (k as i128) * p {
                    let e = next.entry(site).or_insert_with(BigRational::zero);
                    *e += m * mj;
                }
            }
        }
        state = next;
        let mut total = BigRational::zero();
        for m in state.values() {
            total += m;
        }
        probs.push(total);
    }
    Ok(probs)
}

/// P(τ⁽ᵃ⁾ > j) by exhaustive enumeration of all support sequences;
/// |support|ⁿ is capped at 10⁸.
pub fn enumerate_bruteforce(model: &IncrementModel, n: u64) -> Result<LadderTailTable> {
    let l = model.as_lattice()?;
    if l.tail.is_some() {
        return Err(Error::Unsupported(
            "brute force needs a bounded lattice model".into(),
        ));
    }
    let n = n as usize;
    let paths = (l.atoms.len() as f64).powi(n as i32);
    if paths > 1e8 {
        return Err(Error::TooLarge(format!(
            "{}^{n} paths exceed the 1e8 enumeration guard",
            l.atoms.len()
        )));
    }
    let (p, q) = l.drift_ratio();
    let (p, q) = (p as i128, q as i128);
    // (sum, compensation) per depth: millions of leaf contributions
    // accumulate, so plain += would eat the oracle's precision budget.
    let mut acc = vec![(0.0f64, 0.0f64); n + 1];
    acc[0].0 = 1.0;
    // Depth-first over alive prefixes; each alive prefix of length k
    // contributes its probability to acc[k].
    fn dfs(
        atoms: &[(i64, f64)],
        p: i128,
        q: i128,
        depth: usize,
        n: usize,
        site: i64,
        prob: f64,
        acc: &mut [(f64, f64)],
    ) {
        if depth == n {
            return;
        }
        let k = depth + 1;
        for &(j, mj) in atoms {
            let s = site + j;
            if (s as i128) * q >= (k as i128) * p {
                let y = prob * mj;
                let (sum, comp) = acc[k];
                let t = sum + y;
                let dust = if sum.abs() >= y.abs() {
                    (sum - t) + y
                } else {
                    (y - t) + sum
                };
                acc[k] = (t, comp + dust);
                dfs(atoms, p, q, k, n, s, y, acc);
            }
        }
    }
    dfs(&l.atoms, p, q, 0, n, 0, 1.0, &mut acc);
    let table = LadderTailTable {
        a: model.a(),
        model_hash: model.hash().to_string(),
        route: Route::BruteForce,
        probs: acc.iter().map(|&(s, c)| s + c).collect(),
        diagnostics: None,
    };
    table.validate()?;
    Ok(table)
}

/// Marginal survival probabilities b_k = P(S_k⁽ᵃ⁾ ≥ 0), k = 1..=n, by
/// unconstrained convolution with an alive-for-good upper absorber.
pub fn marginal_nonneg_probs(model: &IncrementModel, n: u64) -> Result<Vec<f64>> {
    let l = model.as_lattice()?;
    let n = n as usize;
    let (p, q) = l.drift_ratio();
    let (p, q) = (p as i128, q as i128);
    let d = l.min_site();
    let plan = survival_plan(l, n);
    // No kill: the band floor is the reachability bound k·d.
    let mut jmax = plan.jmax;
    if l.tail.is_some() {
        let mut lo_prev = 0i64;
        for k in 1..=n {
            jmax = jmax.max(plan.a_bound[k] - lo_prev);
            lo_prev = (k as i64) * d;
        }
    }
    let mut max_band = 1usize;
    {
        let bulk_reach = if l.tail.is_some() { i64::MAX / 4 } else { jmax };
        let mut hi_prev = 0i64;
        for k in 1..=n {
            let hi = (plan.a_bound[k] - 1).min(hi_prev.saturating_add(bulk_reach));
            hi_prev = hi.max((k as i64) * d);
            let w = hi - (k as i64) * d + 1;
            if w > 0 {
                max_band = max_band.max(w as usize);
            }
        }
    }
    let mut stepper = Stepper::new(l, jmax, max_band)?;
    let bulk_reach = if l.tail.is_some() {
        i64::MAX / 4
    } else {
        stepper.max_jump
    };

    let mut b = vec![0.0f64; n];
    let mut state = vec![1.0f64];
    let mut lo = 0i64;
    let mut hi = 0i64;
    let mut absorber = 0.0f64;
    let mut band_total = 1.0f64;
    let mut out: Vec<f64> = Vec::new();
    for k in 1..=n {
        if state.is_empty() {
            b[k - 1] = absorber;
            continue;
        }
        let (out_lo, _) = stepper.advance(&state, lo, &mut out);
        absorber += stepper.residual * band_total;
        let out_hi = out_lo + out.len() as i64 - 1;
        let ak = plan.a_bound[k];
        let new_hi = (ak - 1).min(hi.saturating_add(bulk_reach));
        if out_hi >= ak {
            let start = (ak.max(out_lo) - out_lo) as usize;
            absorber += kahan_sum(out[start..].iter().copied());
        }
        if new_hi >= out_lo {
            let to = (new_hi.min(out_hi) - out_lo) as usize;
            state.clear();
            state.extend_from_slice(&out[..=to]);
            lo = out_lo;
            hi = new_hi.min(out_hi);
        } else {
            state.clear();
        }
        band_total = kahan_sum(state.iter().copied());
        // b_k = absorber + mass at sites with s·q ≥ k·p.
        let tk = ceil_div(k as i128 * p, q) as i64;
        let suffix = if tk <= hi && !state.is_empty() {
            let from = (tk.max(lo) - lo) as usize;
            kahan_sum(state[from..].iter().copied())
        } else {
            0.0
        };
        b[k - 1] = absorber + suffix;
    }
    Ok(b)
}

/// Zero-drift marginal upper tails P(S_n⁽⁰⁾ ≥ x) for each x in `xs`,
/// where S⁽⁰⁾ walks the zero-mean norming base of the model (feeds the
/// bound-domination checks).
pub fn base_marginal_upper(model: &IncrementModel, n: u64, xs: &[f64]) -> Result<Vec<f64>> {
    let l = model.as_lattice()?;
    let n = n as usize;
    if xs.is_empty() {
        return Ok(Vec::new());
    }
    let base = l.norming_base_model();
    let bl = base.as_lattice()?;
    let d = bl.min_site();
    let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let target = (x_max / bl.span - 1e-12).ceil() as i64;
    // Absorb when even the most negative continuation ends ≥ target.
    let a_bound: Vec<i64> = (0..=n)
        .map(|k| target - (n as i64 - k as i64) * d)
        .collect();
    let mut jmax = bl.max_bulk_site().max(1);
    if bl.tail.is_some() {
        let mut lo_prev = 0i64;
        for k in 1..=n {
            jmax = jmax.max(a_bound[k] - lo_prev);
            lo_prev = (k as i64) * d;
        }
    }
    let max_band = {
        let mut m = 1i64;
        for k in 0..=n {
            m = m.max(a_bound[k] - (k as i64) * d + 1);
        }
        m.max(1) as usize
    };
    let mut stepper = Stepper::new(bl, jmax, max_band)?;
    let mut state = vec![1.0f64];
    let mut lo = 0i64;
    let mut absorber = 0.0f64;
    let mut band_total = 1.0f64;
    let mut out: Vec<f64> = Vec::new();
    for k in 1..=n {
        if state.is_empty() {
            continue;
        }
        let (out_lo, _) = stepper.advance(&state, lo, &mut out);
        absorber += stepper.residual * band_total;
        let out_hi = out_lo + out.len() as i64 - 1;
        let ak = a_bound[k];
        if out_hi >= ak {
            let start = (ak.max(out_lo) - out_lo) as usize;
            absorber += kahan_sum(out[start..].iter().copied());
        }
        let new_hi = (ak - 1).min(out_hi);
        if new_hi >= out_lo {
            let to = (new_hi - out_lo) as usize;
            state.clear();
            state.extend_from_slice(&out[..=to]);
            lo = out_lo;
        } else {
            state.clear();
        }
        band_total = kahan_sum(state.iter().copied());
    }
    let mut result = Vec::with_capacity(xs.len());
    for &x in xs {
        let s_min = (x / bl.span - 1e-12).ceil() as i64;
        let from = s_min.max(lo);
        let suffix = if !state.is_empty() && from <= lo + state.len() as i64 - 1 {
            kahan_sum(state[(from - lo) as usize..].iter().copied())
        } else {
            0.0
        };
        result.push(absorber + suffix);
    }
    Ok(result)
}

/// n·P(τ>n) = Σ_{j=0}^{n−1} P(τ>j)·marginals[n−j], P(τ>0) = 1.
/// `marginals[i]` is P(S_{i+1}⁽ᵃ⁾ ≥ 0).
pub fn spitzer_recurrence(marginals: &[f64]) -> Result<Vec<f64>> {
    for (i, &b) in marginals.iter().enumerate() {
        if !(0.0..=1.0 + 1e-12).contains(&b) {
            return Err(Error::OutOfRange(format!(
                "marginal b_{} = {b} outside [0,1]",
                i + 1
            )));
        }
    }
    let n = marginals.len();
    let mut probs = Vec::with_capacity(n + 1);
    probs.push(1.0f64);
    for k in 1..=n {
        let mut acc = Kahan::new();
        for j in 0..k {
            acc.add(probs[j] * marginals[k - 1 - j]);
        }
        probs.push(acc.value() / k as f64);
    }
    Ok(probs)
}

/// Max coefficient discrepancy, up to order m, between the table and
/// the power-series expansion of exp{Σ_{k≤m} zᵏ·marginals[k−1]/k}.
pub fn genf_check(probs: &[f64], marginals: &[f64], m: usize) -> Result<f64> {
    if m >= probs.len() || m > marginals.len() {
        return Err(Error::OutOfRange(format!(
            "genf_check order {m} exceeds the table ({}) or marginals ({})",
            probs.len() - 1,
            marginals.len()
        )));
    }
    let mut inner = PowerSeries::zeros(m);
    for k in 1..=m {
        inner.c[k] = marginals[k - 1] / k as f64;
    }
    let series = inner.exp()?;
    let mut worst = 0.0f64;
    for (j, &c) in series.c.iter().enumerate() {
        worst = worst.max((c - probs[j]).abs());
    }
    Ok(worst)
}

/// Survival table of the weak ascending epoch τ₊ = min{k : S_k⁽ᵃ⁾ ≥ 0}:
/// P(τ₊ > k) for k = 0..=n. Requires a bounded lattice model with
/// strictly negative drift; P(τ₊ > n) ↓ P(τ₊ = ∞) = 1/Eτ.
pub struct AscendingTable {
    pub probs: Vec<f64>,
    /// upper bound on the alive mass misclassified by depth truncation
    pub leak_bound: f64,
}

/// Positive root h* of E e^{hX⁽ᵃ⁾} = 1 (Cramér/Lundberg root); governs
/// P(sup_k S_k⁽ᵃ⁾ ≥ x) ≤ e^{−h*x}.
pub fn lundberg_root(model: &IncrementModel) -> Result<f64> {
    let l = model.as_lattice()?;
    if l.tail.is_some() {
        return Err(Error::Unsupported("Lundberg root needs a bounded model".into()));
    }
    if model.a() <= 0.0 {
        return Err(Error::OutOfRange("Lundberg root needs drift a > 0".into()));
    }
    let g = |h: f64| -> f64 { model.mgf(h).map(|(m, _)| m - 1.0).unwrap_or(f64::NAN) };
    let top = l.max_bulk_site() as f64 * l.span - l.drift;
    if top <= 0.0 {
        return Err(Error::OutOfRange(
            "walk never moves up; no positive Lundberg root".into(),
        ));
    }
    let mut hi = 1.0 / l.span;
    let mut tries = 0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::NoConvergence("Lundberg root bracket not found".into()));
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn ascending_survival(model: &IncrementModel, n: u64) -> Result<AscendingTable> {
    let l = model.as_lattice()?;
    if l.tail.is_some() {
        return Err(Error::Unsupported(
            "ascending survival needs a bounded lattice model".into(),
        ));
    }
    let h_star = lundberg_root(model)?;
    // Mass at depth ≥ depth_cut below the kill line returns with
    // probability ≤ e^{−h*·depth·span} ≤ 1e−19; park it alive.
    let depth_cut = ((19.0 * std::f64::consts::LN_10) / (h_star * l.span)).ceil() as i64 + 2;
    let n = n as usize;
    let (p, q) = l.drift_ratio();
    let (p, q) = (p as i128, q as i128);
    let (kernel, _) = materialize_kernel(l, l.max_bulk_site())?;
    let min_jump = kernel.first().map(|&(s, _)| s).unwrap_or(0);
    let max_jump = kernel.last().map(|&(s, _)| s).unwrap_or(0);

    let mut probs = vec![0.0f64; n + 1];
    probs[0] = 1.0;
    let mut state = vec![1.0f64];
    let mut lo = 0i64;
    let mut deep = 0.0f64;
    let mut deep_inflow = 0.0f64;
    let mut out: Vec<f64> = Vec::new();
    for k in 1..=n {
        if state.is_empty() {
            probs[k] = deep;
            continue;
        }
        let out_lo = lo + min_jump;
        let span = (max_jump - min_jump) as usize + state.len();
        out.clear();
        out.resize(span, 0.0);
        for (i, &m) in state.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for &(j, mj) in &kernel {
                out[i + (j - min_jump) as usize] += m * mj;
            }
        }
        let out_hi = out_lo + out.len() as i64 - 1;
        // Alive strictly below the threshold: s·q < k·p.
        let hi_alive = (k as i128 * p - 1).div_euclid(q) as i64;
        let floor = hi_alive - depth_cut;
        // Mass below the floor: park alive (deep absorber).
        for s in out_lo..floor.min(out_hi + 1) {
            let m = out[(s - out_lo) as usize];
            deep += m;
            deep_inflow += m;
        }
        if floor <= out_hi && hi_alive >= out_lo {
            let from = (floor.max(out_lo) - out_lo) as usize;
            let to = (hi_alive.min(out_hi) - out_lo) as usize;
            let slice: Vec<f64> = out[from..=to].to_vec();
            state = slice;
            lo = floor.max(out_lo);
        } else {
            state.clear();
        }
        probs[k] = kahan_sum(state.iter().copied()) + deep;
    }
    let leak_bound = deep_inflow * (-h_star * depth_cut as f64 * l.span).exp();
    Ok(AscendingTable { probs, leak_bound })
}
