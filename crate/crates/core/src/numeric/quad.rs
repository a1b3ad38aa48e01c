//! Deterministic quadrature.
//!
//! Two workhorses are enough for the whole crate:
//!
//! * adaptive Simpson with a Richardson error estimate (`|S₂−S₁|/15`)
//!   for generic smooth-after-substitution integrands, failing loudly
//!   when the depth budget runs out;
//! * composite 16-point Gauss–Legendre panels with a caller-chosen,
//!   deterministic panel count for oscillatory integrands (stable-law
//!   inversion) where adaptivity would make node placement
//!   data-dependent and runs harder to reproduce.
//!
//! Both reject NaN/∞ integrand values instead of silently propagating.

use std::sync::OnceLock;

use crate::error::{Error, Result};

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() || !frm.is_finite() {
        return Err(Error::NoConvergence(format!(
            "integrand not finite near [{lm}, {rm}]"
        )));
    }
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::NoConvergence(format!(
            "adaptive Simpson depth exhausted on [{a}, {b}] (residual {delta:.3e})"
        )));
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Adaptive Simpson on [a, b] with absolute tolerance `tol`.
///
/// `max_depth` bounds the recursion (interval width shrinks by 2^depth);
/// hitting the bound is reported as non-convergence rather than returning
/// a low-quality value.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::OutOfRange(
            "adaptive Simpson requires finite endpoints".into(),
        ));
    }
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    if !fa.is_finite() || !fm.is_finite() || !fb.is_finite() {
        return Err(Error::NoConvergence(
            "integrand not finite at initial nodes".into(),
        ));
    }
    let whole = simpson(fa, fm, fb, a, b);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

/// Abscissae (positive half) and weights of the 16-point Gauss–Legendre
/// rule on [−1, 1], computed once by Newton iteration on P₁₆.
fn gl16_nodes() -> &'static [(f64, f64); 8] {
    static NODES: OnceLock<[(f64, f64); 8]> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = 16usize;
        let mut out = [(0.0, 0.0); 8];
        for (i, slot) in out.iter_mut().enumerate() {
            // Tricomi-style initial guess for the i-th positive root.
            let k = i + 1; // roots ordered from the outside in
            let mut x = (std::f64::consts::PI * (k as f64 - 0.25) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre16(x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-17 {
                    break;
                }
            }
            let (_, dp) = legendre16(x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            *slot = (x, w);
        }
        out
    })
}

/// P₁₆(x) and P₁₆′(x) by the three-term recurrence.
fn legendre16(x: f64) -> (f64, f64) {
    let mut p_prev = 1.0f64;
    let mut p = x;
    for k in 2..=16u32 {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let dp = 16.0 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Composite 16-point Gauss–Legendre quadrature over `panels` equal
/// subintervals of [a, b]. Node placement is a pure function of
/// (a, b, panels): reruns are bit-identical.
pub fn gauss_legendre_16<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> Result<f64> {
    let panels = panels.max(1);
    let nodes = gl16_nodes();
    let h = (b - a) / panels as f64;
    let mut acc = super::Kahan::new();
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        for &(x, w) in nodes.iter() {
            let f1 = f(mid + half * x);
            let f2 = f(mid - half * x);
            if !f1.is_finite() || !f2.is_finite() {
                return Err(Error::NoConvergence(format!(
                    "integrand not finite in panel {p} of [{a}, {b}]"
                )));
            }
            acc.add(w * half * f1);
            acc.add(w * half * f2);
        }
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_is_nearly_exact() {
        let v = adaptive_simpson(&|x: f64| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12, 40).unwrap();
        // ∫₀² (x³−2x+1) dx = 4 − 4 + 2 = 2
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn simpson_gaussian_tail() {
        let v = adaptive_simpson(&|x: f64| (-0.5 * x * x).exp(), 0.0, 8.0, 1e-12, 48).unwrap();
        assert!((v - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn simpson_reports_depth_exhaustion() {
        // |x − 1/3|^(−1/2) is integrable but too singular for depth 4.
        let r = adaptive_simpson(&|x: f64| (x - 1.0 / 3.0).abs().powf(-0.5), 0.0, 1.0, 1e-12, 4);
        assert!(r.is_err());
    }

    #[test]
    fn gl16_nodes_integrate_degree_31_exactly() {
        // The 16-point rule is exact through degree 31.
        let v = gauss_legendre_16(&|x: f64| x.powi(30), -1.0, 1.0, 1).unwrap();
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn gl16_composite_oscillatory() {
        // ∫₀^{10π} sin x dx = 0; one panel per half-oscillation suffices.
        let v = gauss_legendre_16(&|x: f64| x.sin(), 0.0, 10.0 * std::f64::consts::PI, 20).unwrap();
        assert!(v.abs() < 1e-12);
    }
}
