//! Truncated power series over f64.
//!
//! A series is a coefficient vector c[0..=m] representing
//! Σ c_k x^k + O(x^{m+1}); all arithmetic truncates at the common order
//! m, so valuation-raising operations (exp of a series with zero
//! constant term, composition with such a series) are exact at the
//! retained orders. This is all the machinery needed for the
//! generating-function identity check and for inverting the saddle
//! equation order by order.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries {
    /// c[k] is the coefficient of x^k; the length fixes the truncation order.
    pub c: Vec<f64>,
}

impl PowerSeries {
    pub fn zeros(order: usize) -> Self {
        Self {
            c: vec![0.0; order + 1],
        }
    }

    pub fn from_coeffs(c: Vec<f64>) -> Self {
        assert!(!c.is_empty(), "series needs at least the constant term");
        Self { c }
    }

    /// x itself, truncated at `order`.
    pub fn identity(order: usize) -> Self {
        let mut s = Self::zeros(order);
        if order >= 1 {
            s.c[1] = 1.0;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    fn check_same_order(&self, other: &Self) {
        assert_eq!(
            self.c.len(),
            other.c.len(),
            "power-series arithmetic requires a common truncation order"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_same_order(other);
        Self {
            c: self
                .c
                .iter()
                .zip(&other.c)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_same_order(other);
        Self {
            c: self
                .c
                .iter()
                .zip(&other.c)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            c: self.c.iter().map(|a| a * s).collect(),
        }
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Self) -> Self {
        self.check_same_order(other);
        let m = self.order();
        let mut out = vec![0.0; m + 1];
        for (k, slot) in out.iter_mut().enumerate() {
            let mut acc = super::Kahan::new();
            for j in 0..=k {
                acc.add(self.c[j] * other.c[k - j]);
            }
            *slot = acc.value();
        }
        Self { c: out }
    }

    /// exp of a series with zero constant term: Σ_{j} self^j / j!.
    /// Terms beyond j = order vanish because self has valuation ≥ 1.
    pub fn exp(&self) -> Result<Self> {
        if self.c[0] != 0.0 {
            return Err(Error::OutOfRange(
                "series exp requires a zero constant term".into(),
            ));
        }
        let m = self.order();
        let mut acc = Self::zeros(m);
        acc.c[0] = 1.0;
        let mut term = acc.clone();
        for j in 1..=m {
            term = term.mul(self).scale(1.0 / j as f64);
            acc = acc.add(&term);
        }
        Ok(acc)
    }

    /// self ∘ g for g with zero constant term, by Horner in the series ring.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        self.check_same_order(g);
        if g.c[0] != 0.0 {
            return Err(Error::OutOfRange(
                "series composition requires the inner constant term to vanish".into(),
            ));
        }
        let m = self.order();
        let mut out = Self::zeros(m);
        for k in (0..=m).rev() {
            out = out.mul(g);
            out.c[0] += self.c[k];
        }
        Ok(out)
    }

    /// Horner evaluation at a scalar point.
    pub fn eval(&self, x: f64) -> f64 {
        let mut v = 0.0;
        for &ck in self.c.iter().rev() {
            v = v * x + ck;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_truncates_consistently() {
        // (1+x)² = 1 + 2x + x²
        let s = PowerSeries::from_coeffs(vec![1.0, 1.0, 0.0]);
        let sq = s.mul(&s);
        assert_eq!(sq.c, vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn exp_matches_scalar_exp_coefficients() {
        // exp(x) coefficients 1/k!
        let x = PowerSeries::identity(10);
        let e = x.exp().unwrap();
        let mut fact = 1.0;
        for k in 0..=10usize {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((e.c[k] - 1.0 / fact).abs() < 1e-15);
        }
    }

    #[test]
    fn exp_log_roundtrip_via_composition() {
        // log(1+x) = Σ (−1)^{k+1} x^k / k; exp∘log(1+x) − 1 = x.
        let m = 12;
        let mut log1p = PowerSeries::zeros(m);
        for k in 1..=m {
            log1p.c[k] = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
        }
        let e = log1p.exp().unwrap();
        for k in 0..=m {
            let expect = if k <= 1 { 1.0 } else { 0.0 };
            assert!(
                (e.c[k] - expect).abs() < 1e-13,
                "coefficient {k} was {}",
                e.c[k]
            );
        }
    }

    #[test]
    fn compose_evaluates_like_nested_eval() {
        let f = PowerSeries::from_coeffs(vec![2.0, -1.0, 0.5, 0.0, 0.0]);
        let mut g = PowerSeries::zeros(4);
        g.c[1] = 0.3;
        g.c[2] = -0.2;
        let h = f.compose(&g).unwrap();
        // For small x the truncation error is O(x^5).
        let x = 0.01;
        let direct = f.eval(g.eval(x));
        assert!((h.eval(x) - direct).abs() < 1e-12);
    }
}
