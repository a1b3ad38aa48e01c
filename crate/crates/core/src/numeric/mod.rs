//! Low-level numerical kernels shared by every route: compensated
//! summation, deterministic quadrature, truncated power series.
//!
//! Everything here is pure and allocation-light; the probabilistic
//! semantics live in the higher modules.

pub mod quad;
pub mod series;
pub mod special;

/// Neumaier-compensated accumulator.
///
/// The running compensation also catches the case where the new term is
/// larger than the partial sum, which plain Kahan misses; cost is one
/// extra branch per add.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of terms.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = Kahan::new();
    for x in iter {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_ill_conditioned_sum() {
        // 1 + 1e-16 added 10^7 times: naive summation loses the small terms.
        let mut k = Kahan::new();
        k.add(1.0);
        for _ in 0..10_000_000 {
            k.add(1e-16);
        }
        let exact = 1.0 + 1e-16 * 1e7;
        assert!((k.value() - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn kahan_handles_large_late_terms() {
        let mut k = Kahan::new();
        for _ in 0..1000 {
            k.add(1e-3);
        }
        k.add(1e12);
        assert!((k.value() - (1.0 + 1e12)).abs() < 1e-3);
    }
}
