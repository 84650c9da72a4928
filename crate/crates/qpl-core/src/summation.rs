//! Compensated accumulation.
//!
//! Every long floating-point sum in the crate (S₁, S₂, Chebyshev counts,
//! second moments) runs through a Neumaier accumulator in a fixed index
//! order. That makes sweeps reproducible bit-for-bit regardless of how the
//! surrounding work is sharded across threads: workers own disjoint index
//! ranges and the final reduction replays per-index results in order.

use num_complex::Complex64;

/// Neumaier (improved Kahan) compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one term.
    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// The compensated total.
    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Componentwise compensated sum for complex terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: Complex64) {
        self.re.add(value.re);
        self.im.add(value.im);
    }

    #[inline]
    pub fn total(&self) -> Complex64 {
        Complex64::new(self.re.total(), self.im.total())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_beats_naive_on_ill_conditioned_input() {
        // 1 + 1e-16 added 10^7 times: naive f64 drops every small term.
        let mut c = CompensatedSum::new();
        c.add(1.0);
        for _ in 0..10_000_000 {
            c.add(1e-16);
        }
        let exact = 1.0 + 1e-16 * 1e7;
        assert!((c.total() - exact).abs() < 1e-12, "got {}", c.total());
    }

    #[test]
    fn complex_sum_matches_componentwise() {
        let mut s = ComplexSum::new();
        for j in 0..1000 {
            s.add(Complex64::new(j as f64 * 0.1, -(j as f64) * 0.2));
        }
        let n = 999.0 * 1000.0 / 2.0;
        let t = s.total();
        assert!((t.re - 0.1 * n).abs() < 1e-9);
        assert!((t.im + 0.2 * n).abs() < 1e-9);
    }
}
