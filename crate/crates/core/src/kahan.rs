//! Compensated (Kahan–Neumaier) summation.
//!
//! Every real or complex reduction in this crate that feeds a reported
//! number goes through these accumulators in a fixed order, so results are
//! bit-stable across runs and thread counts.

use num_complex::Complex64;

/// Neumaier variant of Kahan summation for `f64`.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Componentwise compensated sum for complex values.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanComplex {
    re: KahanSum,
    im: KahanSum,
}

impl KahanComplex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Sum an iterator of reals with compensation, in iteration order.
pub fn kahan_sum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Sum an iterator of complex values with compensation, in iteration order.
pub fn kahan_sum_complex(it: impl IntoIterator<Item = Complex64>) -> Complex64 {
    let mut acc = KahanComplex::new();
    for z in it {
        acc.add(z);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensates_cancellation() {
        // 1 + 1e100 - 1e100 + 1 = 2 exactly under Neumaier summation.
        let s = kahan_sum([1.0, 1e100, -1e100, 1.0]);
        assert_eq!(s, 2.0);
    }

    #[test]
    fn matches_naive_on_benign_input() {
        let xs: Vec<f64> = (1..=1000).map(|n| 1.0 / n as f64).collect();
        let naive: f64 = xs.iter().sum();
        let comp = kahan_sum(xs.iter().copied());
        assert!((naive - comp).abs() < 1e-12);
    }
}
