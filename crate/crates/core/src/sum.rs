//! Order-fixed compensated summation.
//!
//! All quadrature reductions in the crate go through [`NeumaierSum`] in node
//! index order, so results do not depend on how node values were produced.

use nalgebra::Complex;

/// Kahan–Babuška (Neumaier) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

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

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of a slice in index order.
pub fn compensated_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<NeumaierSum>().value()
}

/// Compensated weighted sum `Σ w_i v_i` in index order.
pub fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), values.len());
    weights
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .collect::<NeumaierSum>()
        .value()
}

/// Compensated weighted sum of complex values; real and imaginary parts are
/// accumulated independently.
pub fn weighted_sum_complex(weights: &[f64], values: &[Complex<f64>]) -> Complex<f64> {
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for (w, v) in weights.iter().zip(values) {
        re.add(w * v.re);
        im.add(w * v.im);
    }
    Complex::new(re.value(), im.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let values = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(&values), 2.0);
        let naive: f64 = values.iter().sum();
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn many_small_terms() {
        let values = vec![0.1; 10_000];
        assert!((compensated_sum(&values) - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn complex_parts_are_independent() {
        let w = [1.0, 2.0];
        let v = [Complex::new(1.0, -1.0), Complex::new(0.5, 3.0)];
        let s = weighted_sum_complex(&w, &v);
        assert_eq!(s, Complex::new(2.0, 5.0));
    }
}
