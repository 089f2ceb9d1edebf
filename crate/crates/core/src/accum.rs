//! Compensated accumulators used for pooled, order-insensitive aggregation.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
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

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let s: CompensatedSum = [1e16, 1.0, -1e16, 1.0].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn merge_order_insensitive() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 * 1e-3 + 1e6 * (i % 3) as f64).collect();
        let whole: CompensatedSum = xs.iter().copied().collect();
        let mut parts: Vec<CompensatedSum> = xs.chunks(37).map(|c| c.iter().copied().collect()).collect();
        parts.reverse();
        let mut merged = CompensatedSum::default();
        for p in &parts {
            merged.merge(p);
        }
        assert!((whole.value() - merged.value()).abs() <= 1e-9 * whole.value().abs());
    }
}
