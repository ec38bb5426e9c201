//! Entropy utilities in bits.

use crate::error::{Error, Result};

pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `p * log2(p)` with `0 log 0 = 0`.
#[inline]
pub fn xlog2x(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

/// Binary entropy without argument validation; callers guarantee `p` in [0, 1].
#[inline]
pub(crate) fn h2(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}

pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(h2(p))
}

/// Shannon entropy of a probability vector (outcome labels are irrelevant).
pub fn entropy_of_distribution<I>(weights: I) -> Result<f64>
where
    I: IntoIterator<Item = f64>,
{
    let mut total = CompensatedSum::new();
    let mut acc = CompensatedSum::new();
    for w in weights {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::domain(format!("invalid probability weight {w}")));
        }
        total.add(w);
        acc.add(-xlog2x(w));
    }
    if (total.value() - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "weights sum to {} instead of 1",
            total.value()
        )));
    }
    Ok(acc.value())
}

/// `-sum p log2 p` over a set of masses that need not sum to one.
pub fn entropy_of_masses<I>(masses: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    masses.into_iter().map(|p| -xlog2x(p)).collect::<CompensatedSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // -(1/3)log2(1/3) - (2/3)log2(2/3) = log2(3) - 2/3
        let direct = 3f64.log2() - 2.0 / 3.0;
        assert!((binary_entropy(1.0 / 3.0).unwrap() - 0.918296).abs() < 1e-6);
        assert!((binary_entropy(1.0 / 3.0).unwrap() - direct).abs() < 1e-15);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn distribution_entropy_values() {
        assert_eq!(entropy_of_distribution([0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(entropy_of_distribution([1.0]).unwrap(), 0.0);
        let a = 0.1;
        let three = entropy_of_distribution([1.0 - a, a / 2.0, a / 2.0]).unwrap();
        assert!((three - (h2(a) + a)).abs() < 1e-12);
        assert!((three - 0.568996).abs() < 1e-6);
        assert!(entropy_of_distribution([0.5, 0.6]).is_err());
        assert!(entropy_of_distribution([1.5, -0.5]).is_err());
        assert_eq!(entropy_of_distribution([0.25, 0.75, 0.0]).unwrap(), h2(0.25));
    }

    #[test]
    fn uniform_is_exact() {
        for k in 0..=20u32 {
            let m = 1usize << k;
            let h = entropy_of_distribution(std::iter::repeat_n(1.0 / m as f64, m)).unwrap();
            assert!((h - k as f64).abs() < 1e-12, "k={k} h={h}");
        }
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1e-12)).abs() < 1e-20);
    }

    proptest! {
        #[test]
        fn binary_entropy_symmetric(p in 0.0f64..=1.0) {
            let a = binary_entropy(p).unwrap();
            let b = binary_entropy(1.0 - p).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-15).contains(&a));
        }
    }
}
