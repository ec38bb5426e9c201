//! Seeded, worker-count invariant trial harness and batch-means errors.
//!
//! Trial `t` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `t`, so
//! every trial sees the same random numbers whatever thread runs it. Trial
//! results are collected in trial order and reduced sequentially.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Number of batches used for standard errors.
pub const BATCHES: usize = 100;

/// Trial count, master seed and worker count for an estimator run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MonteCarlo {
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
}

impl MonteCarlo {
    pub fn new(trials: usize, seed: u64, workers: usize) -> Result<Self> {
        if trials == 0 {
            return Err(Error::usage("trials must be at least 1"));
        }
        if workers == 0 {
            return Err(Error::usage("workers must be at least 1"));
        }
        Ok(MonteCarlo { trials, seed, workers })
    }

    /// Segments each trial is cut into so that there are at least
    /// [`BATCHES`] segments overall.
    pub fn segments_per_trial(&self) -> usize {
        BATCHES.div_ceil(self.trials)
    }

    /// Runs `trial(t, rng)` for every trial on `workers` threads and
    /// returns the results in trial order.
    pub fn run<T, F>(&self, trial: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::usage(format!("cannot start {} workers: {e}", self.workers)))?;
        Ok(pool.install(|| {
            (0..self.trials)
                .into_par_iter()
                .map(|t| trial(t, &mut trial_rng(self.seed, t)))
                .collect()
        }))
    }
}

/// Generator for trial `t` under master seed `seed`.
pub fn trial_rng(seed: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

/// Estimate with a batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Ratio `sum num / sum den` over segments `(num, den)` given in a fixed
/// order. Segments are grouped into [`BATCHES`] contiguous batches and the
/// error is the delta-method standard error of the ratio over batch totals.
pub fn ratio_estimate(segments: &[(f64, f64)], trials: usize, seed: u64) -> RateEstimate {
    let (num, den) = segments
        .iter()
        .fold((0.0, 0.0), |(a, b), &(n, d)| (a + n, b + d));
    let estimate = if den > 0.0 { num / den } else { 0.0 };
    let batches = BATCHES.min(segments.len());
    let std_error = if batches < 2 || den <= 0.0 {
        0.0
    } else {
        let mut totals = vec![(0.0, 0.0); batches];
        for (i, &(n, d)) in segments.iter().enumerate() {
            let b = i * batches / segments.len();
            totals[b].0 += n;
            totals[b].1 += d;
        }
        let bf = batches as f64;
        let mean_den = den / bf;
        let ss: f64 = totals
            .iter()
            .map(|&(n, d)| {
                let r = n - estimate * d;
                r * r
            })
            .sum();
        (ss / (bf - 1.0)).sqrt() / mean_den / bf.sqrt()
    };
    RateEstimate {
        estimate,
        std_error,
        trials,
        seed,
    }
}

/// Segment index of `pos` when `len` positions are cut into `segments`.
#[inline]
pub fn segment_of(pos: usize, len: usize, segments: usize) -> usize {
    ((pos as u128 * segments as u128) / len.max(1) as u128) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = trial_rng(7, 3).random();
        let b: u64 = trial_rng(7, 3).random();
        let c: u64 = trial_rng(7, 4).random();
        let d: u64 = trial_rng(8, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn results_do_not_depend_on_workers() {
        let f = |t: usize, rng: &mut ChaCha8Rng| (t, rng.random::<u64>());
        let one = MonteCarlo::new(37, 11, 1).unwrap().run(f).unwrap();
        let four = MonteCarlo::new(37, 11, 4).unwrap().run(f).unwrap();
        assert_eq!(one, four);
        assert!(one.iter().enumerate().all(|(i, &(t, _))| i == t));
    }

    #[test]
    fn segments_cover_batches() {
        for trials in [1, 3, 10, 99, 100, 250] {
            let mc = MonteCarlo::new(trials, 0, 1).unwrap();
            assert!(mc.segments_per_trial() * trials >= BATCHES);
        }
        assert!(MonteCarlo::new(0, 0, 1).is_err());
        assert!(MonteCarlo::new(1, 0, 0).is_err());
    }

    #[test]
    fn ratio_error_matches_iid_mean() {
        // Bernoulli(0.3) indicators in 10^4 unit segments
        let mut rng = trial_rng(1, 0);
        let segs: Vec<(f64, f64)> = (0..10_000)
            .map(|_| (if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 }, 1.0))
            .collect();
        let r = ratio_estimate(&segs, 1, 1);
        let iid = (0.3f64 * 0.7 / 10_000.0).sqrt();
        assert!((r.estimate - 0.3).abs() < 4.0 * iid);
        assert!(r.std_error > 0.7 * iid && r.std_error < 1.3 * iid);
    }

    #[test]
    fn doubling_samples_halves_variance() {
        let draw = |n: usize, seed: u64| {
            let mut rng = trial_rng(seed, 0);
            let segs: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), 1.0)).collect();
            ratio_estimate(&segs, 1, seed).std_error
        };
        let ratio = draw(20_000, 5).powi(2) / draw(40_000, 6).powi(2);
        // batch-means variance has about 99 degrees of freedom
        assert!(ratio > 2.0 * 0.55 && ratio < 2.0 * 1.8, "{ratio}");
    }

    #[test]
    fn segment_indices() {
        assert_eq!(segment_of(0, 100, 10), 0);
        assert_eq!(segment_of(99, 100, 10), 9);
        assert_eq!(segment_of(50, 100, 1), 0);
    }
}
