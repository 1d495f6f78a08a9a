use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulate::trial::{run_trial, TrialOutcome, TrialSpec};

/// Counts and the binomial estimate of the success probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchStats {
    pub n_trials: u64,
    pub successes: u64,
    pub errors: u64,
    pub inconclusive: u64,
    pub p_hat: f64,
    pub std_error: f64,
}

impl BatchStats {
    pub fn from_counts(successes: u64, errors: u64, inconclusive: u64) -> Self {
        let n = successes + errors + inconclusive;
        let p_hat = if n == 0 {
            0.0
        } else {
            successes as f64 / n as f64
        };
        let std_error = if n == 0 {
            0.0
        } else {
            (p_hat * (1.0 - p_hat) / n as f64).sqrt()
        };
        Self {
            n_trials: n,
            successes,
            errors,
            inconclusive,
            p_hat,
            std_error,
        }
    }

    /// Binomial standard deviation of the estimate if the true value is `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.n_trials.max(1) as f64).sqrt()
    }

    /// `|p̂ - p| ≤ k σ(p)`, with σ evaluated at the target.
    pub fn within(&self, p: f64, k: f64) -> bool {
        (self.p_hat - p).abs() <= k * self.sigma_at(p)
    }
}

#[derive(Default)]
struct Tally {
    counts: [u64; 3],
    first_error: Option<(u64, Error)>,
}

impl Tally {
    fn record(mut self, index: u64, r: Result<TrialOutcome>) -> Self {
        match r {
            Ok(TrialOutcome::Success) => self.counts[0] += 1,
            Ok(TrialOutcome::Error) => self.counts[1] += 1,
            Ok(TrialOutcome::Inconclusive) => self.counts[2] += 1,
            Err(e) => {
                if self.first_error.as_ref().is_none_or(|(i, _)| index < *i) {
                    self.first_error = Some((index, e));
                }
            }
        }
        self
    }

    #[cfg(feature = "parallel")]
    fn merge(mut self, other: Tally) -> Self {
        for k in 0..3 {
            self.counts[k] += other.counts[k];
        }
        if let Some((i, e)) = other.first_error {
            if self.first_error.as_ref().is_none_or(|(j, _)| i < *j) {
                self.first_error = Some((i, e));
            }
        }
        self
    }

    fn finish(self) -> Result<BatchStats> {
        match self.first_error {
            Some((_, e)) => Err(e),
            None => Ok(BatchStats::from_counts(
                self.counts[0],
                self.counts[1],
                self.counts[2],
            )),
        }
    }
}

fn one(spec: &TrialSpec, seed: u64, index: u64) -> Result<TrialOutcome> {
    run_trial(spec, seed, index).map(|r| r.outcome())
}

pub fn run_batch_sequential(spec: &TrialSpec, n: u64, seed: u64) -> Result<BatchStats> {
    (0..n)
        .fold(Tally::default(), |t, i| t.record(i, one(spec, seed, i)))
        .finish()
}

/// Runs `n` trials on `workers` threads. Trial `i` always uses stream `i`
/// of `seed`, so the counts do not depend on the worker count; if several
/// trials fail, the error of the lowest index is returned.
#[cfg(feature = "parallel")]
pub fn run_batch(spec: &TrialSpec, n: u64, seed: u64, workers: usize) -> Result<BatchStats> {
    use rayon::prelude::*;
    if workers <= 1 {
        return run_batch_sequential(spec, n, seed);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| {
        (0..n)
            .into_par_iter()
            .fold(Tally::default, |t, i| t.record(i, one(spec, seed, i)))
            .reduce(Tally::default, Tally::merge)
    })
    .finish()
}

/// Sequential build: `workers` is ignored.
#[cfg(not(feature = "parallel"))]
pub fn run_batch(spec: &TrialSpec, n: u64, seed: u64, _workers: usize) -> Result<BatchStats> {
    run_batch_sequential(spec, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minerr::{global_povm, pmax_global, Priors};

    #[test]
    fn worker_count_does_not_change_counts() {
        let priors = Priors::from_eta1(0.4).unwrap();
        let spec = TrialSpec::global(global_povm(2, priors).unwrap(), 2, priors).unwrap();
        let a = run_batch(&spec, 2000, 17, 1).unwrap();
        let b = run_batch(&spec, 2000, 17, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_trials, 2000);
    }

    #[test]
    fn estimate_near_optimum() {
        let priors = Priors::equal();
        let spec = TrialSpec::global(global_povm(2, priors).unwrap(), 2, priors).unwrap();
        let s = run_batch(&spec, 20_000, 5, 4).unwrap();
        assert!(s.within(pmax_global(2, priors), 3.0), "{s:?}");
    }

    #[test]
    fn empty_batch() {
        let s = BatchStats::from_counts(0, 0, 0);
        assert_eq!(s.p_hat, 0.0);
    }
}
