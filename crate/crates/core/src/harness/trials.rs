//! Seeded trial orchestration.
//!
//! Every trial draws from ChaCha streams keyed by `(seed, purpose, trial)`, so
//! a trial's randomness does not depend on which worker runs it or in what
//! order. Results are collected by trial index.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Named randomness purpose inside a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream(pub u64);

impl Stream {
    pub const DEPLOYMENT: Stream = Stream(1);
    pub const BLOCKAGE: Stream = Stream(2);
    pub const FADING: Stream = Stream(3);
    pub const SUB_BANDS: Stream = Stream(4);
    pub const USERS: Stream = Stream(5);
    pub const SATELLITES: Stream = Stream(6);
    pub const HAPS: Stream = Stream(7);
    pub const TABLES: Stream = Stream(8);

    /// A derived stream, e.g. one per sweep point.
    pub fn child(self, index: u64) -> Stream {
        Stream(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D))))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for `(seed, purpose, index)`.
pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream.0)));
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    Threads(usize),
    /// Rayon's global pool.
    #[default]
    Auto,
}

impl Parallelism {
    /// `0` means auto, `1` sequential.
    pub fn from_threads(n: usize) -> Self {
        match n {
            0 => Parallelism::Auto,
            1 => Parallelism::Sequential,
            n => Parallelism::Threads(n),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrialContext {
    pub seed: u64,
    pub index: u64,
}

impl TrialContext {
    pub fn rng(&self, stream: Stream) -> ChaCha8Rng {
        stream_rng(self.seed, stream, self.index)
    }
}

#[derive(Debug, Clone)]
pub struct TrialOutcomes<T> {
    /// One slot per trial; `None` for trials that panicked.
    pub results: Vec<Option<T>>,
    pub failures: usize,
}

impl<T> TrialOutcomes<T> {
    pub fn successes(&self) -> impl Iterator<Item = &T> {
        self.results.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }
}

/// Run `trials` independent trials of `f`.
///
/// A panicking trial is recorded as failed and the run continues.
pub fn run_trials<T, F>(seed: u64, trials: u64, parallelism: Parallelism, f: F) -> Result<TrialOutcomes<T>>
where
    T: Send,
    F: Fn(&TrialContext) -> T + Sync,
{
    if trials == 0 {
        return Err(Error::config("trials", "need at least one trial"));
    }
    let one = |index: u64| catch_unwind(AssertUnwindSafe(|| f(&TrialContext { seed, index }))).ok();
    let results: Vec<Option<T>> = match parallelism {
        Parallelism::Sequential => (0..trials).map(one).collect(),
        Parallelism::Auto => (0..trials).into_par_iter().map(one).collect(),
        Parallelism::Threads(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?;
            pool.install(|| (0..trials).into_par_iter().map(one).collect())
        }
    };
    let failures = results.iter().filter(|r| r.is_none()).count();
    Ok(TrialOutcomes { results, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draw(ctx: &TrialContext) -> u64 {
        ctx.rng(Stream::DEPLOYMENT).random()
    }

    #[test]
    fn same_results_for_any_parallelism() {
        let a = run_trials(42, 64, Parallelism::Sequential, draw).unwrap();
        let b = run_trials(42, 64, Parallelism::Threads(3), draw).unwrap();
        let c = run_trials(42, 64, Parallelism::Auto, draw).unwrap();
        assert_eq!(a.results, b.results);
        assert_eq!(a.results, c.results);
    }

    #[test]
    fn single_trial_sequential_equals_parallel() {
        let a = run_trials(7, 1, Parallelism::Sequential, draw).unwrap();
        let b = run_trials(7, 1, Parallelism::Threads(2), draw).unwrap();
        assert_eq!(a.results, b.results);
    }

    #[test]
    fn streams_differ() {
        let mut a = stream_rng(1, Stream::DEPLOYMENT, 0);
        let mut b = stream_rng(1, Stream::BLOCKAGE, 0);
        let mut c = stream_rng(1, Stream::DEPLOYMENT, 1);
        let (x, y, z): (u64, u64, u64) = (a.random(), b.random(), c.random());
        assert_ne!(x, y);
        assert_ne!(x, z);
        assert_ne!(Stream::BLOCKAGE.child(0), Stream::BLOCKAGE.child(1));
    }

    #[test]
    fn panicking_trial_is_counted_not_fatal() {
        let prev = std::panic::take_hook();
        std::panic::set_hook(Box::new(|_| {}));
        let out = run_trials(1, 10, Parallelism::Sequential, |ctx| {
            if ctx.index == 3 {
                panic!("boom");
            }
            ctx.index
        })
        .unwrap();
        std::panic::set_hook(prev);
        assert_eq!(out.failures, 1);
        assert!(out.results[3].is_none());
        assert_eq!(out.successes().count(), 9);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(run_trials(1, 0, Parallelism::Sequential, draw).is_err());
    }
}
