//! Seed derivation and block-parallel Monte Carlo with a fixed reduction order.
//!
//! Every random stream is a `ChaCha8` stream derived from a master seed, a
//! domain tag and a counter, so results depend only on those three values and
//! never on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Samples per Monte Carlo block.
pub const BLOCK_SIZE: u64 = 1 << 15;

/// Domain tags keep streams used for different purposes disjoint.
pub mod domain {
    pub const BALL_VOLUME: u64 = 1;
    pub const REGION_VOLUME: u64 = 2;
    pub const NORM_BALL: u64 = 3;
    pub const OVERLAP: u64 = 4;
    pub const HAAR_POINTS: u64 = 5;
    pub const METRIC_PAIRS: u64 = 6;
}

pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mixed = seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(index);
    rng
}

/// Runs `n` samples in blocks of [`BLOCK_SIZE`]; block `i` gets
/// `stream(seed, domain, i)` and its sample count. Output is in block order.
pub fn run_blocks<T, F>(n: u64, seed: u64, domain: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    let blocks = n.div_ceil(BLOCK_SIZE);
    (0..blocks)
        .into_par_iter()
        .map(|i| {
            let len = BLOCK_SIZE.min(n - i * BLOCK_SIZE);
            f(&mut stream(seed, domain, i), len)
        })
        .collect()
}

/// Running first and second moments of a Monte Carlo estimator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(mut self, other: Moments) -> Moments {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let var = (self.sum_sq / n - self.mean().powi(2)).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

impl VolumeEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            n_samples: 0,
        }
    }

    /// `scale * mean` of the moments.
    pub fn from_moments(m: &Moments, scale: f64) -> Self {
        Self {
            value: scale * m.mean(),
            stderr: scale * m.stderr(),
            n_samples: m.n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn blocks_are_independent_of_thread_count() {
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                run_blocks(200_000, 7, 1, |rng, len| {
                    let mut m = Moments::default();
                    for _ in 0..len {
                        m.push(rng.random::<f64>());
                    }
                    m
                })
                .into_iter()
                .fold(Moments::default(), Moments::merge)
            })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.sum.to_bits(), b.sum.to_bits());
        assert_eq!(a.n, 200_000);
        assert!((a.mean() - 0.5).abs() < 0.01);
    }

    #[test]
    fn streams_differ_by_domain_and_index() {
        let x: u64 = stream(1, 1, 0).random();
        assert_ne!(x, stream(1, 2, 0).random::<u64>());
        assert_ne!(x, stream(1, 1, 1).random::<u64>());
        assert_eq!(x, stream(1, 1, 0).random::<u64>());
    }
}
