//! Seeded random streams.
//!
//! Every (seed, thread, purpose) triple gets its own ChaCha8 stream: the key
//! comes from the run seed and the 64-bit stream id encodes thread and
//! purpose. Adding a thread or a process never perturbs another stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::scalar::Scalar;

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Workload = 0,
    DecodeHold = 1,
    ExecuteHold = 2,
    CacheLatency = 3,
}

/// Stream used by processes that are not tied to a thread.
pub const SHARED_THREAD: u32 = u32::MAX;

pub fn stream(seed: u64, thread: u32, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(thread) << 8) | purpose as u64);
    rng
}

/// Duration drawn as `|Normal(mean, sigma)|`, or exactly `mean` when jitter
/// is disabled.
#[derive(Debug, Clone)]
pub struct Jitter<T> {
    mean: T,
    normal: Option<Normal<f64>>,
}

impl<T: Scalar> Jitter<T> {
    pub fn new(mean: T, sigma: T, deterministic: bool) -> Self {
        let normal = if deterministic || sigma <= T::zero() {
            None
        } else {
            Some(Normal::new(mean.as_f64(), sigma.as_f64()).expect("finite sigma"))
        };
        Self { mean, normal }
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match &self.normal {
            Some(normal) => T::of(normal.sample(rng).abs()),
            None => self.mean,
        }
    }
}
