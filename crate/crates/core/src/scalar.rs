//! Scalar abstraction for simulated time and statistics.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for simulated time, latencies, and aggregate statistics.
///
/// Implemented for `f32` and `f64`. Random draws are always made in `f64`
/// and then narrowed, so a workload or jitter sequence does not depend on the
/// scalar chosen for the clock.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Narrow an `f64` into this scalar.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 narrows into every Scalar")
    }

    /// Widen into `f64`.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("every Scalar widens into f64")
    }

    /// Convert an event count.
    fn of_count(count: u64) -> Self {
        Self::of(count as f64)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
