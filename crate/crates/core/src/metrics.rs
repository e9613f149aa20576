//! Run summaries, ensemble statistics, and speedup.

use crate::error::MetricsError;
use crate::scalar::Scalar;

/// Snapshot of one terminated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary<T> {
    pub accesses: u64,
    pub l1_misses: u64,
    pub l2_misses: u64,
    pub l3_misses: u64,
    pub retired: u64,
    pub memory_instructions: u64,
    pub prefetches: u64,
    pub sim_time: T,
    pub max_window_occupancy: usize,
    pub config_fingerprint: u64,
    pub seed: u64,
}

impl<T: Scalar> RunSummary<T> {
    /// L1 misses per retired instruction.
    pub fn miss_rate_per_instruction(&self) -> f64 {
        ratio(self.l1_misses, self.retired)
    }

    /// L1 misses per memory access.
    pub fn miss_rate_per_access(&self) -> f64 {
        ratio(self.l1_misses, self.accesses)
    }

    pub fn counters_ordered(&self) -> bool {
        self.l3_misses <= self.l2_misses && self.l2_misses <= self.l1_misses && self.l1_misses <= self.accesses
    }

    pub fn value(&self, metric: Metric) -> T {
        let c = T::of_count;
        match metric {
            Metric::Accesses => c(self.accesses),
            Metric::L1Misses => c(self.l1_misses),
            Metric::L2Misses => c(self.l2_misses),
            Metric::L3Misses => c(self.l3_misses),
            Metric::Retired => c(self.retired),
            Metric::SimTime => self.sim_time,
            Metric::MaxWindowOccupancy => c(self.max_window_occupancy as u64),
            Metric::L1MissRateInstr => T::of(self.miss_rate_per_instruction()),
            Metric::L1MissRateAccess => T::of(self.miss_rate_per_access()),
            Metric::Prefetches => c(self.prefetches),
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Accesses,
    L1Misses,
    L2Misses,
    L3Misses,
    Retired,
    SimTime,
    MaxWindowOccupancy,
    L1MissRateInstr,
    L1MissRateAccess,
    Prefetches,
}

impl Metric {
    pub const ALL: [Metric; 10] = [
        Metric::Accesses,
        Metric::L1Misses,
        Metric::L2Misses,
        Metric::L3Misses,
        Metric::Retired,
        Metric::SimTime,
        Metric::MaxWindowOccupancy,
        Metric::L1MissRateInstr,
        Metric::L1MissRateAccess,
        Metric::Prefetches,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accesses => "accesses",
            Metric::L1Misses => "l1_misses",
            Metric::L2Misses => "l2_misses",
            Metric::L3Misses => "l3_misses",
            Metric::Retired => "retired",
            Metric::SimTime => "sim_time",
            Metric::MaxWindowOccupancy => "max_window_occupancy",
            Metric::L1MissRateInstr => "l1_miss_rate_per_instruction",
            Metric::L1MissRateAccess => "l1_miss_rate_per_access",
            Metric::Prefetches => "prefetches",
        }
    }
}

/// Mean, sample standard deviation, and range of one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat<T> {
    pub mean: T,
    pub stddev: T,
    pub min: T,
    pub max: T,
}

impl<T: Scalar> Stat<T> {
    /// Statistics of a non-empty sample. The mean is accumulated over the
    /// sorted sample so the result does not depend on input order.
    pub fn of(values: &[T]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("metric values are finite"));
        let n = T::of_count(sorted.len() as u64);
        let mean = sorted.iter().copied().sum::<T>() / n;
        let stddev = if sorted.len() > 1 {
            let ss: T = sorted.iter().map(|&x| (x - mean) * (x - mean)).sum();
            (ss / (n - T::one())).sqrt()
        } else {
            T::zero()
        };
        Some(Self {
            mean,
            stddev,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }

    /// Standard error of the mean for a sample of size `n`.
    pub fn std_error(&self, n: usize) -> T {
        self.stddev / T::of_count(n as u64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateStats<T> {
    pub count: usize,
    pub config_fingerprint: u64,
    pub metrics: Vec<(Metric, Stat<T>)>,
}

impl<T: Scalar> AggregateStats<T> {
    pub fn get(&self, metric: Metric) -> Option<&Stat<T>> {
        self.metrics.iter().find(|(m, _)| *m == metric).map(|(_, s)| s)
    }

    pub fn mean(&self, metric: Metric) -> Result<T, MetricsError> {
        self.get(metric)
            .map(|s| s.mean)
            .ok_or(MetricsError::MissingMetric(metric.name()))
    }

    pub fn std_error(&self, metric: Metric) -> Result<T, MetricsError> {
        self.get(metric)
            .map(|s| s.std_error(self.count))
            .ok_or(MetricsError::MissingMetric(metric.name()))
    }
}

/// Elementwise statistics over an ensemble of runs of one configuration.
pub fn aggregate<T: Scalar>(summaries: &[RunSummary<T>]) -> Result<AggregateStats<T>, MetricsError> {
    let first = summaries.first().ok_or(MetricsError::Empty)?;
    if let Some(other) = summaries
        .iter()
        .find(|s| s.config_fingerprint != first.config_fingerprint)
    {
        return Err(MetricsError::MixedConfigs(
            first.config_fingerprint,
            other.config_fingerprint,
        ));
    }
    let metrics = Metric::ALL
        .iter()
        .map(|&m| {
            let values: Vec<T> = summaries.iter().map(|s| s.value(m)).collect();
            (m, Stat::of(&values).expect("non-empty"))
        })
        .collect();
    Ok(AggregateStats {
        count: summaries.len(),
        config_fingerprint: first.config_fingerprint,
        metrics,
    })
}

/// Fractional reduction of mean simulated time: `1 - variant / baseline`.
pub fn speedup<T: Scalar>(baseline: &AggregateStats<T>, variant: &AggregateStats<T>) -> Result<T, MetricsError> {
    let base = baseline.mean(Metric::SimTime)?;
    if base == T::zero() {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok(T::one() - variant.mean(Metric::SimTime)? / base)
}
