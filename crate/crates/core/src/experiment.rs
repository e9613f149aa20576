//! Canned experiments, seed ensembles, and CSV emission.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::SimConfig;
use crate::error::{MetricsError, SimError};
use crate::memhier::{CacheLevelConfig, FillPolicy};
use crate::metrics::{aggregate, AggregateStats, RunSummary};
use crate::model::run_single;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentName {
    /// Miss counts per level of the default three-level hierarchy.
    Hierarchy,
    /// L1-only processor with 1..64 cores on disjoint address ranges.
    CoreSweep,
    /// Single thread, prefetch degree 0..=8.
    PrefetchSweep,
    /// Ideal vs. shared-fill vs. partitioned-fill-with-L2-prefetch, 4 threads.
    Technique,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 4] = [
        ExperimentName::Hierarchy,
        ExperimentName::CoreSweep,
        ExperimentName::PrefetchSweep,
        ExperimentName::Technique,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Hierarchy => "hierarchy",
            ExperimentName::CoreSweep => "coresweep",
            ExperimentName::PrefetchSweep => "prefetchsweep",
            ExperimentName::Technique => "technique",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| SimError::Config(format!("unknown experiment `{s}`")))
    }
}

/// Knobs of the canned experiments that are not part of a run config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentOptions {
    /// Instructions per run, split across threads.
    pub total_instructions: u64,
    pub core_counts: Vec<usize>,
    /// L1 capacity (blocks) of the core-sweep processor.
    pub coresweep_l1_capacity: usize,
    pub prefetch_degrees: Vec<usize>,
    pub technique_threads: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            total_instructions: 20_000,
            core_counts: vec![1, 2, 4, 8, 16, 32, 64],
            coresweep_l1_capacity: 512,
            prefetch_degrees: (0..=8).collect(),
            technique_threads: 4,
        }
    }
}

impl ExperimentOptions {
    /// Apply an experiment-level `key=value`; returns false for keys that
    /// belong to the run config instead.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<bool, String> {
        let int = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("{key}: `{v}` is not a non-negative integer"))
        };
        let list = |v: &str| v.split(',').map(int).collect::<Result<Vec<_>, _>>();
        match key {
            "experiment_instructions" => self.total_instructions = int(value)? as u64,
            "core_counts" => self.core_counts = list(value)?,
            "coresweep_l1_capacity" => self.coresweep_l1_capacity = int(value)?,
            "prefetch_degrees" => self.prefetch_degrees = list(value)?,
            "technique_threads" => self.technique_threads = int(value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow<T> {
    pub value: u64,
    pub label: String,
    pub stats: AggregateStats<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable<T> {
    pub sweep_name: String,
    pub rows: Vec<ExperimentRow<T>>,
}

impl<T: Scalar> ExperimentTable<T> {
    pub fn new(sweep_name: impl Into<String>) -> Self {
        Self {
            sweep_name: sweep_name.into(),
            rows: Vec::new(),
        }
    }

    /// Append a point; sweep values must strictly increase.
    pub fn push(&mut self, value: u64, label: impl Into<String>, stats: AggregateStats<T>) -> Result<(), SimError> {
        if let Some(last) = self.rows.last() {
            if value <= last.value {
                return Err(SimError::Config(format!(
                    "sweep value {value} does not increase past {}",
                    last.value
                )));
            }
        }
        self.rows.push(ExperimentRow {
            value,
            label: label.into(),
            stats,
        });
        Ok(())
    }

    pub fn row(&self, label: &str) -> Option<&ExperimentRow<T>> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Write `sweep,metric,mean,stddev,min,max,n`, one row per point and metric.
pub fn emit_csv<T: Scalar, W: Write>(table: &ExperimentTable<T>, mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "sweep,metric,mean,stddev,min,max,n")?;
    for row in &table.rows {
        for (metric, s) in &row.stats.metrics {
            writeln!(
                sink,
                "{},{},{},{},{},{},{}",
                row.label,
                metric.name(),
                s.mean.as_f64(),
                s.stddev.as_f64(),
                s.min.as_f64(),
                s.max.as_f64(),
                row.stats.count
            )?;
        }
    }
    sink.flush()
}

/// Run `cfg` for seeds `cfg.seed .. cfg.seed + seeds`, returning summaries
/// in seed order. Runs are independent and execute in parallel.
pub fn run_ensemble<T: Scalar>(cfg: &SimConfig<T>, seeds: usize) -> Result<Vec<RunSummary<T>>, SimError> {
    (0..seeds as u64)
        .into_par_iter()
        .map(|k| run_single(cfg, cfg.seed.wrapping_add(k)))
        .collect()
}

fn ensemble_stats<T: Scalar>(cfg: &SimConfig<T>, seeds: usize) -> Result<AggregateStats<T>, SimError> {
    let runs = run_ensemble(cfg, seeds)?;
    aggregate(&runs).map_err(|e: MetricsError| SimError::Config(e.to_string()))
}

/// Variant configs of an experiment, as (sweep value, label, config).
pub fn experiment_points<T: Scalar>(
    name: ExperimentName,
    base: &SimConfig<T>,
    opts: &ExperimentOptions,
) -> Vec<(u64, String, SimConfig<T>)> {
    let mut base = base.clone();
    base.total_instructions = Some(opts.total_instructions);
    match name {
        ExperimentName::Hierarchy => {
            let label = base
                .mem
                .levels
                .iter()
                .map(|l| l.capacity.to_string())
                .collect::<Vec<_>>()
                .join("+");
            vec![(0, label, base)]
        }
        ExperimentName::CoreSweep => opts
            .core_counts
            .iter()
            .map(|&cores| {
                let mut cfg = base.clone().with_threads(cores).with_policy(FillPolicy::GlobalFifo);
                cfg.workload.per_thread_offset = cfg.workload.addr_high;
                let memory_latency = base
                    .mem
                    .levels
                    .last()
                    .map(|l| l.fetch_latency)
                    .unwrap_or_else(|| T::of(60.0));
                let mut l1 = CacheLevelConfig::<T>::new(opts.coresweep_l1_capacity, 0.0);
                l1.fetch_latency = memory_latency;
                l1.fetch_sigma = base.mem.levels[0].fetch_sigma;
                cfg.mem.levels = vec![l1];
                cfg.prefetch.enabled = false;
                cfg.prefetch.target_level = 1;
                (cores as u64, cores.to_string(), cfg)
            })
            .collect(),
        ExperimentName::PrefetchSweep => opts
            .prefetch_degrees
            .iter()
            .map(|&degree| {
                let mut cfg = base.clone().with_threads(1);
                cfg.prefetch.enabled = degree > 0;
                cfg.prefetch.degree = degree;
                cfg.prefetch.target_level = 1;
                (degree as u64, degree.to_string(), cfg)
            })
            .collect(),
        ExperimentName::Technique => {
            let threads = opts.technique_threads;
            let mut ideal = base.clone().with_threads(threads).with_policy(FillPolicy::Ideal);
            ideal.prefetch.enabled = false;
            let mut shared = base.clone().with_threads(threads).with_policy(FillPolicy::GlobalFifo);
            shared.prefetch.enabled = false;
            let mut partitioned = base
                .clone()
                .with_threads(threads)
                .with_policy(FillPolicy::PartitionedFifo { partitions: threads });
            partitioned.prefetch.enabled = true;
            partitioned.prefetch.target_level = 2.min(partitioned.mem.levels.len());
            vec![
                (0, "ideal".to_string(), ideal),
                (1, "global".to_string(), shared),
                (2, "partitioned".to_string(), partitioned),
            ]
        }
    }
}

/// Run a canned experiment, aggregating every point over `seeds` seeds.
pub fn run_experiment<T: Scalar>(
    name: ExperimentName,
    base: &SimConfig<T>,
    opts: &ExperimentOptions,
    seeds: usize,
) -> Result<ExperimentTable<T>, SimError> {
    if seeds == 0 {
        return Err(SimError::Config("seeds must be at least 1".into()));
    }
    let mut table = ExperimentTable::new(name.as_str());
    for (value, label, cfg) in experiment_points(name, base, opts) {
        cfg.validate().map_err(|e| SimError::Config(e.to_string()))?;
        table.push(value, label, ensemble_stats(&cfg, seeds)?)?;
    }
    Ok(table)
}
