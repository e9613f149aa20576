//! Discrete-event simulator of a multithreaded processor with a multi-level
//! FIFO cache hierarchy.
//!
//! The model has three kinds of processes: per-thread decode and execute
//! stages around a bounded instruction window, and one cache process that
//! services L1 misses serially through the hierarchy. An L1 can be filled
//! globally, or partitioned per thread so that a thread's fills only evict
//! its own blocks while lookups still see the whole cache. A lookahead
//! prefetcher can install upcoming blocks into L1 or L2.
//!
//! Simulated time is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod config;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod memhier;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod workload;

pub use config::{load_config, ConfigBuilder};
pub use error::{ConfigError, MetricsError, SimError, TraceError};
pub use experiment::{emit_csv, run_ensemble, run_experiment, ExperimentName, ExperimentOptions};
pub use memhier::{FillPolicy, PrefetchConfig};
pub use metrics::{aggregate, speedup, Metric, Stat};
pub use model::{run_single, Activation};
pub use scalar::Scalar;
pub use workload::{generate_stream, read_trace, write_trace, Instruction, InstructionStream, WorkloadConfig};

pub type SimTime = f64;
pub type Engine<A> = engine::Engine<f64, A>;
pub type SimConfig = config::SimConfig<f64>;
pub type PipelineConfig = pipeline::PipelineConfig<f64>;
pub type MemConfig = memhier::MemConfig<f64>;
pub type CacheLevelConfig = memhier::CacheLevelConfig<f64>;
pub type Hierarchy = memhier::Hierarchy<f64>;
pub type Simulation = model::Simulation<f64>;
pub type RunSummary = metrics::RunSummary<f64>;
pub type AggregateStats = metrics::AggregateStats<f64>;
pub type ExperimentTable = experiment::ExperimentTable<f64>;

/// Single-precision variants.
pub mod f32 {
    pub type SimConfig = crate::config::SimConfig<f32>;
    pub type Simulation = crate::model::Simulation<f32>;
    pub type RunSummary = crate::metrics::RunSummary<f32>;
    pub type AggregateStats = crate::metrics::AggregateStats<f32>;
    pub type ExperimentTable = crate::experiment::ExperimentTable<f32>;
}
