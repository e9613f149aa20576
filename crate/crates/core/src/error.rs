use thiserror::Error;

/// Errors raised by the event engine and the processor model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid delay {0}: delays must be finite and non-negative")]
    InvalidDelay(f64),
    #[error("engine already finished at time {0}")]
    Finished(f64),
    #[error("event queue exhausted at time {time} after {events} events before the stop condition held")]
    Incomplete { time: f64, events: u64 },
    #[error("run has not terminated: {retired} of {total} instructions retired")]
    NotTerminated { retired: u64, total: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Errors raised while reading an instruction trace.
#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Configuration errors carry the offending key and, when known, its line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(line: Option<usize>, key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line,
            key: key.into(),
            message: message.into(),
        }
    }
}

/// Errors raised by aggregation and speedup computation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("cannot aggregate an empty set of summaries")]
    Empty,
    #[error("summaries come from different configurations ({0:016x} vs {1:016x})")]
    MixedConfigs(u64, u64),
    #[error("baseline mean time is zero")]
    ZeroBaseline,
    #[error("metric `{0}` missing from aggregate")]
    MissingMetric(&'static str),
}
