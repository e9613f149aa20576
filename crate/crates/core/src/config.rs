//! Run configuration and its flat `key=value` text format.
//!
//! Blank lines and `#` comments are ignored. Keys not given keep their
//! defaults, which reproduce the reference processor: one thread, 20000
//! instructions, 22.5% memory instructions over blocks 1..=500, decode and
//! execute widths 4 and 8 with a 32-entry window, and a 128/256/512-block
//! three-level hierarchy with fetch latencies 2.5/10/60.

use std::collections::HashMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::ConfigError;
use crate::memhier::{CacheLevelConfig, FillPolicy, MemConfig, PrefetchConfig};
use crate::pipeline::PipelineConfig;
use crate::scalar::Scalar;
use crate::workload::WorkloadConfig;

const MAX_LEVELS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub workload: WorkloadConfig,
    /// Total instructions split across threads; overrides `workload.count`.
    pub total_instructions: Option<u64>,
    pub pipeline: PipelineConfig<T>,
    pub mem: MemConfig<T>,
    pub threads: usize,
    pub prefetch: PrefetchConfig,
    pub seed: u64,
    /// Ensemble size for experiments: seeds `seed, seed + 1, ...`.
    pub seeds: usize,
    pub deterministic_latencies: bool,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            workload: WorkloadConfig::default(),
            total_instructions: None,
            pipeline: PipelineConfig::default(),
            mem: MemConfig::default(),
            threads: 1,
            prefetch: PrefetchConfig::default(),
            seed: 1,
            seeds: 20,
            deterministic_latencies: false,
        }
    }
}

impl<T: Scalar> SimConfig<T> {
    /// Instructions generated for `thread`. A split total gives the remainder
    /// one instruction each to the lowest thread ids.
    pub fn thread_instructions(&self, thread: usize) -> u64 {
        match self.total_instructions {
            Some(total) => {
                let n = self.threads as u64;
                total / n + u64::from((thread as u64) < total % n)
            }
            None => self.workload.count,
        }
    }

    pub fn workload_total(&self) -> u64 {
        (0..self.threads).map(|t| self.thread_instructions(t)).sum()
    }

    /// Change the thread count, keeping a partitioned L1 at one partition
    /// per thread.
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self.sync_partitions();
        self
    }

    pub fn with_policy(mut self, policy: FillPolicy) -> Self {
        self.mem.policy = policy;
        self.sync_partitions();
        self
    }

    fn sync_partitions(&mut self) {
        if let FillPolicy::PartitionedFifo { partitions } = &mut self.mem.policy {
            *partitions = self.threads;
        }
    }

    // negated comparisons so that NaN fails
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, msg: String| Err(ConfigError::new(None, key, msg));
        if self.threads == 0 {
            return bad("threads", "must be at least 1".into());
        }
        if u32::try_from(self.threads).is_err() {
            return bad("threads", "too many threads".into());
        }
        let w = &self.workload;
        if w.count == 0 {
            return bad("instructions", "must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&w.mem_fraction) {
            return bad("mem_fraction", format!("{} outside [0, 1]", w.mem_fraction));
        }
        if w.addr_low == 0 {
            return bad("addr_low", "must be at least 1".into());
        }
        if w.addr_low > w.addr_high {
            return bad("addr_high", format!("{} below addr_low {}", w.addr_high, w.addr_low));
        }
        if let Some(total) = self.total_instructions {
            if total < self.threads as u64 {
                return bad("total_instructions", format!("{total} is fewer than one per thread"));
            }
        }
        let p = &self.pipeline;
        if p.decode_width == 0 {
            return bad("decode_width", "must be at least 1".into());
        }
        if p.execute_width == 0 {
            return bad("execute_width", "must be at least 1".into());
        }
        if !(p.decode_period > T::zero() && p.decode_period.is_finite()) {
            return bad("decode_period", "must be positive".into());
        }
        if !(p.execute_period > T::zero() && p.execute_period.is_finite()) {
            return bad("execute_period", "must be positive".into());
        }
        if !(p.decode_sigma >= T::zero()) {
            return bad("decode_sigma", "must be non-negative".into());
        }
        if !(p.execute_sigma >= T::zero()) {
            return bad("execute_sigma", "must be non-negative".into());
        }
        let m = &self.mem;
        if m.levels.is_empty() || m.levels.len() > MAX_LEVELS {
            return bad("levels", format!("must be between 1 and {MAX_LEVELS}"));
        }
        for (i, l) in m.levels.iter().enumerate() {
            if l.capacity == 0 {
                return bad(&format!("l{}_capacity", i + 1), "must be at least 1".into());
            }
            if !(l.fetch_latency > T::zero() && l.fetch_latency.is_finite()) {
                return bad(&format!("l{}_latency", i + 1), "must be positive".into());
            }
            if !(l.fetch_sigma >= T::zero()) {
                return bad("latency_sigma", "must be non-negative".into());
            }
        }
        if m.mlp_width == 0 {
            return bad("mlp_width", "must be at least 1".into());
        }
        if !(m.base_period > T::zero() && m.base_period.is_finite()) {
            return bad("base_period", "must be positive".into());
        }
        if let FillPolicy::PartitionedFifo { partitions } = m.policy {
            if partitions != self.threads {
                return bad(
                    "policy",
                    format!("{partitions} partitions for {} threads", self.threads),
                );
            }
            if partitions > m.levels[0].capacity {
                return bad(
                    "threads",
                    format!("{partitions} partitions exceed l1_capacity {}", m.levels[0].capacity),
                );
            }
        }
        if self.prefetch.target_level == 0 || self.prefetch.target_level > m.levels.len() {
            return bad(
                "prefetch_target_level",
                format!("{} is not a configured level", self.prefetch.target_level),
            );
        }
        if self.seeds == 0 {
            return bad("seeds", "must be at least 1".into());
        }
        Ok(())
    }

    /// Canonical `key=value` text. Loading it reproduces this config.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.entries(true) {
            let _ = writeln!(out, "{key}={value}");
        }
        out
    }

    /// Hash of the canonical text without the seed fields, so summaries of
    /// one configuration share it across an ensemble.
    pub fn fingerprint(&self) -> u64 {
        let mut hasher = Sha256::new();
        for (key, value) in self.entries(false) {
            hasher.update(key.as_bytes());
            hasher.update(b"=");
            hasher.update(value.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
    }

    fn entries(&self, with_seed: bool) -> Vec<(String, String)> {
        let w = &self.workload;
        let p = &self.pipeline;
        let m = &self.mem;
        let f = |x: T| format!("{}", x.as_f64());
        let mut e: Vec<(String, String)> = vec![
            ("instructions".into(), w.count.to_string()),
            (
                "total_instructions".into(),
                self.total_instructions.unwrap_or(0).to_string(),
            ),
            ("mem_fraction".into(), w.mem_fraction.to_string()),
            ("addr_low".into(), w.addr_low.to_string()),
            ("addr_high".into(), w.addr_high.to_string()),
            ("seq_base".into(), w.seq_base.to_string()),
            ("per_thread_offset".into(), w.per_thread_offset.to_string()),
            ("threads".into(), self.threads.to_string()),
            ("decode_width".into(), p.decode_width.to_string()),
            ("decode_period".into(), f(p.decode_period)),
            ("decode_sigma".into(), f(p.decode_sigma)),
            ("execute_width".into(), p.execute_width.to_string()),
            ("execute_period".into(), f(p.execute_period)),
            ("execute_sigma".into(), f(p.execute_sigma)),
            ("window_capacity".into(), p.window_capacity.to_string()),
            ("strict_width".into(), p.strict_width.to_string()),
            ("levels".into(), m.levels.len().to_string()),
        ];
        for (i, l) in m.levels.iter().enumerate() {
            e.push((format!("l{}_capacity", i + 1), l.capacity.to_string()));
            e.push((format!("l{}_latency", i + 1), f(l.fetch_latency)));
        }
        let sigma = m.levels.first().map(|l| l.fetch_sigma).unwrap_or_else(T::zero);
        e.extend([
            ("latency_sigma".into(), f(sigma)),
            ("policy".into(), m.policy.name().to_string()),
            ("mlp_width".into(), m.mlp_width.to_string()),
            ("base_period".into(), f(m.base_period)),
            ("prefetch".into(), self.prefetch.enabled.to_string()),
            ("prefetch_degree".into(), self.prefetch.degree.to_string()),
            ("prefetch_target_level".into(), self.prefetch.target_level.to_string()),
            (
                "prefetch_partition_local".into(),
                self.prefetch.partition_local.to_string(),
            ),
            ("deterministic".into(), self.deterministic_latencies.to_string()),
        ]);
        if with_seed {
            e.push(("seed".into(), self.seed.to_string()));
            e.push(("seeds".into(), self.seeds.to_string()));
        }
        e
    }
}

/// Accumulates `key=value` assignments before building a [`SimConfig`].
#[derive(Debug, Clone)]
pub struct ConfigBuilder<T> {
    cfg: SimConfig<T>,
    levels: usize,
    all_levels: [CacheLevelConfig<T>; MAX_LEVELS],
    policy: &'static str,
    lines: HashMap<String, usize>,
}

impl<T: Scalar> Default for ConfigBuilder<T> {
    fn default() -> Self {
        let cfg = SimConfig::default();
        let defaults = MemConfig::<T>::default().levels;
        Self {
            levels: defaults.len(),
            all_levels: [defaults[0].clone(), defaults[1].clone(), defaults[2].clone()],
            policy: cfg.mem.policy.name(),
            cfg,
            lines: HashMap::new(),
        }
    }
}

fn parse_u64(v: &str) -> Result<u64, String> {
    v.parse::<u64>()
        .map_err(|_| format!("`{v}` is not a non-negative integer"))
}

fn parse_usize(v: &str) -> Result<usize, String> {
    v.parse::<usize>()
        .map_err(|_| format!("`{v}` is not a non-negative integer"))
}

fn parse_f64(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("`{v}` is not a finite number")),
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("`{v}` is not a boolean")),
    }
}

fn level_key(key: &str) -> Option<(usize, &str)> {
    let rest = key.strip_prefix('l')?;
    let (digit, field) = rest.split_once('_')?;
    let n: usize = digit.parse().ok()?;
    (1..=MAX_LEVELS).contains(&n).then_some((n - 1, field))
}

impl<T: Scalar> ConfigBuilder<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Apply one assignment. `line` is recorded for later validation errors.
    pub fn set(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<(), ConfigError> {
        let value = value.trim();
        let cfg = &mut self.cfg;
        let res: Result<(), String> = (|| {
            match key {
                "instructions" => cfg.workload.count = parse_u64(value)?,
                "total_instructions" => {
                    let n = parse_u64(value)?;
                    cfg.total_instructions = (n > 0).then_some(n);
                }
                "mem_fraction" => cfg.workload.mem_fraction = parse_f64(value)?,
                "addr_low" => cfg.workload.addr_low = parse_u64(value)?,
                "addr_high" => cfg.workload.addr_high = parse_u64(value)?,
                "seq_base" => cfg.workload.seq_base = parse_u64(value)?,
                "per_thread_offset" => cfg.workload.per_thread_offset = parse_u64(value)?,
                "threads" => cfg.threads = parse_usize(value)?,
                "decode_width" => cfg.pipeline.decode_width = parse_usize(value)?,
                "decode_period" => cfg.pipeline.decode_period = T::of(parse_f64(value)?),
                "decode_sigma" => cfg.pipeline.decode_sigma = T::of(parse_f64(value)?),
                "execute_width" => cfg.pipeline.execute_width = parse_usize(value)?,
                "execute_period" => cfg.pipeline.execute_period = T::of(parse_f64(value)?),
                "execute_sigma" => cfg.pipeline.execute_sigma = T::of(parse_f64(value)?),
                "window_capacity" => cfg.pipeline.window_capacity = parse_usize(value)?,
                "strict_width" => cfg.pipeline.strict_width = parse_bool(value)?,
                "levels" => self.levels = parse_usize(value)?,
                "latency_sigma" => {
                    let s = T::of(parse_f64(value)?);
                    self.all_levels.iter_mut().for_each(|l| l.fetch_sigma = s);
                }
                "policy" => {
                    self.policy = match value {
                        "global" => "global",
                        "partitioned" => "partitioned",
                        "ideal" => "ideal",
                        other => return Err(format!("`{other}` is not one of global, partitioned, ideal")),
                    }
                }
                "mlp_width" => cfg.mem.mlp_width = parse_usize(value)?,
                "base_period" => cfg.mem.base_period = T::of(parse_f64(value)?),
                "prefetch" => cfg.prefetch.enabled = parse_bool(value)?,
                "prefetch_degree" => cfg.prefetch.degree = parse_usize(value)?,
                "prefetch_target_level" => cfg.prefetch.target_level = parse_usize(value)?,
                "prefetch_partition_local" => cfg.prefetch.partition_local = parse_bool(value)?,
                "seed" => cfg.seed = parse_u64(value)?,
                "seeds" => cfg.seeds = parse_usize(value)?,
                "deterministic" => cfg.deterministic_latencies = parse_bool(value)?,
                other => match level_key(other) {
                    Some((i, "capacity")) => self.all_levels[i].capacity = parse_usize(value)?,
                    Some((i, "latency")) => self.all_levels[i].fetch_latency = T::of(parse_f64(value)?),
                    _ => return Err("unknown key".into()),
                },
            }
            Ok(())
        })();
        res.map_err(|msg| ConfigError::new(line, key, msg))?;
        if let Some(line) = line {
            self.lines.insert(key.to_string(), line);
        } else {
            self.lines.remove(key);
        }
        Ok(())
    }

    /// Apply a `key=value` assignment given as one string.
    pub fn set_pair(&mut self, pair: &str, line: Option<usize>) -> Result<(), ConfigError> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line, pair.trim(), "expected `key=value`"))?;
        self.set(key.trim(), value, line)
    }

    /// Apply every assignment of a config text.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set_pair(line, Some(idx + 1))?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<SimConfig<T>, ConfigError> {
        let mut cfg = self.cfg.clone();
        if self.levels == 0 || self.levels > MAX_LEVELS {
            return Err(ConfigError::new(
                self.lines.get("levels").copied(),
                "levels",
                format!("must be between 1 and {MAX_LEVELS}"),
            ));
        }
        cfg.mem.levels = self.all_levels[..self.levels].to_vec();
        cfg.mem.policy = match self.policy {
            "partitioned" => FillPolicy::PartitionedFifo {
                partitions: cfg.threads,
            },
            "ideal" => FillPolicy::Ideal,
            _ => FillPolicy::GlobalFifo,
        };
        cfg.validate().map_err(|mut e| {
            e.line = self.lines.get(&e.key).copied();
            e
        })?;
        Ok(cfg)
    }
}

/// Parse a config text. Missing keys take their defaults.
pub fn load_config<T: Scalar>(text: &str) -> Result<SimConfig<T>, ConfigError> {
    let mut builder = ConfigBuilder::new();
    builder.apply_text(text)?;
    builder.build()
}
