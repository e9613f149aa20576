//! Cache hierarchy, miss service, and lookahead prefetching.
//!
//! Levels are ordered L1 first. A miss walks down until some level holds the
//! block (or memory supplies it), then the block is installed in every level
//! it was missing from, deepest first. The latency charged is the fetch
//! latency of the deepest level that missed.

pub mod level;

use rand_chacha::ChaCha8Rng;

pub use level::{CacheLevel, FillPolicy, FillTarget, Resident};

use crate::error::SimError;
use crate::pipeline::PipelineState;
use crate::rng::Jitter;
use crate::scalar::Scalar;
use crate::workload::{BlockId, InstructionStream, ThreadId};

#[derive(Debug, Clone, PartialEq)]
pub struct CacheLevelConfig<T> {
    /// Capacity in blocks.
    pub capacity: usize,
    /// Cost of bringing a block into this level from the level below it
    /// (from memory for the last level).
    pub fetch_latency: T,
    pub fetch_sigma: T,
}

impl<T: Scalar> CacheLevelConfig<T> {
    pub fn new(capacity: usize, fetch_latency: f64) -> Self {
        Self {
            capacity,
            fetch_latency: T::of(fetch_latency),
            fetch_sigma: T::of(0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemConfig<T> {
    pub levels: Vec<CacheLevelConfig<T>>,
    /// Applies to L1; deeper levels are always global FIFO.
    pub policy: FillPolicy,
    /// L1-missing instructions serviced per cache activation.
    pub mlp_width: usize,
    /// Cache process hold on top of any fetch latency.
    pub base_period: T,
}

impl<T: Scalar> Default for MemConfig<T> {
    fn default() -> Self {
        Self {
            levels: vec![
                CacheLevelConfig::new(128, 2.5),
                CacheLevelConfig::new(256, 10.0),
                CacheLevelConfig::new(512, 60.0),
            ],
            policy: FillPolicy::GlobalFifo,
            mlp_width: 1,
            base_period: T::one(),
        }
    }
}

impl<T: Scalar> MemConfig<T> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        if self.levels.is_empty() {
            return Err("at least one cache level is required".into());
        }
        for (i, l) in self.levels.iter().enumerate() {
            if l.capacity == 0 {
                return Err(format!("l{}_capacity must be at least 1", i + 1));
            }
            if !(l.fetch_latency > T::zero() && l.fetch_latency.is_finite()) {
                return Err(format!("l{}_latency must be positive", i + 1));
            }
            if !(l.fetch_sigma >= T::zero()) {
                return Err("latency_sigma must be non-negative".into());
            }
        }
        if let FillPolicy::PartitionedFifo { partitions } = self.policy {
            if partitions == 0 {
                return Err("partitioned policy needs at least one partition".into());
            }
            if partitions > self.levels[0].capacity {
                return Err(format!(
                    "{partitions} partitions exceed L1 capacity {}",
                    self.levels[0].capacity
                ));
            }
        }
        if self.mlp_width == 0 {
            return Err("mlp_width must be at least 1".into());
        }
        if !(self.base_period > T::zero()) {
            return Err("base_period must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrefetchConfig {
    pub enabled: bool,
    /// Number of upcoming memory instructions looked ahead at.
    pub degree: usize,
    /// 1-based level prefetches are installed into (plus every deeper level).
    pub target_level: usize,
    /// Under a partitioned L1, prefetches evict only from the owner's partition.
    pub partition_local: bool,
}

impl Default for PrefetchConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            degree: 4,
            target_level: 1,
            partition_local: true,
        }
    }
}

impl PrefetchConfig {
    pub fn is_active(&self) -> bool {
        self.enabled && self.degree > 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ThreadCounters {
    pub accesses: u64,
    pub misses: Vec<u64>,
}

/// Access and per-level miss counts, overall and per thread.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissCounters {
    pub accesses: u64,
    pub misses: Vec<u64>,
    pub per_thread: Vec<ThreadCounters>,
    pub prefetches: u64,
}

impl MissCounters {
    fn new(levels: usize) -> Self {
        Self {
            accesses: 0,
            misses: vec![0; levels],
            per_thread: Vec::new(),
            prefetches: 0,
        }
    }

    fn thread(&mut self, thread: ThreadId) -> &mut ThreadCounters {
        let t = thread as usize;
        if self.per_thread.len() <= t {
            let levels = self.misses.len();
            self.per_thread.resize(
                t + 1,
                ThreadCounters {
                    accesses: 0,
                    misses: vec![0; levels],
                },
            );
        }
        &mut self.per_thread[t]
    }

    pub fn record_access(&mut self, thread: ThreadId, n: u64) {
        self.accesses += n;
        self.thread(thread).accesses += n;
    }

    fn record_miss(&mut self, thread: ThreadId, level: usize) {
        self.misses[level] += 1;
        self.thread(thread).misses[level] += 1;
    }

    /// Misses at a 0-based level; 0 for levels that do not exist.
    pub fn level_misses(&self, level: usize) -> u64 {
        self.misses.get(level).copied().unwrap_or(0)
    }

    pub fn l1_misses(&self) -> u64 {
        self.level_misses(0)
    }

    pub fn l2_misses(&self) -> u64 {
        self.level_misses(1)
    }

    pub fn l3_misses(&self) -> u64 {
        self.level_misses(2)
    }

    /// Deeper levels never miss more often than shallower ones.
    pub fn is_ordered(&self) -> bool {
        let mut prev = self.accesses;
        self.misses.iter().all(|&m| {
            let ok = m <= prev;
            prev = m;
            ok
        })
    }
}

/// Result of one cache-process activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceOutcome<T> {
    pub serviced: usize,
    pub latency: T,
}

#[derive(Debug, Clone)]
pub struct Hierarchy<T> {
    levels: Vec<CacheLevel>,
    latencies: Vec<Jitter<T>>,
    policy: FillPolicy,
    pub counters: MissCounters,
}

impl<T: Scalar> Hierarchy<T> {
    pub fn new(cfg: &MemConfig<T>, deterministic: bool) -> Result<Self, SimError> {
        cfg.validate().map_err(SimError::Config)?;
        let mut levels = Vec::with_capacity(cfg.levels.len());
        for (i, l) in cfg.levels.iter().enumerate() {
            let level = match (i, cfg.policy) {
                (0, FillPolicy::PartitionedFifo { partitions }) => CacheLevel::partitioned(l.capacity, partitions),
                _ => CacheLevel::global(l.capacity),
            }
            .map_err(SimError::Config)?;
            levels.push(level);
        }
        let latencies = cfg
            .levels
            .iter()
            .map(|l| Jitter::new(l.fetch_latency, l.fetch_sigma, deterministic))
            .collect();
        Ok(Self {
            levels,
            latencies,
            policy: cfg.policy,
            counters: MissCounters::new(cfg.levels.len()),
        })
    }

    pub fn policy(&self) -> FillPolicy {
        self.policy
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, level: usize) -> &CacheLevel {
        &self.levels[level]
    }

    /// Membership at a 0-based level. Under the ideal policy everything hits.
    pub fn lookup(&self, level: usize, address: BlockId) -> bool {
        self.policy == FillPolicy::Ideal || self.levels[level].contains(address)
    }

    pub fn l1_hit(&self, address: BlockId) -> bool {
        self.lookup(0, address)
    }

    /// Install `address` at a 0-based level. Counters are untouched.
    pub fn fill(&mut self, level: usize, address: BlockId, owner: ThreadId) -> Option<BlockId> {
        self.fill_with(level, address, owner, FillTarget::Owner)
    }

    fn fill_with(&mut self, level: usize, address: BlockId, owner: ThreadId, target: FillTarget) -> Option<BlockId> {
        if self.policy == FillPolicy::Ideal {
            return None;
        }
        self.levels[level].fill(address, owner, target)
    }

    /// Ideal access: a hit with no latency; only the access is recorded.
    pub fn ideal_access(&mut self, thread: ThreadId, _address: BlockId) -> T {
        self.counters.record_access(thread, 1);
        T::zero()
    }

    /// Fetch one L1-missing block for `owner`, updating miss counters and
    /// installing it along the fill path. Returns the latency charged.
    pub fn service_miss(&mut self, owner: ThreadId, address: BlockId, rng: &mut ChaCha8Rng) -> T {
        debug_assert!(!self.levels[0].contains(address));
        self.counters.record_miss(owner, 0);
        let depth = self.levels.len();
        // first level below L1 that holds the block; `depth` means memory
        let source = (1..depth).find(|&l| self.levels[l].contains(address)).unwrap_or(depth);
        for level in 1..source {
            self.counters.record_miss(owner, level);
        }
        for level in (0..source).rev() {
            self.levels[level].fill(address, owner, FillTarget::Owner);
        }
        self.latencies[source - 1].sample(rng)
    }

    /// One cache-process activation over every thread's window.
    ///
    /// Threads are scanned round-robin starting at `first_thread`, each window
    /// in order. Every memory instruction looked at counts as an access the
    /// first time; up to `mlp_width` of those missing L1 are serviced.
    pub fn service_misses(
        &mut self,
        threads: &mut [PipelineState],
        first_thread: usize,
        mlp_width: usize,
        rng: &mut ChaCha8Rng,
    ) -> ServiceOutcome<T> {
        let mut outcome = ServiceOutcome {
            serviced: 0,
            latency: T::zero(),
        };
        let n = threads.len();
        'scan: for k in 0..n {
            let t = (first_thread + k) % n;
            for slot in threads[t].window.iter_mut() {
                if !slot.inst.accesses_memory {
                    continue;
                }
                if outcome.serviced >= mlp_width {
                    break 'scan;
                }
                let thread = slot.inst.thread;
                if !slot.accessed {
                    slot.accessed = true;
                    self.counters.record_access(thread, 1);
                }
                if self.l1_hit(slot.inst.address) {
                    continue;
                }
                if slot.serviced {
                    // block was evicted before retirement: a fresh request
                    self.counters.record_access(thread, 1);
                }
                slot.serviced = true;
                outcome.latency = outcome.latency + self.service_miss(thread, slot.inst.address, rng);
                outcome.serviced += 1;
            }
        }
        debug_assert!(self.counters.is_ordered());
        outcome
    }

    /// Install the addresses of the next `degree` memory instructions of
    /// `owner`'s stream into the target level and every level below it.
    /// Returns how many were newly installed at the target level.
    pub fn prefetch_step(&mut self, stream: &InstructionStream, owner: ThreadId, cfg: &PrefetchConfig) -> usize {
        if !cfg.is_active() || self.policy == FillPolicy::Ideal {
            return 0;
        }
        let target = cfg.target_level.clamp(1, self.levels.len()) - 1;
        let l1_mode = if cfg.partition_local {
            FillTarget::Owner
        } else {
            FillTarget::Oldest
        };
        let mut issued = 0;
        for address in stream.upcoming_addresses(cfg.degree) {
            if self.levels[target].contains(address) {
                continue;
            }
            for level in (target..self.levels.len()).rev() {
                let mode = if level == 0 { l1_mode } else { FillTarget::Owner };
                self.fill_with(level, address, owner, mode);
            }
            issued += 1;
        }
        self.counters.prefetches += issued as u64;
        issued
    }

    pub fn is_consistent(&self) -> bool {
        self.levels.iter().all(CacheLevel::is_consistent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Slot;
    use crate::rng::{self, Purpose};
    use crate::workload::Instruction;

    fn hier(policy: FillPolicy) -> Hierarchy<f64> {
        let cfg = MemConfig {
            policy,
            ..MemConfig::default()
        };
        Hierarchy::new(&cfg, true).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        rng::stream(0, rng::SHARED_THREAD, Purpose::CacheLatency)
    }

    fn window_of(insts: &[Instruction]) -> PipelineState {
        let mut st = PipelineState::new();
        st.window = insts
            .iter()
            .map(|&inst| Slot {
                inst,
                accessed: false,
                serviced: false,
            })
            .collect();
        st
    }

    #[test]
    fn defaults_build_three_empty_levels() {
        let h = hier(FillPolicy::GlobalFifo);
        assert_eq!(h.depth(), 3);
        assert_eq!(
            (0..3).map(|l| h.level(l).capacity()).collect::<Vec<_>>(),
            vec![128, 256, 512]
        );
        assert!((0..3).all(|l| h.level(l).is_empty()));
        assert_eq!(h.counters.accesses, 0);
    }

    #[test]
    fn partitioned_l1_splits_evenly() {
        let h = hier(FillPolicy::PartitionedFifo { partitions: 4 });
        assert_eq!(h.level(0).partition_count(), 4);
        assert!((0..4).all(|p| h.level(0).partition_capacity(p) == 32));
        assert_eq!(h.level(1).partition_count(), 1);
    }

    #[test]
    fn too_many_partitions_is_a_config_error() {
        let cfg = MemConfig::<f64> {
            levels: vec![CacheLevelConfig::new(3, 2.5)],
            policy: FillPolicy::PartitionedFifo { partitions: 5 },
            ..MemConfig::default()
        };
        assert!(matches!(Hierarchy::new(&cfg, true), Err(SimError::Config(_))));
        let zero = MemConfig::<f64> {
            levels: vec![CacheLevelConfig::new(0, 2.5)],
            ..MemConfig::default()
        };
        assert!(Hierarchy::new(&zero, true).is_err());
    }

    #[test]
    fn lookup_is_shared_across_partitions() {
        let mut h = hier(FillPolicy::PartitionedFifo { partitions: 4 });
        assert!(!h.lookup(0, 42));
        h.fill(0, 42, 0);
        assert!(h.lookup(0, 42));
        // thread 0's own fills push 42 out of its partition
        for a in 100..132 {
            h.fill(0, a, 0);
        }
        assert!(!h.lookup(0, 42));
    }

    #[test]
    fn cold_miss_goes_to_memory() {
        let mut h = hier(FillPolicy::GlobalFifo);
        let mut threads = vec![window_of(&[Instruction::memory(1000, 7, 0)])];
        let out = h.service_misses(&mut threads, 0, 1, &mut rng());
        assert_eq!(
            out,
            ServiceOutcome {
                serviced: 1,
                latency: 60.0
            }
        );
        assert_eq!(h.counters.misses, vec![1, 1, 1]);
        assert_eq!(h.counters.accesses, 1);
        assert!((0..3).all(|l| h.lookup(l, 7)));
    }

    #[test]
    fn l2_hit_costs_the_l1_fetch() {
        let mut h = hier(FillPolicy::GlobalFifo);
        h.fill(1, 7, 0);
        let mut threads = vec![window_of(&[Instruction::memory(1000, 7, 0)])];
        let out = h.service_misses(&mut threads, 0, 1, &mut rng());
        assert_eq!(out.latency, 2.5);
        assert_eq!(h.counters.misses, vec![1, 0, 0]);
        assert!(h.lookup(0, 7));
        assert!(!h.lookup(2, 7));
    }

    #[test]
    fn l3_hit_fills_l2_and_l1() {
        let mut h = hier(FillPolicy::GlobalFifo);
        h.fill(2, 7, 0);
        let mut threads = vec![window_of(&[Instruction::memory(1000, 7, 0)])];
        let out = h.service_misses(&mut threads, 0, 1, &mut rng());
        assert_eq!(out.latency, 10.0);
        assert_eq!(h.counters.misses, vec![1, 1, 0]);
        assert!(h.lookup(0, 7) && h.lookup(1, 7));
    }

    #[test]
    fn l1_hit_counts_access_only() {
        let mut h = hier(FillPolicy::GlobalFifo);
        h.fill(0, 7, 0);
        let mut threads = vec![window_of(&[Instruction::memory(1000, 7, 0)])];
        let out = h.service_misses(&mut threads, 0, 1, &mut rng());
        assert_eq!(
            out,
            ServiceOutcome {
                serviced: 0,
                latency: 0.0
            }
        );
        assert_eq!(h.counters.accesses, 1);
        assert_eq!(h.counters.misses, vec![0, 0, 0]);
    }

    #[test]
    fn mlp_width_limits_services_per_activation() {
        let mut h = hier(FillPolicy::GlobalFifo);
        let insts = [
            Instruction::compute(1000, 0),
            Instruction::memory(1001, 5, 0),
            Instruction::memory(1002, 6, 0),
        ];
        let mut threads = vec![window_of(&insts)];
        let out = h.service_misses(&mut threads, 0, 1, &mut rng());
        assert_eq!(out.serviced, 1);
        assert!(h.lookup(0, 5) && !h.lookup(0, 6));
        let out = h.service_misses(&mut threads, 0, 2, &mut rng());
        assert_eq!(out.serviced, 1);
        assert_eq!(h.counters.accesses, 2);
    }

    #[test]
    fn round_robin_start_thread() {
        let mut h = hier(FillPolicy::GlobalFifo);
        let mut threads = vec![
            window_of(&[Instruction::memory(1000, 5, 0)]),
            window_of(&[Instruction::memory(1000, 9, 1)]),
        ];
        h.service_misses(&mut threads, 1, 1, &mut rng());
        assert!(h.lookup(0, 9) && !h.lookup(0, 5));
        assert_eq!(h.counters.per_thread[1].misses, vec![1, 1, 1]);
    }

    #[test]
    fn jittered_latency_is_positive() {
        let cfg = MemConfig::<f64>::default();
        let mut h = Hierarchy::new(&cfg, false).unwrap();
        let mut r = rng();
        let lat = h.service_miss(0, 3, &mut r);
        assert!(lat > 0.0 && lat != 60.0);
    }

    #[test]
    fn prefetch_degree_zero_issues_nothing() {
        let mut h = hier(FillPolicy::GlobalFifo);
        let stream = InstructionStream::new(vec![Instruction::memory(1000, 9, 0)]);
        let cfg = PrefetchConfig {
            enabled: true,
            degree: 0,
            ..PrefetchConfig::default()
        };
        assert_eq!(h.prefetch_step(&stream, 0, &cfg), 0);
    }

    #[test]
    fn prefetch_dedups_repeated_addresses() {
        let mut h = hier(FillPolicy::GlobalFifo);
        let stream = InstructionStream::new(vec![
            Instruction::memory(1000, 9, 0),
            Instruction::compute(1001, 0),
            Instruction::memory(1002, 9, 0),
        ]);
        let cfg = PrefetchConfig {
            enabled: true,
            degree: 2,
            ..PrefetchConfig::default()
        };
        assert_eq!(h.prefetch_step(&stream, 0, &cfg), 1);
        assert!((0..3).all(|l| h.lookup(l, 9)));
        assert_eq!(h.counters.misses, vec![0, 0, 0]);
    }

    #[test]
    fn l2_prefetch_leaves_l1_alone() {
        let mut h = hier(FillPolicy::PartitionedFifo { partitions: 4 });
        let stream = InstructionStream::new(vec![Instruction::memory(1000, 9, 2)]);
        let cfg = PrefetchConfig {
            enabled: true,
            degree: 4,
            target_level: 2,
            partition_local: true,
        };
        assert_eq!(h.prefetch_step(&stream, 2, &cfg), 1);
        assert!(!h.lookup(0, 9) && h.lookup(1, 9) && h.lookup(2, 9));
    }

    #[test]
    fn ideal_policy_always_hits() {
        let mut h = hier(FillPolicy::Ideal);
        assert!(h.lookup(0, 12345));
        assert_eq!(h.ideal_access(0, 12345), 0.0);
        assert_eq!(h.counters.accesses, 1);
        assert_eq!(h.fill(0, 3, 0), None);
        assert!(h.level(0).is_empty());
    }
}
