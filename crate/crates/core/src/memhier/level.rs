//! One fully associative cache level with FIFO replacement.
//!
//! A level is a set of FIFO queues ("partitions") whose capacities sum to the
//! level capacity. A globally managed level has one queue. A thread-partitioned
//! level has one queue per thread: lookups search the whole level, but a fill
//! may only evict from the filling thread's own queue.

use std::collections::{HashMap, VecDeque};

use crate::workload::{BlockId, ThreadId};

/// How an L1 chooses where a new block goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FillPolicy {
    GlobalFifo,
    PartitionedFifo {
        partitions: usize,
    },
    /// Every access hits; nothing is ever filled.
    Ideal,
}

impl FillPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            FillPolicy::GlobalFifo => "global",
            FillPolicy::PartitionedFifo { .. } => "partitioned",
            FillPolicy::Ideal => "ideal",
        }
    }
}

/// Which queue a fill is allowed to evict from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillTarget {
    /// The owner's partition (partition 0 on a single-queue level).
    Owner,
    /// The owner's partition while it has room; otherwise evict the oldest
    /// block in the whole level and take its slot.
    Oldest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resident {
    pub address: BlockId,
    pub owner: ThreadId,
    pub serial: u64,
}

#[derive(Debug, Clone)]
struct Partition {
    capacity: usize,
    entries: VecDeque<Resident>,
}

#[derive(Debug, Clone)]
pub struct CacheLevel {
    capacity: usize,
    partitions: Vec<Partition>,
    // address -> partition holding it
    index: HashMap<BlockId, usize>,
    next_serial: u64,
}

impl CacheLevel {
    /// A single-queue FIFO level.
    pub fn global(capacity: usize) -> Result<Self, String> {
        Self::partitioned(capacity, 1)
    }

    /// A level split into `partitions` FIFO queues. Capacities are
    /// `capacity / partitions`, with the remainder going one block each to
    /// the lowest-indexed partitions.
    pub fn partitioned(capacity: usize, partitions: usize) -> Result<Self, String> {
        if capacity == 0 {
            return Err("cache capacity must be at least 1".into());
        }
        if partitions == 0 {
            return Err("partition count must be at least 1".into());
        }
        if partitions > capacity {
            return Err(format!("{partitions} partitions exceed capacity {capacity}"));
        }
        let base = capacity / partitions;
        let extra = capacity % partitions;
        let partitions = (0..partitions)
            .map(|p| Partition {
                capacity: base + usize::from(p < extra),
                entries: VecDeque::new(),
            })
            .collect();
        Ok(Self {
            capacity,
            partitions,
            index: HashMap::new(),
            next_serial: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn partition_count(&self) -> usize {
        self.partitions.len()
    }

    pub fn partition_capacity(&self, partition: usize) -> usize {
        self.partitions[partition].capacity
    }

    pub fn partition_len(&self, partition: usize) -> usize {
        self.partitions[partition].entries.len()
    }

    /// Membership across the whole level, ignoring partitions.
    pub fn contains(&self, address: BlockId) -> bool {
        self.index.contains_key(&address)
    }

    /// Resident blocks of one partition, oldest first.
    pub fn partition_entries(&self, partition: usize) -> impl Iterator<Item = &Resident> {
        self.partitions[partition].entries.iter()
    }

    /// Resident addresses of the whole level, oldest first.
    pub fn addresses(&self) -> Vec<BlockId> {
        let mut all: Vec<&Resident> = self.partitions.iter().flat_map(|p| &p.entries).collect();
        all.sort_by_key(|r| r.serial);
        all.into_iter().map(|r| r.address).collect()
    }

    fn owner_partition(&self, owner: ThreadId) -> usize {
        owner as usize % self.partitions.len()
    }

    /// Insert `address` for `owner`, returning the evicted block if any.
    /// Filling a resident block is a no-op.
    pub fn fill(&mut self, address: BlockId, owner: ThreadId, target: FillTarget) -> Option<BlockId> {
        if self.contains(address) {
            return None;
        }
        let own = self.owner_partition(owner);
        let partition = match target {
            FillTarget::Owner => own,
            FillTarget::Oldest => {
                let p = &self.partitions[own];
                if p.entries.len() < p.capacity {
                    own
                } else {
                    self.oldest_partition().unwrap_or(own)
                }
            }
        };
        let evicted = {
            let p = &mut self.partitions[partition];
            if p.entries.len() >= p.capacity {
                p.entries.pop_front().map(|r| r.address)
            } else {
                None
            }
        };
        if let Some(victim) = evicted {
            self.index.remove(&victim);
        }
        let serial = self.next_serial;
        self.next_serial += 1;
        let p = &mut self.partitions[partition];
        p.entries.push_back(Resident { address, owner, serial });
        debug_assert!(p.entries.len() <= p.capacity, "partition over capacity");
        self.index.insert(address, partition);
        debug_assert!(self.index.len() <= self.capacity, "level over capacity");
        evicted
    }

    fn oldest_partition(&self) -> Option<usize> {
        self.partitions
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.entries.front().map(|r| (r.serial, i)))
            .min()
            .map(|(_, i)| i)
    }

    /// Residency index and queues hold the same address set.
    pub fn is_consistent(&self) -> bool {
        let queued: usize = self.partitions.iter().map(|p| p.entries.len()).sum();
        queued == self.index.len()
            && self.partitions.iter().enumerate().all(|(i, p)| {
                p.entries.len() <= p.capacity && p.entries.iter().all(|r| self.index.get(&r.address) == Some(&i))
            })
    }
}
