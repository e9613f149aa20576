//! Per-thread front end: decode into a bounded instruction window, retire
//! out of it.
//!
//! Decode moves instructions in order from the stream head into the window.
//! Execute retires in two passes over the window: first every non-memory
//! instruction, then every memory instruction whose block is resident in L1.
//! Memory instructions that miss wait in the window until the cache process
//! brings their block in.

use crate::scalar::Scalar;
use crate::workload::{Instruction, InstructionStream};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig<T> {
    pub decode_width: usize,
    pub decode_period: T,
    pub decode_sigma: T,
    pub execute_width: usize,
    pub execute_period: T,
    pub execute_sigma: T,
    /// Maximum window occupancy; 0 leaves the window unbounded.
    pub window_capacity: usize,
    /// Enforce `execute_width` across both retirement passes.
    pub strict_width: bool,
}

impl<T: Scalar> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            decode_width: 4,
            decode_period: T::of(0.4),
            decode_sigma: T::of(1.0),
            execute_width: 8,
            execute_period: T::of(0.4),
            execute_sigma: T::of(0.5),
            window_capacity: 32,
            strict_width: true,
        }
    }
}

impl<T: Scalar> PipelineConfig<T> {
    pub fn validate(&self) -> Result<(), String> {
        if self.decode_width == 0 || self.execute_width == 0 {
            return Err("decode_width and execute_width must be at least 1".into());
        }
        if !(self.decode_period > T::zero() && self.execute_period > T::zero()) {
            return Err("decode_period and execute_period must be positive".into());
        }
        if !(self.decode_sigma >= T::zero() && self.execute_sigma >= T::zero()) {
            return Err("jitter sigmas must be non-negative".into());
        }
        Ok(())
    }
}

/// A decoded, not yet retired instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub inst: Instruction,
    /// The instruction has performed its first L1 lookup.
    pub accessed: bool,
    /// The cache process has fetched this instruction's block at least once.
    pub serviced: bool,
}

impl Slot {
    fn new(inst: Instruction) -> Self {
        Self {
            inst,
            accessed: false,
            serviced: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineState {
    pub window: Vec<Slot>,
    pub retired: u64,
    pub max_window_occupancy: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExecuteOutcome {
    pub retired: usize,
    /// Memory instructions whose first L1 lookup happened in this step.
    pub first_accesses: usize,
}

impl PipelineState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn occupancy(&self) -> usize {
        self.window.len()
    }

    /// Move up to `decode_width` instructions into the window.
    pub fn decode_step<T: Scalar>(&mut self, stream: &mut InstructionStream, cfg: &PipelineConfig<T>) -> usize {
        let mut moved = 0;
        while moved < cfg.decode_width {
            if cfg.window_capacity > 0 && self.window.len() >= cfg.window_capacity {
                break;
            }
            let Some(inst) = stream.take() else { break };
            self.window.push(Slot::new(inst));
            moved += 1;
        }
        self.max_window_occupancy = self.max_window_occupancy.max(self.window.len());
        debug_assert!(cfg.window_capacity == 0 || self.window.len() <= cfg.window_capacity);
        moved
    }

    /// Retire what can be retired. `l1_hit` answers whether an address is
    /// resident in L1.
    pub fn execute_step<T: Scalar, F>(&mut self, cfg: &PipelineConfig<T>, mut l1_hit: F) -> ExecuteOutcome
    where
        F: FnMut(&Instruction) -> bool,
    {
        let mut budget = if cfg.strict_width {
            cfg.execute_width
        } else {
            usize::MAX
        };
        let mut outcome = ExecuteOutcome::default();

        // Pass 1: non-memory instructions.
        let mut keep = Vec::with_capacity(self.window.len());
        for slot in self.window.drain(..) {
            if budget > 0 && !slot.inst.accesses_memory {
                budget -= 1;
                outcome.retired += 1;
            } else {
                keep.push(slot);
            }
        }

        // Pass 2: memory instructions whose block is in L1.
        let mut remaining = Vec::with_capacity(keep.len());
        for mut slot in keep {
            if budget > 0 && slot.inst.accesses_memory {
                if !slot.accessed {
                    slot.accessed = true;
                    outcome.first_accesses += 1;
                }
                if l1_hit(&slot.inst) {
                    budget -= 1;
                    outcome.retired += 1;
                    continue;
                }
            }
            remaining.push(slot);
        }
        self.window = remaining;
        self.retired += outcome.retired as u64;
        outcome
    }
}

/// Termination test: every instruction of the workload has retired.
pub fn check_done(retired: u64, workload_total: u64) -> bool {
    retired == workload_total
}
