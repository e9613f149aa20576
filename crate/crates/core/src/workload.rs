//! Synthetic instruction streams and their text trace format.
//!
//! Each instruction is independently memory-accessing with probability
//! `mem_fraction`; memory addresses are block ids drawn from a symmetric
//! triangular distribution over `[addr_low, addr_high]`, floored to an
//! integer. Randomness is drawn in `f64` from the thread's workload stream.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Triangular};

use crate::error::TraceError;
use crate::rng::{self, Purpose};

pub type ThreadId = u32;
pub type BlockId = u64;

/// One unit of work. Non-memory instructions carry address 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub seq: u64,
    pub accesses_memory: bool,
    pub address: BlockId,
    pub thread: ThreadId,
}

impl Instruction {
    pub fn compute(seq: u64, thread: ThreadId) -> Self {
        Self {
            seq,
            accesses_memory: false,
            address: 0,
            thread,
        }
    }

    pub fn memory(seq: u64, address: BlockId, thread: ThreadId) -> Self {
        Self {
            seq,
            accesses_memory: true,
            address,
            thread,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadConfig {
    /// Instructions per thread.
    pub count: u64,
    pub mem_fraction: f64,
    pub addr_low: BlockId,
    pub addr_high: BlockId,
    pub seq_base: u64,
    /// Address shift applied per thread id; 0 shares one address range.
    pub per_thread_offset: BlockId,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            count: 20_000,
            mem_fraction: 0.225,
            addr_low: 1,
            addr_high: 500,
            seq_base: 1000,
            per_thread_offset: 0,
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.count < 1 {
            return Err("count must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.mem_fraction) {
            return Err(format!("mem_fraction {} outside [0, 1]", self.mem_fraction));
        }
        if self.addr_low > self.addr_high {
            return Err(format!(
                "addr_low {} exceeds addr_high {}",
                self.addr_low, self.addr_high
            ));
        }
        if self.addr_low == 0 {
            return Err("addr_low must be at least 1; block 0 marks non-memory instructions".into());
        }
        Ok(())
    }
}

/// Floor of a symmetric triangular sample on `[low, high]`, clamped into range.
pub fn sample_address<R: Rng + ?Sized>(rng: &mut R, low: BlockId, high: BlockId) -> Result<BlockId, String> {
    if low > high {
        return Err(format!("low {low} exceeds high {high}"));
    }
    if low == high {
        return Ok(low);
    }
    let (lo, hi) = (low as f64, high as f64);
    let tri = Triangular::new(lo, hi, (lo + hi) / 2.0).map_err(|e| e.to_string())?;
    let x = tri.sample(rng).floor();
    Ok((x as BlockId).clamp(low, high))
}

/// Ordered instruction sequence with a consumption cursor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstructionStream {
    instructions: Vec<Instruction>,
    cursor: usize,
}

impl InstructionStream {
    pub fn new(instructions: Vec<Instruction>) -> Self {
        Self {
            instructions,
            cursor: 0,
        }
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Instructions not yet consumed.
    pub fn pending(&self) -> &[Instruction] {
        &self.instructions[self.cursor..]
    }

    pub fn remaining(&self) -> usize {
        self.instructions.len() - self.cursor
    }

    pub fn is_drained(&self) -> bool {
        self.cursor == self.instructions.len()
    }

    pub fn memory_count(&self) -> usize {
        self.instructions.iter().filter(|i| i.accesses_memory).count()
    }

    /// Consume the head instruction.
    pub fn take(&mut self) -> Option<Instruction> {
        let inst = self.instructions.get(self.cursor).copied()?;
        self.cursor += 1;
        Some(inst)
    }

    /// Addresses of the next `k` memory instructions not yet consumed.
    pub fn upcoming_addresses(&self, k: usize) -> impl Iterator<Item = BlockId> + '_ {
        self.pending()
            .iter()
            .filter(|i| i.accesses_memory)
            .take(k)
            .map(|i| i.address)
    }

    /// Split a multi-thread trace into per-thread streams, ordered by thread id.
    pub fn split_by_thread(&self) -> Vec<InstructionStream> {
        let threads = self
            .instructions
            .iter()
            .map(|i| i.thread as usize + 1)
            .max()
            .unwrap_or(0);
        let mut out = vec![Vec::new(); threads];
        for inst in &self.instructions {
            out[inst.thread as usize].push(*inst);
        }
        out.into_iter().map(InstructionStream::new).collect()
    }
}

/// Generate the instruction stream of one thread. Pure in `(cfg, thread, seed)`.
pub fn generate_stream(cfg: &WorkloadConfig, thread: ThreadId, seed: u64) -> Result<InstructionStream, String> {
    generate_stream_with_count(cfg, cfg.count, thread, seed)
}

/// As [`generate_stream`] with an explicit instruction count.
pub fn generate_stream_with_count(
    cfg: &WorkloadConfig,
    count: u64,
    thread: ThreadId,
    seed: u64,
) -> Result<InstructionStream, String> {
    cfg.validate()?;
    let mut rng = rng::stream(seed, thread, Purpose::Workload);
    let offset = u64::from(thread) * cfg.per_thread_offset;
    let mut instructions = Vec::with_capacity(count as usize);
    for seq in cfg.seq_base..cfg.seq_base + count {
        let inst = if rng.random::<f64>() < cfg.mem_fraction {
            let address = sample_address(&mut rng, cfg.addr_low, cfg.addr_high)?;
            Instruction::memory(seq, address + offset, thread)
        } else {
            Instruction::compute(seq, thread)
        };
        instructions.push(inst);
    }
    Ok(InstructionStream::new(instructions))
}

pub const TRACE_HEADER: &str = "seq,mem,addr,thread";

/// Write a trace: header line, then `seq,mem,addr,thread` per instruction.
pub fn write_trace<W: Write>(stream: &InstructionStream, mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "{TRACE_HEADER}")?;
    for i in stream.instructions() {
        writeln!(
            sink,
            "{},{},{},{}",
            i.seq,
            u8::from(i.accesses_memory),
            i.address,
            i.thread
        )?;
    }
    sink.flush()
}

pub fn read_trace<R: BufRead>(source: R) -> Result<InstructionStream, TraceError> {
    let mut lines = source.lines();
    let err = |line: usize, message: String| TraceError::Parse { line, message };
    match lines.next() {
        Some(header) => {
            let header = header?;
            if header != TRACE_HEADER {
                return Err(err(1, format!("expected header `{TRACE_HEADER}`, found `{header}`")));
            }
        }
        None => return Err(err(1, "missing header".into())),
    }
    let mut instructions = Vec::new();
    let mut last_seq: Vec<Option<u64>> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(err(lineno, format!("expected 4 fields, found {}", fields.len())));
        }
        let num = |i: usize, name: &str| {
            fields[i]
                .parse::<u64>()
                .map_err(|_| err(lineno, format!("{name} `{}` is not a non-negative integer", fields[i])))
        };
        let seq = num(0, "seq")?;
        let accesses_memory = match fields[1] {
            "0" => false,
            "1" => true,
            other => return Err(err(lineno, format!("mem `{other}` must be 0 or 1"))),
        };
        let address = num(2, "addr")?;
        let thread = ThreadId::try_from(num(3, "thread")?).map_err(|_| err(lineno, "thread id out of range".into()))?;
        if !accesses_memory && address != 0 {
            return Err(err(lineno, format!("non-memory instruction has address {address}")));
        }
        if accesses_memory && address == 0 {
            return Err(err(lineno, "memory instruction has reserved address 0".into()));
        }
        let slot = thread as usize;
        if last_seq.len() <= slot {
            last_seq.resize(slot + 1, None);
        }
        if let Some(prev) = last_seq[slot] {
            if seq <= prev {
                return Err(err(
                    lineno,
                    format!("seq {seq} does not increase past {prev} for thread {thread}"),
                ));
            }
        }
        last_seq[slot] = Some(seq);
        instructions.push(Instruction {
            seq,
            accesses_memory,
            address,
            thread,
        });
    }
    Ok(InstructionStream::new(instructions))
}
