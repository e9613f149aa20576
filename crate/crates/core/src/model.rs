//! The simulated processor: per-thread decode and execute processes sharing
//! one cache process and one memory hierarchy.
//!
//! Every process re-arms itself after a hold. A process whose activation
//! changed nothing is parked instead of polling: its hold sequence is kept,
//! and when something it depends on changes it is re-armed at the first
//! activation time of that sequence not earlier than now. Skipped
//! activations would have been no-ops, so parking only changes how ties
//! between simultaneous events are ordered.

use rand_chacha::ChaCha8Rng;

use crate::config::SimConfig;
use crate::engine::{Engine, Process};
use crate::error::SimError;
use crate::memhier::{FillPolicy, Hierarchy};
use crate::metrics::RunSummary;
use crate::pipeline::{check_done, PipelineState};
use crate::rng::{self, Jitter, Purpose, SHARED_THREAD};
use crate::scalar::Scalar;
use crate::workload::{generate_stream_with_count, InstructionStream, ThreadId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Decode(ThreadId),
    Execute(ThreadId),
    Cache,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ClockState {
    Scheduled,
    Parked,
    Stopped,
}

/// Hold sequence of one process.
#[derive(Debug, Clone)]
struct ProcessClock<T> {
    hold: Jitter<T>,
    rng: ChaCha8Rng,
    next_due: T,
    state: ClockState,
}

impl<T: Scalar> ProcessClock<T> {
    fn new(hold: Jitter<T>, rng: ChaCha8Rng) -> Self {
        Self {
            hold,
            rng,
            next_due: T::zero(),
            state: ClockState::Scheduled,
        }
    }

    fn draw(&mut self) -> T {
        self.hold.sample(&mut self.rng)
    }

    /// Schedule the next activation after a hold, or park.
    fn rearm(&mut self, act: Activation, engine: &mut Engine<T, Activation>, park: bool) -> Result<(), SimError> {
        let hold = self.draw();
        self.rearm_after(act, engine, hold, park)
    }

    fn rearm_after(
        &mut self,
        act: Activation,
        engine: &mut Engine<T, Activation>,
        hold: T,
        park: bool,
    ) -> Result<(), SimError> {
        self.next_due = engine.now() + hold;
        if park {
            self.state = ClockState::Parked;
            Ok(())
        } else {
            self.state = ClockState::Scheduled;
            engine.schedule_at(act, self.next_due).map(|_| ())
        }
    }

    /// Re-arm a parked process; returns how many activations were skipped.
    fn wake(&mut self, act: Activation, engine: &mut Engine<T, Activation>) -> Result<u64, SimError> {
        if self.state != ClockState::Parked {
            return Ok(0);
        }
        let mut skipped = 0;
        while self.next_due < engine.now() {
            self.next_due = self.next_due + self.draw();
            skipped += 1;
        }
        self.state = ClockState::Scheduled;
        engine.schedule_at(act, self.next_due)?;
        Ok(skipped)
    }

    fn stop(&mut self) {
        self.state = ClockState::Stopped;
    }
}

struct ThreadContext<T> {
    stream: InstructionStream,
    decode: ProcessClock<T>,
    execute: ProcessClock<T>,
}

/// One configured processor instance, ready to be driven by an engine.
pub struct Simulation<T> {
    cfg: SimConfig<T>,
    seed: u64,
    hierarchy: Hierarchy<T>,
    pipelines: Vec<PipelineState>,
    threads: Vec<ThreadContext<T>>,
    cache: ProcessClock<T>,
    cache_base: T,
    next_service_thread: usize,
    total: u64,
    retired: u64,
    memory_instructions: u64,
    done: bool,
    park_idle: bool,
}

impl<T: Scalar> Simulation<T> {
    /// Build the processor for `seed`, generating each thread's workload.
    pub fn new(cfg: &SimConfig<T>, seed: u64) -> Result<Self, SimError> {
        cfg.validate().map_err(|e| SimError::Config(e.to_string()))?;
        let streams = (0..cfg.threads)
            .map(|t| {
                generate_stream_with_count(&cfg.workload, cfg.thread_instructions(t), t as ThreadId, seed)
                    .map_err(SimError::Config)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::with_streams(cfg, seed, streams)
    }

    /// Build the processor over given per-thread streams (thread `i` runs
    /// `streams[i]`).
    pub fn with_streams(cfg: &SimConfig<T>, seed: u64, streams: Vec<InstructionStream>) -> Result<Self, SimError> {
        if streams.len() != cfg.threads {
            return Err(SimError::Config(format!(
                "{} streams for {} threads",
                streams.len(),
                cfg.threads
            )));
        }
        let det = cfg.deterministic_latencies;
        let p = &cfg.pipeline;
        let hierarchy = Hierarchy::new(&cfg.mem, det)?;
        let total = streams.iter().map(|s| s.len() as u64).sum();
        let memory_instructions = streams.iter().map(|s| s.memory_count() as u64).sum();
        let threads = streams
            .into_iter()
            .enumerate()
            .map(|(t, stream)| {
                let t = t as ThreadId;
                ThreadContext {
                    stream,
                    decode: ProcessClock::new(
                        Jitter::new(p.decode_period, p.decode_sigma, det),
                        rng::stream(seed, t, Purpose::DecodeHold),
                    ),
                    execute: ProcessClock::new(
                        Jitter::new(p.execute_period, p.execute_sigma, det),
                        rng::stream(seed, t, Purpose::ExecuteHold),
                    ),
                }
            })
            .collect::<Vec<_>>();
        let cache = ProcessClock::new(
            Jitter::new(cfg.mem.base_period, T::zero(), true),
            rng::stream(seed, SHARED_THREAD, Purpose::CacheLatency),
        );
        Ok(Self {
            pipelines: vec![PipelineState::new(); threads.len()],
            threads,
            cache,
            cache_base: cfg.mem.base_period,
            hierarchy,
            cfg: cfg.clone(),
            seed,
            next_service_thread: 0,
            total,
            retired: 0,
            memory_instructions,
            done: total == 0,
            park_idle: true,
        })
    }

    /// Keep idle processes polling instead of parking them.
    pub fn set_polling(&mut self, polling: bool) {
        self.park_idle = !polling;
    }

    /// Schedule every process at time zero: each thread's decode then
    /// execute, in thread order, then the cache process.
    pub fn start(&self, engine: &mut Engine<T, Activation>) -> Result<(), SimError> {
        for t in 0..self.threads.len() as ThreadId {
            engine.schedule(Activation::Decode(t), T::zero())?;
            engine.schedule(Activation::Execute(t), T::zero())?;
        }
        if self.hierarchy.policy() != FillPolicy::Ideal {
            engine.schedule(Activation::Cache, T::zero())?;
        }
        Ok(())
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn retired(&self) -> u64 {
        self.retired
    }

    pub fn workload_total(&self) -> u64 {
        self.total
    }

    pub fn hierarchy(&self) -> &Hierarchy<T> {
        &self.hierarchy
    }

    pub fn pipelines(&self) -> &[PipelineState] {
        &self.pipelines
    }

    pub fn streams(&self) -> impl Iterator<Item = &InstructionStream> {
        self.threads.iter().map(|t| &t.stream)
    }

    /// Instructions still in streams or windows.
    pub fn in_flight(&self) -> u64 {
        self.threads
            .iter()
            .zip(&self.pipelines)
            .map(|(t, p)| (t.stream.remaining() + p.window.len()) as u64)
            .sum()
    }

    /// Snapshot of a terminated run.
    pub fn summarize(&self, engine: &Engine<T, Activation>) -> Result<RunSummary<T>, SimError> {
        if !self.done {
            return Err(SimError::NotTerminated {
                retired: self.retired,
                total: self.total,
            });
        }
        let c = &self.hierarchy.counters;
        Ok(RunSummary {
            accesses: c.accesses,
            l1_misses: c.l1_misses(),
            l2_misses: c.l2_misses(),
            l3_misses: c.l3_misses(),
            retired: self.retired,
            memory_instructions: self.memory_instructions,
            prefetches: c.prefetches,
            sim_time: engine.now(),
            max_window_occupancy: self.pipelines.iter().map(|p| p.max_window_occupancy).max().unwrap_or(0),
            config_fingerprint: self.cfg.fingerprint(),
            seed: self.seed,
        })
    }

    fn wake_execute_all(&mut self, engine: &mut Engine<T, Activation>) -> Result<(), SimError> {
        for (t, ctx) in self.threads.iter_mut().enumerate() {
            ctx.execute.wake(Activation::Execute(t as ThreadId), engine)?;
        }
        Ok(())
    }

    /// Wake parked execute processes whose window now holds an L1 hit.
    fn wake_ready_executes(&mut self, engine: &mut Engine<T, Activation>) -> Result<(), SimError> {
        for (t, ctx) in self.threads.iter_mut().enumerate() {
            if ctx.execute.state != ClockState::Parked {
                continue;
            }
            let ready = self.pipelines[t]
                .window
                .iter()
                .any(|s| s.inst.accesses_memory && self.hierarchy.l1_hit(s.inst.address));
            if ready {
                ctx.execute.wake(Activation::Execute(t as ThreadId), engine)?;
            }
        }
        Ok(())
    }

    fn wake_cache(&mut self, engine: &mut Engine<T, Activation>) -> Result<(), SimError> {
        let skipped = self.cache.wake(Activation::Cache, engine)?;
        if !self.threads.is_empty() {
            self.next_service_thread = (self.next_service_thread + skipped as usize) % self.threads.len();
        }
        Ok(())
    }

    fn decode(&mut self, t: ThreadId, engine: &mut Engine<T, Activation>) -> Result<(), SimError> {
        let i = t as usize;
        let ctx = &mut self.threads[i];
        let moved = self.pipelines[i].decode_step(&mut ctx.stream, &self.cfg.pipeline);
        let prefetching = self.cfg.prefetch.is_active();
        let issued = if prefetching {
            self.hierarchy.prefetch_step(&ctx.stream, t, &self.cfg.prefetch)
        } else {
            0
        };
        let ctx = &mut self.threads[i];
        if ctx.stream.is_drained() {
            ctx.decode.stop();
        } else {
            let park = self.park_idle && moved == 0 && !prefetching;
            ctx.decode.rearm(Activation::Decode(t), engine, park)?;
        }
        if moved > 0 || issued > 0 {
            if moved > 0 {
                self.threads[i].execute.wake(Activation::Execute(t), engine)?;
            }
            if issued > 0 && self.cfg.prefetch.target_level == 1 {
                self.wake_execute_all(engine)?;
            }
            self.wake_cache(engine)?;
        }
        Ok(())
    }

    fn execute(&mut self, t: ThreadId, engine: &mut Engine<T, Activation>) -> Result<(), SimError> {
        let i = t as usize;
        let hier = &self.hierarchy;
        let out = self.pipelines[i].execute_step(&self.cfg.pipeline, |inst| hier.l1_hit(inst.address));
        if out.first_accesses > 0 {
            self.hierarchy.counters.record_access(t, out.first_accesses as u64);
        }
        self.retired += out.retired as u64;
        self.done = check_done(self.retired, self.total);
        let ctx = &mut self.threads[i];
        if ctx.stream.is_drained() && self.pipelines[i].window.is_empty() {
            ctx.execute.stop();
        } else {
            let park = self.park_idle && out.retired == 0;
            ctx.execute.rearm(Activation::Execute(t), engine, park)?;
        }
        if out.retired > 0 {
            self.threads[i].decode.wake(Activation::Decode(t), engine)?;
        }
        Ok(())
    }

    fn service(&mut self, engine: &mut Engine<T, Activation>) -> Result<(), SimError> {
        let n = self.pipelines.len();
        let out = self.hierarchy.service_misses(
            &mut self.pipelines,
            self.next_service_thread,
            self.cfg.mem.mlp_width,
            &mut self.cache.rng,
        );
        self.next_service_thread = (self.next_service_thread + 1) % n.max(1);
        let park = self.park_idle && out.serviced == 0;
        let hold = self.cache_base + out.latency;
        self.cache.rearm_after(Activation::Cache, engine, hold, park)?;
        if out.serviced > 0 {
            self.wake_ready_executes(engine)?;
        }
        Ok(())
    }
}

impl<T: Scalar> Process<T> for Simulation<T> {
    type Activation = Activation;

    fn activate(&mut self, activation: Activation, engine: &mut Engine<T, Activation>) -> Result<(), SimError> {
        match activation {
            Activation::Decode(t) => self.decode(t, engine),
            Activation::Execute(t) => self.execute(t, engine),
            Activation::Cache => self.service(engine),
        }
    }
}

/// Build, run to completion, and summarize one configuration for one seed.
pub fn run_single<T: Scalar>(cfg: &SimConfig<T>, seed: u64) -> Result<RunSummary<T>, SimError> {
    let sim = Simulation::new(cfg, seed)?;
    run_simulation(sim)
}

/// Drive an already built simulation to completion.
pub fn run_simulation<T: Scalar>(mut sim: Simulation<T>) -> Result<RunSummary<T>, SimError> {
    let mut engine = Engine::new();
    if sim.is_done() {
        return sim.summarize(&engine);
    }
    sim.start(&mut engine)?;
    engine.run(&mut sim, |m, _| m.is_done())?;
    sim.summarize(&engine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_config;
    use crate::workload::Instruction;

    fn det(text: &str) -> SimConfig<f64> {
        load_config(&format!("deterministic=true\n{text}")).unwrap()
    }

    #[test]
    fn summary_before_termination_is_an_error() {
        let cfg = det("instructions=10");
        let sim = Simulation::new(&cfg, 1).unwrap();
        let engine = Engine::new();
        assert!(matches!(sim.summarize(&engine), Err(SimError::NotTerminated { .. })));
    }

    #[test]
    fn compute_only_stream_is_decode_bound() {
        // 8 compute instructions, decode width 4 every 0.4: decode at 0 and
        // 0.4, execute retires them at 0 and 0.4
        let cfg = det("instructions=8\nmem_fraction=0");
        let s = run_single(&cfg, 1).unwrap();
        assert_eq!(s.retired, 8);
        assert_eq!(s.sim_time, 0.4);
        assert_eq!(s.accesses, 0);
    }

    #[test]
    fn single_miss_hand_trace() {
        // one memory instruction to block 7, then nothing else.
        // t=0: decode moves it, execute looks (miss), cache services it (fill,
        // hold 1 + 60); t=0.4: execute retires it.
        let cfg = det("");
        let stream = InstructionStream::new(vec![Instruction::memory(1000, 7, 0)]);
        let sim = Simulation::with_streams(&cfg, 0, vec![stream]).unwrap();
        let s = run_simulation(sim).unwrap();
        assert_eq!((s.accesses, s.l1_misses, s.l2_misses, s.l3_misses), (1, 1, 1, 1));
        assert_eq!(s.sim_time, 0.4);
    }

    #[test]
    fn polling_and_parking_agree_on_counts() {
        for text in ["instructions=3000", "instructions=3000\nthreads=3\npolicy=partitioned"] {
            let cfg = det(text);
            let parked = run_single(&cfg, 5).unwrap();
            let mut sim = Simulation::new(&cfg, 5).unwrap();
            sim.set_polling(true);
            let polled = run_simulation(sim).unwrap();
            assert_eq!(parked.retired, polled.retired);
            assert_eq!(parked.accesses, polled.accesses);
            assert_eq!(parked.l1_misses, polled.l1_misses);
            assert_eq!(parked.sim_time, polled.sim_time);
        }
    }

    #[test]
    fn ideal_policy_never_misses() {
        let cfg = det("instructions=4000\npolicy=ideal");
        let s = run_single(&cfg, 3).unwrap();
        assert_eq!(s.l1_misses, 0);
        assert_eq!(s.accesses, s.memory_instructions);
        // decode bound: 1000 activations of width 4, the last at 999 * 0.4
        assert!((s.sim_time - 999.0 * 0.4).abs() < 1e-6, "{}", s.sim_time);
    }

    #[test]
    fn default_run_retires_everything() {
        let cfg: SimConfig<f64> = SimConfig::default();
        let s = run_single(&cfg, 11).unwrap();
        assert_eq!(s.retired, 20_000);
        assert!(s.counters_ordered());
        assert!(s.max_window_occupancy <= 32);
    }
}
