//! Brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simcache::engine::Process;
use simcache::memhier::{CacheLevel, FillTarget};
use simcache::{Activation, Engine, SimError, Simulation};

/// Outcome of one access against a level: a hit, or a miss with the victim.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Hit,
    Miss(Option<u64>),
}

/// One queue, fixed capacity, evict the front.
pub fn fifo_oracle(capacity: usize, accesses: &[u64]) -> Vec<Event> {
    let mut q: VecDeque<u64> = VecDeque::new();
    accesses
        .iter()
        .map(|&a| {
            if q.contains(&a) {
                return Event::Hit;
            }
            let victim = if q.len() == capacity { q.pop_front() } else { None };
            q.push_back(a);
            Event::Miss(victim)
        })
        .collect()
}

/// One queue per partition; hits search every queue, fills go to the
/// owner's queue only.
pub fn partition_oracle(capacity: usize, partitions: usize, accesses: &[(u64, u32)]) -> Vec<Event> {
    let caps: Vec<usize> = (0..partitions)
        .map(|p| {
            let mut c = 0;
            // deal the capacity out one block at a time, lowest partition first
            for b in 0..capacity {
                if b % partitions == p {
                    c += 1;
                }
            }
            c
        })
        .collect();
    let mut queues: Vec<VecDeque<u64>> = vec![VecDeque::new(); partitions];
    accesses
        .iter()
        .map(|&(a, owner)| {
            if queues.iter().any(|q| q.contains(&a)) {
                return Event::Hit;
            }
            let p = owner as usize % partitions;
            let q = &mut queues[p];
            let victim = if q.len() == caps[p] { q.pop_front() } else { None };
            q.push_back(a);
            Event::Miss(victim)
        })
        .collect()
}

/// Drive a level with lookup-then-fill on miss.
pub fn level_events(level: &mut CacheLevel, accesses: &[(u64, u32)]) -> Vec<Event> {
    accesses
        .iter()
        .map(|&(a, owner)| {
            if level.contains(a) {
                Event::Hit
            } else {
                Event::Miss(level.fill(a, owner, FillTarget::Owner))
            }
        })
        .collect()
}

/// A random access string: capacity, partitions, and (address, owner) pairs.
pub struct AccessCase {
    pub capacity: usize,
    pub partitions: usize,
    pub accesses: Vec<(u64, u32)>,
}

pub fn random_case(rng: &mut ChaCha8Rng) -> AccessCase {
    let capacity = rng.random_range(1..=8);
    let partitions = rng.random_range(1..=capacity);
    let len = rng.random_range(0..=200);
    let accesses = (0..len)
        .map(|_| (rng.random_range(1..=16), rng.random_range(0..8)))
        .collect();
    AccessCase {
        capacity,
        partitions,
        accesses,
    }
}

pub fn random_cases(seed: u64, n: usize) -> Vec<AccessCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_case(&mut rng)).collect()
}

/// Checks one case against both oracles; returns a description on mismatch.
pub fn check_case(case: &AccessCase) -> Result<(), String> {
    let addrs: Vec<u64> = case.accesses.iter().map(|&(a, _)| a).collect();
    let mut global = CacheLevel::global(case.capacity)?;
    let got = level_events(&mut global, &case.accesses);
    if got != fifo_oracle(case.capacity, &addrs) {
        return Err(format!("global fifo diverged, capacity {}", case.capacity));
    }
    let mut part = CacheLevel::partitioned(case.capacity, case.partitions)?;
    let got = level_events(&mut part, &case.accesses);
    if got != partition_oracle(case.capacity, case.partitions, &case.accesses) {
        return Err(format!(
            "partitioned fifo diverged, capacity {} partitions {}",
            case.capacity, case.partitions
        ));
    }
    let mut one = CacheLevel::partitioned(case.capacity, 1)?;
    let mut global = CacheLevel::global(case.capacity)?;
    if level_events(&mut one, &case.accesses) != level_events(&mut global, &case.accesses)
        || one.addresses() != global.addresses()
    {
        return Err("one partition differs from global".into());
    }
    Ok(())
}

/// Wraps a simulation and logs every activation with its time.
pub struct Traced {
    pub sim: Simulation,
    pub log: Vec<(f64, Activation)>,
}

impl Process<f64> for Traced {
    type Activation = Activation;

    fn activate(&mut self, activation: Activation, engine: &mut Engine<Activation>) -> Result<(), SimError> {
        self.log.push((engine.now(), activation));
        self.sim.activate(activation, engine)
    }
}

/// Run to completion, returning the activation log and the summary.
pub fn traced_run(sim: Simulation) -> (Vec<(f64, Activation)>, simcache::RunSummary) {
    let mut traced = Traced { sim, log: Vec::new() };
    let mut engine = Engine::new();
    traced.sim.start(&mut engine).unwrap();
    engine.run(&mut traced, |t, _| t.sim.is_done()).unwrap();
    let summary = traced.sim.summarize(&engine).unwrap();
    (traced.log, summary)
}

/// Probability that the floor of a symmetric triangular variate on
/// `[low, high]` equals each of `low..high`, by composite Simpson quadrature
/// of the density over each unit bin (split at the mode, where the density
/// has a kink).
pub fn floored_triangular_pmf(low: u64, high: u64) -> Vec<f64> {
    let (a, b) = (low as f64, high as f64);
    let m = (a + b) / 2.0;
    let density = |x: f64| {
        if x < a || x > b {
            0.0
        } else if x <= m {
            2.0 * (x - a) / ((b - a) * (m - a))
        } else {
            2.0 * (b - x) / ((b - a) * (b - m))
        }
    };
    let simpson = |lo: f64, hi: f64| {
        const N: usize = 16;
        let h = (hi - lo) / N as f64;
        let mut s = density(lo) + density(hi);
        for i in 1..N {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * density(lo + i as f64 * h);
        }
        s * h / 3.0
    };
    (low..high)
        .map(|k| {
            let (lo, hi) = (k as f64, k as f64 + 1.0);
            if lo < m && m < hi {
                simpson(lo, m) + simpson(m, hi)
            } else {
                simpson(lo, hi)
            }
        })
        .collect()
}

/// Pearson statistic and degrees of freedom, merging adjacent bins until
/// every expected count reaches 5.
pub fn chi_square(observed: &[u64], pmf: &[f64], n: u64) -> (f64, usize) {
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&obs, &p) in observed.iter().zip(pmf) {
        o += obs as f64;
        e += p * n as f64;
        if e >= 5.0 {
            merged.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => merged.push((o, e)),
        }
    }
    let stat = merged.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    (stat, merged.len() - 1)
}
