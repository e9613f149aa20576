//! Minimal discrete-event kernel.
//!
//! The engine owns a future-event queue and a clock. Processes are modeled as
//! activations: a handler runs at the activation's fire time and re-arms the
//! process by scheduling its next activation after a hold. Events with equal
//! fire times pop in the order they were scheduled.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::SimError;
use crate::scalar::Scalar;

/// Identity of one scheduled event. Serials strictly increase across a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventHandle(u64);

impl EventHandle {
    pub fn serial(self) -> u64 {
        self.0
    }
}

#[derive(Debug)]
struct Entry<T, A> {
    time: T,
    handle: EventHandle,
    activation: A,
}

impl<T: Scalar, A> PartialEq for Entry<T, A> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar, A> Eq for Entry<T, A> {}

impl<T: Scalar, A> PartialOrd for Entry<T, A> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar, A> Ord for Entry<T, A> {
    // Reversed so the max-heap pops the earliest (time, serial).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .partial_cmp(&self.time)
            .expect("event times are finite")
            .then_with(|| other.handle.cmp(&self.handle))
    }
}

/// A model driven by the engine.
pub trait Process<T: Scalar> {
    type Activation;

    fn activate(
        &mut self,
        activation: Self::Activation,
        engine: &mut Engine<T, Self::Activation>,
    ) -> Result<(), SimError>;
}

/// Future-event queue plus monotone clock.
#[derive(Debug)]
pub struct Engine<T, A> {
    now: T,
    queue: BinaryHeap<Entry<T, A>>,
    next_serial: u64,
    executed: u64,
    finished: bool,
}

impl<T: Scalar, A> Default for Engine<T, A> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar, A> Engine<T, A> {
    pub fn new() -> Self {
        Self {
            now: T::zero(),
            queue: BinaryHeap::new(),
            next_serial: 0,
            executed: 0,
            finished: false,
        }
    }

    /// Current simulated time.
    pub fn now(&self) -> T {
        self.now
    }

    /// Number of events executed so far.
    pub fn executed(&self) -> u64 {
        self.executed
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Schedule `activation` to fire `delay` after the current time.
    pub fn schedule(&mut self, activation: A, delay: T) -> Result<EventHandle, SimError> {
        if !delay.is_finite() || delay < T::zero() {
            return Err(SimError::InvalidDelay(delay.as_f64()));
        }
        self.schedule_at(activation, self.now + delay)
    }

    /// Schedule `activation` at an absolute time no earlier than now.
    pub fn schedule_at(&mut self, activation: A, time: T) -> Result<EventHandle, SimError> {
        if self.finished {
            return Err(SimError::Finished(self.now.as_f64()));
        }
        if !time.is_finite() || time < self.now {
            return Err(SimError::InvalidDelay((time - self.now).as_f64()));
        }
        let handle = EventHandle(self.next_serial);
        self.next_serial += 1;
        self.queue.push(Entry {
            time,
            handle,
            activation,
        });
        Ok(handle)
    }

    /// Pop the next event and advance the clock to its fire time.
    pub fn pop(&mut self) -> Option<(EventHandle, A)> {
        let entry = self.queue.pop()?;
        debug_assert!(entry.time >= self.now, "clock must not run backwards");
        self.now = entry.time;
        self.executed += 1;
        Some((entry.handle, entry.activation))
    }

    /// Execute events until `stop` holds, returning the final clock value.
    ///
    /// `stop` is evaluated after every event. If the queue drains first the
    /// run is reported incomplete with the clock and event count reached.
    pub fn run<M, F>(&mut self, model: &mut M, mut stop: F) -> Result<T, SimError>
    where
        M: Process<T, Activation = A>,
        F: FnMut(&M, &Self) -> bool,
    {
        if self.finished {
            return Err(SimError::Finished(self.now.as_f64()));
        }
        while let Some((_, activation)) = self.pop() {
            model.activate(activation, self)?;
            if stop(model, self) {
                self.finished = true;
                return Ok(self.now);
            }
        }
        Err(SimError::Incomplete {
            time: self.now.as_f64(),
            events: self.executed,
        })
    }
}
