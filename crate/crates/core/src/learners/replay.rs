//! Uniform-sampling ring buffer of observed transitions.
//!
//! Stores [`ObservedTransition`] values only, so true rewards and
//! perturbations are unrepresentable here.

use rand::Rng;

use crate::mdp::ObservedTransition;
use crate::rng::RunRng;

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    store: Vec<ObservedTransition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity,
            store: Vec::with_capacity(capacity.min(4096)),
            next: 0,
        }
    }

    pub fn push(&mut self, tr: ObservedTransition) {
        if self.store.len() < self.capacity {
            self.store.push(tr);
        } else {
            self.store[self.next] = tr;
            self.next = (self.next + 1) % self.capacity;
        }
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    /// Uniform sample with replacement.
    pub fn sample<'a>(&'a self, batch: usize, rng: &mut RunRng) -> Vec<&'a ObservedTransition> {
        (0..batch)
            .map(|_| &self.store[rng.gen_range(0..self.store.len())])
            .collect()
    }
}
