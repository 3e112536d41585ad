use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    /// One action per head.
    pub actions: Vec<usize>,
    /// Per-head reward; sums to `reward`.
    pub head_rewards: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// FIFO experience memory.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
            capacity,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    pub fn last(&self) -> Option<&Transition> {
        self.items.back()
    }

    /// Uniform sample with replacement.
    pub fn sample<'a>(&'a self, n: usize, rng: &mut SimRng) -> Vec<&'a Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(r: f64) -> Transition {
        Transition {
            state: vec![],
            actions: vec![],
            head_rewards: vec![r],
            reward: r,
            next_state: vec![],
            terminal: true,
        }
    }

    #[test]
    fn evicts_oldest_at_capacity() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..4 {
            b.push(t(i as f64));
        }
        assert_eq!(b.len(), 3);
        assert_eq!(b.get(0).unwrap().reward, 1.0);
        assert_eq!(b.last().unwrap().reward, 3.0);
    }

    #[test]
    fn empty_sample() {
        let b = ReplayBuffer::new(2);
        assert!(b.sample(4, &mut crate::rng::stream(0, &[])).is_empty());
    }
}
