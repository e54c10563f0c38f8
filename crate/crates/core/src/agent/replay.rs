use rand::seq::index;
use rand::Rng;

use crate::env::{ActionVector, StateVector};
use crate::error::{Error, Result};

/// One transition `(s, a, r, s')`. States are stored as the network saw
/// them (after standardization); `a` is the raw actor output including
/// exploration noise, before projection.
#[derive(Clone, Debug, PartialEq)]
pub struct Experience {
    pub state: StateVector,
    pub action: ActionVector,
    pub reward: f64,
    pub next_state: StateVector,
}

/// Fixed-capacity FIFO ring.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    items: Vec<Experience>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(ReplayBuffer {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            cursor: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Inserts, evicting the oldest item once full.
    pub fn push(&mut self, exp: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(exp);
        } else {
            self.items[self.cursor] = exp;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Items from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        let split = if self.items.len() < self.capacity { 0 } else { self.cursor };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// `count` distinct items drawn uniformly without replacement.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<&Experience>> {
        if count > self.items.len() {
            return Err(Error::Contract(format!(
                "cannot sample {count} experiences from a buffer holding {}",
                self.items.len()
            )));
        }
        Ok(index::sample(rng, self.items.len(), count)
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exp(r: f64) -> Experience {
        Experience {
            state: StateVector(vec![r]),
            action: ActionVector(vec![]),
            reward: r,
            next_state: StateVector(vec![]),
        }
    }

    #[test]
    fn evicts_oldest_beyond_capacity() {
        let mut buf = ReplayBuffer::new(5).unwrap();
        for i in 0..8 {
            buf.push(exp(i as f64));
            assert!(buf.len() <= 5);
        }
        let rewards: Vec<f64> = buf.iter().map(|e| e.reward).collect();
        assert_eq!(rewards, vec![3.0, 4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn sampling_is_uniform() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        for i in 0..10 {
            buf.push(exp(i as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut hits = [0usize; 10];
        let draws = 20_000;
        for _ in 0..draws {
            let batch = buf.sample(&mut rng, 3).unwrap();
            let mut seen: Vec<f64> = batch.iter().map(|e| e.reward).collect();
            seen.sort_by(f64::total_cmp);
            seen.dedup();
            assert_eq!(seen.len(), 3);
            for e in batch {
                hits[e.reward as usize] += 1;
            }
        }
        let expected = draws as f64 * 3.0 / 10.0;
        for h in hits {
            assert!((h as f64 - expected).abs() < 0.05 * expected, "{h}");
        }
        assert!(buf.sample(&mut rng, 11).is_err());
    }
}
