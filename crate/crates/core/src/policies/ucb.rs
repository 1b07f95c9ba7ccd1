use crate::error::{Error, Result};

/// Default multiplier on the `sqrt(2 ln t / n)` exploration bonus.
pub const DEFAULT_UCB_SCALE: f64 = 2.0;

/// UCB1-style index learner over a finite (growable) arm set.
#[derive(Clone, Debug)]
pub struct UcbState {
    counts: Vec<u64>,
    means: Vec<f64>,
    scale: f64,
    rounds: u64,
}

impl UcbState {
    pub fn new(arms: usize, scale: f64) -> Result<Self> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("ucb scale {scale} must be >= 0")));
        }
        Ok(Self {
            counts: vec![0; arms],
            means: vec![0.0; arms],
            scale,
            rounds: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Appends a fresh, never-pulled arm and returns its index.
    pub fn add_arm(&mut self) -> usize {
        self.counts.push(0);
        self.means.push(0.0);
        self.counts.len() - 1
    }

    /// Index to play at round `t` (1-based): unpulled arms first, then the
    /// largest `mean + scale * sqrt(2 ln t / count)`.
    pub fn select(&self, t: u64) -> Result<usize> {
        if self.counts.is_empty() {
            return Err(Error::invalid("ucb over an empty arm set"));
        }
        if t == 0 {
            return Err(Error::invalid("ucb round index must be >= 1"));
        }
        if let Some(k) = self.counts.iter().position(|&c| c == 0) {
            return Ok(k);
        }
        let log_t = (t as f64).ln();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (k, (&n, &mean)) in self.counts.iter().zip(&self.means).enumerate() {
            let score = mean + self.scale * (2.0 * log_t / n as f64).sqrt();
            if score > best_score {
                best = k;
                best_score = score;
            }
        }
        Ok(best)
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.counts.len() {
            return Err(Error::invalid(format!("ucb arm {arm} out of range")));
        }
        self.counts[arm] += 1;
        self.means[arm] += (reward - self.means[arm]) / self.counts[arm] as f64;
        self.rounds += 1;
        Ok(())
    }
}
