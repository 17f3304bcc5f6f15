//! Deterministic pairwise summation.
//!
//! Quadrature sums over hundreds of thousands of nodes are accumulated in a fixed
//! binary-tree order so results do not depend on how nodes were produced.

const BLOCK: usize = 32;

/// Pairwise sum of a slice in a fixed tree order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Streaming counterpart of [`pairwise_sum`]: leaves are blocks of `BLOCK` consecutive
/// values, merged with a binary counter so memory stays logarithmic.
#[derive(Debug, Clone, Default)]
pub struct PairwiseAccumulator {
    block: f64,
    filled: usize,
    // levels[i] holds a partial sum of 2^i blocks, if present
    levels: Vec<Option<f64>>,
}

impl PairwiseAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        self.block += value;
        self.filled += 1;
        if self.filled == BLOCK {
            let mut carry = self.block;
            self.block = 0.0;
            self.filled = 0;
            let mut level = 0;
            loop {
                if level == self.levels.len() {
                    self.levels.push(Some(carry));
                    break;
                }
                match self.levels[level].take() {
                    Some(existing) => {
                        carry += existing;
                        level += 1;
                    }
                    None => {
                        self.levels[level] = Some(carry);
                        break;
                    }
                }
            }
        }
    }

    pub fn total(&self) -> f64 {
        let mut acc = self.block;
        for partial in self.levels.iter().flatten() {
            acc += partial;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streaming_matches_naive_on_integers() {
        let values: Vec<f64> = (0..10_007).map(|i| (i % 97) as f64).collect();
        let mut acc = PairwiseAccumulator::new();
        for &v in &values {
            acc.add(v);
        }
        let naive: f64 = values.iter().sum();
        assert_eq!(acc.total(), naive);
        assert_eq!(pairwise_sum(&values), naive);
    }

    #[test]
    fn pairwise_beats_naive_on_ill_conditioned_sum() {
        let values = vec![0.1; 1_000_000];
        let exact = 100_000.0;
        let naive: f64 = values.iter().sum();
        let mut acc = PairwiseAccumulator::new();
        values.iter().for_each(|&v| acc.add(v));
        assert!((acc.total() - exact).abs() < (naive - exact).abs());
        assert!((pairwise_sum(&values) - exact).abs() < 1e-8);
    }
}
