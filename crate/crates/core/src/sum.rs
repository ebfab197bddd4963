//! Deterministic pairwise summation.
//!
//! Every reduction in the crate goes through [`pairwise_sum`]. The order is
//! fixed by the slice layout alone: blocks of [`BLOCK`] elements are summed
//! left to right, and blocks are combined by recursive halving of the index
//! range (split at `len / 2`). The result therefore never depends on thread
//! count or scheduling, and the rounding error grows as `O(log n)` instead of
//! `O(n)`.

/// Leaf size below which plain left-to-right accumulation is used.
pub const BLOCK: usize = 8;

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= BLOCK {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_small() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn beats_naive_on_ill_conditioned_input() {
        let xs: Vec<f64> = (0..1_000_000).map(|i| if i == 0 { 1.0 } else { 1e-16 }).collect();
        let naive: f64 = xs.iter().sum();
        let exact = 1.0 + 999_999.0 * 1e-16;
        assert!((pairwise_sum(&xs) - exact).abs() < (naive - exact).abs());
    }

    #[test]
    fn repeated_evaluation_is_bit_identical() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert_eq!(pairwise_sum(&xs).to_bits(), pairwise_sum(&xs).to_bits());
    }
}
