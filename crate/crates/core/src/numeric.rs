//! Small numeric helpers shared across modules.

/// Pairwise (tree) summation of a slice in a fixed order.
///
/// Splits the slice in half recursively and adds the partial sums. Compared
/// with a left-to-right fold this reduces the roundoff growth from O(n) to
/// O(log n), which matters for large-magnitude contractions such as the total
/// sum raised to the fourth power at D=100, and it is independent of any
/// chunking a caller might later introduce, so results are reproducible.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        3 => (xs[0] + xs[1]) + xs[2],
        4 => (xs[0] + xs[1]) + (xs[2] + xs[3]),
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Population mean via pairwise summation. Returns 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        pairwise_sum(xs) / xs.len() as f64
    }
}

/// Population (1/N) variance via pairwise summation of squared deviations.
pub fn population_variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    // Clamp tiny negative roundoff so sqrt never produces NaN downstream.
    mean(&sq).max(0.0)
}

/// Falling factorial D·(D−1)···(D−p+1) as an exactly-representable float.
///
/// Accumulated in 64-bit integers first: for D ≤ 100 and p ≤ 8 the product is
/// below 2^53, so the conversion to f64 is exact. Returns 0 when p > D.
pub fn falling_factorial(d: usize, p: usize) -> f64 {
    if p > d {
        return 0.0;
    }
    let mut acc: u64 = 1;
    for k in 0..p {
        acc = acc.saturating_mul((d - k) as u64);
    }
    acc as f64
}

/// Relative closeness test: |a − b| ≤ tol · max(1, |a|, |b|).
pub fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1.0_f64.max(a.abs()).max(b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_sequential_on_small_inputs() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(pairwise_sum(&xs), 15.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[7.5]), 7.5);
    }

    #[test]
    fn pairwise_is_deterministic_and_accurate() {
        // 10^5 copies of 0.1 — sequential folding loses ~1e-9 here; the tree
        // reduction stays well inside 1e-10 of the exact value.
        let xs = vec![0.1; 100_000];
        let s = pairwise_sum(&xs);
        assert!((s - 10_000.0).abs() < 1e-10 * 10_000.0);
        assert_eq!(s, pairwise_sum(&xs));
    }

    #[test]
    fn population_stats() {
        assert_eq!(mean(&[1.0, 3.0]), 2.0);
        // Population convention: var({1,3}) = ((1-2)^2 + (3-2)^2)/2 = 1.
        assert_eq!(population_variance(&[1.0, 3.0]), 1.0);
        assert_eq!(population_variance(&[2.0]), 0.0);
    }

    #[test]
    fn falling_factorials() {
        assert_eq!(falling_factorial(4, 0), 1.0);
        assert_eq!(falling_factorial(4, 2), 12.0);
        assert_eq!(falling_factorial(4, 4), 24.0);
        assert_eq!(falling_factorial(3, 4), 0.0);
        // Largest value used anywhere: D=100, p=8 — still exact in f64.
        let exact: u64 = (93..=100).product();
        assert_eq!(falling_factorial(100, 8), exact as f64);
    }
}
