//! Cosine schedule for how many positions stay masked during decoding.

use std::f64::consts::PI;

/// Fraction of positions still masked at progress `r` through decoding.
/// Clamped to exactly zero at the end: `cos(pi/2)` itself rounds to 6.1e-17,
/// which would leave one token masked after the final iteration.
pub fn gamma(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    (0.5 * PI * r.max(0.0)).cos()
}

/// Number of masked positions at progress `r` over an `n`-token sequence.
pub fn mask_count(r: f64, n: usize) -> usize {
    (gamma(r) * n as f64).ceil() as usize
}

/// Masked positions remaining after 0-based iteration `iter` of `total`.
pub fn remaining_after(iter: usize, total: usize, n: usize) -> usize {
    assert!(total > 0, "decoding needs at least one iteration");
    assert!(iter < total, "iteration {iter} out of range for {total}");
    mask_count((iter + 1) as f64 / total as f64, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        assert_eq!(gamma(0.0), 1.0);
        assert_eq!(gamma(1.0), 0.0);
        assert_eq!(gamma(1.5), 0.0);
        assert_eq!(gamma(-0.25), 1.0);
    }

    #[test]
    fn midpoint_follows_the_cosine() {
        assert!((gamma(0.5) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((gamma(1.0 / 3.0) - (PI / 6.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn mask_counts_round_up() {
        assert_eq!(mask_count(0.0, 10), 10);
        assert_eq!(mask_count(0.5, 10), 8); // ceil(7.07)
        assert_eq!(mask_count(1.0, 10), 0);
        assert_eq!(mask_count(0.9, 16), 3); // ceil(2.50...)
    }

    #[test]
    fn remaining_counts_decrease_to_zero() {
        for &n in &[1usize, 4, 9, 32] {
            for &total in &[1usize, 2, 5, 8] {
                let mut prev = n;
                for iter in 0..total {
                    let rem = remaining_after(iter, total, n);
                    assert!(rem <= prev, "schedule must not re-mask: {rem} > {prev}");
                    prev = rem;
                }
                assert_eq!(prev, 0, "n {n} total {total} must finish fully committed");
            }
        }
    }

    #[test]
    fn single_iteration_commits_everything() {
        assert_eq!(remaining_after(0, 1, 37), 0);
    }
}
