//! Noise matrices used by the stochastic relaxations.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Gumbel, StandardNormal};

/// Matrix of independent standard Gumbel draws, as added to logits before a
/// tempered softmax.
pub fn gumbel_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    let g = Gumbel::new(0.0, 1.0).expect("valid Gumbel parameters");
    Array2::from_shape_fn((rows, cols), |_| g.sample(rng))
}

/// Matrix of independent zero-mean Gaussian draws with the given standard
/// deviation.
pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, std: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| {
        let z: f64 = StandardNormal.sample(rng);
        z * std
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gumbel_draws_have_expected_center() {
        // Standard Gumbel has mean equal to the Euler–Mascheroni constant.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = gumbel_matrix(&mut rng, 200, 50);
        let mean = g.sum() / g.len() as f64;
        assert!((mean - 0.5772).abs() < 0.02, "mean {mean}");
        assert!(g.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn gaussian_std_scales_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = gaussian_matrix(&mut rng, 200, 50, 0.1);
        let mean = g.sum() / g.len() as f64;
        let var = g.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / g.len() as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var.sqrt() - 0.1).abs() < 0.01, "std {}", var.sqrt());
    }

    #[test]
    fn same_seed_same_noise() {
        let a = gumbel_matrix(&mut ChaCha8Rng::seed_from_u64(7), 4, 4);
        let b = gumbel_matrix(&mut ChaCha8Rng::seed_from_u64(7), 4, 4);
        assert_eq!(a, b);
    }
}
