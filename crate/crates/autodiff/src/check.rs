//! Central finite-difference gradient checking.

use crate::params::ParamSet;
use ndarray::Array2;

/// Numerically differentiates `loss` with respect to every parameter entry
/// using central differences. The parameters are perturbed in place and
/// restored before returning.
pub fn fd_gradients<F>(params: &mut ParamSet, eps: f64, mut loss: F) -> Vec<Array2<f64>>
where
    F: FnMut(&ParamSet) -> f64,
{
    let mut out = Vec::with_capacity(params.len());
    for slot in 0..params.len() {
        let dim = params.get(slot).dim();
        let mut grad = Array2::zeros(dim);
        for r in 0..dim.0 {
            for c in 0..dim.1 {
                let orig = params.get(slot)[[r, c]];
                params.get_mut(slot)[[r, c]] = orig + eps;
                let plus = loss(params);
                params.get_mut(slot)[[r, c]] = orig - eps;
                let minus = loss(params);
                params.get_mut(slot)[[r, c]] = orig;
                grad[[r, c]] = (plus - minus) / (2.0 * eps);
            }
        }
        out.push(grad);
    }
    out
}

/// Largest relative error between analytic and numeric gradients, where each
/// entry is scored as |a − n| / max(1, |n|).
pub fn max_rel_err(analytic: &[Array2<f64>], numeric: &[Array2<f64>]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient list lengths differ");
    let mut worst = 0.0f64;
    for (a, n) in analytic.iter().zip(numeric) {
        assert_eq!(a.dim(), n.dim(), "gradient shapes differ");
        for (&av, &nv) in a.iter().zip(n.iter()) {
            let err = (av - nv).abs() / nv.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn fd_matches_known_quadratic() {
        // f = sum(w^2) has gradient 2w.
        let mut params = ParamSet::new();
        params.add("w", arr2(&[[1.0, -2.0], [0.5, 3.0]]));
        let grads = fd_gradients(&mut params, 1e-5, |p| p.get(0).iter().map(|v| v * v).sum());
        let expected = arr2(&[[2.0, -4.0], [1.0, 6.0]]);
        for (&g, &e) in grads[0].iter().zip(expected.iter()) {
            assert!((g - e).abs() < 1e-8);
        }
        // Perturbations were rolled back.
        assert_eq!(params.get(0), &arr2(&[[1.0, -2.0], [0.5, 3.0]]));
    }

    #[test]
    fn rel_err_scores_small_and_large_magnitudes() {
        let a = vec![arr2(&[[1.0, 1000.0]])];
        let n = vec![arr2(&[[1.1, 1001.0]])];
        let err = max_rel_err(&a, &n);
        // The small entry differs by 0.1 against max(1, 1.1) and dominates.
        assert!((err - 0.1 / 1.1).abs() < 1e-12);
    }
}
