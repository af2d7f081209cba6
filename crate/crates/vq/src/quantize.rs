//! Nearest-code assignment on the unit sphere.

use ndarray::Array2;

/// Hard code assignment for a batch of vectors.
#[derive(Clone, Debug)]
pub struct QuantizeOutcome {
    pub indices: Vec<usize>,
    /// Rows whose input had (near-)zero norm and were routed to code 0.
    pub zero_rows: Vec<usize>,
}

fn normalize_rows(m: &Array2<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for mut row in out.rows_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm >= 1e-12 {
            row.mapv_inplace(|v| v / norm);
        } else {
            row.fill(0.0);
        }
    }
    out
}

/// Assigns each row of `vectors` to a codebook row. Both sides are
/// normalized first, so the metric is direction only; squared Euclidean
/// distance is the canonical criterion and must agree with cosine
/// similarity (they are monotone images of each other on the sphere).
pub fn nearest_codes(vectors: &Array2<f64>, codebook: &Array2<f64>) -> QuantizeOutcome {
    assert_eq!(vectors.ncols(), codebook.ncols(), "code dimensions differ");
    assert!(codebook.nrows() > 0, "empty codebook");
    let vn = normalize_rows(vectors);
    let cn = normalize_rows(codebook);
    let mut indices = Vec::with_capacity(vn.nrows());
    let mut zero_rows = Vec::new();
    for i in 0..vn.nrows() {
        let row = vn.row(i);
        if row.iter().all(|&v| v == 0.0) {
            zero_rows.push(i);
            indices.push(0);
            continue;
        }
        let mut best_l2 = 0usize;
        let mut best_l2_d = f64::INFINITY;
        let mut best_cos = 0usize;
        let mut best_cos_s = f64::NEG_INFINITY;
        for k in 0..cn.nrows() {
            let code = cn.row(k);
            let mut d = 0.0;
            let mut s = 0.0;
            for (&a, &b) in row.iter().zip(code.iter()) {
                d += (a - b) * (a - b);
                s += a * b;
            }
            if d < best_l2_d {
                best_l2_d = d;
                best_l2 = k;
            }
            if s > best_cos_s {
                best_cos_s = s;
                best_cos = k;
            }
        }
        assert_eq!(
            best_l2, best_cos,
            "distance and similarity disagree on row {i}; keeping the distance pick"
        );
        indices.push(best_l2);
    }
    if !zero_rows.is_empty() {
        log::warn!(
            "{} zero-norm vector(s) routed to code 0: rows {:?}",
            zero_rows.len(),
            zero_rows
        );
    }
    QuantizeOutcome { indices, zero_rows }
}

/// Fraction of the codebook in use and the exponentiated entropy of the
/// empirical code distribution.
pub fn utilization(indices: &[usize], codebook_size: usize) -> (f64, f64) {
    assert!(codebook_size > 0);
    let mut counts = vec![0usize; codebook_size];
    for &i in indices {
        counts[i] += 1;
    }
    let used = counts.iter().filter(|&&c| c > 0).count();
    let total = indices.len() as f64;
    let mut entropy = 0.0;
    if !indices.is_empty() {
        for &c in &counts {
            if c > 0 {
                let p = c as f64 / total;
                entropy -= p * p.ln();
            }
        }
    }
    (used as f64 / codebook_size as f64, entropy.exp())
}
