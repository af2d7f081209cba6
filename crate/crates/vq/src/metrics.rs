//! Reconstruction quality metrics.

use ndarray::Array2;

/// Area under the ROC curve for scoring true edges above non-edges, over all
/// off-diagonal ordered pairs. Ties share their average rank. Requires at
/// least one edge and one non-edge.
pub fn edge_auc(scores: &Array2<f64>, truth: &Array2<f64>) -> f64 {
    assert_eq!(scores.dim(), truth.dim(), "score and truth shapes differ");
    assert_eq!(scores.nrows(), scores.ncols(), "edge matrices are square");
    let n = scores.nrows();
    let mut entries: Vec<(f64, bool)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                entries.push((scores[[i, j]], truth[[i, j]] > 0.5));
            }
        }
    }
    let positives = entries.iter().filter(|e| e.1).count();
    let negatives = entries.len() - positives;
    assert!(positives > 0, "no true edges to rank");
    assert!(negatives > 0, "no non-edges to rank");

    entries.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scores"));
    // Average ranks across tied scores, then sum the positives' ranks.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < entries.len() {
        let mut j = i;
        while j < entries.len() && entries[j].0 == entries[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1..=j
        for e in &entries[i..j] {
            if e.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let p = positives as f64;
    (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * negatives as f64)
}
