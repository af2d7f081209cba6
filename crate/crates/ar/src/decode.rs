//! The decoding loop: predict, rank by confidence, commit, re-mask.

use crate::schedule::remaining_after;
use logicforge_core::NodeKind;
use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArError {
    #[error("{total} nodes cannot hold {num_pi} inputs and {num_po} outputs")]
    Structure { total: usize, num_pi: usize, num_po: usize },
    #[error("checkpoint rejected: {reason}")]
    Checkpoint { reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// One position in a partially decoded sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Token {
    Mask,
    Code(usize),
}

/// Produces a per-position probability row over codes for the current
/// partially masked sequence. Conditioning, if any, is the implementor's
/// business.
pub trait Predictor {
    fn predict(&mut self, tokens: &[Token]) -> Array2<f64>;
}

#[derive(Clone, Debug)]
pub struct DecodeOptions {
    pub iterations: usize,
    /// Sample codes from the tempered distribution instead of taking the
    /// argmax.
    pub sample: bool,
    pub temperature: f64,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self { iterations: 8, sample: false, temperature: 1.0 }
    }
}

/// What one iteration did, for loop-invariant checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub masked_before: usize,
    pub newly_committed: Vec<usize>,
    pub remaining_after: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DecodeTrace {
    pub iterations: Vec<IterationRecord>,
}

fn argmax_row(row: ndarray::ArrayView1<f64>) -> usize {
    let mut best = 0;
    for k in 1..row.len() {
        if row[k] > row[best] {
            best = k;
        }
    }
    best
}

fn sample_row<R: Rng + ?Sized>(
    row: ndarray::ArrayView1<f64>,
    temperature: f64,
    rng: &mut R,
) -> usize {
    let weights: Vec<f64> = if (temperature - 1.0).abs() < 1e-12 {
        row.iter().cloned().collect()
    } else {
        row.iter().map(|&p| p.max(0.0).powf(1.0 / temperature)).collect()
    };
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return argmax_row(row);
    }
    let mut draw = rng.gen::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        draw -= w;
        if draw <= 0.0 {
            return k;
        }
    }
    weights.len() - 1
}

/// Fills an `n`-token sequence in `opts.iterations` predictor calls.
///
/// Each round scores every still-masked position, commits the most confident
/// picks (ties broken toward lower positions) until the scheduled number of
/// masks remains, and leaves committed tokens untouched thereafter.
pub fn decode<P: Predictor + ?Sized, R: Rng + ?Sized>(
    predictor: &mut P,
    n: usize,
    opts: &DecodeOptions,
    rng: &mut R,
) -> (Vec<usize>, DecodeTrace) {
    assert!(n > 0, "cannot decode an empty sequence");
    assert!(opts.iterations > 0, "decoding needs at least one iteration");
    let mut tokens = vec![Token::Mask; n];
    let mut trace = DecodeTrace::default();
    for iter in 0..opts.iterations {
        let probs = predictor.predict(&tokens);
        assert_eq!(probs.nrows(), n, "predictor row count");
        let masked: Vec<usize> = (0..n).filter(|&i| tokens[i] == Token::Mask).collect();
        let masked_before = masked.len();
        // (score desc, position asc) ranking of fresh predictions.
        let mut picks: Vec<(usize, usize, f64)> = masked
            .iter()
            .map(|&i| {
                let row = probs.row(i);
                let code = if opts.sample {
                    sample_row(row, opts.temperature, rng)
                } else {
                    argmax_row(row)
                };
                (i, code, row[code])
            })
            .collect();
        picks.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));
        let target = remaining_after(iter, opts.iterations, n);
        let commit = masked_before.saturating_sub(target);
        let mut newly: Vec<usize> = Vec::with_capacity(commit);
        for &(pos, code, _) in picks.iter().take(commit) {
            tokens[pos] = Token::Code(code);
            newly.push(pos);
        }
        newly.sort_unstable();
        trace.iterations.push(IterationRecord {
            masked_before,
            newly_committed: newly,
            remaining_after: masked_before - commit,
        });
    }
    let codes = tokens
        .iter()
        .map(|t| match t {
            Token::Code(c) => *c,
            Token::Mask => unreachable!("schedule ends at zero masks"),
        })
        .collect();
    (codes, trace)
}

/// Node-kind layout for a generated sequence: inputs first, outputs last.
pub fn generate_structure(
    total: usize,
    num_pi: usize,
    num_po: usize,
) -> Result<Vec<NodeKind>, ArError> {
    if num_pi == 0 || num_po == 0 || total < num_pi + num_po {
        return Err(ArError::Structure { total, num_pi, num_po });
    }
    let mut kinds = Vec::with_capacity(total);
    kinds.extend(std::iter::repeat(NodeKind::Pi).take(num_pi));
    kinds.extend(std::iter::repeat(NodeKind::Nand).take(total - num_pi - num_po));
    kinds.extend(std::iter::repeat(NodeKind::Po).take(num_po));
    Ok(kinds)
}

/// Test predictor that concentrates probability on a fixed target sequence.
pub struct OraclePredictor {
    pub target: Vec<usize>,
    pub codebook_size: usize,
    /// Probability mass placed on the target code at each position.
    pub confidence: f64,
    pub calls: usize,
}

impl OraclePredictor {
    pub fn new(target: Vec<usize>, codebook_size: usize, confidence: f64) -> OraclePredictor {
        assert!(target.iter().all(|&c| c < codebook_size), "target out of range");
        assert!((0.0..=1.0).contains(&confidence));
        OraclePredictor { target, codebook_size, confidence, calls: 0 }
    }
}

impl Predictor for OraclePredictor {
    fn predict(&mut self, tokens: &[Token]) -> Array2<f64> {
        self.calls += 1;
        assert_eq!(tokens.len(), self.target.len(), "oracle sequence length");
        let k = self.codebook_size;
        let off = if k > 1 { (1.0 - self.confidence) / (k - 1) as f64 } else { 0.0 };
        Array2::from_shape_fn((self.target.len(), k), |(i, c)| {
            if c == self.target[i] {
                if k > 1 { self.confidence } else { 1.0 }
            } else {
                off
            }
        })
    }
}
