//! A small trainable predictor: token embeddings, self- and cross-attention
//! over a truth-table conditioning summary, and a code head.

use crate::decode::{Predictor, Token};
use crate::schedule::mask_count;
use logicforge_autodiff::sample::gaussian_matrix;
use logicforge_autodiff::{Adam, ParamSet, Tape, VarId};
use logicforge_core::seed::stream_rng;
use logicforge_core::{TruthTable, MAX_TRUTH_INPUTS};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Conditioning summary of a target truth table: one row per output, holding
/// that output's column padded to a fixed width plus scaled input/output
/// counts.
#[derive(Clone, Debug)]
pub struct Condition {
    pub rows: Array2<f64>,
}

impl Condition {
    pub fn from_table(table: &TruthTable, pad_pi: usize) -> Condition {
        assert!(
            table.num_inputs() <= pad_pi,
            "table has {} inputs but the condition pads to {pad_pi}",
            table.num_inputs()
        );
        let width = (1usize << pad_pi) + 2;
        let mut rows = Array2::zeros((table.num_outputs(), width));
        for o in 0..table.num_outputs() {
            for r in 0..table.num_rows() {
                rows[[o, r]] = f64::from(table.bit(o, r));
            }
            rows[[o, width - 2]] = table.num_inputs() as f64 / MAX_TRUTH_INPUTS as f64;
            rows[[o, width - 1]] = table.num_outputs() as f64 / MAX_TRUTH_INPUTS as f64;
        }
        Condition { rows }
    }

    pub fn width(&self) -> usize {
        self.rows.ncols()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub codebook_size: usize,
    pub max_nodes: usize,
    pub width: usize,
    pub ffn_dim: usize,
    /// Condition rows are padded to `2^pad_pi` truth entries.
    pub pad_pi: usize,
    pub blocks: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            codebook_size: 256,
            max_nodes: 64,
            width: 64,
            ffn_dim: 128,
            pad_pi: 3,
            blocks: 2,
        }
    }
}

/// The trainable model. The mask token is embedding row `codebook_size`.
#[derive(Clone, Debug)]
pub struct ToyPredictor {
    pub cfg: ToyConfig,
    pub params: ParamSet,
}

impl ToyPredictor {
    pub fn new(cfg: ToyConfig, rng: &mut impl Rng) -> ToyPredictor {
        let d = cfg.width;
        let k = cfg.codebook_size;
        let cond_width = (1usize << cfg.pad_pi) + 2;
        let std = 0.1;
        let mut p = ParamSet::new();
        p.add("tok", gaussian_matrix(rng, k + 1, d, std));
        p.add("pos", gaussian_matrix(rng, cfg.max_nodes, d, std));
        p.add("cond.in", gaussian_matrix(rng, cond_width, d, std));
        p.add("cond.in_b", Array2::zeros((1, d)));
        for b in 0..cfg.blocks {
            p.add(format!("b{b}.ln1.g"), Array2::ones((1, d)));
            p.add(format!("b{b}.ln1.b"), Array2::zeros((1, d)));
            p.add(format!("b{b}.wq"), gaussian_matrix(rng, d, d, std));
            p.add(format!("b{b}.wk"), gaussian_matrix(rng, d, d, std));
            p.add(format!("b{b}.wv"), gaussian_matrix(rng, d, d, std));
            p.add(format!("b{b}.wo"), gaussian_matrix(rng, d, d, std));
            p.add(format!("b{b}.ln2.g"), Array2::ones((1, d)));
            p.add(format!("b{b}.ln2.b"), Array2::zeros((1, d)));
            p.add(format!("b{b}.cq"), gaussian_matrix(rng, d, d, std));
            p.add(format!("b{b}.ck"), gaussian_matrix(rng, d, d, std));
            p.add(format!("b{b}.cv"), gaussian_matrix(rng, d, d, std));
            p.add(format!("b{b}.co"), gaussian_matrix(rng, d, d, std));
            p.add(format!("b{b}.ln3.g"), Array2::ones((1, d)));
            p.add(format!("b{b}.ln3.b"), Array2::zeros((1, d)));
            p.add(format!("b{b}.ffn1"), gaussian_matrix(rng, d, cfg.ffn_dim, std));
            p.add(format!("b{b}.ffn1_b"), Array2::zeros((1, cfg.ffn_dim)));
            p.add(format!("b{b}.ffn2"), gaussian_matrix(rng, cfg.ffn_dim, d, std));
            p.add(format!("b{b}.ffn2_b"), Array2::zeros((1, d)));
        }
        p.add("head", gaussian_matrix(rng, d, k, std));
        p.add("head_b", Array2::zeros((1, k)));
        ToyPredictor { cfg, params: p }
    }

    fn slot(&self, name: &str) -> usize {
        self.params.index_of(name).unwrap_or_else(|| panic!("no parameter named {name}"))
    }

    /// Per-position code probabilities (rows sum to one) for a partially
    /// masked sequence under the given conditioning.
    pub fn forward_on_tape(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        tokens: &[Token],
        condition: &Condition,
    ) -> VarId {
        let n = tokens.len();
        let d = self.cfg.width;
        let k = self.cfg.codebook_size;
        assert!(n <= self.cfg.max_nodes, "{n} tokens exceed max_nodes {}", self.cfg.max_nodes);
        let idx: Vec<usize> = tokens
            .iter()
            .map(|t| match t {
                Token::Mask => k,
                Token::Code(c) => {
                    assert!(*c < k, "code {c} out of range");
                    *c
                }
            })
            .collect();
        let tok_table = tape.param(params, self.slot("tok"));
        let mut x = tape.gather_rows(tok_table, &idx);
        let pos_table = tape.param(params, self.slot("pos"));
        let pos_idx: Vec<usize> = (0..n).collect();
        let pos = tape.gather_rows(pos_table, &pos_idx);
        x = tape.add(x, pos);

        let cond_in = tape.param(params, self.slot("cond.in"));
        let cond_b = tape.param(params, self.slot("cond.in_b"));
        let cond_rows = tape.constant(condition.rows.clone());
        let mut cond_h = tape.matmul(cond_rows, cond_in);
        cond_h = tape.add_row(cond_h, cond_b);
        cond_h = tape.relu(cond_h);

        let scale = 1.0 / (d as f64).sqrt();
        for b in 0..self.cfg.blocks {
            // Self-attention over the token states.
            let g1 = tape.param(params, self.slot(&format!("b{b}.ln1.g")));
            let b1 = tape.param(params, self.slot(&format!("b{b}.ln1.b")));
            let normed = tape.layer_norm_rows(x, g1, b1, 1e-5);
            let wq = tape.param(params, self.slot(&format!("b{b}.wq")));
            let wk = tape.param(params, self.slot(&format!("b{b}.wk")));
            let wv = tape.param(params, self.slot(&format!("b{b}.wv")));
            let wo = tape.param(params, self.slot(&format!("b{b}.wo")));
            let q = tape.matmul(normed, wq);
            let key = tape.matmul(normed, wk);
            let v = tape.matmul(normed, wv);
            let kt = tape.transpose(key);
            let scores = tape.matmul(q, kt);
            let scores = tape.scale(scores, scale);
            let attn = tape.softmax_rows(scores);
            let mixed = tape.matmul(attn, v);
            let proj = tape.matmul(mixed, wo);
            x = tape.add(x, proj);

            // Cross-attention: token queries against condition rows.
            let g2 = tape.param(params, self.slot(&format!("b{b}.ln2.g")));
            let b2 = tape.param(params, self.slot(&format!("b{b}.ln2.b")));
            let normed = tape.layer_norm_rows(x, g2, b2, 1e-5);
            let cq = tape.param(params, self.slot(&format!("b{b}.cq")));
            let ck = tape.param(params, self.slot(&format!("b{b}.ck")));
            let cv = tape.param(params, self.slot(&format!("b{b}.cv")));
            let co = tape.param(params, self.slot(&format!("b{b}.co")));
            let q = tape.matmul(normed, cq);
            let key = tape.matmul(cond_h, ck);
            let v = tape.matmul(cond_h, cv);
            let kt = tape.transpose(key);
            let scores = tape.matmul(q, kt);
            let scores = tape.scale(scores, scale);
            let attn = tape.softmax_rows(scores);
            let mixed = tape.matmul(attn, v);
            let proj = tape.matmul(mixed, co);
            x = tape.add(x, proj);

            // Position-wise feed-forward.
            let g3 = tape.param(params, self.slot(&format!("b{b}.ln3.g")));
            let b3 = tape.param(params, self.slot(&format!("b{b}.ln3.b")));
            let normed = tape.layer_norm_rows(x, g3, b3, 1e-5);
            let w1 = tape.param(params, self.slot(&format!("b{b}.ffn1")));
            let w1b = tape.param(params, self.slot(&format!("b{b}.ffn1_b")));
            let w2 = tape.param(params, self.slot(&format!("b{b}.ffn2")));
            let w2b = tape.param(params, self.slot(&format!("b{b}.ffn2_b")));
            let mut f = tape.matmul(normed, w1);
            f = tape.add_row(f, w1b);
            f = tape.relu(f);
            f = tape.matmul(f, w2);
            f = tape.add_row(f, w2b);
            x = tape.add(x, f);
        }

        let head = tape.param(params, self.slot("head"));
        let head_b = tape.param(params, self.slot("head_b"));
        let mut logits = tape.matmul(x, head);
        logits = tape.add_row(logits, head_b);
        tape.softmax_rows(logits)
    }

    /// Binds a condition so the model can drive the decoding loop.
    pub fn conditioned<'a>(&'a self, condition: &'a Condition) -> ConditionedToy<'a> {
        ConditionedToy { model: self, condition }
    }
}

/// A [`ToyPredictor`] paired with the conditioning for one target table.
pub struct ConditionedToy<'a> {
    pub model: &'a ToyPredictor,
    pub condition: &'a Condition,
}

impl Predictor for ConditionedToy<'_> {
    fn predict(&mut self, tokens: &[Token]) -> Array2<f64> {
        let mut tape = Tape::new();
        let probs =
            self.model
                .forward_on_tape(&mut tape, &self.model.params, tokens, self.condition);
        tape.value(probs).clone()
    }
}

/// Summed negative log-likelihood of the target codes at masked positions.
/// Entries below `clamp` are floored (and logged) so one collapsed
/// probability cannot produce an infinite loss.
pub fn ar_loss(
    tape: &mut Tape,
    probs: VarId,
    targets: &[usize],
    mask: &[bool],
    clamp: f64,
) -> VarId {
    let p = tape.value(probs);
    let mut clamped = 0usize;
    for (i, (&t, &m)) in targets.iter().zip(mask).enumerate() {
        if m && p[[i, t]] < clamp {
            clamped += 1;
        }
    }
    if clamped > 0 {
        log::warn!("{clamped} masked targets fell below the probability floor {clamp}");
    }
    tape.masked_nll_sum(probs, targets, mask, clamp)
}

/// One training example: the code sequence of a circuit and the condition
/// derived from its truth table.
#[derive(Clone, Debug)]
pub struct ArExample {
    pub codes: Vec<usize>,
    pub condition: Condition,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArTrainConfig {
    pub lr: f64,
    pub steps: usize,
    pub seed: u64,
    pub clamp: f64,
}

impl Default for ArTrainConfig {
    fn default() -> Self {
        Self { lr: 3e-3, steps: 1500, seed: 0, clamp: 1e-9 }
    }
}

/// Owns the model, optimizer, and training RNG so a masked-prediction run
/// can be checkpointed and resumed bit-for-bit.
#[derive(Debug)]
pub struct ArTrainer {
    pub model: ToyPredictor,
    pub opt: Adam,
    pub rng: ChaCha8Rng,
    pub cfg: ArTrainConfig,
    pub step: usize,
}

impl ArTrainer {
    pub fn new(model_cfg: ToyConfig, cfg: ArTrainConfig) -> ArTrainer {
        let mut init_rng = stream_rng(cfg.seed, "ar-init");
        let model = ToyPredictor::new(model_cfg, &mut init_rng);
        let opt = Adam::new(cfg.lr, &model.params);
        let rng = stream_rng(cfg.seed, "ar-train");
        ArTrainer { model, opt, rng, cfg, step: 0 }
    }

    /// Rebuild a trainer from checkpointed pieces.
    pub fn from_parts(
        model: ToyPredictor,
        opt: Adam,
        rng: ChaCha8Rng,
        cfg: ArTrainConfig,
        step: usize,
    ) -> ArTrainer {
        ArTrainer { model, opt, rng, cfg, step }
    }

    /// One update: mask a scheduled share of a random example's codes and
    /// fit the model to recover them. Returns the mean masked loss.
    pub fn train_step(&mut self, examples: &[ArExample]) -> f64 {
        assert!(!examples.is_empty(), "no training examples");
        let ex = &examples[self.rng.gen_range(0..examples.len())];
        let n = ex.codes.len();
        let r: f64 = self.rng.gen();
        let m = mask_count(r, n).clamp(1, n);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);
        let mut mask = vec![false; n];
        for &i in order.iter().take(m) {
            mask[i] = true;
        }
        let tokens: Vec<Token> = ex
            .codes
            .iter()
            .zip(&mask)
            .map(|(&c, &hidden)| if hidden { Token::Mask } else { Token::Code(c) })
            .collect();
        let mut tape = Tape::new();
        let probs =
            self.model.forward_on_tape(&mut tape, &self.model.params, &tokens, &ex.condition);
        let total = ar_loss(&mut tape, probs, &ex.codes, &mask, self.cfg.clamp);
        let mean = tape.scale(total, 1.0 / m as f64);
        let grads = tape.backward(mean);
        self.opt.step(&mut self.model.params, &grads);
        self.step += 1;
        tape.scalar(mean)
    }

    /// Run until `cfg.steps` total updates, returning this call's losses.
    pub fn train(&mut self, examples: &[ArExample]) -> Vec<f64> {
        let mut losses = Vec::new();
        while self.step < self.cfg.steps {
            losses.push(self.train_step(examples));
        }
        losses
    }
}

/// Masked-prediction training in one call; see [`ArTrainer`] for the
/// resumable form. Returns per-step mean losses.
pub fn train_ar(
    model: &mut ToyPredictor,
    examples: &[ArExample],
    cfg: &ArTrainConfig,
) -> Vec<f64> {
    let opt = Adam::new(cfg.lr, &model.params);
    let rng = stream_rng(cfg.seed, "ar-train");
    let mut trainer = ArTrainer::from_parts(model.clone(), opt, rng, cfg.clone(), 0);
    let losses = trainer.train(examples);
    model.params = trainer.model.params;
    losses
}

/// Fraction of positions recovered when every token is masked, averaged over
/// the examples. This is the hardest query: the model sees only position and
/// condition.
pub fn all_masked_accuracy(model: &ToyPredictor, examples: &[ArExample]) -> f64 {
    let mut hits = 0usize;
    let mut total = 0usize;
    for ex in examples {
        let tokens = vec![Token::Mask; ex.codes.len()];
        let mut bound = model.conditioned(&ex.condition);
        let probs = bound.predict(&tokens);
        for (i, &target) in ex.codes.iter().enumerate() {
            let row = probs.row(i);
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            hits += usize::from(best == target);
            total += 1;
        }
    }
    hits as f64 / total.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use logicforge_autodiff::{fd_gradients, max_rel_err};

    fn tiny_cfg() -> ToyConfig {
        ToyConfig {
            codebook_size: 5,
            max_nodes: 8,
            width: 6,
            ffn_dim: 10,
            pad_pi: 2,
            blocks: 1,
        }
    }

    fn xor_condition(pad_pi: usize) -> Condition {
        let table = TruthTable::from_fn(2, 1, |row, _| {
            let a = row & 1 != 0;
            let b = row >> 1 & 1 != 0;
            a ^ b
        })
        .unwrap();
        Condition::from_table(&table, pad_pi)
    }

    #[test]
    fn condition_rows_pack_column_bits_and_counts() {
        let cond = xor_condition(3);
        assert_eq!(cond.rows.dim(), (1, 10));
        let expect = [0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (i, &e) in expect.iter().enumerate() {
            assert_eq!(cond.rows[[0, i]], e);
        }
        assert!((cond.rows[[0, 8]] - 2.0 / 20.0).abs() < 1e-15);
        assert!((cond.rows[[0, 9]] - 1.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn forward_rows_are_probability_distributions() {
        let mut rng = stream_rng(1, "ar-pred-test");
        let model = ToyPredictor::new(tiny_cfg(), &mut rng);
        let cond = xor_condition(2);
        let tokens = vec![Token::Mask, Token::Code(3), Token::Mask, Token::Code(0)];
        let mut tape = Tape::new();
        let probs = model.forward_on_tape(&mut tape, &model.params, &tokens, &cond);
        let v = tape.value(probs);
        assert_eq!(v.dim(), (4, 5));
        for row in v.rows() {
            let sum: f64 = row.sum();
            assert!((sum - 1.0).abs() < 1e-12, "row sums to {sum}");
            assert!(row.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn uniform_predictions_cost_exactly_ln_k_per_masked_slot() {
        let mut tape = Tape::new();
        let probs = tape.constant(Array2::from_elem((4, 5), 0.2));
        let targets = [1usize, 2, 3, 4];
        let mask = [true, false, true, true];
        let loss = ar_loss(&mut tape, probs, &targets, &mask, 1e-9);
        let expect = 3.0 * 5.0f64.ln();
        assert!((tape.scalar(loss) - expect).abs() < 1e-12);
    }

    #[test]
    fn predictor_gradients_match_finite_differences() {
        let mut rng = stream_rng(2, "ar-pred-fd");
        let model = ToyPredictor::new(tiny_cfg(), &mut rng);
        let cond = xor_condition(2);
        let tokens = vec![Token::Mask, Token::Code(2), Token::Mask];
        let targets = [4usize, 2, 0];
        let mask = [true, false, true];
        let run = |params: &ParamSet| {
            let mut tape = Tape::new();
            let probs = model.forward_on_tape(&mut tape, params, &tokens, &cond);
            let loss = ar_loss(&mut tape, probs, &targets, &mask, 1e-9);
            (tape, loss)
        };
        let (tape, loss) = run(&model.params);
        let grads = tape.backward(loss);
        let analytic: Vec<Array2<f64>> = (0..model.params.len())
            .map(|s| {
                grads
                    .slot(s)
                    .cloned()
                    .unwrap_or_else(|| Array2::zeros(model.params.get(s).dim()))
            })
            .collect();
        let mut probe = model.params.clone();
        let numeric = fd_gradients(&mut probe, 1e-5, |p| {
            let (tape, loss) = run(p);
            tape.scalar(loss)
        });
        let err = max_rel_err(&analytic, &numeric);
        assert!(err < 1e-4, "gradient mismatch: {err}");
    }

    #[test]
    fn unused_embedding_rows_get_no_gradient() {
        let mut rng = stream_rng(3, "ar-pred-rows");
        let model = ToyPredictor::new(tiny_cfg(), &mut rng);
        let cond = xor_condition(2);
        let tokens = vec![Token::Code(1), Token::Code(1)];
        let targets = [1usize, 1];
        let mask = [true, true];
        let mut tape = Tape::new();
        let probs = model.forward_on_tape(&mut tape, &model.params, &tokens, &cond);
        let loss = ar_loss(&mut tape, probs, &targets, &mask, 1e-9);
        let grads = tape.backward(loss);
        let tok_slot = model.slot("tok");
        let g = grads.slot(tok_slot).expect("token table is in the graph");
        // Only code row 1 was gathered; every other embedding row is inert.
        for r in 0..g.nrows() {
            let row_norm: f64 = g.row(r).iter().map(|v| v * v).sum();
            if r == 1 {
                assert!(row_norm > 0.0, "used row must receive gradient");
            } else {
                assert_eq!(row_norm, 0.0, "unused row {r} must stay untouched");
            }
        }
    }
}
