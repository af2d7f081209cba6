//! Eager operation tape with reverse-mode gradients.

use crate::params::ParamSet;
use ndarray::{Array2, Axis};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarId(usize);

enum Op {
    Constant,
    Param { slot: usize },
    MatMul(VarId, VarId),
    Add(VarId, VarId),
    /// Broadcast-add a 1×C row onto every row of an N×C matrix.
    AddRow(VarId, VarId),
    Sub(VarId, VarId),
    Mul(VarId, VarId),
    Scale(VarId, f64),
    AddScalar(VarId),
    Transpose(VarId),
    Sigmoid(VarId),
    Relu(VarId),
    SoftmaxRows(VarId),
    L2NormalizeRows(VarId),
    LayerNormRows { x: VarId, gain: VarId, bias: VarId, eps: f64 },
    ConcatRows(Vec<VarId>),
    GatherRows { table: VarId, indices: Vec<usize> },
    StopGradient,
    /// Forward takes an externally supplied value; backward passes the
    /// incoming gradient to `pass` unchanged.
    StraightThrough { pass: VarId },
    MeanAll(VarId),
    /// Mean binary cross-entropy of `probs` against fixed labels, with
    /// probabilities clamped to `[clamp, 1 − clamp]`. Clamped entries get a
    /// zero gradient, matching the flat clamped forward.
    BceMean { probs: VarId, labels: Array2<f64>, clamp: f64 },
    /// Sum of −ln p[i, target[i]] over positions where `mask` is true, with
    /// probabilities floored at `clamp` (floored entries get zero gradient).
    MaskedNllSum { probs: VarId, targets: Vec<usize>, mask: Vec<bool>, clamp: f64 },
}

struct Node {
    value: Array2<f64>,
    op: Op,
    needs_grad: bool,
}

/// Gradients for every parameter slot touched by a backward pass.
pub struct Gradients {
    slots: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    /// Gradient for a slot, if the slot participated in the loss.
    pub fn slot(&self, slot: usize) -> Option<&Array2<f64>> {
        self.slots.get(slot).and_then(|g| g.as_ref())
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    /// True if any stored gradient contains a non-finite value.
    pub fn any_non_finite(&self) -> bool {
        self.slots
            .iter()
            .flatten()
            .any(|g| g.iter().any(|v| !v.is_finite()))
    }
}

/// Eager autodiff tape over `Array2<f64>` values.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    max_slot: Option<usize>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, id: VarId) -> &Array2<f64> {
        &self.nodes[id.0].value
    }

    /// Scalar convenience accessor for a 1×1 value.
    pub fn scalar(&self, id: VarId) -> f64 {
        let v = self.value(id);
        assert_eq!(v.dim(), (1, 1), "scalar() needs a 1x1 value");
        v[[0, 0]]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array2<f64>, op: Op, needs_grad: bool) -> VarId {
        self.nodes.push(Node { value, op, needs_grad });
        VarId(self.nodes.len() - 1)
    }

    fn needs(&self, id: VarId) -> bool {
        self.nodes[id.0].needs_grad
    }

    pub fn constant(&mut self, value: Array2<f64>) -> VarId {
        self.push(value, Op::Constant, false)
    }

    /// Records the current value of a parameter slot as a differentiable leaf.
    pub fn param(&mut self, params: &ParamSet, slot: usize) -> VarId {
        self.max_slot = Some(self.max_slot.map_or(slot, |m| m.max(slot)));
        self.push(params.get(slot).clone(), Op::Param { slot }, true)
    }

    pub fn matmul(&mut self, a: VarId, b: VarId) -> VarId {
        let value = {
            let (av, bv) = (self.value(a), self.value(b));
            assert_eq!(av.ncols(), bv.nrows(), "matmul inner dimensions differ");
            av.dot(bv)
        };
        let needs = self.needs(a) || self.needs(b);
        self.push(value, Op::MatMul(a, b), needs)
    }

    pub fn add(&mut self, a: VarId, b: VarId) -> VarId {
        let value = {
            let (av, bv) = (self.value(a), self.value(b));
            assert_eq!(av.dim(), bv.dim(), "add shapes differ");
            av + bv
        };
        let needs = self.needs(a) || self.needs(b);
        self.push(value, Op::Add(a, b), needs)
    }

    pub fn add_row(&mut self, x: VarId, row: VarId) -> VarId {
        let value = {
            let (xv, rv) = (self.value(x), self.value(row));
            assert_eq!(rv.nrows(), 1, "add_row takes a 1xC row");
            assert_eq!(xv.ncols(), rv.ncols(), "add_row widths differ");
            xv + &rv.row(0)
        };
        let needs = self.needs(x) || self.needs(row);
        self.push(value, Op::AddRow(x, row), needs)
    }

    pub fn sub(&mut self, a: VarId, b: VarId) -> VarId {
        let value = {
            let (av, bv) = (self.value(a), self.value(b));
            assert_eq!(av.dim(), bv.dim(), "sub shapes differ");
            av - bv
        };
        let needs = self.needs(a) || self.needs(b);
        self.push(value, Op::Sub(a, b), needs)
    }

    pub fn mul(&mut self, a: VarId, b: VarId) -> VarId {
        let value = {
            let (av, bv) = (self.value(a), self.value(b));
            assert_eq!(av.dim(), bv.dim(), "mul shapes differ");
            av * bv
        };
        let needs = self.needs(a) || self.needs(b);
        self.push(value, Op::Mul(a, b), needs)
    }

    pub fn scale(&mut self, x: VarId, k: f64) -> VarId {
        let value = self.value(x) * k;
        let needs = self.needs(x);
        self.push(value, Op::Scale(x, k), needs)
    }

    pub fn add_scalar(&mut self, x: VarId, k: f64) -> VarId {
        let value = self.value(x) + k;
        let needs = self.needs(x);
        self.push(value, Op::AddScalar(x), needs)
    }

    pub fn transpose(&mut self, x: VarId) -> VarId {
        let value = self.value(x).t().to_owned();
        let needs = self.needs(x);
        self.push(value, Op::Transpose(x), needs)
    }

    pub fn sigmoid(&mut self, x: VarId) -> VarId {
        let value = self.value(x).mapv(|v| 1.0 / (1.0 + (-v).exp()));
        let needs = self.needs(x);
        self.push(value, Op::Sigmoid(x), needs)
    }

    pub fn relu(&mut self, x: VarId) -> VarId {
        let value = self.value(x).mapv(|v| v.max(0.0));
        let needs = self.needs(x);
        self.push(value, Op::Relu(x), needs)
    }

    /// Row-wise softmax, stabilized by subtracting each row's maximum.
    pub fn softmax_rows(&mut self, x: VarId) -> VarId {
        let mut value = self.value(x).clone();
        for mut row in value.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|v| (v - max).exp());
            let sum: f64 = row.sum();
            row.mapv_inplace(|v| v / sum);
        }
        let needs = self.needs(x);
        self.push(value, Op::SoftmaxRows(x), needs)
    }

    /// Scales each row to unit Euclidean norm; rows with norm below 1e-12 are
    /// left at zero.
    pub fn l2_normalize_rows(&mut self, x: VarId) -> VarId {
        let mut value = self.value(x).clone();
        for mut row in value.rows_mut() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm >= 1e-12 {
                row.mapv_inplace(|v| v / norm);
            } else {
                row.fill(0.0);
            }
        }
        let needs = self.needs(x);
        self.push(value, Op::L2NormalizeRows(x), needs)
    }

    /// Per-row layer normalization followed by a learned 1×C gain and bias.
    pub fn layer_norm_rows(&mut self, x: VarId, gain: VarId, bias: VarId, eps: f64) -> VarId {
        let value = {
            let xv = self.value(x);
            let (gv, bv) = (self.value(gain), self.value(bias));
            assert_eq!(gv.dim(), (1, xv.ncols()), "layer_norm gain shape");
            assert_eq!(bv.dim(), (1, xv.ncols()), "layer_norm bias shape");
            let mut out = xv.clone();
            for mut row in out.rows_mut() {
                let (mu, inv) = row_moments(row.as_slice().unwrap(), eps);
                row.mapv_inplace(|v| (v - mu) * inv);
            }
            out * &gv.row(0) + &bv.row(0)
        };
        let needs = self.needs(x) || self.needs(gain) || self.needs(bias);
        self.push(value, Op::LayerNormRows { x, gain, bias, eps }, needs)
    }

    /// Stacks parts vertically; all parts must share a column count.
    pub fn concat_rows(&mut self, parts: &[VarId]) -> VarId {
        assert!(!parts.is_empty(), "concat_rows needs at least one part");
        let cols = self.value(parts[0]).ncols();
        let rows: usize = parts.iter().map(|&p| self.value(p).nrows()).sum();
        let mut value = Array2::zeros((rows, cols));
        let mut at = 0;
        for &p in parts {
            let pv = self.value(p);
            assert_eq!(pv.ncols(), cols, "concat_rows widths differ");
            value
                .slice_mut(ndarray::s![at..at + pv.nrows(), ..])
                .assign(pv);
            at += pv.nrows();
        }
        let needs = parts.iter().any(|&p| self.needs(p));
        self.push(value, Op::ConcatRows(parts.to_vec()), needs)
    }

    /// Selects rows of `table` by index; repeated indices accumulate gradient.
    pub fn gather_rows(&mut self, table: VarId, indices: &[usize]) -> VarId {
        let value = {
            let tv = self.value(table);
            let mut out = Array2::zeros((indices.len(), tv.ncols()));
            for (i, &r) in indices.iter().enumerate() {
                assert!(r < tv.nrows(), "gather_rows index {r} out of range");
                out.row_mut(i).assign(&tv.row(r));
            }
            out
        };
        let needs = self.needs(table);
        self.push(
            value,
            Op::GatherRows { table, indices: indices.to_vec() },
            needs,
        )
    }

    /// Copies a value while detaching it from the gradient graph.
    pub fn stop_gradient(&mut self, x: VarId) -> VarId {
        let value = self.value(x).clone();
        self.push(value, Op::StopGradient, false)
    }

    /// Forwards `value`, but routes the gradient to `pass` unchanged.
    pub fn straight_through(&mut self, pass: VarId, value: Array2<f64>) -> VarId {
        assert_eq!(
            self.value(pass).dim(),
            value.dim(),
            "straight_through shapes differ"
        );
        let needs = self.needs(pass);
        self.push(value, Op::StraightThrough { pass }, needs)
    }

    pub fn mean_all(&mut self, x: VarId) -> VarId {
        let v = self.value(x);
        let mean = v.sum() / v.len() as f64;
        let needs = self.needs(x);
        self.push(Array2::from_elem((1, 1), mean), Op::MeanAll(x), needs)
    }

    pub fn bce_mean(&mut self, probs: VarId, labels: &Array2<f64>, clamp: f64) -> VarId {
        let p = self.value(probs);
        assert_eq!(p.dim(), labels.dim(), "bce shapes differ");
        let mut total = 0.0;
        for (&pi, &yi) in p.iter().zip(labels.iter()) {
            let pc = pi.clamp(clamp, 1.0 - clamp);
            total -= yi * pc.ln() + (1.0 - yi) * (1.0 - pc).ln();
        }
        let mean = total / p.len() as f64;
        let needs = self.needs(probs);
        self.push(
            Array2::from_elem((1, 1), mean),
            Op::BceMean { probs, labels: labels.clone(), clamp },
            needs,
        )
    }

    pub fn masked_nll_sum(
        &mut self,
        probs: VarId,
        targets: &[usize],
        mask: &[bool],
        clamp: f64,
    ) -> VarId {
        let p = self.value(probs);
        assert_eq!(p.nrows(), targets.len(), "masked_nll target count");
        assert_eq!(p.nrows(), mask.len(), "masked_nll mask count");
        let mut total = 0.0;
        for i in 0..targets.len() {
            if mask[i] {
                assert!(targets[i] < p.ncols(), "masked_nll target out of range");
                total -= p[[i, targets[i]]].max(clamp).ln();
            }
        }
        let needs = self.needs(probs);
        self.push(
            Array2::from_elem((1, 1), total),
            Op::MaskedNllSum {
                probs,
                targets: targets.to_vec(),
                mask: mask.to_vec(),
                clamp,
            },
            needs,
        )
    }

    /// Accumulates gradients of a 1×1 `loss` into every contributing
    /// parameter slot.
    pub fn backward(&self, loss: VarId) -> Gradients {
        assert_eq!(self.value(loss).dim(), (1, 1), "loss must be 1x1");
        let num_slots = self.max_slot.map_or(0, |m| m + 1);
        let mut slots: Vec<Option<Array2<f64>>> = vec![None; num_slots];
        let mut grads: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Array2::ones((1, 1)));

        for id in (0..=loss.0).rev() {
            if !self.nodes[id].needs_grad {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            match &self.nodes[id].op {
                Op::Constant | Op::StopGradient => {}
                Op::Param { slot } => match &mut slots[*slot] {
                    Some(acc) => *acc += &g,
                    none => *none = Some(g),
                },
                Op::MatMul(a, b) => {
                    if self.needs(*a) {
                        let da = g.dot(&self.value(*b).t());
                        accumulate(&mut grads, a.0, da);
                    }
                    if self.needs(*b) {
                        let db = self.value(*a).t().dot(&g);
                        accumulate(&mut grads, b.0, db);
                    }
                }
                Op::Add(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads, a.0, g.clone());
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads, b.0, g);
                    }
                }
                Op::AddRow(x, row) => {
                    if self.needs(*row) {
                        let dr = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                        accumulate(&mut grads, row.0, dr);
                    }
                    if self.needs(*x) {
                        accumulate(&mut grads, x.0, g);
                    }
                }
                Op::Sub(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads, a.0, g.clone());
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads, b.0, -&g);
                    }
                }
                Op::Mul(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads, a.0, &g * self.value(*b));
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads, b.0, &g * self.value(*a));
                    }
                }
                Op::Scale(x, k) => {
                    accumulate(&mut grads, x.0, &g * *k);
                }
                Op::AddScalar(x) => {
                    accumulate(&mut grads, x.0, g);
                }
                Op::Transpose(x) => {
                    accumulate(&mut grads, x.0, g.t().to_owned());
                }
                Op::Sigmoid(x) => {
                    let y = &self.nodes[id].value;
                    accumulate(&mut grads, x.0, &g * &(y * &(1.0 - y)));
                }
                Op::Relu(x) => {
                    let mask = self.value(*x).mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                    accumulate(&mut grads, x.0, &g * &mask);
                }
                Op::SoftmaxRows(x) => {
                    let y = &self.nodes[id].value;
                    let mut dx = &g * y;
                    for (mut drow, yrow) in dx.rows_mut().into_iter().zip(y.rows()) {
                        let dot: f64 = drow.sum();
                        for (d, &yv) in drow.iter_mut().zip(yrow.iter()) {
                            *d -= dot * yv;
                        }
                    }
                    accumulate(&mut grads, x.0, dx);
                }
                Op::L2NormalizeRows(x) => {
                    let xv = self.value(*x);
                    let y = &self.nodes[id].value;
                    let mut dx = Array2::zeros(xv.dim());
                    for i in 0..xv.nrows() {
                        let norm = xv.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
                        if norm < 1e-12 {
                            continue; // flat: the forward pinned this row to zero
                        }
                        let dot: f64 = g.row(i).iter().zip(y.row(i).iter()).map(|(a, b)| a * b).sum();
                        for j in 0..xv.ncols() {
                            dx[[i, j]] = (g[[i, j]] - y[[i, j]] * dot) / norm;
                        }
                    }
                    accumulate(&mut grads, x.0, dx);
                }
                Op::LayerNormRows { x, gain, bias, eps } => {
                    let xv = self.value(*x);
                    let gv = self.value(*gain);
                    let cols = xv.ncols() as f64;
                    let mut dx = Array2::zeros(xv.dim());
                    let mut dgain = Array2::zeros((1, xv.ncols()));
                    let mut dbias = Array2::zeros((1, xv.ncols()));
                    for i in 0..xv.nrows() {
                        let row = xv.row(i);
                        let (mu, inv) = row_moments(row.as_slice().unwrap(), *eps);
                        let hat: Vec<f64> = row.iter().map(|&v| (v - mu) * inv).collect();
                        let gy: Vec<f64> =
                            g.row(i).iter().zip(gv.row(0).iter()).map(|(a, b)| a * b).collect();
                        let mean_gy: f64 = gy.iter().sum::<f64>() / cols;
                        let mean_gy_hat: f64 =
                            gy.iter().zip(&hat).map(|(a, b)| a * b).sum::<f64>() / cols;
                        for j in 0..xv.ncols() {
                            dx[[i, j]] = inv * (gy[j] - mean_gy - hat[j] * mean_gy_hat);
                            dgain[[0, j]] += g[[i, j]] * hat[j];
                            dbias[[0, j]] += g[[i, j]];
                        }
                    }
                    if self.needs(*x) {
                        accumulate(&mut grads, x.0, dx);
                    }
                    if self.needs(*gain) {
                        accumulate(&mut grads, gain.0, dgain);
                    }
                    if self.needs(*bias) {
                        accumulate(&mut grads, bias.0, dbias);
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut at = 0;
                    for &p in parts {
                        let rows = self.value(p).nrows();
                        if self.needs(p) {
                            let gp = g.slice(ndarray::s![at..at + rows, ..]).to_owned();
                            accumulate(&mut grads, p.0, gp);
                        }
                        at += rows;
                    }
                }
                Op::GatherRows { table, indices } => {
                    let mut dt = Array2::zeros(self.value(*table).dim());
                    for (i, &r) in indices.iter().enumerate() {
                        let mut row = dt.row_mut(r);
                        row += &g.row(i);
                    }
                    accumulate(&mut grads, table.0, dt);
                }
                Op::StraightThrough { pass } => {
                    accumulate(&mut grads, pass.0, g);
                }
                Op::MeanAll(x) => {
                    let v = self.value(*x);
                    let scale = g[[0, 0]] / v.len() as f64;
                    accumulate(&mut grads, x.0, Array2::from_elem(v.dim(), scale));
                }
                Op::BceMean { probs, labels, clamp } => {
                    let p = self.value(*probs);
                    let scale = g[[0, 0]] / p.len() as f64;
                    let mut dp = Array2::zeros(p.dim());
                    for ((d, &pi), &yi) in dp.iter_mut().zip(p.iter()).zip(labels.iter()) {
                        if pi >= *clamp && pi <= 1.0 - *clamp {
                            *d = scale * (pi - yi) / (pi * (1.0 - pi));
                        }
                    }
                    accumulate(&mut grads, probs.0, dp);
                }
                Op::MaskedNllSum { probs, targets, mask, clamp } => {
                    let p = self.value(*probs);
                    let mut dp = Array2::zeros(p.dim());
                    for i in 0..targets.len() {
                        if mask[i] && p[[i, targets[i]]] > *clamp {
                            dp[[i, targets[i]]] = -g[[0, 0]] / p[[i, targets[i]]];
                        }
                    }
                    accumulate(&mut grads, probs.0, dp);
                }
            }
        }
        Gradients { slots }
    }
}

fn accumulate(grads: &mut [Option<Array2<f64>>], id: usize, delta: Array2<f64>) {
    match &mut grads[id] {
        Some(acc) => *acc += &delta,
        none => *none = Some(delta),
    }
}

fn row_moments(row: &[f64], eps: f64) -> (f64, f64) {
    let n = row.len() as f64;
    let mu = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / n;
    (mu, 1.0 / (var + eps).sqrt())
}
