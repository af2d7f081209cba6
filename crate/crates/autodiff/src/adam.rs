//! Adam optimizer with serializable state.

use crate::params::ParamSet;
use crate::tape::Gradients;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Adam with bias correction. Moment buffers are kept per parameter slot so
/// the whole optimizer can be checkpointed alongside its [`ParamSet`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(lr: f64, params: &ParamSet) -> Self {
        Self::with_betas(lr, 0.9, 0.999, params)
    }

    pub fn with_betas(lr: f64, beta1: f64, beta2: f64, params: &ParamSet) -> Self {
        let m = (0..params.len()).map(|s| Array2::zeros(params.get(s).dim())).collect();
        let v = (0..params.len()).map(|s| Array2::zeros(params.get(s).dim())).collect();
        Self { lr, beta1, beta2, eps: 1e-8, t: 0, m, v }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// Applies one update. Slots without a gradient are left untouched.
    pub fn step(&mut self, params: &mut ParamSet, grads: &Gradients) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for slot in 0..params.len() {
            let Some(g) = grads.slot(slot) else { continue };
            let m = &mut self.m[slot];
            let v = &mut self.v[slot];
            m.zip_mut_with(g, |mv, &gv| *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv);
            v.zip_mut_with(g, |vv, &gv| *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv);
            let p = params.get_mut(slot);
            for ((pv, &mv), &vv) in p.iter_mut().zip(m.iter()).zip(v.iter()) {
                let mhat = mv / bc1;
                let vhat = vv / bc2;
                *pv -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }

    /// Clears the moment buffers for specific rows of one slot. Used when a
    /// parameter row is re-initialized and stale momentum must not drag it.
    pub fn zero_state_rows(&mut self, slot: usize, rows: &[usize]) {
        for &r in rows {
            self.m[slot].row_mut(r).fill(0.0);
            self.v[slot].row_mut(r).fill(0.0);
        }
    }
}
