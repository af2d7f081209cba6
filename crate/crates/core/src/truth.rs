//! Packed truth tables over all input assignments.

use crate::error::CircuitError;
use crate::MAX_TRUTH_INPUTS;

/// One bit column per output over all `2^num_inputs` rows.
///
/// Row `r` encodes the assignment whose k-th primary input is bit `k` of `r`
/// (input 0 is least significant). Bits are packed into 64-bit words per
/// output, so equality and hashing compare exact table contents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    num_inputs: usize,
    num_outputs: usize,
    words_per_output: usize,
    bits: Vec<u64>,
}

impl TruthTable {
    /// All-zero table; errors if `num_inputs` exceeds the enumeration cap.
    pub fn new_zeroed(num_inputs: usize, num_outputs: usize) -> Result<TruthTable, CircuitError> {
        if num_inputs > MAX_TRUTH_INPUTS {
            return Err(CircuitError::TooManyInputs {
                num_inputs,
                max: MAX_TRUTH_INPUTS,
            });
        }
        let rows = 1usize << num_inputs;
        let words_per_output = rows.div_ceil(64);
        Ok(TruthTable {
            num_inputs,
            num_outputs,
            words_per_output,
            bits: vec![0; words_per_output * num_outputs],
        })
    }

    /// Fill a table from a row/output predicate.
    pub fn from_fn(
        num_inputs: usize,
        num_outputs: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<TruthTable, CircuitError> {
        let mut t = TruthTable::new_zeroed(num_inputs, num_outputs)?;
        for row in 0..t.num_rows() {
            for output in 0..num_outputs {
                t.set_bit(output, row, f(row, output));
            }
        }
        Ok(t)
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.num_outputs
    }

    pub fn num_rows(&self) -> usize {
        1usize << self.num_inputs
    }

    #[inline]
    pub fn bit(&self, output: usize, row: usize) -> bool {
        debug_assert!(output < self.num_outputs && row < self.num_rows());
        let word = self.bits[output * self.words_per_output + row / 64];
        (word >> (row % 64)) & 1 == 1
    }

    #[inline]
    pub fn set_bit(&mut self, output: usize, row: usize, value: bool) {
        debug_assert!(output < self.num_outputs && row < self.num_rows());
        let word = &mut self.bits[output * self.words_per_output + row / 64];
        if value {
            *word |= 1 << (row % 64);
        } else {
            *word &= !(1 << (row % 64));
        }
    }

    /// One output column rendered as a '0'/'1' string, character `r` = row `r`.
    pub fn column_string(&self, output: usize) -> String {
        (0..self.num_rows())
            .map(|row| if self.bit(output, row) { '1' } else { '0' })
            .collect()
    }

    /// All bits of one output column.
    pub fn column_bits(&self, output: usize) -> Vec<bool> {
        (0..self.num_rows()).map(|row| self.bit(output, row)).collect()
    }

    /// The input assignment encoded by `row`.
    pub fn row_assignment(&self, row: usize) -> Vec<bool> {
        (0..self.num_inputs).map(|k| (row >> k) & 1 == 1).collect()
    }
}
