//! Iterative masked generation of circuit token sequences.
//!
//! A sequence starts fully masked and is filled in over a fixed number of
//! iterations. Each iteration asks a [`Predictor`] for per-position code
//! distributions, commits the most confident new predictions, and re-masks
//! the rest, following a cosine schedule for how many positions may remain
//! masked. The crate also ships a small trainable predictor for exercising
//! the loop end to end.

pub mod checkpoint;
pub mod decode;
pub mod predictor;
pub mod schedule;

pub use checkpoint::{load_checkpoint, save_checkpoint, ArCheckpoint};
pub use decode::{
    decode, generate_structure, ArError, DecodeOptions, DecodeTrace, IterationRecord,
    OraclePredictor, Predictor, Token,
};
pub use predictor::{
    all_masked_accuracy, ar_loss, train_ar, ArExample, ArTrainConfig, ArTrainer, Condition,
    ConditionedToy, ToyConfig, ToyPredictor,
};
pub use schedule::{gamma, mask_count, remaining_after};
