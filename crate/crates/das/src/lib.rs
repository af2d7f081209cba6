//! Differentiable search over layered NAND circuits.
//!
//! A [`LayeredNet`] assigns every gate input a softmax selector over all
//! nodes in strictly earlier layers, so a circuit becomes a point in a
//! continuous space: gate values are computed with the relaxed NAND
//! `1 − x·y` on mixtures instead of wires. [`train`] fits the selectors to a
//! target truth table by gradient descent and [`LayeredNet::discretize`]
//! snaps the result back to a concrete [`Circuit`].
//!
//! Selector logits can start uniform or be shaped by an edge-probability
//! prior (see [`LayeredNet::init_from_prior`]), which is how upstream
//! structure generators plug in.

pub mod net;
pub mod train;

pub use net::{
    nand_relaxed, prior_logits, used_nand_count, LayeredNet, PriorConfig, SecondSelector,
    SelectionMode, Selector, SelectorRole,
};
pub use train::{accuracy, train, DasError, DasReport, SearchMode, StepMetric, TrainConfig, TrainOutcome};
