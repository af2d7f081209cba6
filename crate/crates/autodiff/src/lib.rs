//! Reverse-mode automatic differentiation on dense `f64` matrices.
//!
//! The [`Tape`] records operations eagerly: every call computes its result
//! immediately and pushes a node, so a forward pass and the graph are built in
//! one go. [`Tape::backward`] then walks the nodes in reverse and accumulates
//! gradients for every [`ParamSet`] slot that contributed to the loss.
//!
//! The op set is deliberately small — just what the selector nets, the graph
//! encoder/decoder, and the token predictor in this workspace need — but each
//! op has an exact adjoint, verified against central finite differences in the
//! `check` module's tolerances.

pub mod adam;
pub mod check;
pub mod params;
pub mod sample;
pub mod tape;

pub use adam::Adam;
pub use check::{fd_gradients, max_rel_err};
pub use params::ParamSet;
pub use tape::{Gradients, Tape, VarId};
