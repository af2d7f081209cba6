//! Vector-quantized graph autoencoder for NAND circuits.
//!
//! The encoder message-passes over a circuit's adjacency to produce one small
//! code vector per node, which is snapped to the nearest entry of a learned
//! codebook — so a circuit becomes a short sequence of discrete code indices.
//! The decoder reads the quantized vectors (plus node kinds and positions)
//! through a single attention block and reconstructs an edge-probability
//! matrix. Downstream, a token generator only has to model code sequences;
//! [`VqModel::decode_codes`] turns its output back into edge probabilities.

pub mod checkpoint;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod quantize;
pub mod train;

pub use checkpoint::{config_hash, load_checkpoint, save_checkpoint, VqCheckpoint};
pub use graph::CircuitGraph;
pub use metrics::edge_auc;
pub use model::{QuantizeMode, Quantized, VqConfig, VqError, VqLosses, VqModel};
pub use quantize::{nearest_codes, utilization, QuantizeOutcome};
pub use train::{EpochStats, VqTrainConfig, VqTrainer};
