//! Prior quality probe: mean output error of an untrained net.

use crate::bench::Method;
use crate::synth::build_net;
use anyhow::{Context, Result};
use logicforge_core::io::read_truth;
use std::path::PathBuf;

#[derive(Clone, Debug)]
pub struct BitsdOptions {
    pub truth: PathBuf,
    pub layers: Vec<usize>,
    pub prior: Option<PathBuf>,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct BitsdOutcome {
    pub method: Method,
    pub value: f64,
    pub num_nodes: usize,
}

/// Build the net exactly as `synth` would, then report its bits distance to
/// the table without any training.
pub fn run_bitsd(opts: &BitsdOptions) -> Result<BitsdOutcome> {
    let table = read_truth(&opts.truth)
        .with_context(|| format!("reading truth table {}", opts.truth.display()))?;
    let method = if opts.prior.is_some() { Method::PriorDas } else { Method::UniformDas };
    let net = build_net(&table, &opts.layers, opts.prior.as_deref())?;
    let value = net.bits_distance(&table)?;
    Ok(BitsdOutcome { method, value, num_nodes: net.layering().num_nodes() })
}
