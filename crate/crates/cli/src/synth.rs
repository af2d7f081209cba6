//! One-shot synthesis: truth table in, verified NAND circuit out.

use crate::bench::{Method, RunRecord};
use anyhow::{ensure, Context, Result};
use logicforge_core::io::{read_truth, write_atomic, write_circuit};
use logicforge_core::{layerize_adjacency, Circuit, Layering, NodeKind, TruthTable};
use logicforge_das::{accuracy, train, LayeredNet, PriorConfig, TrainConfig};
use logicforge_repair::{dag_search, read_pmatrix};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct SynthOptions {
    pub truth: PathBuf,
    pub layers: Vec<usize>,
    pub prior: Option<PathBuf>,
    pub max_steps: usize,
    pub lr: f64,
    pub tau: f64,
    pub threshold: f64,
    pub seed: u64,
    pub allow_partial: bool,
    pub out_dir: PathBuf,
}

pub struct SynthOutcome {
    pub record: RunRecord,
    pub circuit: Circuit,
    pub circuit_path: Option<PathBuf>,
    pub record_path: PathBuf,
    pub converged: bool,
}

/// Node kinds for an `n`-node block layout: inputs first, outputs last.
pub fn block_kinds(n: usize, num_pi: usize, num_po: usize) -> Vec<NodeKind> {
    let mut kinds = vec![NodeKind::Nand; n];
    kinds[..num_pi].fill(NodeKind::Pi);
    kinds[n - num_po..].fill(NodeKind::Po);
    kinds
}

/// Build a search net for `table`: either a fresh uniform net over the given
/// hidden layer widths, or one shaped by a prior matrix file (repaired to a
/// DAG first). Prior matrices use the block layout: the first `num_pi` nodes
/// are the table's inputs and the last `num_po` its outputs.
pub fn build_net(
    table: &TruthTable,
    layers: &[usize],
    prior: Option<&Path>,
) -> Result<LayeredNet> {
    let (p, q) = (table.num_inputs(), table.num_outputs());
    match prior {
        None => {
            ensure!(!layers.is_empty(), "--layers must list at least one hidden width");
            Ok(LayeredNet::new(Layering::from_widths(p, layers, q)))
        }
        Some(path) => {
            let probs = read_pmatrix(path)
                .with_context(|| format!("reading prior matrix {}", path.display()))?;
            let n = probs.n();
            ensure!(
                n >= p + q + 1,
                "prior matrix has {n} nodes; the table needs {p} inputs, {q} outputs, and at least one gate"
            );
            let kinds = block_kinds(n, p, q);
            let pi_ids: Vec<usize> = (0..p).collect();
            let po_ids: Vec<usize> = (n - q..n).collect();
            let repaired = dag_search(&probs, &pi_ids, &po_ids);
            let layering = layerize_adjacency(&repaired.adjacency, &kinds)?;
            let mut net = LayeredNet::new(layering);
            net.init_from_prior(&repaired.masked, &PriorConfig::default())?;
            Ok(net)
        }
    }
}

/// Search for a circuit realizing the table; emit it only if it is exact
/// (or partial results were explicitly allowed).
pub fn run_synth(opts: &SynthOptions) -> Result<SynthOutcome> {
    let table = read_truth(&opts.truth)
        .with_context(|| format!("reading truth table {}", opts.truth.display()))?;
    let name = opts
        .truth
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("circuit")
        .to_string();
    let method = if opts.prior.is_some() { Method::PriorDas } else { Method::UniformDas };
    let mut net = build_net(&table, &opts.layers, opts.prior.as_deref())?;
    let cfg = TrainConfig {
        max_steps: opts.max_steps,
        lr: opts.lr,
        loss_threshold: opts.threshold,
        tau_start: opts.tau,
        tau_end: opts.tau * 0.1,
        seed: opts.seed,
        ..Default::default()
    };
    let started = Instant::now();
    let out = train(&mut net, &table, &cfg)?;
    let wall_seconds = started.elapsed().as_secs_f64();

    // The report's accuracy must agree with an independent re-simulation.
    let checked = accuracy(&out.circuit, &table)?;
    ensure!(
        (checked - out.report.accuracy).abs() < 1e-12,
        "internal accuracy mismatch: report {} vs re-simulated {checked}",
        out.report.accuracy
    );
    let converged = checked == 1.0;

    let record = RunRecord {
        benchmark: name.clone(),
        method,
        seed: opts.seed,
        report: out.report.clone(),
        wall_seconds,
    };
    std::fs::create_dir_all(&opts.out_dir)?;
    let record_path = opts.out_dir.join(format!("{name}.run.json"));
    write_atomic(&record_path, &serde_json::to_string_pretty(&record)?)?;

    let mut metrics = String::from("step,loss,temperature\n");
    for m in &out.metrics {
        metrics.push_str(&format!("{},{},{}\n", m.step, m.loss, m.temperature));
    }
    write_atomic(opts.out_dir.join(format!("{name}.metrics.csv")), &metrics)?;

    let circuit_path = if converged || opts.allow_partial {
        let path = opts.out_dir.join(format!("{name}.circuit"));
        write_circuit(&path, &out.circuit)?;
        Some(path)
    } else {
        None
    };
    Ok(SynthOutcome { record, circuit: out.circuit, circuit_path, record_path, converged })
}
