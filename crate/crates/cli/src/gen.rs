//! Structure generation: trained quantizer + token predictor propose an
//! edge-probability prior for a truth table, repaired into a usable DAG.

use anyhow::{ensure, Context, Result};
use logicforge_ar::{decode, generate_structure, Condition, DecodeOptions, DecodeTrace};
use logicforge_core::io::{read_truth, write_atomic};
use logicforge_core::seed::stream_rng;
use logicforge_core::{layerize_adjacency, NodeKind};
use logicforge_repair::{dag_search, pmatrix_to_string, ProbabilityMatrix};
use std::path::PathBuf;

#[derive(Clone, Debug)]
pub struct GenOptions {
    pub truth: PathBuf,
    pub vq_checkpoint: PathBuf,
    pub ar_checkpoint: PathBuf,
    pub num_nodes: usize,
    pub iterations: usize,
    pub sample: bool,
    pub temperature: f64,
    pub seed: u64,
    pub trace: bool,
    pub out_dir: PathBuf,
}

pub struct GenOutcome {
    pub codes: Vec<usize>,
    pub kinds: Vec<NodeKind>,
    pub layer_widths: Vec<usize>,
    pub removed_edges: usize,
    pub prior_path: PathBuf,
    pub trace: DecodeTrace,
}

/// Run the generation pipeline and write the raw, repaired, and masked
/// matrices plus the derived layering.
pub fn run_gen(opts: &GenOptions) -> Result<GenOutcome> {
    let table = read_truth(&opts.truth)
        .with_context(|| format!("reading truth table {}", opts.truth.display()))?;
    let name = opts
        .truth
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("structure")
        .to_string();
    let vq = logicforge_vq::load_checkpoint(&opts.vq_checkpoint).with_context(|| {
        format!("loading quantizer checkpoint {}", opts.vq_checkpoint.display())
    })?;
    let ar = logicforge_ar::load_checkpoint(&opts.ar_checkpoint).with_context(|| {
        format!("loading predictor checkpoint {}", opts.ar_checkpoint.display())
    })?;
    let vq_model = vq.model;
    let ar_model = ar.model;
    ensure!(
        vq_model.cfg.codebook_size == ar_model.cfg.codebook_size,
        "checkpoints disagree on codebook size: quantizer {} vs predictor {}",
        vq_model.cfg.codebook_size,
        ar_model.cfg.codebook_size
    );
    let (p, q) = (table.num_inputs(), table.num_outputs());
    ensure!(
        p <= ar_model.cfg.pad_pi,
        "predictor conditioning caps inputs at {}, table has {p}",
        ar_model.cfg.pad_pi
    );
    ensure!(
        opts.num_nodes <= ar_model.cfg.max_nodes && opts.num_nodes <= vq_model.cfg.max_nodes,
        "{} nodes exceed the checkpoint capacity (predictor {}, quantizer {})",
        opts.num_nodes,
        ar_model.cfg.max_nodes,
        vq_model.cfg.max_nodes
    );
    let kinds = generate_structure(opts.num_nodes, p, q)?;

    let condition = Condition::from_table(&table, ar_model.cfg.pad_pi);
    let mut predictor = ar_model.conditioned(&condition);
    let mut rng = stream_rng(opts.seed, "gen-decode");
    let decode_opts = DecodeOptions {
        iterations: opts.iterations,
        sample: opts.sample,
        temperature: opts.temperature,
    };
    let (codes, trace) = decode(&mut predictor, opts.num_nodes, &decode_opts, &mut rng);

    let raw = vq_model.decode_codes(&codes, &kinds)?;
    let pi_ids: Vec<usize> = (0..p).collect();
    let po_ids: Vec<usize> = (opts.num_nodes - q..opts.num_nodes).collect();
    let repaired = dag_search(&raw, &pi_ids, &po_ids);
    let layering = layerize_adjacency(&repaired.adjacency, &kinds)?;

    std::fs::create_dir_all(&opts.out_dir)?;
    write_atomic(opts.out_dir.join(format!("{name}.raw.pmatrix")), &pmatrix_to_string(&raw))?;
    let n = opts.num_nodes;
    let mut dag = ProbabilityMatrix::zeros(n);
    for (src, dst) in repaired.adjacency.edges() {
        dag.set(src, dst, 1.0);
    }
    write_atomic(opts.out_dir.join(format!("{name}.dag.pmatrix")), &pmatrix_to_string(&dag))?;
    let prior_path = opts.out_dir.join(format!("{name}.prior.pmatrix"));
    write_atomic(&prior_path, &pmatrix_to_string(&repaired.masked))?;
    let widths = layering.widths();
    let widths_text: Vec<String> = widths.iter().map(|w| w.to_string()).collect();
    write_atomic(
        opts.out_dir.join(format!("{name}.layers.txt")),
        &format!("{}\n", widths_text.join(",")),
    )?;
    let codes_text: Vec<String> = codes.iter().map(|c| c.to_string()).collect();
    write_atomic(
        opts.out_dir.join(format!("{name}.codes.txt")),
        &format!("{}\n", codes_text.join(" ")),
    )?;
    if opts.trace {
        write_atomic(
            opts.out_dir.join(format!("{name}.trace.json")),
            &serde_json::to_string_pretty(&trace)?,
        )?;
    }
    Ok(GenOutcome {
        codes,
        kinds,
        layer_widths: widths,
        removed_edges: repaired.removed_edges.len(),
        prior_path,
        trace,
    })
}
