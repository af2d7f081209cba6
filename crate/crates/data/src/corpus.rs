//! Dataset assembly: random AIGs are converted to NAND form, cut into
//! bounded-input windows, labelled with their truth tables, deduplicated,
//! augmented, and written out as JSONL shards.

use crate::aiger::{random_aig, RandomAigSpec};
use crate::convert::aig_to_nand;
use crate::extract::{cone_to_circuit, expand_fanout, extract_fanin};
use crate::DataError;
use logicforge_core::io::{circuit_to_string, truth_to_string, write_atomic};
use logicforge_core::seed::stream_rng;
use logicforge_core::{Circuit, NodeKind, TruthTable};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

/// Provenance of one dataset record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub source: usize,
    pub pivot: usize,
    pub shuffled: bool,
    pub idle_added: usize,
}

/// One training example: a circuit and the truth table it realizes, both in
/// the plain text formats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub circuit: String,
    pub truth: String,
    pub meta: RecordMeta,
}

/// Knobs for [`build_corpus`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub num_aigs: usize,
    pub aig_inputs: (usize, usize),
    pub aig_gates: (usize, usize),
    pub aig_outputs: (usize, usize),
    pub pivots_per_aig: usize,
    pub max_inputs: usize,
    pub max_po: usize,
    pub dedup_cap: usize,
    pub idle_ratio: f64,
    pub shuffle: bool,
    pub shard_size: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            num_aigs: 20,
            aig_inputs: (3, 6),
            aig_gates: (5, 20),
            aig_outputs: (1, 2),
            pivots_per_aig: 4,
            max_inputs: 4,
            max_po: 2,
            dedup_cap: 5,
            idle_ratio: 0.2,
            shuffle: true,
            shard_size: 100,
            seed: 0,
        }
    }
}

/// What a corpus build produced.
#[derive(Clone, Debug)]
pub struct CorpusSummary {
    pub records: usize,
    pub dropped_duplicates: usize,
    pub shard_paths: Vec<PathBuf>,
}

/// Verify the inputs-gates-outputs block layout and return the block sizes.
fn grouped_layout(circuit: &Circuit) -> (usize, usize, usize) {
    let (p, g, q) = (circuit.num_pi(), circuit.num_nands(), circuit.num_po());
    let ok = (0..p).all(|v| circuit.kind(v) == NodeKind::Pi)
        && (p..p + g).all(|v| circuit.kind(v) == NodeKind::Nand)
        && (p + g..p + g + q).all(|v| circuit.kind(v) == NodeKind::Po);
    assert!(ok, "expected inputs, gates, outputs in contiguous id blocks");
    (p, g, q)
}

/// Structural rewrite applied to every window before augmentation. Currently
/// the identity; the slot exists so canonicalization passes can drop in
/// without touching the pipeline.
pub fn rewrite(circuit: &Circuit) -> Circuit {
    circuit.clone()
}

/// Permute gate ids among gate slots, leaving behaviour untouched.
pub fn augment_shuffle<R: Rng + ?Sized>(circuit: &Circuit, rng: &mut R) -> Circuit {
    let gate_ids: Vec<usize> =
        (0..circuit.node_count()).filter(|&v| circuit.kind(v) == NodeKind::Nand).collect();
    let mut targets = gate_ids.clone();
    targets.shuffle(rng);
    let mut map: Vec<usize> = (0..circuit.node_count()).collect();
    for (&from, &to) in gate_ids.iter().zip(&targets) {
        map[from] = to;
    }
    let edges: Vec<(usize, usize)> =
        circuit.adjacency().edges().map(|(s, d)| (map[s], map[d])).collect();
    Circuit::new(circuit.kinds().to_vec(), &edges)
}

/// Insert `ceil(ratio * num_gates)` disconnected gates at random positions
/// within the gate block, preserving the relative order of existing nodes.
pub fn augment_idle<R: Rng + ?Sized>(circuit: &Circuit, ratio: f64, rng: &mut R) -> Circuit {
    assert!((0.0..=0.8).contains(&ratio), "idle ratio out of range");
    let (p, g, q) = grouped_layout(circuit);
    let count = (ratio * g as f64).ceil() as usize;
    if count == 0 {
        return circuit.clone();
    }
    let widened = g + count;
    let mut slots: Vec<usize> = (0..widened).collect();
    slots.shuffle(rng);
    let idle_slots: HashSet<usize> = slots[..count].iter().copied().collect();

    let mut map = vec![0usize; p + g + q];
    for v in 0..p {
        map[v] = v;
    }
    let mut next = 0usize;
    for k in 0..g {
        while idle_slots.contains(&next) {
            next += 1;
        }
        map[p + k] = p + next;
        next += 1;
    }
    for v in p + g..p + g + q {
        map[v] = v + count;
    }

    let mut kinds = Vec::with_capacity(p + widened + q);
    kinds.extend(std::iter::repeat(NodeKind::Pi).take(p));
    kinds.extend(std::iter::repeat(NodeKind::Nand).take(widened));
    kinds.extend(std::iter::repeat(NodeKind::Po).take(q));
    let edges: Vec<(usize, usize)> =
        circuit.adjacency().edges().map(|(s, d)| (map[s], map[d])).collect();
    Circuit::new(kinds, &edges)
}

/// Generate, window, label, deduplicate, augment, and shard a corpus.
pub fn build_corpus(cfg: &CorpusConfig, out_dir: &Path) -> Result<CorpusSummary, DataError> {
    assert!(cfg.dedup_cap >= 1 && cfg.shard_size >= 1);
    let mut rng = stream_rng(cfg.seed, "dataset");
    let aig_spec = RandomAigSpec {
        inputs: cfg.aig_inputs,
        gates: cfg.aig_gates,
        outputs: cfg.aig_outputs,
    };
    let mut seen: HashMap<TruthTable, usize> = HashMap::new();
    let mut records: Vec<DatasetRecord> = Vec::new();
    let mut dropped = 0usize;
    for source in 0..cfg.num_aigs {
        let aig = random_aig(&mut rng, &aig_spec);
        let host = aig_to_nand(&aig)?;
        let mut pivots: Vec<usize> =
            (0..host.node_count()).filter(|&v| host.kind(v) == NodeKind::Nand).collect();
        pivots.shuffle(&mut rng);
        pivots.truncate(cfg.pivots_per_aig);
        pivots.sort_unstable();
        for pivot in pivots {
            let cone = extract_fanin(&host, pivot, cfg.max_inputs)?;
            let cone = expand_fanout(&host, cone);
            let (window, _) = cone_to_circuit(&host, &cone, cfg.max_po)?;
            let window = rewrite(&window);
            let truth = window.truth_table()?;
            let count = seen.entry(truth.clone()).or_insert(0);
            if *count >= cfg.dedup_cap {
                dropped += 1;
                continue;
            }
            *count += 1;

            let mut sample = window;
            if cfg.shuffle {
                sample = augment_shuffle(&sample, &mut rng);
            }
            let before = sample.num_nands();
            if cfg.idle_ratio > 0.0 {
                sample = augment_idle(&sample, cfg.idle_ratio, &mut rng);
            }
            let idle_added = sample.num_nands() - before;
            assert_eq!(sample.truth_table()?, truth, "augmentation must preserve behaviour");

            records.push(DatasetRecord {
                circuit: circuit_to_string(&sample),
                truth: truth_to_string(&truth),
                meta: RecordMeta { source, pivot, shuffled: cfg.shuffle, idle_added },
            });
        }
    }

    std::fs::create_dir_all(out_dir)?;
    let mut shard_paths = Vec::new();
    for (i, chunk) in records.chunks(cfg.shard_size).enumerate() {
        let mut text = String::new();
        for record in chunk {
            text.push_str(&serde_json::to_string(record)?);
            text.push('\n');
        }
        let path = out_dir.join(format!("shard-{i:04}.jsonl"));
        write_atomic(&path, &text)?;
        shard_paths.push(path);
    }
    log::info!(
        "corpus: {} records in {} shards, {} duplicates dropped",
        records.len(),
        shard_paths.len(),
        dropped
    );
    Ok(CorpusSummary { records: records.len(), dropped_duplicates: dropped, shard_paths })
}

/// Read every `shard-*.jsonl` file under `dir` back into records.
pub fn read_corpus(dir: &Path) -> Result<Vec<DatasetRecord>, DataError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|path| {
            path.file_name()
                .and_then(|name| name.to_str())
                .map_or(false, |name| name.starts_with("shard-") && name.ends_with(".jsonl"))
        })
        .collect();
    paths.sort();
    let mut records = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(&path)?;
        for line in text.lines().filter(|line| !line.trim().is_empty()) {
            records.push(serde_json::from_str(line)?);
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use logicforge_core::random::{random_circuit, RandomCircuitSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shuffling_gate_ids_preserves_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = RandomCircuitSpec::sized((2, 4), (3, 10), (1, 2));
        for _ in 0..20 {
            let circuit = random_circuit(&mut rng, &spec);
            let shuffled = augment_shuffle(&circuit, &mut rng);
            assert!(shuffled.is_valid(), "violations: {:?}", shuffled.validate());
            assert_eq!(shuffled.kinds(), circuit.kinds());
            assert_eq!(shuffled.truth_table().unwrap(), circuit.truth_table().unwrap());
        }
    }

    #[test]
    fn idle_insertion_adds_disconnected_gates_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let spec = RandomCircuitSpec::sized((2, 3), (4, 8), (1, 2));
        for _ in 0..20 {
            let circuit = random_circuit(&mut rng, &spec);
            let grown = augment_idle(&circuit, 0.4, &mut rng);
            let added = grown.num_nands() - circuit.num_nands();
            assert_eq!(added, (0.4 * circuit.num_nands() as f64).ceil() as usize);
            assert!(grown.is_valid(), "violations: {:?}", grown.validate());
            assert_eq!(grown.num_pi(), circuit.num_pi());
            assert_eq!(grown.num_po(), circuit.num_po());
            assert_eq!(grown.truth_table().unwrap(), circuit.truth_table().unwrap());
            let idle = (0..grown.node_count())
                .filter(|&v| {
                    grown.adjacency().indegree(v) == 0
                        && grown.adjacency().outdegree(v) == 0
                        && grown.kind(v) == NodeKind::Nand
                })
                .count();
            assert!(idle >= added, "inserted gates must stay disconnected");
        }
    }

    #[test]
    fn zero_idle_ratio_is_the_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = RandomCircuitSpec::sized((2, 3), (3, 6), (1, 1));
        let circuit = random_circuit(&mut rng, &spec);
        let same = augment_idle(&circuit, 0.0, &mut rng);
        assert_eq!(circuit_to_string(&same), circuit_to_string(&circuit));
        let same = rewrite(&circuit);
        assert_eq!(circuit_to_string(&same), circuit_to_string(&circuit));
    }
}
