//! Artifact plumbing: dataset construction and the two training loops, each
//! driven by a JSON config file with flag overrides, emitting metrics CSVs
//! and resumable checkpoints.

use anyhow::{bail, ensure, Context, Result};
use logicforge_ar::{ArExample, ArTrainConfig, ArTrainer, Condition, ToyConfig};
use logicforge_core::io::{parse_circuit_str, parse_truth_str, write_atomic};
use logicforge_data::{build_corpus, read_corpus, CorpusConfig, CorpusSummary, DatasetRecord};
use logicforge_vq::{CircuitGraph, VqConfig, VqTrainConfig, VqTrainer};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Value overrides shared by the training wrappers.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrainOverrides {
    pub seed: Option<u64>,
    pub max_steps: Option<usize>,
    pub lr: Option<f64>,
}

impl TrainOverrides {
    fn any(&self) -> bool {
        self.seed.is_some() || self.max_steps.is_some() || self.lr.is_some()
    }
}

fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

// ---------------------------------------------------------------------------
// dataset

#[derive(Clone, Debug)]
pub struct DatasetOptions {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
}

/// Build a corpus under `out_dir` and dump the effective config next to it.
pub fn run_dataset(opts: &DatasetOptions) -> Result<CorpusSummary> {
    let mut cfg: CorpusConfig = match &opts.config {
        Some(path) => load_config(path)?,
        None => CorpusConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let summary = build_corpus(&cfg, &opts.out_dir)?;
    write_atomic(
        opts.out_dir.join("dataset.config.json"),
        &serde_json::to_string_pretty(&cfg)?,
    )?;
    Ok(summary)
}

fn load_records(data_dir: &Path) -> Result<Vec<DatasetRecord>> {
    let records =
        read_corpus(data_dir).with_context(|| format!("reading corpus {}", data_dir.display()))?;
    ensure!(!records.is_empty(), "no dataset records under {}", data_dir.display());
    Ok(records)
}

// ---------------------------------------------------------------------------
// train-vq

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct VqPipelineConfig {
    pub model: VqConfig,
    pub train: VqTrainConfig,
}

#[derive(Clone, Debug)]
pub struct TrainVqOptions {
    pub data_dir: PathBuf,
    pub config: Option<PathBuf>,
    pub resume: Option<PathBuf>,
    pub overrides: TrainOverrides,
    pub out_dir: PathBuf,
}

pub struct TrainVqOutcome {
    pub checkpoint_path: PathBuf,
    pub epochs_run: usize,
    pub final_eval_rec: Option<f64>,
}

pub const VQ_METRICS_HEADER: &str = "epoch,eval_rec,used_fraction,perplexity,revived,steps";

/// Train (or resume) the circuit quantizer on a corpus directory.
pub fn run_train_vq(opts: &TrainVqOptions) -> Result<TrainVqOutcome> {
    let records = load_records(&opts.data_dir)?;
    let mut graphs = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let circuit =
            parse_circuit_str(&record.circuit).with_context(|| format!("corpus record {i}"))?;
        graphs.push(CircuitGraph::from_circuit(&circuit).with_context(|| format!("record {i}"))?);
    }
    let mut trainer = match &opts.resume {
        Some(path) => {
            ensure!(
                opts.config.is_none() && !opts.overrides.any(),
                "--resume takes its config from the checkpoint; drop --config and overrides"
            );
            logicforge_vq::load_checkpoint(path)
                .with_context(|| format!("loading checkpoint {}", path.display()))?
        }
        None => {
            let mut cfg: VqPipelineConfig = match &opts.config {
                Some(path) => load_config(path)?,
                None => VqPipelineConfig::default(),
            };
            if let Some(seed) = opts.overrides.seed {
                cfg.train.seed = seed;
            }
            if let Some(steps) = opts.overrides.max_steps {
                cfg.train.max_steps = steps;
            }
            if let Some(lr) = opts.overrides.lr {
                cfg.train.lr = lr;
            }
            VqTrainer::new(cfg.model, cfg.train)
        }
    };
    let history = trainer.train(&graphs);

    std::fs::create_dir_all(&opts.out_dir)?;
    let checkpoint_path = opts.out_dir.join("vq.ckpt.json");
    logicforge_vq::save_checkpoint(&checkpoint_path, &trainer)?;
    let effective = VqPipelineConfig {
        model: trainer.model.cfg.clone(),
        train: trainer.cfg.clone(),
    };
    write_atomic(opts.out_dir.join("vq.config.json"), &serde_json::to_string_pretty(&effective)?)?;

    let metrics_path = opts.out_dir.join("vq.metrics.csv");
    let mut text = if opts.resume.is_some() && metrics_path.exists() {
        std::fs::read_to_string(&metrics_path)?
    } else {
        format!("{VQ_METRICS_HEADER}\n")
    };
    for e in &history {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.epoch, e.eval_rec, e.used_fraction, e.perplexity, e.revived, e.steps
        ));
    }
    write_atomic(&metrics_path, &text)?;

    Ok(TrainVqOutcome {
        checkpoint_path,
        epochs_run: history.len(),
        final_eval_rec: history.last().map(|e| e.eval_rec),
    })
}

// ---------------------------------------------------------------------------
// train-ar

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ArPipelineConfig {
    /// Omit to derive the model shape from the quantizer checkpoint and the
    /// corpus (mask token capacity, node cap, conditioning width).
    pub model: Option<ToyConfig>,
    pub train: ArTrainConfig,
}

#[derive(Clone, Debug)]
pub struct TrainArOptions {
    pub data_dir: PathBuf,
    pub vq_checkpoint: PathBuf,
    pub config: Option<PathBuf>,
    pub resume: Option<PathBuf>,
    pub overrides: TrainOverrides,
    pub out_dir: PathBuf,
}

pub struct TrainArOutcome {
    pub checkpoint_path: PathBuf,
    pub steps_run: usize,
    pub final_loss: Option<f64>,
    pub all_masked_accuracy: f64,
}

pub const AR_METRICS_HEADER: &str = "step,loss";

/// Tokenize the corpus with a trained quantizer, then train (or resume) the
/// masked code predictor on it.
pub fn run_train_ar(opts: &TrainArOptions) -> Result<TrainArOutcome> {
    let records = load_records(&opts.data_dir)?;
    let vq = logicforge_vq::load_checkpoint(&opts.vq_checkpoint)
        .with_context(|| format!("loading checkpoint {}", opts.vq_checkpoint.display()))?;
    let vq_model = vq.model;

    let mut max_inputs = 0usize;
    let mut tables = Vec::with_capacity(records.len());
    let mut codes = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let circuit =
            parse_circuit_str(&record.circuit).with_context(|| format!("corpus record {i}"))?;
        let table = parse_truth_str(&record.truth).with_context(|| format!("record {i}"))?;
        max_inputs = max_inputs.max(table.num_inputs());
        codes.push(vq_model.encode_codes(&circuit).with_context(|| format!("record {i}"))?);
        tables.push(table);
    }

    let mut trainer = match &opts.resume {
        Some(path) => {
            ensure!(
                opts.config.is_none() && !opts.overrides.any(),
                "--resume takes its config from the checkpoint; drop --config and overrides"
            );
            logicforge_ar::load_checkpoint(path)
                .with_context(|| format!("loading checkpoint {}", path.display()))?
        }
        None => {
            let mut cfg: ArPipelineConfig = match &opts.config {
                Some(path) => load_config(path)?,
                None => ArPipelineConfig::default(),
            };
            let model_cfg = cfg.model.unwrap_or_else(|| ToyConfig {
                codebook_size: vq_model.cfg.codebook_size,
                max_nodes: vq_model.cfg.max_nodes,
                pad_pi: max_inputs.max(1),
                ..ToyConfig::default()
            });
            ensure!(
                model_cfg.codebook_size == vq_model.cfg.codebook_size,
                "predictor codebook size {} does not match the quantizer's {}",
                model_cfg.codebook_size,
                vq_model.cfg.codebook_size
            );
            if let Some(seed) = opts.overrides.seed {
                cfg.train.seed = seed;
            }
            if let Some(steps) = opts.overrides.max_steps {
                cfg.train.steps = steps;
            }
            if let Some(lr) = opts.overrides.lr {
                cfg.train.lr = lr;
            }
            ArTrainer::new(model_cfg, cfg.train)
        }
    };
    let pad_pi = trainer.model.cfg.pad_pi;
    if max_inputs > pad_pi {
        bail!("predictor conditioning caps inputs at {pad_pi}, corpus has {max_inputs}");
    }
    let cap = trainer.model.cfg.max_nodes;
    let examples: Vec<ArExample> = codes
        .into_iter()
        .zip(&tables)
        .map(|(c, t)| ArExample { codes: c, condition: Condition::from_table(t, pad_pi) })
        .collect();
    if let Some(too_big) = examples.iter().position(|e| e.codes.len() > cap) {
        bail!("record {too_big} has {} nodes; the predictor caps at {cap}", examples[too_big].codes.len());
    }

    let start_step = trainer.step;
    let losses = trainer.train(&examples);
    let accuracy = logicforge_ar::all_masked_accuracy(&trainer.model, &examples);

    std::fs::create_dir_all(&opts.out_dir)?;
    let checkpoint_path = opts.out_dir.join("ar.ckpt.json");
    logicforge_ar::save_checkpoint(&checkpoint_path, &trainer)?;
    let effective = ArPipelineConfig {
        model: Some(trainer.model.cfg.clone()),
        train: trainer.cfg.clone(),
    };
    write_atomic(opts.out_dir.join("ar.config.json"), &serde_json::to_string_pretty(&effective)?)?;

    let metrics_path = opts.out_dir.join("ar.metrics.csv");
    let mut text = if opts.resume.is_some() && metrics_path.exists() {
        std::fs::read_to_string(&metrics_path)?
    } else {
        format!("{AR_METRICS_HEADER}\n")
    };
    for (i, loss) in losses.iter().enumerate() {
        text.push_str(&format!("{},{}\n", start_step + i + 1, loss));
    }
    write_atomic(&metrics_path, &text)?;

    Ok(TrainArOutcome {
        checkpoint_path,
        steps_run: losses.len(),
        final_loss: losses.last().copied(),
        all_masked_accuracy: accuracy,
    })
}
