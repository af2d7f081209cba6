//! `logicforge`: NAND-circuit synthesis from truth tables.

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use logicforge_cli::{
    run_bench, run_bitsd, run_dataset, run_gen, run_synth, run_train_ar, run_train_vq,
    BenchOptions, BitsdOptions, DatasetOptions, GenOptions, Method, ReportFormat, SynthOptions,
    TrainArOptions, TrainOverrides, TrainVqOptions,
};
use logicforge_das::DasError;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_NO_CONVERGENCE: u8 = 1;
const EXIT_INPUT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "logicforge",
    version,
    about = "Synthesize NAND circuits that realize truth tables",
    after_help = "Exit codes: 0 success, 1 non-convergence, 2 input error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SearchFlags {
    /// Root seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optimizer step budget.
    #[arg(long, default_value_t = 50_000)]
    max_steps: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    /// Starting sampling temperature (anneals to a tenth of it).
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Stop once the relaxed loss drops below this.
    #[arg(long, default_value_t = 1e-3)]
    threshold: f64,
    /// Hidden gate-layer widths for uniform nets, e.g. 4,4,4.
    #[arg(long, value_delimiter = ',', default_value = "4,4,4")]
    layers: Vec<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a circuit matching a truth table.
    Synth {
        /// Truth-table file: one 0/1 line of length 2^inputs per output.
        truth: PathBuf,
        #[command(flatten)]
        search: SearchFlags,
        /// Edge-probability prior matrix (block layout: inputs first,
        /// outputs last); repaired to a DAG before use.
        #[arg(long)]
        prior: Option<PathBuf>,
        /// Emit the best circuit even below accuracy 1.0.
        #[arg(long)]
        allow_partial: bool,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Propose a prior matrix for a table from trained checkpoints.
    Gen {
        truth: PathBuf,
        /// Quantizer checkpoint (vq.ckpt.json).
        #[arg(long = "vq")]
        vq_checkpoint: PathBuf,
        /// Predictor checkpoint (ar.ckpt.json).
        #[arg(long = "ar")]
        ar_checkpoint: PathBuf,
        /// Total node count of the proposed structure.
        #[arg(long, default_value_t = 24)]
        nodes: usize,
        /// Decoding iterations.
        #[arg(long, default_value_t = 8)]
        iterations: usize,
        /// Sample codes instead of taking the argmax.
        #[arg(long)]
        sample: bool,
        /// Sampling temperature (with --sample).
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also dump the per-iteration decode trace as JSON.
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Report an untrained net's mean output error on a table.
    Bitsd {
        truth: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "4,4,4")]
        layers: Vec<usize>,
        #[arg(long)]
        prior: Option<PathBuf>,
    },
    /// Run a manifest of benchmarks across methods and seeds.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        /// Comma-separated: uniform-das, prior-das.
        #[arg(long, value_delimiter = ',', default_value = "uniform-das")]
        methods: Vec<Method>,
        /// Comma-separated seed list.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[command(flatten)]
        search: SearchFlags,
        /// Directory holding <name>.pmatrix priors for prior-das.
        #[arg(long)]
        prior_dir: Option<PathBuf>,
        #[arg(long, default_value = "bench-out")]
        out_dir: PathBuf,
        /// Summary file format; per-run results are always CSV.
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
    },
    /// Build a training corpus of windowed circuits with truth labels.
    Dataset {
        /// Corpus config JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "dataset")]
        out_dir: PathBuf,
    },
    /// Train the circuit quantizer on a corpus.
    TrainVq {
        /// Corpus directory of shard-*.jsonl files.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Resume from a checkpoint instead of starting fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long, default_value = "train-vq-out")]
        out_dir: PathBuf,
    },
    /// Train the masked code predictor on a quantized corpus.
    TrainAr {
        #[arg(long)]
        data: PathBuf,
        /// Quantizer checkpoint used to tokenize the corpus.
        #[arg(long = "vq")]
        vq_checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long, default_value = "train-ar-out")]
        out_dir: PathBuf,
    },
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Synth { truth, search, prior, allow_partial, out_dir } => {
            let outcome = run_synth(&SynthOptions {
                truth,
                layers: search.layers,
                prior,
                max_steps: search.max_steps,
                lr: search.lr,
                tau: search.tau,
                threshold: search.threshold,
                seed: search.seed,
                allow_partial,
                out_dir,
            })?;
            let r = &outcome.record.report;
            println!(
                "synth: accuracy {:.4} after {} steps ({} of {} gates used)",
                r.accuracy, r.steps_used, r.used_nand_count, r.search_space_gate_count
            );
            println!("run record: {}", outcome.record_path.display());
            match &outcome.circuit_path {
                Some(path) => println!("circuit: {}", path.display()),
                None => eprintln!(
                    "no circuit emitted: accuracy {:.4} < 1.0 (use --allow-partial to keep it)",
                    r.accuracy
                ),
            }
            Ok(if outcome.converged || allow_partial { EXIT_OK } else { EXIT_NO_CONVERGENCE })
        }
        Command::Gen {
            truth,
            vq_checkpoint,
            ar_checkpoint,
            nodes,
            iterations,
            sample,
            temperature,
            seed,
            trace,
            out_dir,
        } => {
            let outcome = run_gen(&GenOptions {
                truth,
                vq_checkpoint,
                ar_checkpoint,
                num_nodes: nodes,
                iterations,
                sample,
                temperature,
                seed,
                trace,
                out_dir,
            })?;
            println!(
                "gen: {} codes decoded; {} cycle edges removed; layer widths {:?}",
                outcome.codes.len(),
                outcome.removed_edges,
                outcome.layer_widths
            );
            println!("prior: {}", outcome.prior_path.display());
            Ok(EXIT_OK)
        }
        Command::Bitsd { truth, seed, layers, prior } => {
            let outcome = run_bitsd(&BitsdOptions { truth, layers, prior, seed })?;
            println!("bitsd: {:.6} ({}, {} nodes)", outcome.value, outcome.method, outcome.num_nodes);
            Ok(EXIT_OK)
        }
        Command::Bench { manifest, methods, seeds, search, prior_dir, out_dir, format } => {
            let outcome = run_bench(&BenchOptions {
                manifest,
                methods,
                seeds,
                layers: search.layers,
                prior_dir,
                max_steps: search.max_steps,
                lr: search.lr,
                tau: search.tau,
                threshold: search.threshold,
                out_dir,
                format,
            })?;
            let s = &outcome.summary;
            println!(
                "bench: {} runs ({} failed) over {} benchmarks",
                outcome.rows.len(),
                s.failed_runs,
                s.benchmarks.len()
            );
            if let Some(pct) = s.mean_step_improvement_pct {
                println!("mean step improvement of prior over uniform: {pct:.2}%");
            }
            println!("results: {}", outcome.results_path.display());
            println!("summary: {}", outcome.summary_path.display());
            Ok(EXIT_OK)
        }
        Command::Dataset { config, seed, out_dir } => {
            let summary = run_dataset(&DatasetOptions { config, seed, out_dir })?;
            println!(
                "dataset: {} records in {} shards ({} duplicates dropped)",
                summary.records,
                summary.shard_paths.len(),
                summary.dropped_duplicates
            );
            Ok(EXIT_OK)
        }
        Command::TrainVq { data, config, resume, seed, max_steps, lr, out_dir } => {
            let outcome = run_train_vq(&TrainVqOptions {
                data_dir: data,
                config,
                resume,
                overrides: TrainOverrides { seed, max_steps, lr },
                out_dir,
            })?;
            match outcome.final_eval_rec {
                Some(rec) => println!(
                    "train-vq: {} epochs, final reconstruction loss {rec:.4}",
                    outcome.epochs_run
                ),
                None => println!("train-vq: nothing left to do"),
            }
            println!("checkpoint: {}", outcome.checkpoint_path.display());
            Ok(EXIT_OK)
        }
        Command::TrainAr { data, vq_checkpoint, config, resume, seed, max_steps, lr, out_dir } => {
            let outcome = run_train_ar(&TrainArOptions {
                data_dir: data,
                vq_checkpoint,
                config,
                resume,
                overrides: TrainOverrides { seed, max_steps, lr },
                out_dir,
            })?;
            match outcome.final_loss {
                Some(loss) => println!(
                    "train-ar: {} steps, final loss {loss:.4}, all-masked accuracy {:.3}",
                    outcome.steps_run, outcome.all_masked_accuracy
                ),
                None => println!(
                    "train-ar: nothing left to do (all-masked accuracy {:.3})",
                    outcome.all_masked_accuracy
                ),
            }
            println!("checkpoint: {}", outcome.checkpoint_path.display());
            Ok(EXIT_OK)
        }
    }
}

/// Divergence is a failed search, not a bad invocation.
fn classify(error: &anyhow::Error) -> u8 {
    let diverged = error
        .chain()
        .any(|cause| matches!(cause.downcast_ref::<DasError>(), Some(DasError::Diverged { .. })));
    if diverged {
        EXIT_NO_CONVERGENCE
    } else {
        EXIT_INPUT_ERROR
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(classify(&error))
        }
    }
}
