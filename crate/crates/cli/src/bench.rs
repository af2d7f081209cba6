//! Batch benchmark runs and the report arithmetic derived from them.

use crate::manifest::{read_manifest, BenchmarkEntry};
use crate::synth::build_net;
use anyhow::{Context, Result};
use logicforge_core::io::write_atomic;
use logicforge_das::{train, DasReport, TrainConfig};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

/// How selector logits start: flat, or shaped by a repaired prior matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    UniformDas,
    PriorDas,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::UniformDas => "uniform-das",
            Method::PriorDas => "prior-das",
        })
    }
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Method> {
        Ok(match s {
            "uniform-das" | "uniform" => Method::UniformDas,
            "prior-das" | "prior" => Method::PriorDas,
            other => anyhow::bail!("unknown method `{other}`"),
        })
    }
}

/// One completed search run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub benchmark: String,
    pub method: Method,
    pub seed: u64,
    pub report: DasReport,
    pub wall_seconds: f64,
}

/// Percentage decrease of `ours` relative to `baseline`.
pub fn improvement_pct(baseline: f64, ours: f64) -> f64 {
    (1.0 - ours / baseline) * 100.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub manifest: PathBuf,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub layers: Vec<usize>,
    pub prior_dir: Option<PathBuf>,
    pub max_steps: usize,
    pub lr: f64,
    pub tau: f64,
    pub threshold: f64,
    pub out_dir: PathBuf,
    pub format: ReportFormat,
}

/// One (benchmark, method, seed) cell, successful or not.
#[derive(Clone, Debug)]
pub struct RunRow {
    pub benchmark: String,
    pub method: Method,
    pub seed: u64,
    pub outcome: Result<RunRecord, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub runs: usize,
    pub mean_steps: f64,
    pub mean_used_nands: f64,
    pub mean_accuracy: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub name: String,
    pub uniform: Option<MethodAggregate>,
    pub prior: Option<MethodAggregate>,
    /// Percentage decrease in mean steps of prior-das over uniform-das.
    pub step_improvement_pct: Option<f64>,
    /// Percentage decrease in mean used gates of prior-das over uniform-das.
    pub nand_improvement_pct: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchSummary {
    pub benchmarks: Vec<BenchmarkSummary>,
    /// Mean of the per-benchmark step improvements.
    pub mean_step_improvement_pct: Option<f64>,
    /// Mean of the per-benchmark used-gate improvements.
    pub mean_nand_improvement_pct: Option<f64>,
    pub failed_runs: usize,
}

pub struct BenchOutcome {
    pub rows: Vec<RunRow>,
    pub summary: BenchSummary,
    pub results_path: PathBuf,
    pub summary_path: PathBuf,
}

fn thread_count(jobs: usize) -> usize {
    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cap = std::env::var("LOGICFORGE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(available);
    cap.min(jobs).max(1)
}

fn run_single(entry: &BenchmarkEntry, method: Method, seed: u64, opts: &BenchOptions) -> Result<RunRecord> {
    let table = entry.load_table()?;
    let prior_path = match method {
        Method::UniformDas => None,
        Method::PriorDas => {
            let dir = opts
                .prior_dir
                .as_ref()
                .context("prior-das requires --prior-dir")?;
            Some(dir.join(format!("{}.pmatrix", entry.name)))
        }
    };
    let mut net = build_net(&table, &opts.layers, prior_path.as_deref())?;
    let cfg = TrainConfig {
        max_steps: opts.max_steps,
        lr: opts.lr,
        loss_threshold: opts.threshold,
        tau_start: opts.tau,
        tau_end: opts.tau * 0.1,
        seed,
        ..Default::default()
    };
    let started = Instant::now();
    let out = train(&mut net, &table, &cfg)?;
    Ok(RunRecord {
        benchmark: entry.name.clone(),
        method,
        seed,
        report: out.report,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

fn aggregate(rows: &[RunRow], name: &str, method: Method) -> Option<MethodAggregate> {
    let reports: Vec<&DasReport> = rows
        .iter()
        .filter(|r| r.benchmark == name && r.method == method)
        .filter_map(|r| r.outcome.as_ref().ok())
        .map(|rec| &rec.report)
        .collect();
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    Some(MethodAggregate {
        runs: reports.len(),
        mean_steps: reports.iter().map(|r| r.steps_used as f64).sum::<f64>() / n,
        mean_used_nands: reports.iter().map(|r| r.used_nand_count as f64).sum::<f64>() / n,
        mean_accuracy: reports.iter().map(|r| r.accuracy).sum::<f64>() / n,
    })
}

fn summarize(entries: &[BenchmarkEntry], rows: &[RunRow]) -> BenchSummary {
    let mut benchmarks = Vec::new();
    for entry in entries {
        let uniform = aggregate(rows, &entry.name, Method::UniformDas);
        let prior = aggregate(rows, &entry.name, Method::PriorDas);
        let step_improvement_pct = match (&uniform, &prior) {
            (Some(u), Some(p)) => Some(improvement_pct(u.mean_steps, p.mean_steps)),
            _ => None,
        };
        let nand_improvement_pct = match (&uniform, &prior) {
            (Some(u), Some(p)) => Some(improvement_pct(u.mean_used_nands, p.mean_used_nands)),
            _ => None,
        };
        benchmarks.push(BenchmarkSummary {
            name: entry.name.clone(),
            uniform,
            prior,
            step_improvement_pct,
            nand_improvement_pct,
        });
    }
    let mean_of = |pick: fn(&BenchmarkSummary) -> Option<f64>| {
        let vals: Vec<f64> = benchmarks.iter().filter_map(pick).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    BenchSummary {
        mean_step_improvement_pct: mean_of(|b| b.step_improvement_pct),
        mean_nand_improvement_pct: mean_of(|b| b.nand_improvement_pct),
        failed_runs: rows.iter().filter(|r| r.outcome.is_err()).count(),
        benchmarks,
    }
}

fn results_csv(rows: &[RunRow]) -> String {
    let mut text = String::from(
        "benchmark,method,seed,status,steps,final_loss,accuracy,used_nands,search_space_gates,bitsd_initial,wall_seconds,message\n",
    );
    for row in rows {
        match &row.outcome {
            Ok(rec) => {
                let r = &rec.report;
                text.push_str(&format!(
                    "{},{},{},ok,{},{},{},{},{},{},{:.3},\n",
                    row.benchmark,
                    row.method,
                    row.seed,
                    r.steps_used,
                    r.final_loss,
                    r.accuracy,
                    r.used_nand_count,
                    r.search_space_gate_count,
                    r.bitsd_initial,
                    rec.wall_seconds
                ));
            }
            Err(msg) => {
                text.push_str(&format!(
                    "{},{},{},error,,,,,,,,{}\n",
                    row.benchmark,
                    row.method,
                    row.seed,
                    msg.replace([',', '\n'], ";")
                ));
            }
        }
    }
    text
}

fn summary_csv(summary: &BenchSummary) -> String {
    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    let mut text = String::from(
        "name,uniform_mean_steps,prior_mean_steps,step_improvement_pct,uniform_mean_used_nands,prior_mean_used_nands,nand_improvement_pct\n",
    );
    for b in &summary.benchmarks {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            b.name,
            fmt_opt(b.uniform.as_ref().map(|a| a.mean_steps)),
            fmt_opt(b.prior.as_ref().map(|a| a.mean_steps)),
            fmt_opt(b.step_improvement_pct),
            fmt_opt(b.uniform.as_ref().map(|a| a.mean_used_nands)),
            fmt_opt(b.prior.as_ref().map(|a| a.mean_used_nands)),
            fmt_opt(b.nand_improvement_pct),
        ));
    }
    text.push_str(&format!(
        "overall,,,{},,,{}\n",
        fmt_opt(summary.mean_step_improvement_pct),
        fmt_opt(summary.mean_nand_improvement_pct)
    ));
    text
}

/// Run every (benchmark, method, seed) cell, in parallel, and write the
/// per-run results plus an aggregate summary.
pub fn run_bench(opts: &BenchOptions) -> Result<BenchOutcome> {
    let entries = read_manifest(&opts.manifest)?;
    anyhow::ensure!(!entries.is_empty(), "manifest lists no benchmarks");
    anyhow::ensure!(!opts.methods.is_empty(), "no methods selected");
    anyhow::ensure!(!opts.seeds.is_empty(), "no seeds given");

    let jobs: Vec<(usize, Method, u64)> = entries
        .iter()
        .enumerate()
        .flat_map(|(i, _)| {
            opts.methods
                .iter()
                .flat_map(move |&m| opts.seeds.iter().map(move |&s| (i, m, s)))
        })
        .collect();
    let threads = thread_count(jobs.len());
    log::info!("bench: {} runs on {} threads", jobs.len(), threads);

    let next = AtomicUsize::new(0);
    let collected: Mutex<Vec<(usize, RunRow)>> = Mutex::new(Vec::with_capacity(jobs.len()));
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= jobs.len() {
                    break;
                }
                let (entry_idx, method, seed) = jobs[idx];
                let entry = &entries[entry_idx];
                let outcome = run_single(entry, method, seed, opts).map_err(|e| format!("{e:#}"));
                let row = RunRow { benchmark: entry.name.clone(), method, seed, outcome };
                collected.lock().expect("no poisoned runs").push((idx, row));
            });
        }
    });
    let mut indexed = collected.into_inner().expect("all workers joined");
    indexed.sort_by_key(|(idx, _)| *idx);
    let rows: Vec<RunRow> = indexed.into_iter().map(|(_, row)| row).collect();

    let summary = summarize(&entries, &rows);
    std::fs::create_dir_all(&opts.out_dir)?;
    let results_path = opts.out_dir.join("results.csv");
    write_atomic(&results_path, &results_csv(&rows))?;
    let summary_path = match opts.format {
        ReportFormat::Json => {
            let path = opts.out_dir.join("summary.json");
            write_atomic(&path, &serde_json::to_string_pretty(&summary)?)?;
            path
        }
        ReportFormat::Csv => {
            let path = opts.out_dir.join("summary.csv");
            write_atomic(&path, &summary_csv(&summary))?;
            path
        }
    };
    Ok(BenchOutcome { rows, summary, results_path, summary_path })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_methods_improve_by_zero() {
        assert_eq!(improvement_pct(1000.0, 1000.0), 0.0);
    }

    #[test]
    fn improvement_is_the_relative_decrease() {
        assert!((improvement_pct(200.0, 150.0) - 25.0).abs() < 1e-12);
        assert!((improvement_pct(100.0, 120.0) + 20.0).abs() < 1e-12);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::UniformDas, Method::PriorDas] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("magic".parse::<Method>().is_err());
    }

    #[test]
    fn thread_cap_respects_the_environment() {
        // Serialized because the variable is process-global.
        std::env::set_var("LOGICFORGE_THREADS", "2");
        assert_eq!(thread_count(8), 2);
        assert_eq!(thread_count(1), 1);
        std::env::set_var("LOGICFORGE_THREADS", "not-a-number");
        assert!(thread_count(8) >= 1);
        std::env::remove_var("LOGICFORGE_THREADS");
    }
}
