//! Library backing the `logicforge` command line: benchmark manifests,
//! synthesis and probing pipelines, structure generation, batch runs, and
//! dataset/training wrappers. The binary in `main.rs` is a thin argument
//! layer over these functions so tests can drive them directly.

pub mod bench;
pub mod bitsd;
pub mod gen;
pub mod manifest;
pub mod pipelines;
pub mod synth;

pub use bench::{improvement_pct, run_bench, BenchOptions, BenchSummary, Method, ReportFormat, RunRecord};
pub use bitsd::{run_bitsd, BitsdOptions, BitsdOutcome};
pub use gen::{run_gen, GenOptions, GenOutcome};
pub use manifest::{parse_manifest_str, read_manifest, BenchmarkEntry, Category, MANIFEST_HEADER};
pub use pipelines::{
    run_dataset, run_train_ar, run_train_vq, ArPipelineConfig, DatasetOptions, TrainArOptions,
    TrainOverrides, TrainVqOptions, VqPipelineConfig,
};
pub use synth::{block_kinds, build_net, run_synth, SynthOptions, SynthOutcome};
