//! File formats, model persistence and experiment protocols.

mod artifact;
mod cloud;
mod config;
mod experiments;
mod manifest;
mod obj;
mod tables;

pub use artifact::{ModelArtifact, FORMAT_VERSION, MAGIC};
pub use cloud::{format_cloud, parse_cloud, read_cloud, write_cloud};
pub use config::{format_config, parse_config, read_config, FitConfig, CONFIG_KEYS};
pub use experiments::{
    cmd_evaluate, cmd_extract, cmd_fit, cmd_loo, cmd_synth, evaluate_model, extract_at, extract_days,
    fold_kind, normalized_time, regular_days, run_fit, run_loo, surface_diameter_profile, EvalOptions, Evaluation, EvaluationReport,
    ExtractedShape, FitRun, FoldKind, FoldOutcome, LooFold, LooReport, Reference, ScanMetrics, SynthSpec,
    EXTRAPOLATION_LIMIT, LOO_FILE, LOSS_FILE, MANIFEST_FILE, METRICS_FILE, MODEL_FILE,
};
pub use manifest::{ManifestScan, SequenceManifest};
pub use obj::{format_obj, parse_obj, read_obj, write_obj};
pub use tables::{format_asd_samples_csv, format_diameter_csv, format_loss_csv, ASD_SAMPLE_HEADER, DIAMETER_HEADER, LOSS_HEADER};
