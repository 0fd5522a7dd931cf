//! Fit, extract, evaluate, leave-one-out and synthetic-data protocols.
//!
//! Each `cmd_*` function reads its inputs from disk and writes its outputs
//! into a directory; the `run_*` and `*_model` functions underneath work on
//! in-memory values.

use super::artifact::ModelArtifact;
use super::cloud::{read_cloud, write_cloud};
use super::config::FitConfig;
use super::manifest::{ManifestScan, SequenceManifest};
use super::obj::{read_obj, write_obj};
use super::tables::{format_diameter_csv, format_loss_csv, write_text};
use crate::geometry::{
    average_surface_distance, average_surface_distance_to_cloud, centerline_with_clearance, diameter_profile, extract_mesh,
    normalize_sequence, profile_from_centerline, AsdResult, CenterlineOptions, DiameterProfile, MeshDistance, MeshSdf,
    TriangleMesh, Units,
};
use crate::nn::LossBreakdown;
use crate::synthetic::{shape_times, AnalyticShape, MM_PER_UNIT};
use crate::training::{fit_normalized, loss_history_summary, PointCloudSequence};
use crate::{Error, Result, TemporalSdfModel, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Largest |normalized time| at which a model may be evaluated, and only
/// when extrapolation is explicitly allowed.
pub const EXTRAPOLATION_LIMIT: f64 = 1.25;

pub const MODEL_FILE: &str = "model.sdf";
pub const LOSS_FILE: &str = "loss_history.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const LOO_FILE: &str = "loo_report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Settings shared by evaluation and leave-one-out.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Marching cubes grid points per axis.
    pub resolution: usize,
    /// Surface samples per side for ASD.
    pub asd_samples: usize,
    pub seed: u64,
    /// Direction along which diameter stations are laid out.
    pub axis: Vec3,
    pub stations: usize,
    pub centerline: CenterlineOptions,
    /// Sign-grid resolution for reference meshes.
    pub reference_grid: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            resolution: 128,
            asd_samples: 20_000,
            seed: 0,
            axis: Vec3::z(),
            stations: 50,
            centerline: CenterlineOptions::default(),
            reference_grid: 64,
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone)]
pub struct FitRun {
    pub artifact: ModelArtifact,
    pub history: Vec<LossBreakdown>,
}

/// Fits a sequence; `on_epoch` observes each epoch's loss.
pub fn run_fit(
    seq: &PointCloudSequence,
    config: &FitConfig,
    on_epoch: impl FnMut(usize, &LossBreakdown),
) -> Result<FitRun> {
    config.validate()?;
    if seq.len() < 2 {
        return Err(Error::InvalidSequence(format!("fitting needs at least 2 scans, got {}", seq.len())));
    }
    let normalized = normalize_sequence(seq, config.training.padding)?;
    let outcome = fit_normalized(&normalized, &config.mlp, &config.training, on_epoch)?;
    let summary = loss_history_summary(&outcome.history)?;
    Ok(FitRun {
        artifact: ModelArtifact::new(seq.patient_id(), outcome.model, config.training.clone(), Some(summary)),
        history: outcome.history,
    })
}

/// Loads the manifest (aligning scans when landmarks are present), fits, and
/// writes the model and its loss history into `out_dir`.
pub fn cmd_fit(
    manifest_path: &Path,
    config: &FitConfig,
    out_dir: &Path,
    on_epoch: impl FnMut(usize, &LossBreakdown),
) -> Result<FitRun> {
    let manifest = SequenceManifest::load(manifest_path)?;
    let seq = manifest.load_sequence(manifest.has_landmarks())?;
    let run = run_fit(&seq, config, on_epoch)?;
    create_dir(out_dir)?;
    run.artifact.save(&out_dir.join(MODEL_FILE))?;
    write_text(&out_dir.join(LOSS_FILE), &format_loss_csv(&run.history))?;
    Ok(run)
}

// ---------------------------------------------------------------- extract

/// Normalized time of `day`, enforcing the extrapolation policy.
pub fn normalized_time(model: &TemporalSdfModel, day: f64, allow_extrapolation: bool) -> Result<f64> {
    let t = model.transform().time_to_normalized(day);
    let limit = if allow_extrapolation { EXTRAPOLATION_LIMIT } else { 1.0 };
    // tolerate rounding in day -> t for the scan range endpoints
    if !t.is_finite() || t.abs() > limit + 1e-12 {
        return Err(Error::Extrapolation { days: day, normalized: t, limit: EXTRAPOLATION_LIMIT });
    }
    Ok(t)
}

/// Zero level set at normalized time `t`, in millimeters; `None` when empty.
pub fn extract_at(model: &TemporalSdfModel, t: f64, resolution: usize) -> Result<Option<TriangleMesh>> {
    let mesh = extract_mesh(&model.at_time(t), resolution, 0.0)?;
    if mesh.is_empty() {
        return Ok(None);
    }
    let tr = *model.transform();
    Ok(Some(mesh.map_vertices(Units::Millimeters, |p| tr.to_physical(p))))
}

/// `n` regularly spaced days spanning the fitted scan range.
pub fn regular_days(model: &TemporalSdfModel, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidSequence("--steps needs at least 2 time points".into()));
    }
    let tr = model.transform();
    Ok((0..n)
        .map(|i| tr.time_to_days(-1.0 + 2.0 * i as f64 / (n - 1) as f64))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedShape {
    pub time_days: f64,
    pub t: f64,
    /// Written mesh, absent when the level set was empty.
    pub path: Option<PathBuf>,
    pub warning: Option<String>,
}

/// Writes one OBJ per requested day. Days outside the fitted range fail
/// unless `allow_extrapolation`; no file is written for an empty level set.
pub fn cmd_extract(
    artifact_path: &Path,
    days: &[f64],
    resolution: usize,
    allow_extrapolation: bool,
    out_dir: &Path,
) -> Result<Vec<ExtractedShape>> {
    let artifact = ModelArtifact::load(artifact_path)?;
    extract_days(&artifact.model, days, resolution, allow_extrapolation, out_dir)
}

pub fn extract_days(
    model: &TemporalSdfModel,
    days: &[f64],
    resolution: usize,
    allow_extrapolation: bool,
    out_dir: &Path,
) -> Result<Vec<ExtractedShape>> {
    // validate every time before writing anything
    let ts = days
        .iter()
        .map(|&d| normalized_time(model, d, allow_extrapolation))
        .collect::<Result<Vec<_>>>()?;
    create_dir(out_dir)?;
    let mut out = Vec::with_capacity(days.len());
    for (i, (&day, &t)) in days.iter().zip(&ts).enumerate() {
        match extract_at(model, t, resolution)? {
            Some(mesh) => {
                let path = out_dir.join(format!("shape_{i:03}_day_{day}.obj"));
                write_obj(&path, &mesh)?;
                out.push(ExtractedShape { time_days: day, t, path: Some(path), warning: None });
            }
            None => out.push(ExtractedShape {
                time_days: day,
                t,
                path: None,
                warning: Some(format!("empty level set at day {day} (t = {t:.4}); no mesh written")),
            }),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- evaluate

/// Ground truth for one scan: a surface mesh when the manifest names one,
/// otherwise the scan's point cloud. Millimeters.
#[derive(Debug, Clone)]
pub enum Reference {
    Mesh(TriangleMesh),
    Cloud(Vec<Vec3>),
}

impl Reference {
    pub fn load(scan: &ManifestScan) -> Result<Self> {
        match &scan.reference_mesh {
            Some(path) => Ok(Reference::Mesh(read_obj(path, Units::Millimeters)?)),
            None => Ok(Reference::Cloud(read_cloud(&scan.cloud)?)),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Reference::Mesh(_) => "mesh",
            Reference::Cloud(_) => "cloud",
        }
    }

    /// Symmetric ASD between a predicted mesh (mm) and this reference.
    pub fn asd(&self, predicted: &TriangleMesh, samples: usize, seed: u64) -> Result<AsdResult> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            Reference::Mesh(m) => average_surface_distance(predicted, m, samples, &mut rng),
            Reference::Cloud(c) => average_surface_distance_to_cloud(predicted, c, samples, &mut rng),
        }
    }

    /// Diameter profile of a reference mesh in the model's frame; clouds
    /// carry no inside/outside information and give `None`.
    pub fn diameter_profile(&self, model: &TemporalSdfModel, options: &EvalOptions) -> Result<Option<DiameterProfile>> {
        let Reference::Mesh(mesh) = self else { return Ok(None) };
        reference_diameter_profile(mesh, model, options).map(Some)
    }
}

/// Inscribed-sphere profile of a reference mesh in the model's frame.
fn reference_diameter_profile(
    mesh_mm: &TriangleMesh,
    model: &TemporalSdfModel,
    options: &EvalOptions,
) -> Result<DiameterProfile> {
    let tr = *model.transform();
    let normalized = mesh_mm.map_vertices(Units::Normalized, |p| tr.to_normalized(p));
    let sdf = MeshSdf::new(&normalized, options.reference_grid)?;
    diameter_profile(&sdf, &options.axis, options.stations, &tr, &options.centerline)
}

/// Diameter profile of the shape predicted at normalized time `t`.
///
/// Stations follow the centerline of the fitted field; within each station's
/// cross-section the center then moves to the point farthest from
/// `surface_mm`, the extracted zero level set, and that distance is the
/// inscribed radius. A fitted field is close to a distance function
/// only near its zero set; deep inside the shape `|f|` can fall well short
/// of the distance to the surface, so `2 |f|` would understate diameters.
pub fn surface_diameter_profile(
    surface_mm: &TriangleMesh,
    model: &TemporalSdfModel,
    t: f64,
    options: &EvalOptions,
) -> Result<DiameterProfile> {
    let tr = *model.transform();
    let normalized = surface_mm.map_vertices(Units::Normalized, |p| tr.to_normalized(p));
    let distance = MeshDistance::new(&normalized)?;
    let clearance = |p: &Vec3| distance.distance(p);
    let line = centerline_with_clearance(&model.at_time(t), &clearance, &options.axis, options.stations, &options.centerline)?;
    Ok(profile_from_centerline(&line, &tr, |s| distance.distance(&s.center)))
}

/// Largest `2 |f|` along the centerline of the field itself, in millimeters.
fn field_max_diameter(model: &TemporalSdfModel, t: f64, options: &EvalOptions) -> Result<Option<f64>> {
    let profile = diameter_profile(&model.at_time(t), &options.axis, options.stations, model.transform(), &options.centerline)?;
    Ok(profile.max_diameter_mm())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetrics {
    pub time_days: f64,
    pub t: f64,
    pub reference: String,
    pub asd_mm: Option<f64>,
    pub mean_model_to_reference_mm: Option<f64>,
    pub mean_reference_to_model_mm: Option<f64>,
    /// Measured on the extracted surface.
    pub max_diameter_mm_predicted: Option<f64>,
    /// Largest `2 |f|` on the field's own centerline, for comparison.
    pub max_diameter_mm_field: Option<f64>,
    pub max_diameter_mm_reference: Option<f64>,
    pub diameter_csv: Option<String>,
    pub reference_diameter_csv: Option<String>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub patient_id: String,
    pub resolution: usize,
    pub asd_samples: usize,
    pub scans: Vec<ScanMetrics>,
}

/// Per-scan metrics plus the predicted and reference diameter profiles.
pub struct Evaluation {
    pub report: EvaluationReport,
    pub predicted_profiles: Vec<Option<DiameterProfile>>,
    pub reference_profiles: Vec<Option<DiameterProfile>>,
}

fn max_diameter(p: &Option<DiameterProfile>) -> Option<f64> {
    p.as_ref().and_then(DiameterProfile::max_diameter_mm)
}

pub fn evaluate_model(
    model: &TemporalSdfModel,
    patient_id: &str,
    manifest: &SequenceManifest,
    options: &EvalOptions,
) -> Result<Evaluation> {
    let mut scans = Vec::new();
    let mut predicted_profiles = Vec::new();
    let mut reference_profiles = Vec::new();
    for (j, scan) in manifest.scans.iter().enumerate() {
        let t = normalized_time(model, scan.time_days, false)?;
        let reference = Reference::load(scan)?;
        let predicted = extract_at(model, t, options.resolution)?;
        let mut m = ScanMetrics {
            time_days: scan.time_days,
            t,
            reference: reference.kind().into(),
            asd_mm: None,
            mean_model_to_reference_mm: None,
            mean_reference_to_model_mm: None,
            max_diameter_mm_predicted: None,
            max_diameter_mm_field: None,
            max_diameter_mm_reference: None,
            diameter_csv: None,
            reference_diameter_csv: None,
            warning: None,
        };
        let mut profile = None;
        match &predicted {
            Some(mesh) => {
                let asd = reference.asd(mesh, options.asd_samples, options.seed.wrapping_add(j as u64))?;
                m.asd_mm = Some(asd.asd);
                m.mean_model_to_reference_mm = Some(asd.mean_a_to_b);
                m.mean_reference_to_model_mm = Some(asd.mean_b_to_a);
                profile = Some(surface_diameter_profile(mesh, model, t, options)?);
                m.max_diameter_mm_field = field_max_diameter(model, t, options)?;
                m.diameter_csv = Some(format!("diameter_scan_{j:02}.csv"));
            }
            None => m.warning = Some("empty level set at scan time".into()),
        }
        let reference_profile = reference.diameter_profile(model, options)?;
        if reference_profile.is_some() {
            m.reference_diameter_csv = Some(format!("diameter_scan_{j:02}_reference.csv"));
        }
        m.max_diameter_mm_predicted = max_diameter(&profile);
        m.max_diameter_mm_reference = max_diameter(&reference_profile);
        scans.push(m);
        predicted_profiles.push(profile);
        reference_profiles.push(reference_profile);
    }
    Ok(Evaluation {
        report: EvaluationReport {
            patient_id: patient_id.to_string(),
            resolution: options.resolution,
            asd_samples: options.asd_samples,
            scans,
        },
        predicted_profiles,
        reference_profiles,
    })
}

/// Writes `metrics.json` and one diameter CSV per scan (plus one per
/// reference mesh) into `out_dir`.
pub fn cmd_evaluate(
    artifact_path: &Path,
    manifest_path: &Path,
    options: &EvalOptions,
    out_dir: &Path,
) -> Result<EvaluationReport> {
    let artifact = ModelArtifact::load(artifact_path)?;
    let manifest = SequenceManifest::load(manifest_path)?;
    if artifact.patient_id != manifest.patient_id {
        return Err(Error::PatientMismatch { model: artifact.patient_id, manifest: manifest.patient_id });
    }
    let eval = evaluate_model(&artifact.model, &artifact.patient_id, &manifest, options)?;
    create_dir(out_dir)?;
    for (m, (pred, refp)) in eval
        .report
        .scans
        .iter()
        .zip(eval.predicted_profiles.iter().zip(&eval.reference_profiles))
    {
        if let (Some(name), Some(p)) = (&m.diameter_csv, pred) {
            write_text(&out_dir.join(name), &format_diameter_csv(p))?;
        }
        if let (Some(name), Some(p)) = (&m.reference_diameter_csv, refp) {
            write_text(&out_dir.join(name), &format_diameter_csv(p))?;
        }
    }
    write_text(&out_dir.join(METRICS_FILE), &to_json(&eval.report))?;
    Ok(eval.report)
}

// ---------------------------------------------------------------- leave-one-out

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldKind {
    Interpolation,
    Extrapolation,
}

/// Interpolation when `held_out` lies strictly inside the range of the other
/// times, extrapolation otherwise.
pub fn fold_kind(times_days: &[f64], held_out: usize) -> FoldKind {
    let held = times_days[held_out];
    let rest = times_days.iter().enumerate().filter(|&(i, _)| i != held_out).map(|(_, &d)| d);
    let (lo, hi) = rest.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    if held > lo && held < hi {
        FoldKind::Interpolation
    } else {
        FoldKind::Extrapolation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooFold {
    pub held_out_index: usize,
    pub held_out_time_days: f64,
    pub kind: FoldKind,
    /// Held-out time in the fold's own normalization.
    pub held_out_t: Option<f64>,
    pub reference: String,
    pub asd_mm: Option<f64>,
    pub max_diameter_mm_predicted: Option<f64>,
    pub max_diameter_mm_field: Option<f64>,
    pub max_diameter_mm_reference: Option<f64>,
    pub final_loss: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooReport {
    pub patient_id: String,
    pub folds: Vec<LooFold>,
}

impl LooReport {
    pub fn best_asd(&self, kind: FoldKind) -> Option<f64> {
        self.folds.iter().filter(|f| f.kind == kind).filter_map(|f| f.asd_mm).reduce(f64::min)
    }
}

/// Result of one fold, kept alongside the report entry for callers that want
/// to inspect the fitted model.
pub struct FoldOutcome {
    pub fold: LooFold,
    pub model: Option<TemporalSdfModel>,
    pub predicted_profile: Option<DiameterProfile>,
}

fn run_fold(
    seq: &PointCloudSequence,
    manifest: &SequenceManifest,
    j: usize,
    config: &FitConfig,
    options: &EvalOptions,
) -> FoldOutcome {
    let times: Vec<f64> = manifest.scans.iter().map(|s| s.time_days).collect();
    let mut fold = LooFold {
        held_out_index: j,
        held_out_time_days: times[j],
        kind: fold_kind(&times, j),
        held_out_t: None,
        reference: String::new(),
        asd_mm: None,
        max_diameter_mm_predicted: None,
        max_diameter_mm_field: None,
        max_diameter_mm_reference: None,
        final_loss: None,
        error: None,
    };
    let mut model_out = None;
    let mut profile_out = None;
    let result = (|| -> Result<()> {
        let run = run_fit(&seq.without(j), config, |_, _| {})?;
        fold.final_loss = run.history.last().map(|l| l.total);
        let model = run.artifact.model;
        let t = normalized_time(&model, times[j], true)?;
        fold.held_out_t = Some(t);
        let reference = Reference::load(&manifest.scans[j])?;
        fold.reference = reference.kind().into();
        fold.max_diameter_mm_reference = max_diameter(&reference.diameter_profile(&model, options)?);
        if let Some(mesh) = extract_at(&model, t, options.resolution)? {
            fold.asd_mm = Some(reference.asd(&mesh, options.asd_samples, options.seed.wrapping_add(j as u64))?.asd);
            let profile = surface_diameter_profile(&mesh, &model, t, options)?;
            fold.max_diameter_mm_predicted = profile.max_diameter_mm();
            fold.max_diameter_mm_field = field_max_diameter(&model, t, options)?;
            profile_out = Some(profile);
        } else {
            fold.error = Some("empty level set at the held-out time".into());
        }
        model_out = Some(model);
        Ok(())
    })();
    if let Err(e) = result {
        fold.error = Some(e.to_string());
    }
    FoldOutcome { fold, model: model_out, predicted_profile: profile_out }
}

/// Leave-one-out over the scans listed in `folds` (all scans when `None`).
/// Each fold refits on the remaining scans with their own normalization;
/// failures are recorded in the fold and do not stop the run.
pub fn run_loo(
    manifest: &SequenceManifest,
    config: &FitConfig,
    options: &EvalOptions,
    folds: Option<&[usize]>,
) -> Result<Vec<FoldOutcome>> {
    config.validate()?;
    if manifest.scans.len() < 3 {
        return Err(Error::InvalidSequence(format!(
            "leave-one-out needs at least 3 scans, got {}",
            manifest.scans.len()
        )));
    }
    let all: Vec<usize> = (0..manifest.scans.len()).collect();
    let folds = folds.unwrap_or(&all);
    if let Some(&bad) = folds.iter().find(|&&j| j >= manifest.scans.len()) {
        return Err(Error::InvalidSequence(format!("fold {bad} is out of range")));
    }
    let seq = manifest.load_sequence(manifest.has_landmarks())?;
    Ok(folds
        .par_iter()
        .map(|&j| run_fold(&seq, manifest, j, config, options))
        .collect())
}

pub fn cmd_loo(manifest_path: &Path, config: &FitConfig, options: &EvalOptions, out_dir: &Path) -> Result<LooReport> {
    let manifest = SequenceManifest::load(manifest_path)?;
    let outcomes = run_loo(&manifest, config, options, None)?;
    let report = LooReport {
        patient_id: manifest.patient_id.clone(),
        folds: outcomes.into_iter().map(|o| o.fold).collect(),
    };
    create_dir(out_dir)?;
    write_text(&out_dir.join(LOO_FILE), &to_json(&report))?;
    Ok(report)
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub shape: AnalyticShape,
    pub times_days: Vec<f64>,
    pub points_per_scan: usize,
    pub seed: u64,
    /// Grid resolution of the reference meshes written next to the clouds;
    /// 0 writes none.
    pub reference_resolution: usize,
}

/// Writes CSV clouds, optional reference OBJ meshes and a manifest into
/// `out_dir`; returns the manifest path. Output is byte-identical for equal
/// specs.
pub fn cmd_synth(spec: &SynthSpec, out_dir: &Path) -> Result<PathBuf> {
    if spec.points_per_scan == 0 {
        return Err(Error::InvalidSequence("points_per_scan must be positive".into()));
    }
    let seq = crate::synthetic::make_sequence(&spec.shape, &spec.times_days, spec.points_per_scan, spec.seed)?;
    let ts = shape_times(&spec.times_days)?;
    create_dir(out_dir)?;
    let mut scans = Vec::with_capacity(seq.len());
    for (j, (scan, &t)) in seq.scans().iter().zip(&ts).enumerate() {
        let cloud = PathBuf::from(format!("scan_{j:02}.csv"));
        write_cloud(&out_dir.join(&cloud), &scan.points)?;
        let reference_mesh = if spec.reference_resolution > 0 {
            let mesh = extract_mesh(&spec.shape.at_time(t), spec.reference_resolution, 0.0)?
                .map_vertices(Units::Millimeters, |p| p * MM_PER_UNIT);
            let name = PathBuf::from(format!("scan_{j:02}_reference.obj"));
            write_obj(&out_dir.join(&name), &mesh)?;
            Some(name)
        } else {
            None
        };
        scans.push(ManifestScan { cloud, time_days: scan.time_days, landmarks: None, reference_mesh });
    }
    let manifest = SequenceManifest { patient_id: seq.patient_id().to_string(), scans };
    let path = out_dir.join(MANIFEST_FILE);
    manifest.save(&path)?;
    Ok(path)
}
