use evolving_sdf::geometry::Units;
use evolving_sdf::harness::*;
use evolving_sdf::nn::{MlpConfig, ParameterSet};
use evolving_sdf::TemporalSdfModel;
use evolving_sdf::synthetic::AnalyticShape;
use evolving_sdf::training::OnSurfaceBatch;
use evolving_sdf::Error;
use std::path::Path;

fn small_config(epochs: usize, seed: u64) -> FitConfig {
    let mut c = FitConfig::default();
    c.mlp = MlpConfig::new(3, 32, 2).unwrap();
    c.training.epochs = epochs;
    c.training.learning_rate = 2e-3;
    c.training.on_surface_batch = OnSurfaceBatch::PerScan(128);
    c.training.rng_seed = seed;
    c
}

fn synth(dir: &Path, shape: AnalyticShape, days: &[f64], points: usize, reference_resolution: usize) -> std::path::PathBuf {
    let spec = SynthSpec { shape, times_days: days.to_vec(), points_per_scan: points, seed: 5, reference_resolution };
    cmd_synth(&spec, dir).unwrap()
}

#[test]
fn fit_extract_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), AnalyticShape::growing_sphere(0.5, 0.1).unwrap(), &[0.0, 15.0, 103.0], 600, 32);
    let fit_dir = dir.path().join("fit");
    let run = cmd_fit(&manifest, &small_config(400, 3), &fit_dir, |_, _| {}).unwrap();
    let loaded = ModelArtifact::load(&fit_dir.join(MODEL_FILE)).unwrap();
    assert_eq!(loaded.model.params().to_flat(), run.artifact.model.params().to_flat());
    let history = std::fs::read_to_string(fit_dir.join(LOSS_FILE)).unwrap();
    assert_eq!(history.lines().count(), 401);

    // ten regularly spaced shapes across the scan range
    let days = regular_days(&loaded.model, 10).unwrap();
    assert_eq!((days[0], days[9]), (0.0, 103.0));
    let shapes = extract_days(&loaded.model, &days, 48, false, &dir.path().join("steps")).unwrap();
    assert_eq!(shapes.len(), 10);
    assert!(shapes.iter().all(|s| s.path.as_ref().is_some_and(|p| p.exists())), "{shapes:?}");

    // a shape extracted at a scan time sits close to that scan's cloud
    let cloud = read_cloud(&dir.path().join("scan_02.csv")).unwrap();
    let mesh = read_obj(shapes[9].path.as_ref().unwrap(), Units::Millimeters).unwrap();
    let reference = Reference::Cloud(cloud);
    let asd = reference.asd(&mesh, 2000, 1).unwrap();
    assert!(asd.asd < 0.1 * 50.0, "ASD {} mm", asd.asd);

    let eval_dir = dir.path().join("eval");
    let options = EvalOptions { resolution: 40, asd_samples: 1000, stations: 9, ..EvalOptions::default() };
    let report = cmd_evaluate(&fit_dir.join(MODEL_FILE), &manifest, &options, &eval_dir).unwrap();
    assert_eq!(report.scans.len(), 3);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(eval_dir.join(METRICS_FILE)).unwrap()).unwrap();
    assert_eq!(json["scans"].as_array().unwrap().len(), 3);
    for scan in &report.scans {
        let name = scan.diameter_csv.as_ref().expect("diameter profile written");
        let csv = std::fs::read_to_string(eval_dir.join(name)).unwrap();
        assert_eq!(csv.lines().next(), Some("arclength_mm,cx,cy,cz,diameter_mm"));
    }
}

#[test]
fn extraction_beyond_range_needs_flag() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), AnalyticShape::growing_sphere(0.4, 0.1).unwrap(), &[0.0, 100.0], 200, 0);
    let run = cmd_fit(&manifest, &small_config(5, 1), &dir.path().join("fit"), |_, _| {}).unwrap();
    let model = &run.artifact.model;
    let out = dir.path().join("x");
    assert!(matches!(extract_days(model, &[110.0], 16, false, &out), Err(Error::Extrapolation { .. })));
    assert!(extract_days(model, &[110.0], 16, true, &out).is_ok());
    // past the hard limit even with the flag
    assert!(matches!(extract_days(model, &[140.0], 16, true, &out), Err(Error::Extrapolation { .. })));
}

#[test]
fn empty_level_set_warns_without_file() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), AnalyticShape::growing_sphere(0.4, 0.1).unwrap(), &[0.0, 100.0], 200, 0);
    let run = cmd_fit(&manifest, &small_config(1, 1), &dir.path().join("fit"), |_, _| {}).unwrap();
    // lift the output bias far above any attainable activation
    let base = &run.artifact.model;
    let mut flat = base.params().to_flat();
    *flat.last_mut().unwrap() += 1e3;
    let params = ParameterSet::from_flat(base.config(), &flat).unwrap();
    let model = TemporalSdfModel::new(base.config().clone(), params, *base.transform()).unwrap();
    let shapes = extract_days(&model, &[0.0], 16, false, &dir.path().join("none")).unwrap();
    assert!(shapes[0].path.is_none() && shapes[0].warning.is_some());
    assert_eq!(std::fs::read_dir(dir.path().join("none")).unwrap().count(), 0);
}

#[test]
fn missing_cloud_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(&path, r#"{"patient_id":"p","scans":[{"cloud":"gone.csv","time_days":0},{"cloud":"b.csv","time_days":5}]}"#).unwrap();
    let err = cmd_fit(&path, &small_config(1, 0), &dir.path().join("fit"), |_, _| {}).unwrap_err();
    assert!(err.to_string().contains("gone.csv"), "{err}");
}

#[test]
fn patient_mismatch_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(&dir.path().join("a"), AnalyticShape::growing_sphere(0.4, 0.1).unwrap(), &[0.0, 10.0], 100, 0);
    let b = synth(&dir.path().join("b"), AnalyticShape::capsule(0.3, 0.2).unwrap(), &[0.0, 10.0], 100, 0);
    cmd_fit(&a, &small_config(1, 0), &dir.path().join("fit"), |_, _| {}).unwrap();
    let err = cmd_evaluate(&dir.path().join("fit").join(MODEL_FILE), &b, &EvalOptions::default(), &dir.path().join("e"));
    assert!(matches!(err, Err(Error::PatientMismatch { .. })));
}

#[test]
fn default_config_file_keeps_published_settings() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("default.cfg");
    std::fs::write(&path, format_config(&FitConfig::default())).unwrap();
    let c = read_config(&path).unwrap();
    assert_eq!(c.training.epochs, 25_000);
    assert_eq!(c.training.learning_rate, 1e-4);
    let w = c.training.weights;
    assert_eq!([w.lambda1, w.lambda2, w.lambda3, w.lambda4], [0.1; 4]);
    assert_eq!((c.mlp.hidden_layers, c.mlp.width, c.mlp.skip_layer_index), (6, 256, 3));
}

#[test]
fn loo_extrapolation_harder_than_interpolation() {
    // slow growth early, fast late: the last scan is far from anything the
    // retained scans suggest
    let shape = AnalyticShape::bulging_capsule(0.3, 0.2, [0.0, 0.0, 0.3], 0.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = synth(dir.path(), shape, &[0.0, 40.0, 200.0, 360.0, 400.0], 500, 40);
    let manifest = SequenceManifest::load(&manifest_path).unwrap();
    let options = EvalOptions { resolution: 48, asd_samples: 2000, stations: 9, reference_grid: 32, ..EvalOptions::default() };
    let outcomes = run_loo(&manifest, &small_config(300, 2), &options, None).unwrap();
    let report = LooReport { patient_id: manifest.patient_id.clone(), folds: outcomes.into_iter().map(|o| o.fold).collect() };
    let kinds: Vec<FoldKind> = report.folds.iter().map(|f| f.kind).collect();
    assert_eq!(
        kinds,
        [FoldKind::Extrapolation, FoldKind::Interpolation, FoldKind::Interpolation, FoldKind::Interpolation, FoldKind::Extrapolation]
    );
    let best_interp = report.best_asd(FoldKind::Interpolation).unwrap();
    let last = report.folds[4].asd_mm.expect("last fold produced a surface");
    assert!(last >= best_interp, "extrapolation {last} mm vs best interpolation {best_interp} mm");
}
