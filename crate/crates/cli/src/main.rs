use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use evolving_sdf::harness::{
    cmd_evaluate, cmd_extract, cmd_fit, cmd_loo, cmd_synth, read_config, regular_days, EvalOptions, FitConfig,
    ModelArtifact, SynthSpec, MANIFEST_FILE, MODEL_FILE,
};
use evolving_sdf::synthetic::AnalyticShape;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "evolving-sdf", version, about = "Fit and evaluate space-time implicit models of evolving surfaces")]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// Seed for training, surface sampling and synthetic data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key = value configuration file; unset keys keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Marching cubes grid points per axis.
    #[arg(long, global = true, default_value_t = 128)]
    resolution: usize,
    /// Permit normalized times up to 1.25 beyond the fitted range.
    #[arg(long, global = true)]
    allow_extrapolation: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to the scans listed in a manifest.
    Fit {
        manifest: PathBuf,
        /// Print the loss every this many epochs (0 disables).
        #[arg(long, default_value_t = 100)]
        log_every: usize,
    },
    /// Extract surface meshes from a fitted model.
    Extract {
        model: PathBuf,
        /// Days since the first scan, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with = "steps", required_unless_present = "steps")]
        times: Vec<f64>,
        /// Regularly spaced times spanning the fitted scan range.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Compare a fitted model with the scans of a manifest.
    Evaluate {
        model: PathBuf,
        manifest: PathBuf,
        /// Surface samples per side for the average surface distance.
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        /// Diameter stations along the z axis.
        #[arg(long, default_value_t = 50)]
        stations: usize,
    },
    /// Leave-one-out: refit without each scan and predict it.
    Loo {
        manifest: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 50)]
        stations: usize,
    },
    /// Write a synthetic sequence of point clouds and its manifest.
    Synth {
        /// Shape, e.g. `growing-sphere:r0=0.5,rate=0.1`.
        shape: String,
        /// Scan days, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0,15,103,1125")]
        times: Vec<f64>,
        /// Points per scan.
        #[arg(short = 'n', long, default_value_t = 2000)]
        points: usize,
        /// Skip the reference meshes written next to each cloud.
        #[arg(long)]
        no_reference: bool,
    },
}

fn load_config(shared: &Shared) -> Result<FitConfig> {
    let mut config = match &shared.config {
        Some(path) => read_config(path)?,
        None => FitConfig::default(),
    };
    if let Some(seed) = shared.seed {
        config.training.rng_seed = seed;
    }
    Ok(config)
}

fn eval_options(shared: &Shared, samples: usize, stations: usize) -> EvalOptions {
    EvalOptions {
        resolution: shared.resolution,
        asd_samples: samples,
        seed: shared.seed.unwrap_or(0),
        stations,
        ..EvalOptions::default()
    }
}

fn show(path: &Path) -> String {
    path.display().to_string()
}

fn run(cli: Cli) -> Result<()> {
    let shared = &cli.shared;
    if shared.resolution < 2 {
        bail!("--resolution must be at least 2");
    }
    match cli.command {
        Command::Fit { manifest, log_every } => {
            let config = load_config(shared)?;
            let epochs = config.training.epochs;
            let run = cmd_fit(&manifest, &config, &shared.out, |epoch, loss| {
                if log_every > 0 && (epoch % log_every == 0 || epoch + 1 == epochs) {
                    eprintln!("epoch {epoch:>6}  total {:.6e}  data {:.6e}", loss.total, loss.data_abs);
                }
            })?;
            let last = run.history.last().context("fit produced no epochs")?;
            println!("wrote {} (final loss {:.6e})", show(&shared.out.join(MODEL_FILE)), last.total);
        }
        Command::Extract { model, times, steps } => {
            let days = match steps {
                Some(n) => regular_days(&ModelArtifact::load(&model)?.model, n)?,
                None => times,
            };
            for shape in cmd_extract(&model, &days, shared.resolution, shared.allow_extrapolation, &shared.out)? {
                match (&shape.path, &shape.warning) {
                    (Some(path), _) => println!("day {} (t = {:.4}): {}", shape.time_days, shape.t, show(path)),
                    (None, Some(warning)) => eprintln!("warning: {warning}"),
                    (None, None) => {}
                }
            }
        }
        Command::Evaluate { model, manifest, samples, stations } => {
            let report = cmd_evaluate(&model, &manifest, &eval_options(shared, samples, stations), &shared.out)?;
            for scan in &report.scans {
                if let Some(w) = &scan.warning {
                    eprintln!("warning: day {}: {w}", scan.time_days);
                }
                let asd = scan.asd_mm.map_or("n/a".into(), |a| format!("{a:.3} mm"));
                println!("day {}: ASD {asd} against {}", scan.time_days, scan.reference);
            }
        }
        Command::Loo { manifest, samples, stations } => {
            let config = load_config(shared)?;
            let report = cmd_loo(&manifest, &config, &eval_options(shared, samples, stations), &shared.out)?;
            for fold in &report.folds {
                let kind = format!("{:?}", fold.kind).to_lowercase();
                match (&fold.error, fold.asd_mm) {
                    (Some(e), _) => eprintln!("fold day {} ({kind}): {e}", fold.held_out_time_days),
                    (None, Some(asd)) => println!("fold day {} ({kind}): ASD {asd:.3} mm", fold.held_out_time_days),
                    (None, None) => println!("fold day {} ({kind}): no surface", fold.held_out_time_days),
                }
            }
        }
        Command::Synth { shape, times, points, no_reference } => {
            let shape: AnalyticShape = shape.parse()?;
            let spec = SynthSpec {
                shape,
                times_days: times,
                points_per_scan: points,
                seed: shared.seed.unwrap_or(0),
                reference_resolution: if no_reference { 0 } else { shared.resolution },
            };
            let path = cmd_synth(&spec, &shared.out)?;
            debug_assert!(path.ends_with(MANIFEST_FILE));
            println!("wrote {}", show(&path));
        }
    }
    Ok(())
}

fn main() -> std::process::ExitCode {
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
