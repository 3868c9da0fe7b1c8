//! `tct`: detect subsurface voids in concrete from time-series thermal
//! imagery.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tct::csvio;
use tct::error::{CliError, Result};
use tct::jsonio;
use tct::pgm;
use tct::pipeline::{self, DatasetSource, HyperConfig, MlpHyper, PipelineConfig};
use tct::tcub;
use tct::threads;

use tct_core::cube::{bin_spatial, mean_curve, to_raster};
use tct_core::eval::segmentation_metrics;
use tct_core::pct::{fit_pca, select_k, standardize, transform};
use tct_core::synth::{self, ScenePreset};

#[derive(Parser)]
#[command(
    name = "tct",
    version,
    about = "Pixel-wise subsurface void detection from time-series thermal imagery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)] // flag structs are built once at startup
enum Command {
    /// Generate a synthetic thermal recording from a scene file or preset.
    Synth(SynthArgs),
    /// Validate and convert a recording into the TCUB format.
    Ingest(IngestArgs),
    /// Fit the time-basis PCA of a recording.
    Pca(PcaArgs),
    /// Train detection models on labeled regions of a recording.
    Train(TrainArgs),
    /// Predict a full-frame detection map with a trained model.
    Predict(PredictArgs),
    /// Score a detection map against a ground-truth mask.
    Eval(EvalArgs),
    /// Run the full config-driven pipeline (synthesize, train, predict, score).
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scene preset name (A, B, or C).
    #[arg(long, conflicts_with = "scene")]
    preset: Option<String>,
    /// Scene description JSON.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Overrides the scene seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for cube.tcub, truth.pgm, scene.json, mean_curve.csv.
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write the default training ROIs (rois.json).
    #[arg(long)]
    emit_rois: bool,
}

#[derive(Args)]
struct IngestArgs {
    /// TCUB file or CSV frame directory.
    #[arg(long)]
    input: PathBuf,
    /// Input format: tcub or csv.
    #[arg(long)]
    format: String,
    /// Sample rate in Hz (required for csv input).
    #[arg(long)]
    sample_rate: Option<f64>,
    /// Output TCUB path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PcaArgs {
    #[arg(long)]
    cube: PathBuf,
    /// Spatial binning window applied before unfolding.
    #[arg(long, default_value_t = 1)]
    bin: usize,
    /// Number of components to keep.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Select k by explained-variance threshold instead of --k.
    #[arg(long)]
    variance: Option<f64>,
    #[arg(long)]
    out_model: PathBuf,
    /// Optional CSV of per-pixel standardized scores.
    #[arg(long)]
    out_scores: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    cube: PathBuf,
    /// Training ROI file (JSON list of labeled rectangles).
    #[arg(long)]
    rois: PathBuf,
    #[arg(long, default_value_t = 1)]
    bin: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Comma-separated model kinds, or "all".
    #[arg(long, default_value = "all")]
    models: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also run ten-fold cross-validation per classical model.
    #[arg(long)]
    cv: bool,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct HyperArgs {
    #[arg(long)]
    huber_delta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    n_trees: Option<usize>,
    #[arg(long)]
    min_leaf: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    lr0: Option<f64>,
    #[arg(long)]
    lr_inc: Option<f64>,
    #[arg(long)]
    lr_dec: Option<f64>,
    #[arg(long)]
    max_perf_inc: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    goal: Option<f64>,
    #[arg(long)]
    min_grad: Option<f64>,
    #[arg(long)]
    max_fail: Option<usize>,
}

impl HyperArgs {
    fn to_hyper(&self) -> HyperConfig {
        let mut h = HyperConfig::default();
        if let Some(v) = self.huber_delta {
            h.huber_delta = v;
        }
        if let Some(v) = self.lambda {
            h.lambda = v;
        }
        h.gamma = self.gamma.or(h.gamma);
        if let Some(v) = self.n_trees {
            h.n_trees = v;
        }
        if let Some(v) = self.min_leaf {
            h.min_leaf = v;
        }
        h.max_depth = self.max_depth.or(h.max_depth);
        h
    }

    fn to_mlp(&self) -> MlpHyper {
        let mut m = MlpHyper::default();
        if let Some(v) = self.lr0 {
            m.lr0 = v;
        }
        if let Some(v) = self.lr_inc {
            m.lr_inc = v;
        }
        if let Some(v) = self.lr_dec {
            m.lr_dec = v;
        }
        if let Some(v) = self.max_perf_inc {
            m.max_perf_inc = v;
        }
        if let Some(v) = self.momentum {
            m.momentum = v;
        }
        if let Some(v) = self.max_epochs {
            m.max_epochs = v;
        }
        if let Some(v) = self.goal {
            m.goal = v;
        }
        if let Some(v) = self.min_grad {
            m.min_grad = v;
        }
        if let Some(v) = self.max_fail {
            m.max_fail = v;
        }
        m
    }
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    cube: PathBuf,
    /// Trained model JSON (any kind, including mlp).
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 1)]
    bin: usize,
    /// Detection map as 8-bit PGM.
    #[arg(long)]
    out_pgm: Option<PathBuf>,
    /// Detection map as full-precision CSV.
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Detection map CSV (as written by predict).
    #[arg(long)]
    map: PathBuf,
    /// Ground-truth mask PGM.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Optional single-line CSV report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Pipeline configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overrides the config's component count.
    #[arg(long)]
    k: Option<usize>,
    /// Overrides the config's binning window.
    #[arg(long)]
    bin: Option<usize>,
    /// Overrides the config's decision threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Overrides the config's model list (comma-separated, or "all").
    #[arg(long)]
    models: Option<String>,
    /// Forces cross-validation on.
    #[arg(long)]
    cv: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("tct: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Pca(args) => cmd_pca(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Pipeline(args) => cmd_pipeline(args),
    }
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut scene = match (&args.preset, &args.scene) {
        (Some(name), None) => ScenePreset::parse(name)?.scene(0),
        (None, Some(path)) => jsonio::load_scene(path)?,
        _ => {
            return Err(CliError::config(
                "synth needs exactly one of --preset or --scene",
            ))
        }
    };
    if let Some(seed) = args.seed {
        scene.seed = seed;
    }
    std::fs::create_dir_all(&args.out_dir)?;
    let threads = threads::thread_cap()?;
    let (cube, mask) = threads::generate_cube_with_threads(&scene, threads)?;
    jsonio::save_scene(&args.out_dir.join("scene.json"), &scene)?;
    tcub::save_cube(&args.out_dir.join("cube.tcub"), &cube)?;
    pgm::write_mask(&args.out_dir.join("truth.pgm"), &mask)?;
    csvio::write_mean_curve(&args.out_dir.join("mean_curve.csv"), &mean_curve(&cube))?;
    if args.emit_rois {
        let rois = synth::training_rois(&scene)?;
        jsonio::save_rois(&args.out_dir.join("rois.json"), &rois)?;
    }
    println!(
        "synthesized {}x{}x{} cube into {}",
        cube.height(),
        cube.width(),
        cube.frames(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let format = tcub::CubeFormat::parse(&args.format)?;
    let cube = tcub::load(&args.input, format, args.sample_rate)?;
    tcub::save_cube(&args.out, &cube)?;
    println!(
        "ingested {}x{}x{} cube at {} Hz into {}",
        cube.height(),
        cube.width(),
        cube.frames(),
        cube.sample_rate(),
        args.out.display()
    );
    Ok(())
}

fn cmd_pca(args: PcaArgs) -> Result<()> {
    let cube = tcub::load_cube(&args.cube)?;
    let binned = if args.bin > 1 {
        bin_spatial(&cube, args.bin)?
    } else {
        cube
    };
    let raster = to_raster(&binned);
    let model = match args.variance {
        Some(threshold) => {
            let full_k = raster.n_pixels().min(raster.n_frames());
            let full = fit_pca(&raster, full_k)?;
            let k = select_k(full.explained_ratio(), threshold)?;
            full.truncate(k)?
        }
        None => fit_pca(&raster, args.k)?,
    };
    jsonio::save_pca(&args.out_model, &model)?;
    let cumulative: f64 = model.explained_ratio().iter().sum();
    println!(
        "fitted {} components over {} frames ({:.2}% variance) into {}",
        model.k(),
        model.n_frames(),
        cumulative * 100.0,
        args.out_model.display()
    );
    if let Some(path) = &args.out_scores {
        let features = standardize(&transform(&model, &raster)?);
        csvio::write_scores(path, &features)?;
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let models: Vec<String> = args.models.split(',').map(|s| s.trim().to_string()).collect();
    let config = PipelineConfig {
        train: DatasetSource::Cube {
            cube: args.cube.clone(),
            mask: None,
        },
        predict: Vec::new(),
        rois: Some(args.rois.clone()),
        bin_window: args.bin,
        k: args.k,
        variance_threshold: None,
        models,
        hyper: args.hyper.to_hyper(),
        mlp: args.hyper.to_mlp(),
        threshold: 0.5,
        cv: args.cv,
        out_dir: args.out_dir.clone(),
        seed: args.seed,
    };
    let threads = threads::thread_cap()?;
    let outcome = pipeline::run_pipeline(&config, threads)?;
    for (kind, rmse) in &outcome.train_rmse {
        println!("{kind}: training RMSE {rmse:.6}");
    }
    println!("artifacts in {}", outcome.out_dir.display());
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    if args.out_pgm.is_none() && args.out_csv.is_none() {
        return Err(CliError::config(
            "predict needs at least one of --out-pgm or --out-csv",
        ));
    }
    let model = jsonio::load_model(&args.model)?;
    let cube = tcub::load_cube(&args.cube)?;
    let binned = if args.bin > 1 {
        bin_spatial(&cube, args.bin)?
    } else {
        cube
    };
    let dims = (binned.height(), binned.width());
    let raster = to_raster(&binned);
    // Per-dataset reduction: refit the basis here with the model's feature
    // count, which is what makes differing frame counts interoperable.
    let pca = fit_pca(&raster, model.n_features())?;
    let features = standardize(&transform(&pca, &raster)?);
    let map = pipeline::predict_full_frame(&model, &features, dims)?;
    if let Some(path) = &args.out_pgm {
        pgm::write_map(path, &map)?;
    }
    if let Some(path) = &args.out_csv {
        csvio::write_map(path, &map)?;
    }
    println!(
        "predicted {}x{} map with {}",
        dims.0,
        dims.1,
        model.kind_name()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let map = csvio::read_map(&args.map, "file")?;
    let truth = pgm::read_mask(&args.truth)?;
    let report = segmentation_metrics(&map, &truth, args.threshold)?;
    let dataset = args
        .map
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "map".into());
    print!("{}", csvio::seg_report_text("file", &dataset, &report));
    if let Some(path) = &args.out {
        csvio::write_seg_report(path, "file", &dataset, &report)?;
    }
    Ok(())
}

fn cmd_pipeline(args: PipelineArgs) -> Result<()> {
    let mut config = PipelineConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out_dir) = args.out_dir {
        config.out_dir = out_dir;
    }
    if let Some(k) = args.k {
        config.k = k;
        config.variance_threshold = None;
    }
    if let Some(bin) = args.bin {
        config.bin_window = bin;
    }
    if let Some(threshold) = args.threshold {
        config.threshold = threshold;
    }
    if let Some(models) = args.models {
        config.models = models.split(',').map(|s| s.trim().to_string()).collect();
    }
    if args.cv {
        config.cv = true;
    }
    let threads = threads::thread_cap()?;
    let outcome = pipeline::run_pipeline(&config, threads)?;
    println!("pipeline done: k = {}", outcome.selected_k);
    for (kind, rmse) in &outcome.train_rmse {
        println!("{kind}: training RMSE {rmse:.6}");
    }
    for (dataset, by_kind) in &outcome.seg {
        for (kind, report) in by_kind {
            println!(
                "{dataset}/{kind}: iou {:.4} precision {:.4} recall {:.4}",
                report.iou, report.precision, report.recall
            );
        }
    }
    println!("artifacts in {}", outcome.out_dir.display());
    Ok(())
}
