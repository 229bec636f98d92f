//! `facexpr`: train, evaluate, and run the facial-expression pipeline.
//!
//! Exit codes: 0 success, 2 usage (clap), 3 data or configuration
//! problems, 4 solver non-convergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use facexpr::error::Error;
use facexpr::eval::{render_csv_counts, render_csv_percent, render_text, CvOutcome};
use facexpr::features::parse_families;
use facexpr::landmarks::parse_landmarks;
use facexpr::manifest::read_manifest;
use facexpr::pipeline::{cross_validate_manifest, predict_path, train, PipelineConfig};
use facexpr::svm::KernelSpec;
use facexpr::synth::generate_synthetic;
use facexpr::{load_model, save_model, EXPRESSION_NAMES};

#[derive(Parser)]
#[command(
    name = "facexpr",
    version,
    about = "Facial-expression recognition from five landmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a manifest and write it to disk.
    Train(TrainArgs),
    /// Stratified k-fold cross-validation over a manifest.
    Evaluate(EvaluateArgs),
    /// Classify one image given its five landmarks.
    Predict(PredictArgs),
    /// Generate a seeded synthetic dataset with a manifest.
    Synth(SynthArgs),
}

#[derive(Args)]
struct PipelineOpts {
    /// Kernel family: linear, poly, or rbf (default rbf with gamma 1/q).
    #[arg(long)]
    kernel: Option<String>,
    /// Soft-margin penalty.
    #[arg(long)]
    c: Option<f64>,
    /// RBF width; defaults to 1/q with q the reduced dimension.
    #[arg(long)]
    gamma: Option<f64>,
    /// Polynomial degree.
    #[arg(long)]
    degree: Option<u32>,
    /// Histogram bins for the binary-pattern family (256/128/64/32/16).
    #[arg(long)]
    lbp_bins: Option<usize>,
    /// Pyramid levels for the orientation-histogram family.
    #[arg(long)]
    phog_levels: Option<u32>,
    /// Patch side in pixels; positive multiple of 8.
    #[arg(long)]
    patch_size: Option<u32>,
    /// Seed for fold shuffling.
    #[arg(long)]
    seed: Option<u64>,
    /// Feature families: phog, lbp, or both.
    #[arg(long)]
    features: Option<String>,
}

impl PipelineOpts {
    fn build(&self) -> facexpr::Result<PipelineConfig> {
        let mut config = PipelineConfig::default();
        if let Some(f) = &self.features {
            config.features.families = parse_families(f)?;
        }
        if let Some(b) = self.lbp_bins {
            config.features.lbp_bins = b;
        }
        if let Some(l) = self.phog_levels {
            config.features.phog_levels = l;
        }
        if let Some(p) = self.patch_size {
            config.patch_side = p;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(c) = self.c {
            config.c = c;
        }
        config.kernel = match self.kernel.as_deref() {
            None | Some("rbf") => match self.gamma {
                // Left unresolved so training can pick gamma = 1/q.
                None => None,
                Some(g) => Some(KernelSpec::from_name("rbf", g, 0, 0.0)?),
            },
            Some(name) => Some(KernelSpec::from_name(
                name,
                self.gamma.unwrap_or(0.0),
                self.degree.unwrap_or(facexpr::svm::DEFAULT_DEGREE),
                facexpr::svm::DEFAULT_COEF0,
            )?),
        };
        // Surface bad descriptor settings now, not at the first image.
        facexpr::features::descriptor_stack(&config.features)?;
        Ok(config)
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Manifest CSV describing images, labels, and landmarks.
    #[arg(long)]
    manifest: PathBuf,
    /// Output model path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    opts: PipelineOpts,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Number of stratified folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Directory for CSV reports (written only when given).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    opts: PipelineOpts,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    image: PathBuf,
    /// Ten comma-separated values: left eye, right eye, nose tip, lip
    /// left, lip right, each as x,y in source-image pixels.
    #[arg(long)]
    landmarks: String,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for images and manifest.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    per_class: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn class_names() -> Vec<&'static str> {
    EXPRESSION_NAMES.to_vec()
}

fn write_reports(out_dir: &Path, outcome: &CvOutcome) -> facexpr::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let names = class_names();
    let names = &names[..outcome.pooled.n_classes()];
    std::fs::write(
        out_dir.join("pooled_counts.csv"),
        render_csv_counts(&outcome.pooled, names)?,
    )?;
    std::fs::write(
        out_dir.join("pooled_percent.csv"),
        render_csv_percent(&outcome.pooled, names)?,
    )?;
    for (i, fold) in outcome.per_fold.iter().enumerate() {
        std::fs::write(
            out_dir.join(format!("fold_{i}_counts.csv")),
            render_csv_counts(fold, names)?,
        )?;
    }
    let mut summary = String::from("fold,rate_percent\n");
    for (i, r) in outcome.fold_rates.iter().enumerate() {
        summary.push_str(&format!("{i},{r:.4}\n"));
    }
    summary.push_str(&format!("mean,{:.4}\n", outcome.mean_fold_rate()));
    summary.push_str(&format!("pooled,{:.4}\n", outcome.pooled_rate));
    std::fs::write(out_dir.join("summary.csv"), summary)?;
    Ok(())
}

fn run_train(args: &TrainArgs) -> facexpr::Result<()> {
    let config = args.opts.build()?;
    let manifest = read_manifest(&args.manifest)?;
    let model = train(&manifest, &config)?;
    save_model(&model, &args.out)?;
    println!(
        "trained on {} images, {} classes, {} -> {} dims; model written to {}",
        manifest.len(),
        model.n_classes(),
        model.projection.in_dim(),
        model.projection.out_dim(),
        args.out.display()
    );
    Ok(())
}

fn run_evaluate(args: &EvaluateArgs) -> facexpr::Result<()> {
    let config = args.opts.build()?;
    let manifest = read_manifest(&args.manifest)?;
    let outcome = cross_validate_manifest(&manifest, &config, args.folds, config.seed)?;
    let names = class_names();
    let names = &names[..outcome.pooled.n_classes()];
    for (i, (m, rate)) in outcome.per_fold.iter().zip(&outcome.fold_rates).enumerate() {
        println!("fold {i}: average recognition rate {rate:.2}%");
        print!("{}", render_text(m, names)?);
        println!();
    }
    println!("pooled confusion matrix (row percentages):");
    print!("{}", render_text(&outcome.pooled, names)?);
    println!("mean of fold rates: {:.2}%", outcome.mean_fold_rate());
    if let Some(dir) = &args.out_dir {
        write_reports(dir, &outcome)?;
        println!("reports written to {}", dir.display());
    }
    Ok(())
}

fn run_predict(args: &PredictArgs) -> facexpr::Result<()> {
    let model = load_model(&args.model)?;
    let landmarks = parse_landmarks(&args.landmarks, None)?;
    let (label, votes) = predict_path(&model, &args.image, &landmarks)?;
    let name = model
        .class_names
        .get(label)
        .map(String::as_str)
        .unwrap_or("unknown");
    println!("{name}");
    let detail: Vec<String> = model
        .class_names
        .iter()
        .zip(&votes)
        .map(|(n, v)| format!("{n}={v}"))
        .collect();
    println!("votes: {}", detail.join(" "));
    Ok(())
}

fn run_synth(args: &SynthArgs) -> facexpr::Result<()> {
    let manifest = generate_synthetic(&args.out, args.per_class, args.seed)?;
    println!(
        "wrote {} images and {}",
        args.per_class * EXPRESSION_NAMES.len(),
        manifest.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => run_train(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Predict(a) => run_predict(a),
        Command::Synth(a) => run_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Convergence { .. } => ExitCode::from(4),
                _ => ExitCode::from(3),
            }
        }
    }
}
