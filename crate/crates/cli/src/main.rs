use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use topksvm::bench::bench_projections;
use topksvm::io::{read_libsvm_with, read_model, write_model, Dataset, LibsvmOptions};
use topksvm::solver::{
    predict_scores, rank_classes, topk_accuracy, train, Model, SolverConfig, DEFAULT_EPSILON,
    DEFAULT_MAX_EPOCHS, DEFAULT_SEED,
};
use topksvm::{LossSpec, LossVariant};

/// Top-k multiclass SVM: train, predict, evaluate, and benchmark projections.
#[derive(Debug, Parser)]
#[command(name = "topksvm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and print a one-line JSON report.
    Train(TrainArgs),
    /// Write the top-ranked labels of every example as CSV.
    Predict(PredictArgs),
    /// Print top-k accuracy (percent) as CSV.
    Evaluate(EvaluateArgs),
    /// Time knapsack vs top-k simplex projections as CSV.
    BenchProj(BenchArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training set in LIBSVM format.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value = "alpha")]
    loss: LossVariant,
    /// Relative duality gap at which to stop.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_EPOCHS)]
    max_epochs: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output model file.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
    /// Number of labels per example.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated list of k values.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    topk: Vec<usize>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

fn check_threads() -> Result<()> {
    if let Ok(v) = std::env::var("TOPKSVM_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .with_context(|| format!("TOPKSVM_THREADS must be a positive integer, got {v:?}"))?;
        if n > 1 {
            log::warn!("TOPKSVM_THREADS = {n} ignored; running single-threaded");
        }
    }
    Ok(())
}

fn load_for_model(model: &Model, path: &Path, with_labels: bool) -> Result<Dataset> {
    let opts = LibsvmOptions {
        feature_dim: Some(model.feature_dim()),
        classes: with_labels.then(|| model.classes().to_vec()),
    };
    read_libsvm_with(path, &opts).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> Result<Model> {
    read_model(path).with_context(|| format!("reading model {}", path.display()))
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let data = read_libsvm_with(&args.data, &LibsvmOptions::default())
        .with_context(|| format!("reading {}", args.data.display()))?;
    let config = SolverConfig {
        loss: LossSpec::new(args.loss, args.k)?,
        lambda: args.lambda,
        epsilon: args.epsilon,
        max_epochs: args.max_epochs,
        seed: args.seed,
    };
    log::info!(
        "training on n = {}, d = {}, m = {}",
        data.num_examples(),
        data.feature_dim(),
        data.num_classes()
    );
    let (model, report) = train(&data, &config)?;
    write_model(&model, &args.model)
        .with_context(|| format!("writing model {}", args.model.display()))?;
    if !report.converged {
        log::warn!(
            "stopped after {} epochs with relative gap {:.3e}",
            report.epochs_run,
            report.relative_gap
        );
    }
    let line = json!({
        "epochs": report.epochs_run,
        "primal_objective": report.primal_objective,
        "dual_objective": report.dual_objective,
        "relative_gap": report.relative_gap,
        "seconds": report.wall_time.as_secs_f64(),
    });
    println!("{line}");
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    if args.top == 0 {
        bail!("--top must be at least 1");
    }
    let model = load_model(&args.model)?;
    let data = load_for_model(&model, &args.data, false)?;
    let scores = predict_scores(&model, data.features())?;
    let top = args.top.min(model.num_classes());
    let mut out = BufWriter::new(
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?,
    );
    write!(out, "example")?;
    for r in 1..=top {
        write!(out, ",rank{r}")?;
    }
    writeln!(out)?;
    for i in 0..data.num_examples() {
        write!(out, "{}", i + 1)?;
        for c in rank_classes(scores.col(i), top) {
            write!(out, ",{}", model.classes()[c])?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let m = model.num_classes();
    if let Some(&k) = args.topk.iter().find(|&&k| k == 0 || k > m) {
        bail!("--topk value {k} must be in 1..={m}");
    }
    let data = load_for_model(&model, &args.data, true)?;
    let scores = predict_scores(&model, data.features())?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "k,accuracy")?;
    for &k in &args.topk {
        writeln!(out, "{k},{:.2}", topk_accuracy(&scores, data.labels(), k)?)?;
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let rows = bench_projections(&args.dims, &args.k, args.samples, args.seed)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "dim,k,method,seconds")?;
    for r in rows {
        writeln!(out, "{},{},{},{:.6}", r.dim, r.k, r.method, r.seconds)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    check_threads()?;
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::BenchProj(a) => cmd_bench(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            eprintln!("{}", text.lines().next().unwrap_or("error: invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
