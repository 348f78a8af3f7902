use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use bipstls::datagen::{generate, SyntheticSpec};
use bipstls::estimators::{lasso_fit, stls_fit};
use bipstls::estimators::SparseFit;
use bipstls_cli::config::{
    DeltaMode, DeltaSetting, ExperimentConfig, ExperimentKind, ModelConfig, ModelName, RuleName,
    SigmaMode, SigmaSetting, ThresholdConfig,
};
use bipstls_cli::error::{CliError, CliResult};
use bipstls_cli::experiments;
use bipstls_cli::io::{read_dataset_csv, read_report_json, write_dataset_csv, write_outputs};
use bipstls_cli::plotdata::emit_plot_data;
use bipstls_cli::runner::bagged_lasso_fit;

#[derive(Parser)]
#[command(name = "bipstls", version, about = "Sparse regression experiment driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic benchmark dataset (and optionally its truth) to disk
    Generate(GenerateArgs),
    /// Fit one estimator to a dataset read from CSV and print the result
    Fit(FitArgs),
    /// Run the estimator comparison sweep from a config file
    Sweep(RunArgs),
    /// Run the noise/sparsity robustness sweep from a config file
    Robustness(RunArgs),
    /// Run the dynamical-system discovery experiment from a config file
    Lv(RunArgs),
    /// Run the certificate overlay experiment from a config file
    Bounds(RunArgs),
    /// Run the sampler comparison experiment from a config file
    BayesCompare(RunArgs),
    /// Extract tidy plot CSVs from a finished report
    PlotData(PlotArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Benchmark model: m1, m2, or m3
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: usize,
    /// Noise standard deviation
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Correlation decay for m2
    #[arg(long)]
    r: Option<f64>,
    /// Dataset CSV path
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON path for the true coefficients and support
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset CSV produced by `generate` (or matching its layout)
    #[arg(long)]
    input: PathBuf,
    /// Estimator: lasso, stls, blasso, or bstls
    #[arg(long)]
    estimator: String,
    #[arg(long, default_value_t = 0)]
    target: usize,
    /// Penalty level for lasso/blasso
    #[arg(long)]
    lambda: Option<f64>,
    /// Fixed threshold scale for stls/bstls
    #[arg(long)]
    gamma: Option<f64>,
    /// Tail probability for the threshold (a number, or "1/n")
    #[arg(long)]
    delta: Option<String>,
    /// Noise level for the threshold (a number, or "estimated")
    #[arg(long, default_value = "estimated")]
    sigma: String,
    #[arg(long, default_value_t = 2)]
    max_passes: usize,
    /// Inclusion-probability cutoff for bagging estimators
    #[arg(long, default_value_t = 0.5)]
    p_c: f64,
    /// Row fraction per bag
    #[arg(long, default_value_t = 0.8)]
    fraction: f64,
    /// Number of bags (defaults to max(n, 100))
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    with_replacement: bool,
    /// Weight inclusion probabilities uniformly instead of by held-out error
    #[arg(long)]
    no_oob: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standardize columns before fitting
    #[arg(long)]
    standardize: bool,
    /// Optional JSON output path (stdout otherwise)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shrink trial and replicate counts for a quick desk run
    #[arg(long)]
    desk: bool,
    /// Size of the worker pool (default: one per core)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    /// Path to a report.json written by a run subcommand
    #[arg(long)]
    report: PathBuf,
    /// Figure id: fig1a, fig1b, fig2, fig3, fig4, fig5, or lv_dist
    #[arg(long)]
    figure: String,
    /// Output directory for the panel CSVs
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(args) => run_generate(args),
        Command::Fit(args) => run_fit(args),
        Command::Sweep(args) => run_experiment(args, ExperimentKind::ModelSweep),
        Command::Robustness(args) => run_experiment(args, ExperimentKind::RobustnessSweep),
        Command::Lv(args) => run_experiment(args, ExperimentKind::LotkaVolterra),
        Command::Bounds(args) => run_experiment(args, ExperimentKind::BoundsOverlay),
        Command::BayesCompare(args) => run_experiment(args, ExperimentKind::BayesCompare),
        Command::PlotData(args) => run_plot_data(args),
    }
}

fn parse_model(name: &str) -> CliResult<ModelName> {
    match name {
        "m1" | "model1" => Ok(ModelName::Model1),
        "m2" | "model2" => Ok(ModelName::Model2),
        "m3" | "model3" => Ok(ModelName::Model3),
        other => Err(CliError::config("model", format!("unknown model `{other}`"))),
    }
}

fn run_generate(args: GenerateArgs) -> CliResult<()> {
    let model = ModelConfig {
        kind: parse_model(&args.model)?,
        r: args.r,
        sigma_noise: args.sigma,
    };
    let spec = SyntheticSpec {
        model: model.to_kind()?,
        n: args.n,
        sigma_noise: args.sigma,
        seed: args.seed,
    };
    let (data, truth) = generate(&spec)?;
    write_dataset_csv(&args.out, &data)?;
    println!("wrote {} ({} rows, {} columns)", args.out.display(), data.n(), data.p());
    if let Some(path) = args.truth_out {
        let body = serde_json::json!({ "beta": truth.beta, "support": truth.support });
        std::fs::write(&path, serde_json::to_string_pretty(&body)? + "\n")?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn fit_threshold(args: &FitArgs) -> CliResult<ThresholdConfig> {
    let sigma = if args.sigma == "estimated" {
        SigmaSetting::Mode(SigmaMode::Estimated)
    } else {
        SigmaSetting::Value(args.sigma.parse().map_err(|_| {
            CliError::config("sigma", "expected a number or \"estimated\"")
        })?)
    };
    let (rule, delta) = match (&args.gamma, &args.delta) {
        (Some(_), Some(_)) => {
            return Err(CliError::config("gamma", "gamma and delta are mutually exclusive"))
        }
        (Some(_), None) => (RuleName::GammaScaled, None),
        (None, Some(d)) if d == "1/n" => {
            (RuleName::GaussianTail, Some(DeltaSetting::Mode(DeltaMode::InverseSampleSize)))
        }
        (None, Some(d)) => {
            let v: f64 = d.parse().map_err(|_| {
                CliError::config("delta", "expected a number or \"1/n\"")
            })?;
            (RuleName::GaussianTail, Some(DeltaSetting::Value(v)))
        }
        (None, None) => {
            return Err(CliError::config(
                "gamma",
                "thresholded estimators need --gamma or --delta",
            ))
        }
    };
    Ok(ThresholdConfig { rule, gamma: args.gamma, delta, sigma, multiplier: 1.0 })
}

fn fit_output(fit: &SparseFit, probabilities: Option<&[f64]>) -> serde_json::Value {
    serde_json::json!({
        "support": fit.support(),
        "coefficients": fit.fit.coefficients,
        "inactive_set": fit.inactive_set,
        "sigma_hat_sq": fit.fit.sigma_hat_sq,
        "passes_used": fit.passes_used,
        "inclusion_probabilities": probabilities,
    })
}

fn run_fit(args: FitArgs) -> CliResult<()> {
    let raw = read_dataset_csv(&args.input)?;
    let data = if args.standardize {
        bipstls::regression::standardize_with(
            &raw,
            bipstls::regression::ConstantColumnPolicy::CenterToZero,
        )?
    } else {
        raw
    };
    if args.target >= data.d() {
        return Err(CliError::config("target", "target index out of range"));
    }
    let n = data.n();
    let value = match args.estimator.as_str() {
        "lasso" => {
            let lambda = args
                .lambda
                .ok_or_else(|| CliError::config("lambda", "lasso needs --lambda"))?;
            let fit = lasso_fit(&data, args.target, lambda, 1e-7, 50_000)?;
            fit_output(&fit, None)
        }
        "stls" => {
            let rule = fit_threshold(&args)?.resolve(None)?;
            let fit = stls_fit(&data, args.target, &rule, args.max_passes)?;
            fit_output(&fit, None)
        }
        "bstls" => {
            let rule = fit_threshold(&args)?.resolve(None)?;
            let plan = bipstls::ensemble::ResamplePlan::subsample(
                args.replicates.unwrap_or_else(|| n.max(100)),
                args.fraction,
                args.with_replacement,
                args.seed,
            );
            let (fit, profile) = bipstls::ensemble::bip_fit(
                &data,
                args.target,
                &rule,
                &plan,
                args.p_c,
                !args.no_oob,
            )?;
            fit_output(&fit, Some(&profile.probabilities))
        }
        "blasso" => {
            let lambda = args
                .lambda
                .ok_or_else(|| CliError::config("lambda", "blasso needs --lambda"))?;
            let plan = bipstls::ensemble::ResamplePlan::subsample(
                args.replicates.unwrap_or_else(|| n.max(100)),
                args.fraction,
                args.with_replacement,
                args.seed,
            );
            let (fit, profile, _excluded) = bagged_lasso_fit(
                &data,
                args.target,
                lambda,
                1e-7,
                50_000,
                &plan,
                args.p_c,
                !args.no_oob,
            )?;
            fit_output(&fit, Some(&profile.probabilities))
        }
        other => {
            return Err(CliError::config(
                "estimator",
                format!("unknown estimator `{other}`"),
            ))
        }
    };
    let body = serde_json::to_string_pretty(&value)? + "\n";
    match args.out {
        Some(path) => {
            std::fs::write(&path, body)?;
            println!("wrote {}", path.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn run_experiment(args: RunArgs, expected: ExperimentKind) -> CliResult<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.display().to_string();
    }
    if args.desk {
        config.apply_desk();
    }
    if config.experiment != expected {
        return Err(CliError::config(
            "experiment",
            format!(
                "config declares `{}` but this subcommand runs `{}`",
                config.experiment.name(),
                expected.name()
            ),
        ));
    }
    config.validate()?;
    let report = match args.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Run(e.to_string()))?;
            pool.install(|| experiments::run(&config))?
        }
        None => experiments::run(&config)?,
    };
    let dir = PathBuf::from(&config.output_dir);
    let paths = write_outputs(&dir, &report)?;
    println!("experiment: {}", report.experiment);
    println!("content hash: {}", report.content_hash);
    println!("excluded replicates: {}", report.excluded_replicates);
    println!("runtime: {:.2}s", report.runtime.total_seconds);
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run_plot_data(args: PlotArgs) -> CliResult<()> {
    let report = read_report_json(&args.report)?;
    let paths = emit_plot_data(&report, &args.figure, &args.out)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}
