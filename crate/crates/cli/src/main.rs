//! Command-line surface for the initialization and propagation toolkit.
//!
//! Subcommands: `init`, `propagate`, `simulate`, `pdf`. All emit one
//! machine-readable document (CSV by default, JSON with `--format json`)
//! to stdout or `--output PATH`.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 numeric failure.

mod custom;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use varprop::density;
use varprop::propagation::{
    propagate, recommend_init, Derivation, Engine, LayerMoments, NetworkConfig,
    DEFAULT_QUADRATURE_NODES,
};
use varprop::simulator::{run as run_simulation, InputDistribution, SimConfig, WeightDistribution};
use varprop::{ActivationSpec, Error as CoreError};

use output::{csv_table, num, Document, Format};

/// CLI failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn new(message: String, code: u8) -> CliError {
        CliError { message, code }
    }

    pub fn usage(message: String) -> CliError {
        CliError::new(message, 2)
    }

    pub fn numeric(message: String) -> CliError {
        CliError::new(message, 3)
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> CliError {
        let code = match err {
            CoreError::Overflow { .. } | CoreError::NonFinite { .. } => 3,
            _ => 2,
        };
        CliError::new(err.to_string(), code)
    }
}

#[derive(Parser)]
#[command(
    name = "varprop",
    version,
    about = "Weight-initialization recommendations, layer-moment propagation and Monte Carlo validation for random feed-forward networks"
)]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write the document to this file instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recommend the weight variance for an activation and layer width
    Init(InitArgs),
    /// Iterate a closed-form engine over the network depth
    Propagate(PropagateArgs),
    /// Run the seeded Monte Carlo simulator and compare against theory
    Simulate(SimulateArgs),
    /// Density of tanh-transformed Gaussian pre-activations
    Pdf(PdfArgs),
}

#[derive(Args)]
struct ActivationArgs {
    /// Built-in activation: identity, tanh, sigmoid or relu
    #[arg(long, conflicts_with = "activation_file")]
    activation: Option<String>,

    /// Custom activation table: JSON {"name": ..., "samples": [[x, g(x)], ...]}
    #[arg(long, value_name = "PATH")]
    activation_file: Option<PathBuf>,
}

impl ActivationArgs {
    fn resolve(&self) -> Result<(ActivationSpec, String), CliError> {
        match (&self.activation, &self.activation_file) {
            (Some(name), None) => {
                let spec = ActivationSpec::from_name(name)?;
                Ok((spec, name.clone()))
            }
            (None, Some(path)) => {
                let custom = custom::load(path)?;
                Ok((custom.spec, format!("custom:{}", custom.name)))
            }
            _ => Err(CliError::usage(
                "pass exactly one of --activation or --activation-file".to_string(),
            )),
        }
    }
}

#[derive(Args)]
struct InitArgs {
    #[command(flatten)]
    activation: ActivationArgs,

    /// Nodes feeding each layer
    #[arg(long)]
    width: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Linearized,
    #[value(name = "relu_exact", alias = "relu-exact")]
    ReluExact,
    Quadrature,
}

#[derive(Args)]
struct PropagateArgs {
    #[command(flatten)]
    activation: ActivationArgs,

    /// Nodes feeding each layer
    #[arg(long)]
    width: usize,

    /// Number of layers (rows emitted)
    #[arg(long)]
    depth: usize,

    /// Weight variance v^2: a number, or `xavier` (1/N) or `he` (exact relu fixed point)
    #[arg(long, value_name = "V2|xavier|he")]
    weight_variance: String,

    /// Moment engine
    #[arg(long, value_enum)]
    engine: EngineArg,

    /// Quadrature nodes per half-axis (quadrature engine only)
    #[arg(long, default_value_t = DEFAULT_QUADRATURE_NODES)]
    nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightsArg {
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputArg {
    Normal,
    Rademacher,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    activation: ActivationArgs,

    /// Nodes per hidden layer
    #[arg(long)]
    width: usize,

    /// Number of layers
    #[arg(long)]
    depth: usize,

    /// Weight family
    #[arg(long, value_enum, default_value_t = WeightsArg::Gaussian)]
    weights: WeightsArg,

    /// Gaussian weight variance v^2: a number, `xavier` or `he`
    #[arg(long, value_name = "V2|xavier|he")]
    weight_variance: Option<String>,

    /// Uniform weight half-width a (variance a^2/3): a number, or `xavier` (1/sqrt(N))
    #[arg(long, value_name = "A|xavier")]
    half_width: Option<String>,

    /// Independent networks/inputs sampled
    #[arg(long)]
    trials: usize,

    /// Base RNG seed; trial t draws from stream (seed, t)
    #[arg(long)]
    seed: u64,

    /// First-layer input distribution
    #[arg(long, value_enum, default_value_t = InputArg::Normal)]
    input: InputArg,
}

#[derive(Args)]
struct PdfArgs {
    /// Pre-activation standard deviation u
    #[arg(long)]
    u: f64,

    /// Grid points across (-1, 1)
    #[arg(long, default_value_t = 1001)]
    grid: usize,

    /// Saturation threshold reported in the metadata
    #[arg(long, default_value_t = 0.9)]
    threshold: f64,
}

fn parse_positive(raw: &str, what: &str) -> Result<f64, CliError> {
    let value: f64 = raw.parse().map_err(|_| {
        CliError::usage(format!("{what}: expected a number or a preset name, got `{raw}`"))
    })?;
    if value <= 0.0 || !value.is_finite() {
        return Err(CliError::usage(format!(
            "{what} must be positive and finite, got {value}"
        )));
    }
    Ok(value)
}

/// `xavier` -> 1/N, `he` -> the exact relu fixed-point variance, otherwise a
/// positive number.
fn resolve_weight_variance(raw: &str, width: usize) -> Result<f64, CliError> {
    match raw {
        "xavier" => Ok(1.0 / width as f64),
        "he" => {
            let relu = ActivationSpec::from_name("relu")?;
            Ok(recommend_init(&relu, width)?.weight_variance)
        }
        other => parse_positive(other, "--weight-variance"),
    }
}

/// `xavier` -> 1/sqrt(N) (variance 1/(3N)), otherwise a positive number.
fn resolve_half_width(raw: &str, width: usize) -> Result<f64, CliError> {
    match raw {
        "xavier" => Ok(1.0 / (width as f64).sqrt()),
        other => parse_positive(other, "--half-width"),
    }
}

fn cmd_init(args: &InitArgs) -> Result<Document, CliError> {
    let (spec, label) = args.activation.resolve()?;
    let rec = recommend_init(&spec, args.width)?;

    let (g0, g1, u_target, mu_sq) = match rec.derivation {
        Derivation::Linearized {
            value_at_zero,
            deriv_at_zero,
            ..
        } => (Some(value_at_zero), Some(deriv_at_zero), None, None),
        Derivation::ReluFixedPoint {
            preact_variance_target,
            mean_square_estimate,
            ..
        } => (
            None,
            None,
            Some(preact_variance_target),
            Some(mean_square_estimate),
        ),
    };
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();

    let csv = csv_table(
        &[
            "activation",
            "width",
            "engine",
            "weight_variance",
            "weight_stddev",
            "value_at_zero",
            "deriv_at_zero",
            "preact_variance_target",
            "mean_square_estimate",
        ],
        &[vec![
            label.clone(),
            args.width.to_string(),
            rec.engine.as_str().to_string(),
            num(rec.weight_variance),
            num(rec.weight_stddev),
            opt(g0),
            opt(g1),
            opt(u_target),
            opt(mu_sq),
        ]],
    );

    let derivation = match rec.derivation {
        Derivation::Linearized { .. } => json!({
            "kind": "linearized",
            "value_at_zero": g0,
            "deriv_at_zero": g1,
            "width": args.width,
        }),
        Derivation::ReluFixedPoint { .. } => json!({
            "kind": "relu_fixed_point",
            "preact_variance_target": u_target,
            "mean_square_estimate": mu_sq,
            "width": args.width,
        }),
    };

    Ok(Document {
        command: "init",
        parameters: json!({"activation": label, "width": args.width}),
        results: json!({
            "weight_variance": rec.weight_variance,
            "weight_stddev": rec.weight_stddev,
            "engine": rec.engine.as_str(),
            "derivation": derivation,
        }),
        csv,
    })
}

fn cmd_propagate(args: &PropagateArgs) -> Result<Document, CliError> {
    let (spec, label) = args.activation.resolve()?;
    let weight_variance = resolve_weight_variance(&args.weight_variance, args.width)?;
    let config = NetworkConfig::new(args.width, args.depth, weight_variance, spec)?;
    let engine = match args.engine {
        EngineArg::Linearized => Engine::Linearized,
        EngineArg::ReluExact => Engine::ReluExact,
        EngineArg::Quadrature => Engine::Quadrature { nodes: args.nodes },
    };
    let sequence = propagate(LayerMoments::standard(&config), &config, engine)?;

    let rows: Vec<Vec<String>> = sequence
        .iter()
        .map(|state| {
            vec![
                state.layer_index.to_string(),
                num(state.mean),
                num(state.variance),
                num(state.preact_variance),
            ]
        })
        .collect();
    let csv = csv_table(&["layer", "mean", "variance", "preact_variance"], &rows);

    let layers: Vec<Value> = sequence
        .iter()
        .map(|state| {
            json!({
                "layer": state.layer_index,
                "mean": state.mean,
                "variance": state.variance,
                "preact_variance": state.preact_variance,
            })
        })
        .collect();

    Ok(Document {
        command: "propagate",
        parameters: json!({
            "activation": label,
            "width": args.width,
            "depth": args.depth,
            "weight_variance": weight_variance,
            "weight_variance_flag": args.weight_variance,
            "engine": engine.name(),
            "nodes": if matches!(engine, Engine::Quadrature { .. }) { Some(args.nodes) } else { None },
        }),
        results: json!({"layers": layers}),
        csv,
    })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Document, CliError> {
    let (spec, label) = args.activation.resolve()?;
    let weights = match args.weights {
        WeightsArg::Gaussian => {
            if args.half_width.is_some() {
                return Err(CliError::usage(
                    "--half-width only applies to --weights uniform".to_string(),
                ));
            }
            let raw = args.weight_variance.as_deref().ok_or_else(|| {
                CliError::usage("--weights gaussian requires --weight-variance".to_string())
            })?;
            WeightDistribution::Gaussian {
                stddev: resolve_weight_variance(raw, args.width)?.sqrt(),
            }
        }
        WeightsArg::Uniform => {
            if args.weight_variance.is_some() {
                return Err(CliError::usage(
                    "--weight-variance only applies to --weights gaussian; use --half-width"
                        .to_string(),
                ));
            }
            let raw = args.half_width.as_deref().ok_or_else(|| {
                CliError::usage("--weights uniform requires --half-width".to_string())
            })?;
            WeightDistribution::Uniform {
                half_width: resolve_half_width(raw, args.width)?,
            }
        }
    };

    let sim = SimConfig {
        width: args.width,
        depth: args.depth,
        weights,
        activation: spec.clone(),
        trials: args.trials,
        seed: args.seed,
        inputs: match args.input {
            InputArg::Normal => InputDistribution::StandardNormal,
            InputArg::Rademacher => InputDistribution::Rademacher,
        },
    };
    let report = run_simulation(&sim)?;
    if let Some(layer) = report.overflow_layer {
        return Err(CliError::numeric(format!(
            "simulation produced non-finite values at layer {layer}"
        )));
    }

    // side-by-side closed-form prediction from the engine matching the
    // activation: relu-exact for relu, quadrature otherwise
    let theory_config =
        NetworkConfig::new(args.width, args.depth, weights.variance(), spec.clone())?;
    let engine = if spec.is_relu() {
        Engine::ReluExact
    } else {
        Engine::quadrature()
    };
    let theory = propagate(LayerMoments::standard(&theory_config), &theory_config, engine)?;

    let header = [
        "layer",
        "samples",
        "act_mean",
        "act_variance",
        "preact_mean",
        "preact_variance",
        "preact_skewness",
        "preact_excess_kurtosis",
        "theory_mean",
        "theory_variance",
        "rel_error_variance",
    ];
    let mut rows = Vec::new();
    let mut layers = Vec::new();
    for (stats, predicted) in report.per_layer.iter().zip(&theory) {
        let rel_error = (stats.act_variance - predicted.variance).abs() / predicted.variance;
        rows.push(vec![
            stats.layer_index.to_string(),
            stats.samples.to_string(),
            num(stats.act_mean),
            num(stats.act_variance),
            num(stats.preact_mean),
            num(stats.preact_variance),
            num(stats.preact_skewness),
            num(stats.preact_excess_kurtosis),
            num(predicted.mean),
            num(predicted.variance),
            num(rel_error),
        ]);
        layers.push(json!({
            "layer": stats.layer_index,
            "samples": stats.samples,
            "act_mean": stats.act_mean,
            "act_variance": stats.act_variance,
            "preact_mean": stats.preact_mean,
            "preact_variance": stats.preact_variance,
            "preact_skewness": stats.preact_skewness,
            "preact_excess_kurtosis": stats.preact_excess_kurtosis,
            "theory_mean": predicted.mean,
            "theory_variance": predicted.variance,
            "rel_error_variance": rel_error,
        }));
    }

    let (family, parameter) = match weights {
        WeightDistribution::Gaussian { stddev } => ("gaussian", stddev),
        WeightDistribution::Uniform { half_width } => ("uniform", half_width),
    };
    Ok(Document {
        command: "simulate",
        parameters: json!({
            "activation": label,
            "width": args.width,
            "depth": args.depth,
            "weights": family,
            "weight_parameter": parameter,
            "weight_variance": weights.variance(),
            "trials": args.trials,
            "seed": args.seed,
            "input": match args.input { InputArg::Normal => "normal", InputArg::Rademacher => "rademacher" },
            "theory_engine": engine.name(),
        }),
        results: json!({
            "layers": layers,
            "trials_used": report.trials_used,
        }),
        csv: csv_table(&header, &rows),
    })
}

fn cmd_pdf(args: &PdfArgs) -> Result<Document, CliError> {
    let curve = density::curve(args.u, args.grid)?;
    let saturation = density::saturation_fraction(args.u, args.threshold)?;
    let integral = curve.integral();
    let modality = match curve.modality() {
        density::Modality::Unimodal => "unimodal",
        density::Modality::Bimodal => "bimodal",
    };

    let rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|&(y, f)| {
            vec![
                num(y),
                num(f),
                num(args.u),
                num(args.threshold),
                num(saturation),
                num(integral),
                modality.to_string(),
            ]
        })
        .collect();
    let csv = csv_table(
        &[
            "y",
            "density",
            "u",
            "threshold",
            "saturation_fraction",
            "integral",
            "modality",
        ],
        &rows,
    );

    let points: Vec<Value> = curve
        .points
        .iter()
        .map(|&(y, f)| json!({"y": y, "density": f}))
        .collect();

    Ok(Document {
        command: "pdf",
        parameters: json!({"u": args.u, "grid": args.grid, "threshold": args.threshold}),
        results: json!({
            "points": points,
            "saturation_fraction": saturation,
            "integral": integral,
            "modality": modality,
        }),
        csv,
    })
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let document = match &cli.command {
        Command::Init(args) => cmd_init(args)?,
        Command::Propagate(args) => cmd_propagate(args)?,
        Command::Simulate(args) => cmd_simulate(args)?,
        Command::Pdf(args) => cmd_pdf(args)?,
    };
    document.write(cli.format, cli.output.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
