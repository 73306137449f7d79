mod bench;
mod failure;
mod flatten;
mod integrate;
mod method;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use normint::synthetic::SurfaceKind;

use failure::{Failure, Outcome};
use method::MethodArgs;

/// Integrates gradient (normal) fields into depth maps.
#[derive(Parser)]
#[command(name = "normint", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Writes a synthetic surface: p.pfm, q.pfm, z_true.pfm and mask.pgm
    /// (plus z0.pfm and lambda.pfm for surfaces that carry a prior).
    Generate(GenerateArgs),
    /// Integrates a gradient field.
    Integrate(IntegrateArgs),
    /// Compares a depth map with a reference.
    Evaluate(EvaluateArgs),
    /// Piecewise-constant reconstruction of an RGB image from control points.
    Flatten(FlattenArgs),
    /// Runs methods over synthetic surfaces and prints one CSV row per run.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "smooth_bumps")]
    surface: SurfaceKind,
    #[arg(long, default_value_t = 64)]
    size: usize,
    /// Shape amplitude; the surface default when omitted.
    #[arg(long)]
    amplitude: Option<f64>,
    /// Gaussian noise on p and q, relative to the largest gradient component.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct IntegrateArgs {
    #[arg(long)]
    p: PathBuf,
    #[arg(long)]
    q: PathBuf,
    /// Domain mask (PGM, samples above 127 are inside); full grid if omitted.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Prior depth (PFM); zero if omitted.
    #[arg(long)]
    z0: Option<PathBuf>,
    /// Per-pixel prior weight (PFM); overrides `--lambda`.
    #[arg(long)]
    lambda_map: Option<PathBuf>,
    /// Reference depth (PFM) for the error metrics.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Also report the mean angular error (needs `--truth`).
    #[arg(long)]
    mae: bool,
    /// Noise added to the input gradient, relative to its largest component.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Depth map (PFM); pixels outside the domain are NaN.
    #[arg(long)]
    output: PathBuf,
    /// Height-field mesh.
    #[arg(long)]
    obj: Option<PathBuf>,
    /// Metrics as `key: value` text.
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    metrics_csv: Option<PathBuf>,
    #[arg(long)]
    metrics_json: Option<PathBuf>,
    /// Per-iteration energy or residual trace.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Edge indicator (PGM) for the methods that have one.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Validates the inputs and prints the resolved parameters; writes nothing.
    #[arg(long)]
    dry_run: bool,
    #[command(flatten)]
    method: MethodArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    depth: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Restricts the comparison; non-finite pixels are always excluded.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value = "text", value_parser = ["text", "csv", "json"])]
    format: String,
}

#[derive(Args)]
struct FlattenArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output image; format from the extension (png, ppm).
    #[arg(long)]
    output: PathBuf,
    /// Control-point mask image.
    #[arg(long)]
    control: Option<PathBuf>,
    #[arg(long, default_value_t = 0.10)]
    fraction: f64,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    /// Prior weight on control points.
    #[arg(long, default_value_t = 10.0)]
    lambda_on: f64,
    #[arg(long, default_value_t = 1e-9)]
    lambda_off: f64,
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated surface kinds; all when omitted.
    #[arg(long, value_delimiter = ',')]
    surfaces: Vec<SurfaceKind>,
    /// Comma-separated methods; all when omitted.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<normint::pipeline::Method>,
    #[arg(long, value_delimiter = ',', default_value = "64")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Integrate over the object mask instead of the full grid.
    #[arg(long)]
    masked: bool,
    /// CSV file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    method: MethodArgs,
}

/// `NORMINT_THREADS` caps the worker pool, e.g. for reproducible timings.
fn configure_threads() -> Outcome<()> {
    let Ok(value) = std::env::var("NORMINT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::config(format!("NORMINT_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(e.to_string()))
}

fn run(cli: Cli) -> Outcome<()> {
    configure_threads()?;
    match cli.command {
        Command::Generate(a) => integrate::generate(a),
        Command::Integrate(a) => integrate::integrate(a),
        Command::Evaluate(a) => integrate::evaluate(a),
        Command::Flatten(a) => flatten::flatten(a),
        Command::Bench(a) => bench::bench(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("normint: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
