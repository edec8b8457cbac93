use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "selfsim", version, about = "Stable self-similar blow-up laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytic and collocation spectrum of the linearized generator, as JSON.
    Spectrum(SpectrumArgs),
    /// Similarity-coordinate evolution of perturbed blow-up data, as CSV plus a JSON summary.
    Evolve(EvolveArgs),
    /// Energy of the fundamental solution along t in [0, 0.9 T], as CSV.
    Energy(EnergyArgs),
    /// Run every invariant suite and print one line per check.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Nonlinearity exponent, in (1, 3].
    #[arg(long, default_value_t = 3.0)]
    p: f64,
    /// Collocation nodes.
    #[arg(long, default_value_t = 96)]
    n: usize,
    /// Margin subtracted from |omega| in the decay rate.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Only eigenvalues with real part above this bound are reported.
    #[arg(long, allow_hyphen_values = true)]
    halfplane: Option<f64>,
    /// Comma-separated exponents computed concurrently; output becomes a JSON array.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<f64>,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "tau-end", default_value_t = 10.0)]
    tau_end: f64,
    /// Energy norm of the deviation from the fundamental solution.
    #[arg(long, default_value_t = 1e-3)]
    amplitude: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Choose the blow-up time by bisection on the unstable coefficient.
    #[arg(long = "tune-T", overrides_with = "no_tune")]
    tune: bool,
    /// Evolve with the blow-up time given by --T.
    #[arg(long = "no-tune", overrides_with = "tune")]
    no_tune: bool,
    /// Blow-up time for untuned runs.
    #[arg(long = "T", default_value_t = 1.0)]
    t_blowup: f64,
    /// Also write the reconstructed field at tau-end as CSV.
    #[arg(long)]
    field: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EnergyArgs {
    #[arg(long, default_value_t = 3.0)]
    p: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    t_blowup: f64,
    /// Number of time samples.
    #[arg(long, default_value_t = 46)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "tau-end", default_value_t = 10.0)]
    tau_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    amplitude: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated exponents validated concurrently.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<f64>,
    #[arg(long = "inject-fault", hide = true)]
    inject_fault: bool,
}

/// A failure carrying its exit code and a one-line reason.
#[derive(Debug)]
pub struct Failure {
    kind: &'static str,
    code: u8,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, code: u8, message: impl Into<String>) -> Self {
        Self { kind, code, message: message.into() }
    }
}

impl From<selfsim::Error> for Failure {
    fn from(e: selfsim::Error) -> Self {
        match e.kind() {
            "domain" => Failure::new("domain", 2, e.to_string()),
            "overflow" => Failure::new(
                "overflow",
                4,
                format!("{e}; the perturbation is too large, try a smaller --amplitude"),
            ),
            _ => Failure::new("solver", 3, e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new("io", 3, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::new("io", 3, e.to_string())
    }
}

impl From<selfsim::evolve::CsvError> for Failure {
    fn from(e: selfsim::evolve::CsvError) -> Self {
        Failure::new("io", 3, e.to_string())
    }
}

fn report(f: &Failure) {
    let msg = serde_json::to_string(&f.message).unwrap_or_else(|_| "\"?\"".into());
    eprintln!("error: kind={} exit={} message={msg}", f.kind, f.code);
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string();
            let line = first.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            report(&Failure::new("usage", 2, line));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Spectrum(a) => commands::spectrum(&a),
        Command::Evolve(a) => commands::evolve(&a),
        Command::Energy(a) => commands::energy(&a),
        Command::Validate(a) => commands::validate(&a),
    };
    let _ = std::io::stdout().flush();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            report(&f);
            ExitCode::from(f.code)
        }
    }
}
