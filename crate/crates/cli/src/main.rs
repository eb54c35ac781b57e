use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use npgrunsky::{parse_domain, Error, ExteriorMap, Preset};
use serde::Serialize;

mod commands;
mod output;

/// Neumann-Poincaré spectra of planar domains from Grunsky coefficients.
#[derive(Debug, Parser, Serialize)]
#[command(version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct Global {
    /// JSON domain document `{"gamma": .., "a0": [re, im], "a": [[re, im], ..]}`
    #[arg(long, global = true, conflicts_with = "preset")]
    domain: Option<PathBuf>,

    /// Named domain, e.g. `ellipse:a=0.5,gamma=1` or `powerlaw:c=0.2,beta=4,L=64,gamma=1`
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Output file; a `<out>.manifest.json` sidecar is written next to it
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for randomized sampling
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Multiplies default tolerances (exploratory use; ignored by `validate`)
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Grunsky coefficients c_{m,k} and their symmetrized form
    Grunsky(commands::GrunskyArgs),
    /// Eigenvalues of the truncated operator
    Spectrum(commands::SpectrumArgs),
    /// Tail norms of the truncated operator
    Tailnorm(commands::TailnormArgs),
    /// Nyström reference eigenvalues
    Oracle(commands::OracleArgs),
    /// Series spectrum against the Nyström oracle
    Compare(commands::CompareArgs),
    /// Single layer potential S[ζ_m] on a grid
    Potential(commands::PotentialArgs),
    /// Continuity and jump-relation residuals for S[ζ_m]
    ValidateJump(commands::ValidateJumpArgs),
    /// Decay-law fit and finite-window bound constant
    Decay(commands::DecayArgs),
    /// Full invariant sweep on a domain
    Validate(commands::ValidateArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Grunsky(_) => "grunsky",
            Command::Spectrum(_) => "spectrum",
            Command::Tailnorm(_) => "tailnorm",
            Command::Oracle(_) => "oracle",
            Command::Compare(_) => "compare",
            Command::Potential(_) => "potential",
            Command::ValidateJump(_) => "validate-jump",
            Command::Decay(_) => "decay",
            Command::Validate(_) => "validate",
        }
    }
}

pub mod exit {
    pub const USAGE: u8 = 2;
    pub const UNKNOWN_SUBCOMMAND: u8 = 3;
    pub const INVALID_DOMAIN: u8 = 4;
    pub const INVARIANT: u8 = 5;
    pub const NUMERICAL: u8 = 6;
    pub const IO: u8 = 7;
}

/// A failed run: message and exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(exit::IO, format!("{}: {e}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::MalformedDomain(_)
            | Error::InvalidCapacity(_)
            | Error::AreaTheorem { .. }
            | Error::Cusp { .. }
            | Error::UnknownPreset(_) => exit::INVALID_DOMAIN,
            Error::GrunskyIdentity { .. }
            | Error::RowBound { .. }
            | Error::NormBound { .. }
            | Error::Unpaired { .. } => exit::INVARIANT,
            Error::InvalidParameter(_) | Error::DimensionMismatch { .. } => exit::USAGE,
            _ => exit::NUMERICAL,
        };
        Self::new(code, e.to_string())
    }
}

/// The loaded domain and its canonical JSON (the digest input).
pub struct Loaded {
    pub map: ExteriorMap,
    pub canonical: String,
}

fn load_domain(global: &Global) -> Result<Loaded, Failure> {
    let map = match (&global.domain, &global.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            parse_domain(&text)?.map
        }
        (None, Some(p)) => {
            let preset: Preset = p.parse().map_err(|e: Error| match e {
                Error::InvalidParameter(msg) => Failure::new(exit::INVALID_DOMAIN, msg),
                other => other.into(),
            })?;
            preset.to_map()?
        }
        _ => {
            return Err(Failure::new(
                exit::USAGE,
                "exactly one of --domain or --preset is required",
            ))
        }
    };
    let canonical = map.to_spec().canonical_json();
    Ok(Loaded { map, canonical })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if !(cli.global.tol_scale > 0.0) {
        return Err(Failure::new(exit::USAGE, "--tol-scale must be positive"));
    }
    let domain = load_domain(&cli.global)?;
    let params = serde_json::to_value(cli).expect("arguments serialize");
    let ctx = commands::Context {
        domain: &domain,
        out: cli.global.out.as_deref(),
        seed: cli.global.seed,
        tol_scale: cli.global.tol_scale,
        manifest: output::RunManifest::new(cli.command.name(), params, &domain.canonical),
    };
    match &cli.command {
        Command::Grunsky(a) => commands::grunsky(&ctx, a),
        Command::Spectrum(a) => commands::spectrum(&ctx, a),
        Command::Tailnorm(a) => commands::tailnorm(&ctx, a),
        Command::Oracle(a) => commands::oracle(&ctx, a),
        Command::Compare(a) => commands::compare(&ctx, a),
        Command::Potential(a) => commands::potential(&ctx, a),
        Command::ValidateJump(a) => commands::validate_jump(&ctx, a),
        Command::Decay(a) => commands::decay(&ctx, a),
        Command::Validate(a) => commands::validate(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand => exit::UNKNOWN_SUBCOMMAND,
                _ => exit::USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
