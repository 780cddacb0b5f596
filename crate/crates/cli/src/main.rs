use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gtrace_cli::{execute, CliError, Command, RangeSpec, ScenarioConfig};

/// Numerical experiments on traces of G-operators.
#[derive(Debug, Parser)]
#[command(name = "gtrace", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// JSON config; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in scenario id or alias.
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// Monte Carlo seed; required whenever a Condition 1 sweep runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid size (Fourier modes, circle nodes or line nodes depending on the command).
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Tilt angle of the plane.
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Sobolev index.
    #[arg(long, global = true, allow_hyphen_values = true)]
    s: Option<f64>,
    /// Real part of p for the decay sweep.
    #[arg(long, global = true, allow_hyphen_values = true)]
    sigma: Option<f64>,
    /// knorm | decay (mellin), schur | continuity | fiber (screw).
    #[arg(long, global = true)]
    sweep: Option<String>,
    /// lo..hi[:count]
    #[arg(long, global = true, allow_hyphen_values = true)]
    rho: Option<RangeSpec>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi: Option<RangeSpec>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    eta: Option<RangeSpec>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    t: Option<RangeSpec>,
    /// Monte Carlo samples per ε.
    #[arg(long, global = true)]
    samples: Option<usize>,
}

impl Cli {
    fn flags(self) -> ScenarioConfig {
        ScenarioConfig {
            command: self.command,
            scenario: self.scenario,
            inline_scenario: None,
            seed: self.seed,
            out: self.out,
            resolution: self.resolution,
            alpha: self.alpha,
            s: self.s,
            sigma: self.sigma,
            sweep: self.sweep,
            rho: self.rho,
            phi: self.phi,
            eta: self.eta,
            t: self.t,
            samples: self.samples,
        }
    }
}

fn load(cli: Cli) -> Result<ScenarioConfig, CliError> {
    let base = match &cli.config {
        Some(path) => ScenarioConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => ScenarioConfig::default(),
    };
    Ok(base.overridden_by(cli.flags()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match load(cli).and_then(|cfg| execute(&cfg)) {
        Ok(paths) => {
            let files: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
            println!("{}", serde_json::json!({ "written": files }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
