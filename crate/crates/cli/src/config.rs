use std::path::PathBuf;

use gtrace_core::geometry::Scenario;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::range::RangeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::Subcommand)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Classify X_G and X̃_G for a geometry scenario.
    Catalog,
    /// Assemble a discrete trace operator and its singular spectrum.
    Trace,
    /// Tilted-plane kernel norms and Mellin symbol sweeps.
    Mellin,
    /// Screw-motion symbol sweeps.
    Screw,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Catalog => "catalog",
            Command::Trace => "trace",
            Command::Mellin => "mellin",
            Command::Screw => "screw",
        }
    }
}

/// One run. Fields left out take per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub command: Option<Command>,
    pub scenario: Option<String>,
    pub inline_scenario: Option<Scenario>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub resolution: Option<usize>,
    pub alpha: Option<f64>,
    pub s: Option<f64>,
    /// Real part of `p` for the Mellin decay sweep.
    pub sigma: Option<f64>,
    pub sweep: Option<String>,
    pub rho: Option<RangeSpec>,
    pub phi: Option<RangeSpec>,
    pub eta: Option<RangeSpec>,
    pub t: Option<RangeSpec>,
    /// Monte Carlo samples per ε.
    pub samples: Option<usize>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn overridden_by(mut self, flags: ScenarioConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f; } )* };
        }
        take!(
            command,
            scenario,
            inline_scenario,
            seed,
            out,
            resolution,
            alpha,
            s,
            sigma,
            sweep,
            rho,
            phi,
            eta,
            t,
            samples
        );
        self
    }

    pub fn command(&self) -> Result<Command, CliError> {
        self.command.ok_or_else(|| CliError::Usage("no command given (catalog, trace, mellin or screw)".into()))
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_has_no_command() {
        let c = ScenarioConfig::from_json("{}").unwrap();
        assert!(matches!(c.command(), Err(CliError::Usage(_))));
        assert!(matches!(ScenarioConfig::from_json(""), Err(CliError::Usage(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"command": "mellin", "alpah": 1.0}"#).is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let file = ScenarioConfig::from_json(r#"{"command": "mellin", "alpha": 0.5, "s": -0.25}"#).unwrap();
        let flags = ScenarioConfig { alpha: Some(0.7), ..Default::default() };
        let c = file.overridden_by(flags);
        assert_eq!((c.alpha, c.s, c.command), (Some(0.7), Some(-0.25), Some(Command::Mellin)));
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = ScenarioConfig { command: Some(Command::Screw), out: Some("x".into()), ..Default::default() };
        let b = ScenarioConfig { out: Some("y".into()), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = ScenarioConfig { seed: Some(1), ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }
}
