//! Command-line front end for `mupir-core`.
//!
//! Every subcommand is a serde-serializable value, so a run can be saved
//! with `--save-config` and replayed with `--config`.

mod commands;
mod error;
mod report;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub use error::CliError;
pub use report::{Report, REPORT_HEADER};

#[derive(Debug, Parser)]
#[command(
    name = "mupir",
    version,
    about = "Multi-access cache-aided multi-user PIR: simulator, audits and rate tables"
)]
pub struct Cli {
    /// Run the configuration stored in this TOML file.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Save the resolved configuration as TOML before running.
    #[arg(long)]
    pub save_config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Run placement, private delivery and decoding end to end on real bytes
    /// (multi-access coded caching with one PIR query list per user).
    Simulate(SimulateArgs),
    /// Show the single-server-set PIR queries and answers (capacity-achieving
    /// scheme with permuted sub-symbols) and check decoding.
    PirDemo(PirDemoArgs),
    /// Count k-subsets of a circle of n that contain m consecutive elements.
    Cyc(CycArgs),
    /// Check that one server's queries do not depend on the demand vector.
    PrivacyAudit(PrivacyArgs),
    /// Evaluate a closed-form rate (multi-access, non-private, product design,
    /// cyclic access, or the order-optimality ratio).
    Rates(RatesArgs),
    /// Write the multi-access vs dedicated-cache comparison tables as CSV.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccessArg {
    /// Every L-subset of caches is a user.
    Full,
    /// User k reads caches k..k+L-1 mod C.
    Cyclic,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Number of non-colluding servers S (at least 2).
    #[arg(long)]
    pub servers: usize,
    /// Number of files N.
    #[arg(long)]
    pub files: usize,
    /// Number of cache nodes C.
    #[arg(long)]
    pub caches: usize,
    /// Caches accessed by each user, L.
    #[arg(long)]
    pub access_degree: usize,
    /// Cache parameter t = CM/N; must be an integer with t + L <= C.
    #[arg(long)]
    pub t: String,
    /// File size in bytes (default: one byte per sub-subfile).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_bytes: Option<usize>,
    #[arg(long, value_enum, default_value = "full")]
    pub access: AccessArg,
    /// Comma-separated file indices (1-based), one per user, or `random`.
    #[arg(long, default_value = "random")]
    pub demands: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write binary cache dumps `cache_<c>.bin` here.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_dir: Option<PathBuf>,
    /// Write the key/value report here.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PirDemoArgs {
    #[arg(long, default_value_t = 2)]
    pub servers: usize,
    #[arg(long, default_value_t = 3)]
    pub files: usize,
    /// Desired message (1-based).
    #[arg(long, default_value_t = 1)]
    pub desired: usize,
    /// Bytes per sub-symbol.
    #[arg(long, default_value_t = 1)]
    pub symbol_bytes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CycArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub m: usize,
    /// Print the per-part sums.
    #[arg(long)]
    #[serde(default)]
    pub breakdown: bool,
    /// Cross-check against brute-force enumeration.
    #[arg(long)]
    #[serde(default)]
    pub oracle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMode {
    /// Enumerate every permutation tuple; exact rational masses.
    Exact,
    /// Sample bundles and run chi-square homogeneity tests.
    Statistical,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PrivacyArgs {
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: AuditMode,
    #[arg(long, default_value_t = 2)]
    pub servers: usize,
    #[arg(long, default_value_t = 2)]
    pub files: usize,
    #[arg(long, default_value_t = 2)]
    pub caches: usize,
    #[arg(long, default_value_t = 1)]
    pub access_degree: usize,
    #[arg(long, default_value = "1")]
    pub t: String,
    #[arg(long, value_enum, default_value = "full")]
    pub access: AccessArg,
    /// The audited server (1-based).
    #[arg(long, default_value_t = 1)]
    pub server: usize,
    /// Samples per demand vector (statistical mode).
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Random demand vectors added to the uniform ones (statistical mode).
    #[arg(long, default_value_t = 4)]
    pub extra_demands: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the per-demand or per-test CSV here.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// binom(C, t+L)/binom(C, t) times the PIR factor.
    Theorem1,
    /// binom(C, t+L)/binom(C, t).
    Nopir,
    /// Dedicated caches: (K-t)/(t+1) times the PIR factor.
    Product,
    /// Cyclic access: the cheaper of the reduced and dedicated deliveries.
    Theorem3,
    /// Private over non-private rate.
    Ratio,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RatesArgs {
    #[arg(long, value_enum)]
    pub mode: RateMode,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caches: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub access_degree: Option<usize>,
    /// Users K of the product design (default: C).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub users: Option<usize>,
    /// Integer t, or a fraction (`3/2`, `1.5`) evaluated by memory sharing.
    #[arg(long)]
    pub t: String,
    #[arg(long, default_value_t = 2)]
    pub servers: usize,
    #[arg(long, default_value_t = 1)]
    pub files: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CompareArgs {
    /// 1 same cache size, 2 same memory per user, 3 same users, 4 cyclic.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub scenario: u8,
    #[arg(long)]
    pub caches: usize,
    #[arg(long, default_value_t = 2)]
    pub servers: usize,
    #[arg(long, default_value_t = 3)]
    pub files: usize,
    /// Directory for `scenario_<n>.csv`; stdout when absent.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// What a run printed and how it should exit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            exit_code: 0,
        }
    }
}

/// Serialized form of a command.
pub fn config_to_toml(command: &Command) -> Result<String, CliError> {
    toml::to_string(command).map_err(|e| CliError::Config(e.to_string()))
}

pub fn config_from_toml(text: &str) -> Result<Command, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// Resolve the command from flags or a config file and run it.
pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let command = match (cli.config, cli.command) {
        (Some(path), None) => config_from_toml(&fs::read_to_string(&path)?)?,
        (None, Some(command)) => command,
        (None, None) => {
            return Err(CliError::Params(
                "no subcommand given (see --help)".into(),
            ))
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Params("--config excludes a subcommand".into()))
        }
    };
    if let Some(path) = &cli.save_config {
        fs::write(path, config_to_toml(&command)?)?;
    }
    run(&command)
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Simulate(a) => commands::simulate(a),
        Command::PirDemo(a) => commands::pir_demo(a),
        Command::Cyc(a) => commands::cyc(a),
        Command::PrivacyAudit(a) => commands::privacy_audit(a),
        Command::Rates(a) => commands::rates(a),
        Command::Compare(a) => commands::compare(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
