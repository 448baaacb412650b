//! Command-line surface.
//!
//! Every command computes its output files in memory and writes them only
//! after all steps succeed, so a failing run leaves nothing behind. Reports
//! embed the seed, a SHA-256 of the run configuration, and digests of every
//! input; `verify` re-runs a report's configuration and compares bytes.

mod audit;
mod commands;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::corpus::CorpusError;
use crate::models::ModelError;
use crate::sensitivity::{SensitivityError, Variant};
use crate::stats::{StatsError, DEFAULT_MI_BINS};
use crate::synthetic::SyntheticError;

pub use report::{Outputs, RunMeta};

#[derive(Debug, Parser)]
#[command(name = "predsens", version, about = "Accumulated prediction sensitivity: training, audits, and synthetic checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the planted-bias toy corpus and simulated annotations.
    Corpus(CorpusArgs),
    /// Train a task classifier or a protected-status model.
    Train(TrainArgs),
    /// Score every record with the requested metric variants.
    Audit(AuditArgs),
    /// Synthetic experiments.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Re-run the configuration stored in a report and compare output bytes.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Statistical-parity cases on hiring data.
    Parity(ParityArgs),
    /// Lipschitz bound sweep for a scalar linear model.
    Lipschitz(LipschitzArgs),
}

/// A reproducible run: the arguments of one command minus its output prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Corpus(CorpusArgs),
    Train(TrainArgs),
    Audit(AuditArgs),
    SynthParity(ParityArgs),
    SynthLipschitz(LipschitzArgs),
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusArgs {
    /// Output prefix: writes PREFIX.jsonl, PREFIX.annotations.tsv, PREFIX.txt, PREFIX.json.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON corpus recipe; omitted fields take their defaults.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub bias_rate: Option<f64>,
    #[arg(long)]
    pub ambiguous_rate: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub raters: usize,
    /// Probability that a simulated rater flips the ground-truth flag.
    #[arg(long, default_value_t = 0.1)]
    pub rater_noise: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Task label.
    Task,
    /// Protected attribute (a protected-status model).
    Protected,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainArgs {
    /// JSONL records.
    #[arg(long)]
    pub data: PathBuf,
    /// Output prefix: writes PREFIX.model.json, PREFIX.txt, PREFIX.json.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Target::Task)]
    pub target: Target,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON training config; the flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Drop part of the records with this protected label before training.
    #[arg(long)]
    pub downsample_protected: Option<u8>,
    #[arg(long, default_value_t = 0.5)]
    pub downsample_fraction: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingGender {
    /// Leave the score empty and drop the record from that variant's statistics.
    Exclude,
    /// Score the record as 0.
    Zero,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditArgs {
    /// Task model file.
    #[arg(long)]
    pub model: PathBuf,
    /// JSONL records.
    #[arg(long)]
    pub data: PathBuf,
    /// Output prefix: writes PREFIX.txt and PREFIX.json.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "P1,P2,P3,P4,P5,CF")]
    pub variants: Vec<Variant>,
    /// Protected-status model, required by P2 and P3.
    #[arg(long)]
    pub psm: Option<PathBuf>,
    /// Restrict the PSM sensitivities to this output row instead of summing all rows.
    #[arg(long)]
    pub psm_row: Option<usize>,
    /// Gendered word list, one per line. Defaults to the bundled list.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Tab-separated swap pairs for CF. Defaults to the bundled list.
    #[arg(long)]
    pub substitutions: Option<PathBuf>,
    /// Annotation file: `id<TAB>label...` per line.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Bootstrap seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MI_BINS)]
    pub mi_bins: usize,
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
    /// Records without gendered tokens under P4, P5 or CF, or with an all-zero PSM `v`.
    #[arg(long, value_enum, default_value_t = MissingGender::Exclude)]
    pub on_missing_gender: MissingGender,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityArgs {
    /// Output prefix: writes PREFIX.txt and PREFIX.json.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Partners sampled per anchor point when estimating partial derivatives.
    #[arg(long, default_value_t = 2000)]
    pub pairs: usize,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzArgs {
    /// Output prefix: writes PREFIX.tsv, PREFIX.txt, PREFIX.json.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, default_value_t = 0.2)]
    pub max_bound: f64,
}

#[derive(Args, Clone, Debug)]
pub struct VerifyArgs {
    /// A PREFIX.json report written by another command.
    pub report: PathBuf,
}

/// Failure classes, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration: exit 1.
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed, or inconsistent input data: exit 2.
    #[error("{0}")]
    Data(String),
    /// A NaN or infinity appeared during computation: exit 3.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<AutodiffError> for CliError {
    fn from(e: AutodiffError) -> Self {
        match e {
            AutodiffError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Config(_) => CliError::Usage(e.to_string()),
            ModelError::Autodiff(inner) => inner.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SensitivityError> for CliError {
    fn from(e: SensitivityError) -> Self {
        match e {
            SensitivityError::MissingDependency { .. } => CliError::Usage(e.to_string()),
            SensitivityError::Model(inner) => inner.into(),
            SensitivityError::Autodiff(inner) => inner.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Spec(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::InvalidParameter(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SyntheticError> for CliError {
    fn from(e: SyntheticError) -> Self {
        match e {
            SyntheticError::InvalidBound(_) => CliError::Usage(e.to_string()),
            SyntheticError::Autodiff(inner) => inner.into(),
            SyntheticError::Model(inner) => inner.into(),
            SyntheticError::Sensitivity(inner) => inner.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        match self {
            RunConfig::Corpus(a) => a.seed,
            RunConfig::Train(a) => a.seed,
            RunConfig::Audit(a) => a.seed,
            RunConfig::SynthParity(a) => a.seed,
            RunConfig::SynthLipschitz(a) => a.seed,
        }
    }

    /// Computes every output file without touching the filesystem beyond reading inputs.
    pub fn execute(&self) -> Result<Outputs, CliError> {
        match self {
            RunConfig::Corpus(a) => commands::corpus(self, a),
            RunConfig::Train(a) => commands::train(self, a),
            RunConfig::Audit(a) => audit::audit(self, a),
            RunConfig::SynthParity(a) => commands::parity(self, a),
            RunConfig::SynthLipschitz(a) => commands::lipschitz(self, a),
        }
    }
}

impl Command {
    /// Splits a parsed command into its run configuration and output prefix.
    fn into_run(self) -> Result<(RunConfig, PathBuf), VerifyArgs> {
        match self {
            Command::Corpus(a) => Ok((a.out.clone(), RunConfig::Corpus(a))),
            Command::Train(a) => Ok((a.out.clone(), RunConfig::Train(a))),
            Command::Audit(a) => Ok((a.out.clone(), RunConfig::Audit(a))),
            Command::Synth(SynthCommand::Parity(a)) => Ok((a.out.clone(), RunConfig::SynthParity(a))),
            Command::Synth(SynthCommand::Lipschitz(a)) => Ok((a.out.clone(), RunConfig::SynthLipschitz(a))),
            Command::Verify(v) => Err(v),
        }
        .map(|(out, cfg)| (cfg, out))
    }
}

/// Runs one parsed command, printing a short summary on success.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command.into_run() {
        Ok((cfg, out)) => {
            let outputs = cfg.execute()?;
            let written = outputs.write(&out)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Err(verify) => {
            let checked = report::verify(&verify.report)?;
            println!("verified {} files", checked);
            Ok(())
        }
    }
}

/// Entry point for the binary: parses `args`, runs, and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
