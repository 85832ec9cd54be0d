//! Command-line options, config-file ingestion and merging.
//!
//! Precedence: command-line flag, then `HDQKD_*` environment variable (both
//! handled by clap), then the `--config` JSON file, then built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdqkd::channel::{EmissionMode, Preset, SourceModel, ATTENUATED_MU};
use hdqkd::protocol::{DetectorKind, EveKind, EveStrategy};
use hdqkd::security::MutualInfoVariant;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "hdqkd", version, about = "Four-dimensional BB84 simulator with vector and scalar modes")]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the 8×8 crosstalk matrix and render a text heatmap.
    Crosstalk,
    /// Run the protocol, sift, and write transcript, keys and summary.
    Bb84,
    /// Estimate the crosstalk matrix and derive the security metrics.
    Security,
    /// XOR a file with a key file (self-inverse).
    Otp(OtpArgs),
    /// Run the protocol with both detectors and compare sift rates.
    CompareDetectors,
}

#[derive(Debug, Clone, Args)]
pub struct OtpArgs {
    /// File to encrypt or decrypt.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Key file: raw bytes, or hex text when the name ends in `.hex`.
    #[arg(long)]
    pub key: PathBuf,
    /// Destination file.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectorArg {
    Deterministic,
    Filter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EveArg {
    None,
    InterceptResend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Deterministic,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    FullD,
    DMinusOne,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalOpts {
    /// JSON config file; its values sit below flags and environment variables.
    #[arg(long, global = true, env = "HDQKD_CONFIG")]
    pub config: Option<PathBuf>,
    /// OAM subspace |ℓ| (defaults to the preset's).
    #[arg(long = "subspace-l", global = true, env = "HDQKD_SUBSPACE_L")]
    pub subspace_l: Option<u32>,
    #[arg(long, global = true, env = "HDQKD_DETECTOR", value_enum)]
    pub detector: Option<DetectorArg>,
    /// ideal, paper_l1, paper_l10, or a path to a preset JSON file.
    #[arg(long, global = true, env = "HDQKD_PRESET")]
    pub preset: Option<String>,
    #[arg(long, global = true, env = "HDQKD_EVE", value_enum)]
    pub eve: Option<EveArg>,
    /// Probability that Eve measures in the vector basis.
    #[arg(long = "eve-bias", global = true, env = "HDQKD_EVE_BIAS")]
    pub eve_bias: Option<f64>,
    /// Number of protocol symbols.
    #[arg(long = "n", global = true, env = "HDQKD_N")]
    pub n: Option<u64>,
    /// Crosstalk trials per prepared mode.
    #[arg(long, global = true, env = "HDQKD_TRIALS")]
    pub trials: Option<u64>,
    #[arg(long, global = true, env = "HDQKD_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "HDQKD_THREADS")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "HDQKD_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "HDQKD_SOURCE", value_enum)]
    pub source: Option<SourceArg>,
    /// Mean photon number for the Poisson source.
    #[arg(long, global = true, env = "HDQKD_MU")]
    pub mu: Option<f64>,
    #[arg(long = "mutual-info-variant", global = true, env = "HDQKD_MUTUAL_INFO_VARIANT", value_enum)]
    pub mutual_info_variant: Option<VariantArg>,
    /// Also write the eight codebook states as JSON amplitudes.
    #[arg(long = "dump-state", global = true)]
    pub dump_state: bool,
}

/// Config-file schema; every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub subspace_l: Option<u32>,
    pub detector: Option<DetectorKind>,
    pub preset: Option<String>,
    pub eve: Option<EveKind>,
    pub eve_bias: Option<f64>,
    pub n_symbols: Option<u64>,
    pub trials_per_mode: Option<u64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub source: Option<EmissionMode>,
    pub mu: Option<f64>,
    pub mutual_info_variant: Option<MutualInfoVariant>,
    pub dump_state: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub const DEFAULT_N_SYMBOLS: u64 = 100;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_PRESET: &str = "ideal";
pub const DEFAULT_OUT: &str = "out";

/// Fully resolved run settings. Thread count and output directory are not
/// serialised so artifacts do not depend on them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subspace_l: u32,
    pub detector: DetectorKind,
    pub preset: String,
    #[serde(skip)]
    pub preset_data: Preset,
    pub eve: EveStrategy,
    pub n_symbols: u64,
    pub trials_per_mode: u64,
    pub seed: u64,
    pub source: SourceModel,
    pub mutual_info_variant: MutualInfoVariant,
    pub dump_state: bool,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Merges flags/environment over the config file over defaults.
    pub fn resolve(opts: &GlobalOpts) -> CliResult<Self> {
        let file = match &opts.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        RunConfig::merge(opts, &file)
    }

    pub fn merge(opts: &GlobalOpts, file: &ConfigFile) -> CliResult<Self> {
        let preset = opts
            .preset
            .clone()
            .or_else(|| file.preset.clone())
            .unwrap_or_else(|| DEFAULT_PRESET.to_string());
        let preset_data = Preset::resolve(&preset)?;
        let subspace_l = opts
            .subspace_l
            .or(file.subspace_l)
            .unwrap_or(preset_data.subspace_l);
        if subspace_l == 0 {
            return Err(CliError::Config("subspace_l must be ≥ 1".into()));
        }
        let detector = opts
            .detector
            .map(|d| match d {
                DetectorArg::Deterministic => DetectorKind::Deterministic,
                DetectorArg::Filter => DetectorKind::Filter,
            })
            .or(file.detector)
            .unwrap_or_default();
        let eve_kind = opts
            .eve
            .map(|e| match e {
                EveArg::None => EveKind::None,
                EveArg::InterceptResend => EveKind::InterceptResend,
            })
            .or(file.eve)
            .unwrap_or_default();
        let eve = EveStrategy {
            kind: eve_kind,
            basis_choice_bias: opts.eve_bias.or(file.eve_bias).unwrap_or(0.5),
        };
        eve.validate()?;
        let n_symbols = opts.n.or(file.n_symbols).unwrap_or(DEFAULT_N_SYMBOLS);
        if n_symbols == 0 {
            return Err(CliError::Config("n must be ≥ 1".into()));
        }
        let trials_per_mode = opts.trials.or(file.trials_per_mode).unwrap_or(DEFAULT_TRIALS);
        if trials_per_mode == 0 {
            return Err(CliError::Config("trials must be ≥ 1".into()));
        }
        let seed = opts.seed.or(file.seed).ok_or_else(|| {
            CliError::Config("a seed is required (--seed, HDQKD_SEED or config \"seed\")".into())
        })?;
        let mode = opts
            .source
            .map(|s| match s {
                SourceArg::Deterministic => EmissionMode::DeterministicSinglePhoton,
                SourceArg::Poisson => EmissionMode::Poisson,
            })
            .or(file.source)
            .unwrap_or(EmissionMode::DeterministicSinglePhoton);
        let source = match mode {
            EmissionMode::DeterministicSinglePhoton => SourceModel::deterministic(),
            EmissionMode::Poisson => {
                SourceModel::new(mode, opts.mu.or(file.mu).unwrap_or(ATTENUATED_MU))?
            }
        };
        let mutual_info_variant = opts
            .mutual_info_variant
            .map(|v| match v {
                VariantArg::FullD => MutualInfoVariant::FullD,
                VariantArg::DMinusOne => MutualInfoVariant::DMinusOne,
            })
            .or(file.mutual_info_variant)
            .unwrap_or_default();
        let threads = opts.threads.or(file.threads);
        if threads == Some(0) {
            return Err(CliError::Config("threads must be ≥ 1".into()));
        }
        Ok(RunConfig {
            subspace_l,
            detector,
            preset,
            preset_data,
            eve,
            n_symbols,
            trials_per_mode,
            seed,
            source,
            mutual_info_variant,
            dump_state: opts.dump_state || file.dump_state.unwrap_or(false),
            threads,
            output_dir: opts
                .out
                .clone()
                .or_else(|| file.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        })
    }
}
