//! Configuration ingestion. Values merge with precedence:
//! command-line flag, then JSON config file, then the MOLDIFF_SEED
//! environment variable (seed only), then built-in defaults.
//!
//! Quantities accept a unit suffix (`100um2/s`, `2m`, `1.5mm/s`); bare
//! numbers are SI. Everything is normalized to SI at the boundary.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use moldiff_core::units::{self, M2_PER_CM2, M2_PER_MM2, M2_PER_UM2, M_PER_CM, M_PER_MM, M_PER_UM};
use moldiff_core::{ChannelModel, ChannelParams, ThresholdPolicy};

use crate::error::{CliError, Result};

/// Longest suffixes first, so `um2/s` wins over its `m2/s` tail.
const DIFFUSIVITY_UNITS: &[(&str, f64)] = &[
    ("um2/s", M2_PER_UM2),
    ("mm2/s", M2_PER_MM2),
    ("cm2/s", M2_PER_CM2),
    ("m2/s", 1.0),
];

const LENGTH_UNITS: &[(&str, f64)] = &[
    ("um", M_PER_UM),
    ("mm", M_PER_MM),
    ("cm", M_PER_CM),
    ("m", 1.0),
];

const VELOCITY_UNITS: &[(&str, f64)] = &[
    ("um/s", M_PER_UM),
    ("mm/s", M_PER_MM),
    ("cm/s", M_PER_CM),
    ("m/s", 1.0),
];

fn parse_with_units(text: &str, table: &[(&str, f64)], what: &str) -> Result<f64> {
    let trimmed = text.trim();
    for &(suffix, factor) in table {
        if let Some(number) = trimmed.strip_suffix(suffix) {
            let value: f64 = number
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("cannot parse {what} value in {text:?}")))?;
            return Ok(value * factor);
        }
    }
    trimmed.parse::<f64>().map_err(|_| {
        let suffixes: Vec<&str> = table.iter().map(|&(s, _)| s).collect();
        CliError::usage(format!(
            "cannot parse {what} {text:?}; expected a number with optional unit suffix ({})",
            suffixes.join(", ")
        ))
    })
}

/// A config-file quantity: bare SI number or a string with a unit suffix.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    fn resolve(&self, table: &[(&str, f64)], what: &str) -> Result<f64> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(s) => parse_with_units(s, table, what),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Clap-side mirror of the core channel model.
#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ModelArg {
    MonteCarlo,
    ExpectedCounts,
}

impl From<ModelArg> for ChannelModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::MonteCarlo => ChannelModel::MonteCarlo,
            ModelArg::ExpectedCounts => ChannelModel::ExpectedCounts,
        }
    }
}

/// JSON config file schema. Unknown keys are rejected so typos fail
/// loudly instead of silently falling back to defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    pub diffusivity: Option<Quantity>,
    pub distance: Option<Quantity>,
    pub drift: Option<Quantity>,
    pub guard_mult: Option<f64>,
    pub bit_period_s: Option<f64>,
    pub molecules_per_pulse: Option<u64>,
    pub threshold_fraction: Option<f64>,
    pub calibrated_threshold: Option<bool>,
    pub dt_s: Option<f64>,
    pub t_max_s: Option<f64>,
    pub shards: Option<u32>,
    pub crossing_correction: Option<bool>,
    pub seed: Option<u64>,
    pub channel_model: Option<ChannelModel>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// JSON config file; explicit flags override file values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Base RNG seed (precedence: flag, config file, MOLDIFF_SEED, 42).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for output files (default: current directory).
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// File format where a command supports both.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, clap::Args)]
pub struct ChannelArgs {
    /// Channel preset: intracellular or interorganism.
    #[arg(long)]
    pub preset: Option<String>,
    /// Diffusivity, bare SI (m2/s) or suffixed: 100um2/s, 0.5cm2/s, ...
    #[arg(long)]
    pub diffusivity: Option<String>,
    /// Transmitter-receiver distance, bare SI (m) or suffixed: 100um, 2m, ...
    #[arg(long)]
    pub distance: Option<String>,
    /// Drift velocity toward the receiver, bare SI (m/s) or suffixed.
    #[arg(long)]
    pub drift: Option<String>,
}

#[derive(Debug, clap::Args)]
pub struct ModemArgs {
    /// Bit period as a multiple of the channel delay spread.
    #[arg(long, conflicts_with = "bit_period")]
    pub guard_mult: Option<f64>,
    /// Bit period in seconds, bypassing the delay-spread rule.
    #[arg(long)]
    pub bit_period: Option<f64>,
    /// Molecules released per 1 bit.
    #[arg(long)]
    pub molecules: Option<u64>,
    /// Detection threshold as a fraction of the expected single-pulse count.
    #[arg(long, conflicts_with = "calibrated_threshold")]
    pub threshold_fraction: Option<f64>,
    /// Calibrate the threshold from the preamble instead.
    #[arg(long)]
    pub calibrated_threshold: bool,
}

#[derive(Debug, clap::Args)]
pub struct WalkArgs {
    /// Integration step in seconds (default: x^2/(100 D)).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulation horizon in seconds (default: frame airtime plus 5 delay spreads).
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Parallel work partitions; never changes results.
    #[arg(long)]
    pub shards: Option<u32>,
    /// Refine boundary crossings inside steps (Brownian bridge).
    #[arg(long)]
    pub crossing_correction: bool,
}

/// Fully merged settings. Bit period and walk timing stay optional here
/// because their defaults depend on the text being sent; commands
/// finalize them.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: ChannelParams,
    pub molecules_per_pulse: u64,
    pub threshold_policy: ThresholdPolicy,
    pub guard_mult: f64,
    pub bit_period: Option<f64>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub shards: u32,
    pub crossing_correction: bool,
    pub channel_model: ChannelModel,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
}

impl Resolved {
    /// The explicit dt, or the fineness bound x^2/(100 D).
    pub fn dt_or_default(&self) -> Result<f64> {
        if let Some(dt) = self.dt {
            return Ok(dt);
        }
        let x = self.params.distance;
        if x > 0.0 {
            Ok(x * x / (100.0 * self.params.diffusivity))
        } else {
            Err(CliError::usage(
                "a zero-distance channel has no default step size; give --dt",
            ))
        }
    }
}

fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
}

fn resolve_channel(flags: &ChannelArgs, file: &FileConfig) -> Result<ChannelParams> {
    let preset_name = flags.preset.as_deref().or(file.preset.as_deref());
    let explicit = flags.diffusivity.is_some()
        || flags.distance.is_some()
        || flags.drift.is_some()
        || file.diffusivity.is_some()
        || file.distance.is_some()
        || file.drift.is_some();
    if let Some(name) = preset_name {
        if explicit {
            return Err(CliError::usage(
                "give either a channel preset or explicit channel parameters, not both",
            ));
        }
        return units::preset(name).ok_or_else(|| {
            CliError::usage(format!(
                "unknown preset {name:?}; valid presets: {}",
                units::PRESET_NAMES.join(", ")
            ))
        });
    }
    if !explicit {
        return Err(CliError::usage(format!(
            "no channel given; use --preset ({}) or --diffusivity with --distance",
            units::PRESET_NAMES.join(", ")
        )));
    }
    let diffusivity = flags
        .diffusivity
        .as_deref()
        .map(|s| parse_with_units(s, DIFFUSIVITY_UNITS, "diffusivity"))
        .or_else(|| {
            file.diffusivity
                .as_ref()
                .map(|q| q.resolve(DIFFUSIVITY_UNITS, "diffusivity"))
        })
        .transpose()?
        .ok_or_else(|| CliError::usage("explicit channel needs a diffusivity"))?;
    let distance = flags
        .distance
        .as_deref()
        .map(|s| parse_with_units(s, LENGTH_UNITS, "distance"))
        .or_else(|| {
            file.distance
                .as_ref()
                .map(|q| q.resolve(LENGTH_UNITS, "distance"))
        })
        .transpose()?
        .ok_or_else(|| CliError::usage("explicit channel needs a distance"))?;
    let drift = flags
        .drift
        .as_deref()
        .map(|s| parse_with_units(s, VELOCITY_UNITS, "drift"))
        .or_else(|| {
            file.drift
                .as_ref()
                .map(|q| q.resolve(VELOCITY_UNITS, "drift"))
        })
        .transpose()?
        .unwrap_or(0.0);
    Ok(ChannelParams::new(diffusivity, distance, drift)?)
}

fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> Result<u64> {
    if let Some(seed) = flag.or(file.seed) {
        return Ok(seed);
    }
    match std::env::var("MOLDIFF_SEED") {
        Ok(text) => text.trim().parse::<u64>().map_err(|_| {
            CliError::usage(format!("MOLDIFF_SEED={text:?} is not an unsigned integer"))
        }),
        Err(_) => Ok(42),
    }
}

fn resolve_threshold(modem: Option<&ModemArgs>, file: &FileConfig) -> Result<ThresholdPolicy> {
    if let Some(fraction) = modem.and_then(|m| m.threshold_fraction) {
        return Ok(ThresholdPolicy::Fixed { fraction });
    }
    if modem.is_some_and(|m| m.calibrated_threshold) {
        return Ok(ThresholdPolicy::PreambleCalibrated);
    }
    if file.threshold_fraction.is_some() && file.calibrated_threshold == Some(true) {
        return Err(CliError::usage(
            "config file sets both threshold_fraction and calibrated_threshold",
        ));
    }
    if let Some(fraction) = file.threshold_fraction {
        return Ok(ThresholdPolicy::Fixed { fraction });
    }
    if file.calibrated_threshold == Some(true) {
        return Ok(ThresholdPolicy::PreambleCalibrated);
    }
    Ok(ThresholdPolicy::Fixed { fraction: 0.5 })
}

pub fn resolve(
    common: &CommonArgs,
    channel: &ChannelArgs,
    modem: Option<&ModemArgs>,
    walk: Option<&WalkArgs>,
    model: Option<ModelArg>,
) -> Result<Resolved> {
    let file = match &common.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };
    let params = resolve_channel(channel, &file)?;
    let seed = resolve_seed(common.seed, &file)?;
    let threshold_policy = resolve_threshold(modem, &file)?;
    Ok(Resolved {
        params,
        molecules_per_pulse: modem
            .and_then(|m| m.molecules)
            .or(file.molecules_per_pulse)
            .unwrap_or(10_000),
        threshold_policy,
        guard_mult: modem
            .and_then(|m| m.guard_mult)
            .or(file.guard_mult)
            .unwrap_or(10.0),
        bit_period: modem.and_then(|m| m.bit_period).or(file.bit_period_s),
        dt: walk.and_then(|w| w.dt).or(file.dt_s),
        t_max: walk.and_then(|w| w.t_max).or(file.t_max_s),
        shards: walk.and_then(|w| w.shards).or(file.shards).unwrap_or(1),
        crossing_correction: walk.is_some_and(|w| w.crossing_correction)
            || file.crossing_correction.unwrap_or(false),
        channel_model: model
            .map(Into::into)
            .or(file.channel_model)
            .unwrap_or(ChannelModel::MonteCarlo),
        seed,
        out_dir: common
            .out_dir
            .clone()
            .or(file.out_dir)
            .unwrap_or_else(|| PathBuf::from(".")),
        format: common.format.or(file.format).unwrap_or(OutputFormat::Json),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_channel() -> ChannelArgs {
        ChannelArgs {
            preset: None,
            diffusivity: None,
            distance: None,
            drift: None,
        }
    }

    fn no_common() -> CommonArgs {
        CommonArgs {
            config: None,
            seed: Some(1),
            out_dir: None,
            format: None,
        }
    }

    #[test]
    fn unit_suffixes_normalize_to_si() {
        let d = |s| parse_with_units(s, DIFFUSIVITY_UNITS, "diffusivity").unwrap();
        assert_eq!(d("1m2/s"), 1.0);
        assert_eq!(d("100um2/s"), 100.0 * M2_PER_UM2);
        assert_eq!(d("0.5cm2/s"), 0.5 * M2_PER_CM2);
        assert_eq!(d("3mm2/s"), 3.0 * M2_PER_MM2);
        assert_eq!(d("1e-10"), 1e-10);
        assert_eq!(d(" 2 um2/s "), 2.0 * M2_PER_UM2);

        let x = |s| parse_with_units(s, LENGTH_UNITS, "distance").unwrap();
        assert_eq!(x("2m"), 2.0);
        assert_eq!(x("100um"), 100.0 * M_PER_UM);
        assert_eq!(x("5cm"), 0.05);
        assert_eq!(x("0.25"), 0.25);

        let v = |s| parse_with_units(s, VELOCITY_UNITS, "drift").unwrap();
        assert_eq!(v("1m/s"), 1.0);
        assert_eq!(v("10um/s"), 10.0 * M_PER_UM);
    }

    #[test]
    fn malformed_quantities_are_usage_errors() {
        assert!(parse_with_units("fast", LENGTH_UNITS, "distance").is_err());
        assert!(parse_with_units("2km", LENGTH_UNITS, "distance").is_err());
        assert!(parse_with_units("m", LENGTH_UNITS, "distance").is_err());
        assert!(parse_with_units("", LENGTH_UNITS, "distance").is_err());
    }

    #[test]
    fn preset_and_explicit_channel_are_mutually_exclusive() {
        let flags = ChannelArgs {
            preset: Some("intracellular".into()),
            distance: Some("1m".into()),
            ..no_channel()
        };
        assert!(resolve_channel(&flags, &FileConfig::default()).is_err());
    }

    #[test]
    fn unknown_preset_lists_the_valid_names() {
        let flags = ChannelArgs {
            preset: Some("ocean".into()),
            ..no_channel()
        };
        let err = resolve_channel(&flags, &FileConfig::default()).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("intracellular") && msg.contains("interorganism"),
            "{msg}"
        );
    }

    #[test]
    fn missing_channel_is_a_usage_error() {
        assert!(resolve_channel(&no_channel(), &FileConfig::default()).is_err());
    }

    #[test]
    fn explicit_channel_resolves_with_drift_defaulting_to_zero() {
        let flags = ChannelArgs {
            diffusivity: Some("1m2/s".into()),
            distance: Some("2m".into()),
            ..no_channel()
        };
        let params = resolve_channel(&flags, &FileConfig::default()).unwrap();
        assert_eq!(params.diffusivity, 1.0);
        assert_eq!(params.distance, 2.0);
        assert_eq!(params.drift_velocity, 0.0);
    }

    #[test]
    fn flags_override_file_values() {
        let file: FileConfig = serde_json::from_str(
            r#"{"preset": "intracellular", "seed": 9, "molecules_per_pulse": 5, "shards": 3}"#,
        )
        .unwrap();
        assert_eq!(file.seed, Some(9));
        let resolved = Resolved {
            params: resolve_channel(&no_channel(), &file).unwrap(),
            molecules_per_pulse: 0,
            threshold_policy: ThresholdPolicy::Fixed { fraction: 0.5 },
            guard_mult: 0.0,
            bit_period: None,
            dt: None,
            t_max: None,
            shards: 0,
            crossing_correction: false,
            channel_model: ChannelModel::MonteCarlo,
            seed: 0,
            out_dir: PathBuf::from("."),
            format: OutputFormat::Json,
        };
        assert_eq!(resolved.params.distance, 1e-4);
        assert_eq!(resolve_seed(Some(1), &file).unwrap(), 1);
        assert_eq!(resolve_seed(None, &file).unwrap(), 9);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let parsed: std::result::Result<FileConfig, _> =
            serde_json::from_str(r#"{"presett": "intracellular"}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn threshold_resolution_prefers_flags() {
        let file: FileConfig = serde_json::from_str(r#"{"calibrated_threshold": true}"#).unwrap();
        let modem = ModemArgs {
            guard_mult: None,
            bit_period: None,
            molecules: None,
            threshold_fraction: Some(0.4),
            calibrated_threshold: false,
        };
        match resolve_threshold(Some(&modem), &file).unwrap() {
            ThresholdPolicy::Fixed { fraction } => assert_eq!(fraction, 0.4),
            other => panic!("unexpected policy {other:?}"),
        }
        match resolve_threshold(None, &file).unwrap() {
            ThresholdPolicy::PreambleCalibrated => {}
            other => panic!("unexpected policy {other:?}"),
        }
    }

    #[test]
    fn contradictory_file_thresholds_are_rejected() {
        let file: FileConfig =
            serde_json::from_str(r#"{"threshold_fraction": 0.4, "calibrated_threshold": true}"#)
                .unwrap();
        assert!(resolve_threshold(None, &file).is_err());
    }

    #[test]
    fn resolve_fills_defaults() {
        let channel = ChannelArgs {
            preset: Some("interorganism".into()),
            ..no_channel()
        };
        let resolved = resolve(&no_common(), &channel, None, None, None).unwrap();
        assert_eq!(resolved.seed, 1);
        assert_eq!(resolved.molecules_per_pulse, 10_000);
        assert_eq!(resolved.guard_mult, 10.0);
        assert_eq!(resolved.shards, 1);
        assert!(!resolved.crossing_correction);
        assert_eq!(resolved.channel_model, ChannelModel::MonteCarlo);
        assert_eq!(resolved.format, OutputFormat::Json);
        let dt = resolved.dt_or_default().unwrap();
        assert_eq!(dt, 4.0 / (100.0 * 0.5e-4));
    }
}
