//! TOML scenario configuration.
//!
//! A config file names one scenario, the source model, the trace length and
//! the RNG seeds, plus a parameter table for the chosen scenario:
//!
//! ```toml
//! scenario = "bandwidth_sweep"
//! n = 200000
//! width_convention = "half"
//!
//! [model]
//! excess_signal = 100.0
//! excess_idler = 100.0
//! gemellity = 0.178
//!
//! [seeds]
//! trace = 42
//!
//! [bandwidth_sweep]
//! center = 0.0
//! widths = [0.05, 0.1, 0.2, 1.0]
//! ```
//!
//! Parsing is strict: unknown keys anywhere are rejected so a typo like
//! `half_widht` cannot silently fall back to a default. Every width in a
//! config is interpreted through `width_convention` — `"half"` (default)
//! means the value is the acceptance half-width `[center - w, center + w]`,
//! `"full"` means it is the total window size `[center - w/2, center + w/2]`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{ModelError, TwinBeamModel};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("scenario \"{scenario}\" requires a [{scenario}] section")]
    MissingSection { scenario: ScenarioKind },
    #[error("{field} must not be empty")]
    EmptyList { field: &'static str },
    #[error("{field} must be positive and finite, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("{field} must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("{field} entries must be strictly increasing: violation at index {index}")]
    NotIncreasing { field: &'static str, index: usize },
    #[error("loss values must lie in [0, 1], got {0}")]
    InvalidLoss(f64),
    #[error("n must be at least 2 to estimate any variance, got {0}")]
    TooFewSamples(usize),
    #[error("quantizer bits must lie in 1..=52, got {0}")]
    InvalidBits(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which end-to-end run the harness performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Idler / selected-signal / shot-reference distributions for one band.
    Histograms,
    /// Conditioned noise versus acceptance bandwidth at a fixed center.
    BandwidthSweep,
    /// Conditioned noise versus symmetric detection loss (i.e. gemellity).
    GemellitySweep,
    /// One narrow band per center across the idler distribution.
    Multiband,
    /// Shot-noise reference measurement only.
    Calibrate,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ScenarioKind::Histograms => "histograms",
            ScenarioKind::BandwidthSweep => "bandwidth_sweep",
            ScenarioKind::GemellitySweep => "gemellity_sweep",
            ScenarioKind::Multiband => "multiband",
            ScenarioKind::Calibrate => "calibrate",
        };
        f.write_str(name)
    }
}

/// How configured width values are interpreted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthConvention {
    /// A width `w` is the half-width: the band is `[c - w, c + w]`.
    #[default]
    Half,
    /// A width `w` is the full window: the band is `[c - w/2, c + w/2]`.
    Full,
}

impl WidthConvention {
    /// Converts a configured width to the half-width used internally.
    pub fn half_width(self, width: f64) -> f64 {
        match self {
            WidthConvention::Half => width,
            WidthConvention::Full => width / 2.0,
        }
    }
}

impl fmt::Display for WidthConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WidthConvention::Half => "half",
            WidthConvention::Full => "full",
        })
    }
}

impl FromStr for WidthConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "half" => Ok(WidthConvention::Half),
            "full" => Ok(WidthConvention::Full),
            other => Err(format!(
                "unknown width convention {other:?} (expected \"half\" or \"full\")"
            )),
        }
    }
}

/// RNG seeds for the independent random streams of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    /// Seed for the correlated twin-beam sampling.
    pub trace: u64,
    /// Seed for the dark-noise stream (only used when dark noise is on).
    #[serde(default)]
    pub dark: u64,
    /// Seed for the shot-noise calibration trace.
    #[serde(default)]
    pub calibration: u64,
}

/// Acquisition-card settings applied to the generated trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizerConfig {
    /// Resolution in bits (1..=52).
    pub bits: u32,
    /// Full scale in shot-sigma units; defaults to four standard deviations
    /// of the louder channel when omitted.
    #[serde(default)]
    pub full_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramsParams {
    /// Band center in shot-sigma units.
    pub center: f64,
    /// Band width (interpreted via the width convention).
    pub width: f64,
    /// Bin width for the idler distribution (shot-sigma units).
    #[serde(default = "default_idler_bin_width")]
    pub idler_bin_width: f64,
    /// Bin width for the selected-signal and shot distributions.
    #[serde(default = "default_signal_bin_width")]
    pub signal_bin_width: f64,
}

fn default_idler_bin_width() -> f64 {
    0.5
}

fn default_signal_bin_width() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthSweepParams {
    /// Band center in shot-sigma units.
    pub center: f64,
    /// Strictly increasing widths to scan (width-convention units).
    pub widths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GemellitySweepParams {
    /// Symmetric detection losses to scan; each replaces the model's
    /// per-channel losses for its point.
    pub losses: Vec<f64>,
    /// Band center in shot-sigma units.
    pub center: f64,
    /// Band width (width-convention units).
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultibandParams {
    /// Band centers in shot-sigma units; the shared width must keep the
    /// bands disjoint.
    pub centers: Vec<f64>,
    /// Common band width (width-convention units).
    pub width: f64,
}

/// A full scenario description as read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    /// Number of sample pairs to generate.
    pub n: usize,
    pub model: TwinBeamModel,
    pub seeds: Seeds,
    #[serde(default)]
    pub width_convention: WidthConvention,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantizer: Option<QuantizerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histograms: Option<HistogramsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_sweep: Option<BandwidthSweepParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gemellity_sweep: Option<GemellitySweepParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiband: Option<MultibandParams>,
}

impl ScenarioConfig {
    /// Parses and validates a config from TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads, parses and validates a config file.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Semantic validation beyond what the type structure enforces.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 2 {
            return Err(ConfigError::TooFewSamples(self.n));
        }
        self.model.validate()?;
        if let Some(q) = &self.quantizer {
            if !(1..=52).contains(&q.bits) {
                return Err(ConfigError::InvalidBits(q.bits));
            }
            if let Some(fs) = q.full_scale {
                if !fs.is_finite() || fs <= 0.0 {
                    return Err(ConfigError::NonPositive {
                        field: "quantizer.full_scale",
                        value: fs,
                    });
                }
            }
        }
        match self.scenario {
            ScenarioKind::Histograms => {
                let p = self.require(&self.histograms)?;
                require_finite("histograms.center", p.center)?;
                require_positive("histograms.width", p.width)?;
                require_positive("histograms.idler_bin_width", p.idler_bin_width)?;
                require_positive("histograms.signal_bin_width", p.signal_bin_width)?;
            }
            ScenarioKind::BandwidthSweep => {
                let p = self.require(&self.bandwidth_sweep)?;
                require_finite("bandwidth_sweep.center", p.center)?;
                if p.widths.is_empty() {
                    return Err(ConfigError::EmptyList {
                        field: "bandwidth_sweep.widths",
                    });
                }
                for (index, &w) in p.widths.iter().enumerate() {
                    require_positive("bandwidth_sweep.widths", w)?;
                    if index > 0 && w <= p.widths[index - 1] {
                        return Err(ConfigError::NotIncreasing {
                            field: "bandwidth_sweep.widths",
                            index,
                        });
                    }
                }
            }
            ScenarioKind::GemellitySweep => {
                let p = self.require(&self.gemellity_sweep)?;
                require_finite("gemellity_sweep.center", p.center)?;
                require_positive("gemellity_sweep.width", p.width)?;
                if p.losses.is_empty() {
                    return Err(ConfigError::EmptyList {
                        field: "gemellity_sweep.losses",
                    });
                }
                for &loss in &p.losses {
                    if !loss.is_finite() || !(0.0..=1.0).contains(&loss) {
                        return Err(ConfigError::InvalidLoss(loss));
                    }
                }
            }
            ScenarioKind::Multiband => {
                let p = self.require(&self.multiband)?;
                require_positive("multiband.width", p.width)?;
                if p.centers.is_empty() {
                    return Err(ConfigError::EmptyList {
                        field: "multiband.centers",
                    });
                }
                for &c in &p.centers {
                    require_finite("multiband.centers", c)?;
                }
            }
            ScenarioKind::Calibrate => {}
        }
        Ok(())
    }

    fn require<'a, T>(&self, section: &'a Option<T>) -> Result<&'a T, ConfigError> {
        section.as_ref().ok_or(ConfigError::MissingSection {
            scenario: self.scenario,
        })
    }

    /// SHA-256 of the canonical (JSON) serialisation, hex encoded. Stamped
    /// into every report so results can be traced back to the exact
    /// configuration, independent of TOML formatting details.
    pub fn sha256_hex(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serialisation cannot fail");
        hex::encode(Sha256::digest(canonical))
    }
}

fn require_positive(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if !value.is_finite() || value <= 0.0 {
        return Err(ConfigError::NonPositive { field, value });
    }
    Ok(())
}

fn require_finite(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if !value.is_finite() {
        return Err(ConfigError::NonFinite { field, value });
    }
    Ok(())
}
