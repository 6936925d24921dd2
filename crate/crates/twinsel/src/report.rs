//! Serialisable result records: JSON reports and CSV tables.
//!
//! A [`NoiseReport`] is the complete outcome of one scenario run. Its JSON
//! serialisation is deterministic — fixed field order, shortest-round-trip
//! float formatting, no timestamps — so identical configurations produce
//! byte-identical reports, which the test suite relies on. Every report
//! carries provenance: the SHA-256 of the configuration and the seeds that
//! generated the data.
//!
//! The CSV writers emit one fixed column set per scenario. Optional values
//! (a noise figure for a band that accepted too few samples, a decibel
//! value for an exactly-zero variance) appear as empty fields rather than
//! placeholder numbers.

use serde::Serialize;

use crate::noise::to_db;
use crate::stats::HistogramBin;

/// Where a report's numbers came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    /// SHA-256 (hex) of the canonical serialisation of the config.
    pub config_sha256: String,
    pub trace_seed: u64,
    pub dark_seed: u64,
    pub calibration_seed: u64,
}

/// One measured (and usually predicted) point of a scenario.
///
/// Which coordinate fields are set depends on the scenario: a bandwidth
/// sweep fills `half_width_sigma0`, a multiband run `center_sigma0`, a
/// gemellity sweep `loss` and `gemellity_db`. Unset fields are omitted from
/// the JSON entirely.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PointRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width_sigma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_sigma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    /// Model-implied gemellity of the point, dB.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gemellity_db: Option<f64>,
    /// Gemellity estimated from the generated trace, dB.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_gemellity_db: Option<f64>,
    /// Measured noise of the selected ensemble, linear shot units.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_linear: Option<f64>,
    /// Measured noise in dB; absent when below the floor or not measured.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_db: Option<f64>,
    /// True when the measured variance was exactly zero (quantised data).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub below_floor: Option<bool>,
    /// 95% confidence interval for the measured noise, dB.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci95_db_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci95_db_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_linear: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_db: Option<f64>,
    /// Measured acceptance fraction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
    /// Predicted acceptance fraction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accepted_count: Option<u64>,
    /// Human-readable annotation, e.g. why a measurement is absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// One bin of a reported distribution, with the Gaussian-fit expectation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBinRecord {
    pub bin_center: f64,
    pub probability: f64,
    /// Probability mass a Gaussian with the series' fitted moments puts in
    /// this bin.
    pub gaussian_fit: f64,
}

/// A complete histogram with its moment-fit parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramSeries {
    /// Which distribution this is ("idler", "selected_signal", ...).
    pub label: String,
    pub bin_width: f64,
    /// Sample mean of the underlying data.
    pub mean: f64,
    /// Sample standard deviation of the underlying data.
    pub std_dev: f64,
    pub bins: Vec<HistogramBinRecord>,
}

/// The full outcome of a scenario run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseReport {
    pub scenario: String,
    pub provenance: Provenance,
    /// Trace length the scenario ran with.
    pub n: u64,
    /// Shot-noise variance used as the Fano denominator (1.0 by the crate's
    /// normalisation; the calibrate scenario reports its measured value).
    pub shot_variance: f64,
    pub points: Vec<PointRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub histograms: Vec<HistogramSeries>,
}

impl NoiseReport {
    /// Deterministic pretty-printed JSON, newline terminated.
    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("report serialisation cannot fail");
        text.push('\n');
        text
    }
}

/// 95% confidence interval, in dB, for a sample variance estimated from
/// `count` samples (large-sample normal approximation with standard error
/// `variance * sqrt(2 / (count - 1))`).
///
/// Returns `None` when no interval is meaningful: fewer than two samples, a
/// zero variance, or so few samples that the lower bound is non-positive
/// and has no decibel value.
pub fn variance_ci95_db(variance: f64, count: usize) -> Option<(f64, f64)> {
    if count < 2 || variance.is_nan() || variance <= 0.0 {
        return None;
    }
    let se = variance * (2.0 / (count as f64 - 1.0)).sqrt();
    let lo = variance - 1.96 * se;
    let hi = variance + 1.96 * se;
    if lo <= 0.0 {
        return None;
    }
    Some((to_db(lo).ok()?, to_db(hi).ok()?))
}

/// Builds the bin records for one histogram series: observed probabilities
/// plus the mass a `N(mean, std_dev^2)` fit assigns to each bin.
pub fn histogram_series(
    label: &str,
    bin_width: f64,
    mean: f64,
    std_dev: f64,
    bins: &[HistogramBin],
) -> HistogramSeries {
    let records = bins
        .iter()
        .map(|bin| {
            let lo = bin.center - bin_width / 2.0;
            let hi = bin.center + bin_width / 2.0;
            let gaussian_fit = if std_dev > 0.0 {
                crate::oracle::normal_mass((lo - mean) / std_dev, (hi - mean) / std_dev)
            } else {
                // Degenerate fit: all mass in the bin containing the mean.
                f64::from(u8::from(lo <= mean && mean <= hi))
            };
            HistogramBinRecord {
                bin_center: bin.center,
                probability: bin.probability,
                gaussian_fit,
            }
        })
        .collect();
    HistogramSeries {
        label: label.to_string(),
        bin_width,
        mean,
        std_dev,
        bins: records,
    }
}

fn push_field(out: &mut String, value: Option<f64>) {
    if let Some(v) = value {
        out.push_str(&format!("{v}"));
    }
}

/// `half_width_sigma0,measured_db,predicted_db,success_rate,accepted_count`
pub fn bandwidth_sweep_csv(points: &[PointRecord]) -> String {
    let mut out =
        String::from("half_width_sigma0,measured_db,predicted_db,success_rate,accepted_count\n");
    for p in points {
        push_field(&mut out, p.half_width_sigma0);
        out.push(',');
        push_field(&mut out, p.measured_db);
        out.push(',');
        push_field(&mut out, p.predicted_db);
        out.push(',');
        push_field(&mut out, p.success_rate);
        out.push(',');
        if let Some(count) = p.accepted_count {
            out.push_str(&count.to_string());
        }
        out.push('\n');
    }
    out
}

/// `loss,gemellity_db,measured_db,predicted_db`
pub fn gemellity_sweep_csv(points: &[PointRecord]) -> String {
    let mut out = String::from("loss,gemellity_db,measured_db,predicted_db\n");
    for p in points {
        push_field(&mut out, p.loss);
        out.push(',');
        push_field(&mut out, p.gemellity_db);
        out.push(',');
        push_field(&mut out, p.measured_db);
        out.push(',');
        push_field(&mut out, p.predicted_db);
        out.push('\n');
    }
    out
}

/// `center_sigma0,measured_db,success_rate,predicted_rate`
pub fn multiband_csv(points: &[PointRecord]) -> String {
    let mut out = String::from("center_sigma0,measured_db,success_rate,predicted_rate\n");
    for p in points {
        push_field(&mut out, p.center_sigma0);
        out.push(',');
        push_field(&mut out, p.measured_db);
        out.push(',');
        push_field(&mut out, p.success_rate);
        out.push(',');
        push_field(&mut out, p.predicted_rate);
        out.push('\n');
    }
    out
}

/// `bin_center,probability,gaussian_fit`
pub fn histogram_csv(series: &HistogramSeries) -> String {
    let mut out = String::from("bin_center,probability,gaussian_fit\n");
    for bin in &series.bins {
        out.push_str(&format!(
            "{},{},{}\n",
            bin.bin_center, bin.probability, bin.gaussian_fit
        ));
    }
    out
}
