//! End-to-end scenario runners: config in, report (and files) out.
//!
//! Each runner is a pure function of its [`ScenarioConfig`]: the same
//! config produces byte-identical `report.json` and CSV files on every run,
//! on every machine. That determinism is what allows the regression suite to
//! compare whole artifacts instead of individual numbers.
//!
//! The shared pipeline is: build the covariance matrix for the model, apply
//! losses, draw the correlated trace from the trace seed, overlay dark noise
//! from the dark seed, pass everything through the quantizer if one is
//! configured, then select/estimate/predict per scenario.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig, ScenarioKind};
use crate::model::{
    add_dark_noise, apply_loss, build_covariance, derive_seed, quantize, sample_trace,
    shot_calibration_trace, CovarianceMatrix, ModelError, TwinBeamModel,
};
use crate::noise::to_db;
use crate::oracle::{self, OracleError};
use crate::report::{
    bandwidth_sweep_csv, gemellity_sweep_csv, histogram_csv, histogram_series, multiband_csv,
    variance_ci95_db, HistogramSeries, NoiseReport, PointRecord, Provenance,
};
use crate::select::{
    multi_select, select, sweep_bandwidth, ConditionalResult, SelectError, SelectionBand,
};
use crate::stats::{self, StatsError};
use crate::trace::{Trace, TraceError};
use crate::tracefile::TraceFileError;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    TraceFile(#[from] TraceFileError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Report plus the list of files that were written (empty when no output
/// directory was given).
#[derive(Debug)]
pub struct ScenarioOutcome {
    pub report: NoiseReport,
    pub written: Vec<PathBuf>,
}

/// Draws the trace a config describes: correlated sampling, dark noise,
/// quantisation — everything except the selection itself.
pub fn generate_trace(config: &ScenarioConfig) -> Result<Trace, ScenarioError> {
    let cov = config.model.effective_covariance()?;
    synthesize(config, &cov, config.seeds.trace, config.seeds.dark)
}

fn synthesize(
    config: &ScenarioConfig,
    cov: &CovarianceMatrix,
    trace_seed: u64,
    dark_seed: u64,
) -> Result<Trace, ScenarioError> {
    let mut trace = sample_trace(cov, config.n, trace_seed)?;
    if config.model.dark_variance > 0.0 {
        trace = add_dark_noise(&trace, config.model.dark_variance, dark_seed)?;
    }
    if let Some(q) = &config.quantizer {
        let full_scale = match q.full_scale {
            Some(fs) => fs,
            // The card's range is a property of the setup, not of the swept
            // parameter, so the default derives from the configured model.
            None => config.model.default_full_scale()?,
        };
        trace = quantize(&trace, q.bits, full_scale)?;
    }
    Ok(trace)
}

/// The covariance matrix predictions should use: optical state after loss,
/// with the dark-noise variance added to both diagonal entries (dark noise
/// is uncorrelated, so the off-diagonal term is untouched).
fn prediction_matrix(
    cov: &CovarianceMatrix,
    dark_variance: f64,
) -> Result<CovarianceMatrix, ScenarioError> {
    Ok(CovarianceMatrix::new(
        cov.v_signal() + dark_variance,
        cov.v_idler() + dark_variance,
        cov.covariance(),
    )?)
}

fn provenance(config: &ScenarioConfig) -> Provenance {
    Provenance {
        config_sha256: config.sha256_hex(),
        trace_seed: config.seeds.trace,
        dark_seed: config.seeds.dark,
        calibration_seed: config.seeds.calibration,
    }
}

/// Fills the measurement fields of a point from a selection outcome. An
/// insufficient selection becomes an annotated point with no noise figure;
/// any other selection error is a real failure and propagates.
fn measurement_fields(
    record: &mut PointRecord,
    outcome: Result<ConditionalResult, SelectError>,
) -> Result<(), ScenarioError> {
    match outcome {
        Ok(result) => {
            let linear = result.noise.linear();
            record.measured_linear = Some(linear);
            record.measured_db = result.noise.db();
            if result.noise.is_below_floor() {
                record.below_floor = Some(true);
            }
            if let Some((lo, hi)) = variance_ci95_db(linear, result.accepted()) {
                record.ci95_db_lo = Some(lo);
                record.ci95_db_hi = Some(hi);
            }
            record.success_rate = Some(result.success_rate);
            record.accepted_count = Some(result.accepted() as u64);
        }
        Err(SelectError::InsufficientSelection {
            accepted,
            success_rate,
        }) => {
            record.success_rate = Some(success_rate);
            record.accepted_count = Some(accepted as u64);
            record.note = Some(format!(
                "insufficient selection: {accepted} sample(s) accepted"
            ));
        }
        Err(other) => return Err(other.into()),
    }
    Ok(())
}

fn prediction_fields(
    record: &mut PointRecord,
    pred: &CovarianceMatrix,
    band: SelectionBand,
) -> Result<(), ScenarioError> {
    let variance = oracle::predicted_selected_variance(pred, band)?;
    record.predicted_linear = Some(variance);
    record.predicted_db = to_db(variance).ok();
    record.predicted_rate = Some(oracle::predicted_success_rate(pred.sigma_idler(), band)?);
    Ok(())
}

/// Runs the configured scenario. With an output directory, writes
/// `report.json` plus the scenario's CSV tables there (creating the
/// directory if needed) and returns the paths.
pub fn run_scenario(
    config: &ScenarioConfig,
    out_dir: Option<&Path>,
) -> Result<ScenarioOutcome, ScenarioError> {
    config.validate()?;
    let (report, csvs) = match config.scenario {
        ScenarioKind::Calibrate => run_calibrate(config)?,
        ScenarioKind::Histograms => run_histograms(config)?,
        ScenarioKind::BandwidthSweep => run_bandwidth_sweep(config)?,
        ScenarioKind::GemellitySweep => run_gemellity_sweep(config)?,
        ScenarioKind::Multiband => run_multiband(config)?,
    };
    let mut written = Vec::new();
    if let Some(dir) = out_dir {
        let mut files = vec![("report.json".to_string(), report.to_json())];
        files.extend(csvs);
        written = write_outputs(dir, &files)?;
    }
    Ok(ScenarioOutcome { report, written })
}

type Csv = (String, String);

fn run_calibrate(config: &ScenarioConfig) -> Result<(NoiseReport, Vec<Csv>), ScenarioError> {
    let shot = shot_calibration_trace(config.n, config.seeds.calibration)?;
    let variance = stats::variance(&shot)?;
    let level = stats::fano(&shot, 1.0)?;
    let mut record = PointRecord {
        measured_linear: Some(level.linear()),
        measured_db: level.db(),
        accepted_count: Some(shot.len() as u64),
        ..PointRecord::default()
    };
    if let Some((lo, hi)) = variance_ci95_db(level.linear(), shot.len()) {
        record.ci95_db_lo = Some(lo);
        record.ci95_db_hi = Some(hi);
    }
    let report = NoiseReport {
        scenario: config.scenario.to_string(),
        provenance: provenance(config),
        n: config.n as u64,
        shot_variance: variance,
        points: vec![record],
        histograms: vec![],
    };
    Ok((report, vec![]))
}

fn run_histograms(config: &ScenarioConfig) -> Result<(NoiseReport, Vec<Csv>), ScenarioError> {
    let params = config
        .histograms
        .as_ref()
        .expect("validated: histograms section present");
    let half_width = config.width_convention.half_width(params.width);
    let band = SelectionBand::new(params.center, half_width)?;

    let trace = generate_trace(config)?;
    // A histogram of an empty selection is meaningless, so insufficiency is
    // fatal here rather than a recorded note.
    let selection = select(&trace, band)?;
    let shot = shot_calibration_trace(config.n, config.seeds.calibration)?;

    let mut point = PointRecord {
        center_sigma0: Some(params.center),
        half_width_sigma0: Some(half_width),
        ..PointRecord::default()
    };
    let pred = prediction_matrix(
        &config.model.effective_covariance()?,
        config.model.dark_variance,
    )?;
    prediction_fields(&mut point, &pred, band)?;
    measurement_fields(&mut point, Ok(selection.clone()))?;

    let series = [
        ("idler", trace.idler(), params.idler_bin_width),
        (
            "selected_signal",
            selection.selected_signal.as_slice(),
            params.signal_bin_width,
        ),
        ("shot_reference", shot.as_slice(), params.signal_bin_width),
    ];
    let mut histograms: Vec<HistogramSeries> = Vec::new();
    let mut csvs = Vec::new();
    for (label, data, bin_width) in series {
        let bins = stats::histogram(data, bin_width)?;
        let mean = stats::mean(data)?;
        let std_dev = stats::variance(data)?.sqrt();
        let series = histogram_series(label, bin_width, mean, std_dev, &bins);
        csvs.push((format!("{label}_histogram.csv"), histogram_csv(&series)));
        histograms.push(series);
    }

    let report = NoiseReport {
        scenario: config.scenario.to_string(),
        provenance: provenance(config),
        n: config.n as u64,
        shot_variance: 1.0,
        points: vec![point],
        histograms,
    };
    Ok((report, csvs))
}

fn run_bandwidth_sweep(config: &ScenarioConfig) -> Result<(NoiseReport, Vec<Csv>), ScenarioError> {
    let params = config
        .bandwidth_sweep
        .as_ref()
        .expect("validated: bandwidth_sweep section present");
    let half_widths: Vec<f64> = params
        .widths
        .iter()
        .map(|&w| config.width_convention.half_width(w))
        .collect();

    let trace = generate_trace(config)?;
    let pred = prediction_matrix(
        &config.model.effective_covariance()?,
        config.model.dark_variance,
    )?;

    let mut points = Vec::with_capacity(half_widths.len());
    for point in sweep_bandwidth(&trace, params.center, &half_widths)? {
        let band = SelectionBand::new(params.center, point.half_width)?;
        let mut record = PointRecord {
            half_width_sigma0: Some(point.half_width),
            center_sigma0: Some(params.center),
            ..PointRecord::default()
        };
        prediction_fields(&mut record, &pred, band)?;
        measurement_fields(&mut record, point.result)?;
        points.push(record);
    }

    let csv = bandwidth_sweep_csv(&points);
    let report = NoiseReport {
        scenario: config.scenario.to_string(),
        provenance: provenance(config),
        n: config.n as u64,
        shot_variance: 1.0,
        points,
        histograms: vec![],
    };
    Ok((report, vec![("bandwidth_sweep.csv".to_string(), csv)]))
}

/// Scans the symmetric detection loss. Each point replaces the model's
/// per-channel losses with the swept value, draws its own trace from seeds
/// derived from the configured ones, and reports the implied gemellity
/// (dark noise included) alongside the measured one.
fn run_gemellity_sweep(config: &ScenarioConfig) -> Result<(NoiseReport, Vec<Csv>), ScenarioError> {
    let params = config
        .gemellity_sweep
        .as_ref()
        .expect("validated: gemellity_sweep section present");
    let half_width = config.width_convention.half_width(params.width);
    let band = SelectionBand::new(params.center, half_width)?;
    let source = build_covariance(&TwinBeamModel {
        loss_signal: 0.0,
        loss_idler: 0.0,
        ..config.model
    })?;

    let mut points = Vec::with_capacity(params.losses.len());
    for (index, &loss) in params.losses.iter().enumerate() {
        let cov = apply_loss(&source, loss, loss)?;
        let trace = synthesize(
            config,
            &cov,
            derive_seed(config.seeds.trace, index as u64),
            derive_seed(config.seeds.dark, index as u64),
        )?;
        let pred = prediction_matrix(&cov, config.model.dark_variance)?;
        let measured_gemellity = stats::gemellity(trace.signal(), trace.idler())?;
        let mut record = PointRecord {
            loss: Some(loss),
            gemellity_db: to_db(pred.implied_gemellity()).ok(),
            measured_gemellity_db: measured_gemellity.db(),
            ..PointRecord::default()
        };
        prediction_fields(&mut record, &pred, band)?;
        measurement_fields(&mut record, select(&trace, band))?;
        points.push(record);
    }

    let csv = gemellity_sweep_csv(&points);
    let report = NoiseReport {
        scenario: config.scenario.to_string(),
        provenance: provenance(config),
        n: config.n as u64,
        shot_variance: 1.0,
        points,
        histograms: vec![],
    };
    Ok((report, vec![("gemellity_sweep.csv".to_string(), csv)]))
}

fn run_multiband(config: &ScenarioConfig) -> Result<(NoiseReport, Vec<Csv>), ScenarioError> {
    let params = config
        .multiband
        .as_ref()
        .expect("validated: multiband section present");
    let half_width = config.width_convention.half_width(params.width);
    let bands: Vec<SelectionBand> = params
        .centers
        .iter()
        .map(|&c| SelectionBand::new(c, half_width))
        .collect::<Result<_, _>>()?;

    let trace = generate_trace(config)?;
    let pred = prediction_matrix(
        &config.model.effective_covariance()?,
        config.model.dark_variance,
    )?;

    let outcomes = multi_select(&trace, &bands)?;
    let mut points = Vec::with_capacity(bands.len());
    for (band, outcome) in bands.iter().zip(outcomes) {
        let mut record = PointRecord {
            center_sigma0: Some(band.center()),
            half_width_sigma0: Some(half_width),
            ..PointRecord::default()
        };
        prediction_fields(&mut record, &pred, *band)?;
        measurement_fields(&mut record, outcome)?;
        points.push(record);
    }

    let csv = multiband_csv(&points);
    let report = NoiseReport {
        scenario: config.scenario.to_string(),
        provenance: provenance(config),
        n: config.n as u64,
        shot_variance: 1.0,
        points,
        histograms: vec![],
    };
    Ok((report, vec![("multiband.csv".to_string(), csv)]))
}

fn write_outputs(
    out_dir: &Path,
    files: &[(String, String)],
) -> Result<Vec<PathBuf>, ScenarioError> {
    std::fs::create_dir_all(out_dir).map_err(|source| ScenarioError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::with_capacity(files.len());
    for (name, content) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, content).map_err(|source| ScenarioError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

/// Summary of a conditional selection inside a [`TraceAnalysis`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionSummary {
    pub center: f64,
    pub half_width: f64,
    pub accepted: u64,
    pub success_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_linear: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub below_floor: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci95_db_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci95_db_hi: Option<f64>,
    /// Prediction from the trace's own sample covariance matrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_linear: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Everything measurable about one trace without further configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceAnalysis {
    pub n: u64,
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub demod_frequency_hz: f64,
    /// Shot reference the Fano factors are divided by.
    pub shot_variance: f64,
    pub signal_variance: f64,
    pub idler_variance: f64,
    pub covariance: f64,
    pub correlation: f64,
    pub fano_signal: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fano_signal_db: Option<f64>,
    pub fano_idler: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fano_idler_db: Option<f64>,
    pub gemellity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gemellity_db: Option<f64>,
    /// Conditional-variance floor implied by the sample covariance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditional_variance_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionSummary>,
}

impl TraceAnalysis {
    /// Deterministic pretty-printed JSON, newline terminated.
    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("analysis serialisation cannot fail");
        text.push('\n');
        text
    }
}

/// Estimates every first- and second-order statistic of a trace, optionally
/// applying one selection band.
///
/// Predictions inside the selection summary use the *sample* covariance
/// matrix (valid by Cauchy-Schwarz), so an externally recorded trace gets a
/// self-consistent prediction with no model configuration. A band that
/// accepts fewer than two samples is reported in the summary as a note
/// instead of failing the whole analysis.
pub fn analyze_trace(
    trace: &Trace,
    band: Option<SelectionBand>,
    shot_variance: f64,
) -> Result<TraceAnalysis, ScenarioError> {
    let signal_variance = stats::variance(trace.signal())?;
    let idler_variance = stats::variance(trace.idler())?;
    let covariance = stats::covariance(trace.signal(), trace.idler())?;
    let denom = (signal_variance * idler_variance).sqrt();
    let correlation = if denom > 0.0 { covariance / denom } else { 0.0 };
    let fano_signal = stats::fano(trace.signal(), shot_variance)?;
    let fano_idler = stats::fano(trace.idler(), shot_variance)?;
    let gemellity = stats::gemellity(trace.signal(), trace.idler())?;

    let sample_matrix = CovarianceMatrix::new(signal_variance, idler_variance, covariance)?;
    let conditional_variance_floor = oracle::conditional_variance(&sample_matrix).ok();

    let selection = match band {
        None => None,
        Some(band) => {
            let mut summary = SelectionSummary {
                center: band.center(),
                half_width: band.half_width(),
                accepted: 0,
                success_rate: 0.0,
                measured_linear: None,
                measured_db: None,
                below_floor: None,
                ci95_db_lo: None,
                ci95_db_hi: None,
                predicted_linear: None,
                predicted_db: None,
                predicted_rate: None,
                note: None,
            };
            if idler_variance > 0.0 {
                summary.predicted_linear =
                    oracle::predicted_selected_variance(&sample_matrix, band).ok();
                summary.predicted_db = summary.predicted_linear.and_then(|v| to_db(v).ok());
                summary.predicted_rate =
                    oracle::predicted_success_rate(sample_matrix.sigma_idler(), band).ok();
            }
            match select(trace, band) {
                Ok(result) => {
                    summary.accepted = result.accepted() as u64;
                    summary.success_rate = result.success_rate;
                    summary.measured_linear = Some(result.noise.linear());
                    summary.measured_db = result.noise.db();
                    if result.noise.is_below_floor() {
                        summary.below_floor = Some(true);
                    }
                    if let Some((lo, hi)) =
                        variance_ci95_db(result.noise.linear(), result.accepted())
                    {
                        summary.ci95_db_lo = Some(lo);
                        summary.ci95_db_hi = Some(hi);
                    }
                }
                Err(SelectError::InsufficientSelection {
                    accepted,
                    success_rate,
                }) => {
                    summary.accepted = accepted as u64;
                    summary.success_rate = success_rate;
                    summary.note = Some(format!(
                        "insufficient selection: {accepted} sample(s) accepted"
                    ));
                }
                Err(other) => return Err(other.into()),
            }
            Some(summary)
        }
    };

    let meta = trace.meta();
    Ok(TraceAnalysis {
        n: trace.len() as u64,
        seed: meta.seed,
        sample_rate_hz: meta.sample_rate_hz,
        demod_frequency_hz: meta.demod_frequency_hz,
        shot_variance,
        signal_variance,
        idler_variance,
        covariance,
        correlation,
        fano_signal: fano_signal.linear(),
        fano_signal_db: fano_signal.db(),
        fano_idler: fano_idler.linear(),
        fano_idler_db: fano_idler.db(),
        gemellity: gemellity.linear(),
        gemellity_db: gemellity.db(),
        conditional_variance_floor,
        selection,
    })
}
