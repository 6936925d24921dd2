//! Estimators for photocurrent fluctuation traces.
//!
//! Everything here is a plain function over sample slices: single-pass
//! Welford accumulation for variance and covariance (numerically stable, no
//! intermediate vectors), Fano factors referenced to a shot-noise variance,
//! the twin-beam gemellity, and sparse histograms for distribution plots.
//!
//! Sample variances use the unbiased `n - 1` divisor throughout, so a
//! two-point slice `[-1, 1]` has variance exactly `2.0`.

use thiserror::Error;

use crate::noise::{NoiseError, NoiseLevel};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("signal and idler lengths differ: {signal} vs {idler}")]
    LengthMismatch { signal: usize, idler: usize },
    #[error("shot variance must be positive and finite, got {0}")]
    InvalidShotVariance(f64),
    #[error("bin width must be positive and finite, got {0}")]
    InvalidBinWidth(f64),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Single-pass mean/variance accumulator (Welford's algorithm).
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Welford::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Running mean; `None` before the first sample.
    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then_some(self.mean)
    }

    /// Unbiased sample variance; `None` with fewer than two samples.
    pub fn sample_variance(&self) -> Option<f64> {
        (self.count > 1).then(|| self.m2 / (self.count - 1) as f64)
    }
}

/// Single-pass covariance accumulator for paired samples.
#[derive(Debug, Clone, Copy, Default)]
pub struct BiWelford {
    count: u64,
    mean_x: f64,
    mean_y: f64,
    comoment: f64,
}

impl BiWelford {
    pub fn new() -> Self {
        BiWelford::default()
    }

    pub fn push(&mut self, x: f64, y: f64) {
        self.count += 1;
        let dx = x - self.mean_x;
        self.mean_x += dx / self.count as f64;
        self.mean_y += (y - self.mean_y) / self.count as f64;
        // dx uses the old x-mean, the y term the updated y-mean; this is the
        // standard stable update whose expectation is the co-moment.
        self.comoment += dx * (y - self.mean_y);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Unbiased sample covariance; `None` with fewer than two pairs.
    pub fn sample_covariance(&self) -> Option<f64> {
        (self.count > 1).then(|| self.comoment / (self.count - 1) as f64)
    }
}

/// Arithmetic mean. Errors on an empty slice.
pub fn mean(samples: &[f64]) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::InsufficientData { needed: 1, got: 0 });
    }
    let mut acc = Welford::new();
    for &x in samples {
        acc.push(x);
    }
    Ok(acc.mean().expect("non-empty"))
}

/// Unbiased sample variance (`n - 1` divisor). Needs at least two samples.
pub fn variance(samples: &[f64]) -> Result<f64, StatsError> {
    let mut acc = Welford::new();
    for &x in samples {
        acc.push(x);
    }
    acc.sample_variance().ok_or(StatsError::InsufficientData {
        needed: 2,
        got: samples.len(),
    })
}

/// Unbiased sample covariance of paired slices of equal length ≥ 2.
pub fn covariance(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch {
            signal: xs.len(),
            idler: ys.len(),
        });
    }
    let mut acc = BiWelford::new();
    for (&x, &y) in xs.iter().zip(ys) {
        acc.push(x, y);
    }
    acc.sample_covariance().ok_or(StatsError::InsufficientData {
        needed: 2,
        got: xs.len(),
    })
}

/// Fano factor: sample variance divided by the shot-noise variance.
///
/// With the crate's `sigma_0 = 1` normalisation the shot variance is `1.0`
/// and the Fano factor coincides with the variance itself; passing a
/// measured calibration variance instead re-references the result to that
/// calibration.
pub fn fano(samples: &[f64], shot_variance: f64) -> Result<NoiseLevel, StatsError> {
    if !shot_variance.is_finite() || shot_variance <= 0.0 {
        return Err(StatsError::InvalidShotVariance(shot_variance));
    }
    let var = variance(samples)?;
    Ok(NoiseLevel::from_linear(var / shot_variance)?)
}

/// Gemellity: the twin-beam intensity-difference noise in shot units.
///
/// Defined as `Var(signal - idler) / 2`; the divisor 2 is the shot-noise
/// variance of the *difference* of two independent shot-limited beams of
/// unit variance each, so gemellity = 1 means the pair is only classically
/// correlated and gemellity < 0.5 certifies nonclassical twin beams.
///
/// Symmetric in its arguments bit-for-bit: negating every difference leaves
/// the Welford second moment unchanged.
pub fn gemellity(signal: &[f64], idler: &[f64]) -> Result<NoiseLevel, StatsError> {
    if signal.len() != idler.len() {
        return Err(StatsError::LengthMismatch {
            signal: signal.len(),
            idler: idler.len(),
        });
    }
    let mut acc = Welford::new();
    for (&s, &i) in signal.iter().zip(idler) {
        acc.push(s - i);
    }
    let var = acc.sample_variance().ok_or(StatsError::InsufficientData {
        needed: 2,
        got: signal.len(),
    })?;
    Ok(NoiseLevel::from_linear(var / 2.0)?)
}

/// One occupied histogram bin: the bin centre and the fraction of samples
/// that fell into it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub center: f64,
    pub probability: f64,
}

/// Sparse histogram over a grid of bins of width `bin_width` centred on
/// integer multiples of the width (so `0.0` is always a bin centre).
///
/// Only occupied bins are returned, sorted by centre; probabilities are
/// `count / n` and sum to 1 up to rounding. Needs at least one sample.
pub fn histogram(samples: &[f64], bin_width: f64) -> Result<Vec<HistogramBin>, StatsError> {
    if !bin_width.is_finite() || bin_width <= 0.0 {
        return Err(StatsError::InvalidBinWidth(bin_width));
    }
    if samples.is_empty() {
        return Err(StatsError::InsufficientData { needed: 1, got: 0 });
    }
    let mut counts: std::collections::BTreeMap<i64, u64> = std::collections::BTreeMap::new();
    for &x in samples {
        // `as` saturates, so absurd ratios still land in a finite bin
        // instead of invoking undefined behaviour.
        let idx = (x / bin_width).round() as i64;
        *counts.entry(idx).or_insert(0) += 1;
    }
    let n = samples.len() as f64;
    Ok(counts
        .into_iter()
        .map(|(idx, count)| HistogramBin {
            center: idx as f64 * bin_width,
            probability: count as f64 / n,
        })
        .collect())
}
