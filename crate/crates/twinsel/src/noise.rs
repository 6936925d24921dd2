//! Shot-noise-referenced noise levels and decibel conversion.
//!
//! All variances in this crate are expressed relative to the shot-noise
//! variance of a coherent beam of the same mean power, so a linear noise
//! level of `1.0` *is* the standard quantum limit and `0.5` sits 3 dB below
//! it. A level of exactly zero (a constant trace, e.g. a heavily quantised
//! narrow selection that collapsed onto a single code) has no finite decibel
//! value; [`NoiseLevel::db`] reports that case as `None` rather than `-inf`
//! so that serialised reports stay total.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NoiseError {
    #[error("noise level must be finite, got {0}")]
    NonFinite(f64),
    #[error("noise level must be non-negative, got {0}")]
    Negative(f64),
    #[error("decibel conversion needs a strictly positive level, got {0}")]
    NonPositive(f64),
}

/// Converts a linear variance ratio to decibels relative to shot noise.
///
/// Negative results mean "below the standard quantum limit". Zero and
/// negative ratios are rejected: zero has no finite decibel representation
/// (see [`NoiseLevel::db`] for the total variant) and negative variance
/// ratios cannot arise from real data.
pub fn to_db(linear: f64) -> Result<f64, NoiseError> {
    if !linear.is_finite() {
        return Err(NoiseError::NonFinite(linear));
    }
    if linear <= 0.0 {
        return Err(NoiseError::NonPositive(linear));
    }
    Ok(10.0 * linear.log10())
}

/// Converts decibels relative to shot noise back to a linear variance ratio.
///
/// Total for all finite inputs; the result is always strictly positive.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// A variance expressed in shot-noise units.
///
/// Wraps a validated non-negative, finite linear ratio so downstream code
/// can convert to decibels without re-checking. `1.0` is shot noise; values
/// below `1.0` are sub-Poissonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseLevel {
    linear: f64,
}

impl NoiseLevel {
    /// Shot noise itself: a linear ratio of exactly 1 (0 dB).
    pub const SHOT: NoiseLevel = NoiseLevel { linear: 1.0 };

    /// Wraps a linear variance ratio, rejecting negative or non-finite input.
    pub fn from_linear(linear: f64) -> Result<Self, NoiseError> {
        if !linear.is_finite() {
            return Err(NoiseError::NonFinite(linear));
        }
        if linear < 0.0 {
            return Err(NoiseError::Negative(linear));
        }
        Ok(NoiseLevel { linear })
    }

    /// Builds a level from decibels relative to shot noise.
    pub fn from_db(db: f64) -> Result<Self, NoiseError> {
        if !db.is_finite() {
            return Err(NoiseError::NonFinite(db));
        }
        Ok(NoiseLevel {
            linear: from_db(db),
        })
    }

    /// The linear variance ratio (shot noise = 1).
    pub fn linear(self) -> f64 {
        self.linear
    }

    /// Decibels relative to shot noise, or `None` for an exactly-zero level.
    ///
    /// `None` is the distinguished "below measurement floor" marker: it only
    /// occurs for degenerate data (every selected sample identical), never
    /// for ordinary quiet beams, which keep a finite negative value.
    pub fn db(self) -> Option<f64> {
        if self.linear == 0.0 {
            None
        } else {
            Some(10.0 * self.linear.log10())
        }
    }

    /// True when the level is exactly zero and [`NoiseLevel::db`] is `None`.
    pub fn is_below_floor(self) -> bool {
        self.linear == 0.0
    }
}
