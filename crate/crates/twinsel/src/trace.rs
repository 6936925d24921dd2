//! The [`Trace`] container: simultaneously recorded signal and idler samples.
//!
//! A trace stores mean-subtracted photocurrent fluctuations in shot-noise
//! units (`sigma_0 = 1`), one signal/idler pair per demodulated acquisition
//! point. Pairing is positional: `signal[k]` and `idler[k]` were recorded at
//! the same instant, which is what makes conditional selection on the idler
//! meaningful.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TraceError {
    #[error("signal and idler lengths differ: {signal} vs {idler}")]
    LengthMismatch { signal: usize, idler: usize },
    #[error("non-finite {channel} sample at index {index}")]
    NonFinite { channel: &'static str, index: usize },
}

/// Acquisition metadata carried alongside the samples.
///
/// The rates describe how the trace was (or would have been) recorded; they
/// do not enter any statistics in this crate, but they are persisted with
/// the data so saved traces remain self-describing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceMeta {
    /// Digitiser sampling rate in Hz.
    pub sample_rate_hz: f64,
    /// Demodulation (noise analysis) frequency in Hz.
    pub demod_frequency_hz: f64,
    /// Seed the trace was generated from (0 for external data).
    pub seed: u64,
}

impl Default for TraceMeta {
    /// 200 kHz sampling of fluctuations demodulated at 3.5 MHz — the
    /// acquisition settings the default source model is calibrated to.
    fn default() -> Self {
        TraceMeta {
            sample_rate_hz: 200_000.0,
            demod_frequency_hz: 3_500_000.0,
            seed: 0,
        }
    }
}

/// A pair of equal-length, finite sample vectors plus acquisition metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    signal: Vec<f64>,
    idler: Vec<f64>,
    meta: TraceMeta,
}

impl Trace {
    /// Builds a trace, validating that the channels have equal length and
    /// every sample is finite. Those two invariants let every downstream
    /// estimator skip per-sample checks.
    pub fn new(signal: Vec<f64>, idler: Vec<f64>, meta: TraceMeta) -> Result<Self, TraceError> {
        if signal.len() != idler.len() {
            return Err(TraceError::LengthMismatch {
                signal: signal.len(),
                idler: idler.len(),
            });
        }
        for (index, &x) in signal.iter().enumerate() {
            if !x.is_finite() {
                return Err(TraceError::NonFinite {
                    channel: "signal",
                    index,
                });
            }
        }
        for (index, &x) in idler.iter().enumerate() {
            if !x.is_finite() {
                return Err(TraceError::NonFinite {
                    channel: "idler",
                    index,
                });
            }
        }
        Ok(Trace {
            signal,
            idler,
            meta,
        })
    }

    /// Number of sample pairs.
    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    pub fn idler(&self) -> &[f64] {
        &self.idler
    }

    pub fn meta(&self) -> TraceMeta {
        self.meta
    }

    /// Consumes the trace, returning `(signal, idler, meta)`.
    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>, TraceMeta) {
        (self.signal, self.idler, self.meta)
    }
}
