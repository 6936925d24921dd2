//! Plain-text persistence for traces.
//!
//! The format is a self-describing two-column CSV with a comment header:
//!
//! ```text
//! # sample_rate_hz = 200000
//! # demod_frequency_hz = 3500000
//! # seed = 42
//! # normalization = shot_sigma0=1
//! # length = 200000
//! signal,idler
//! 1.2345678901234567e0,-4.5678901234567890e-1
//! ...
//! ```
//!
//! Samples are written with 17 significant digits (`{:.16e}`), which is
//! enough for every f64 to survive a save/load round trip bit for bit — the
//! analysis of a reloaded trace is exactly the analysis of the original.
//! The `normalization` key records the crate's shot-noise-unit convention;
//! files declaring anything else are rejected instead of being silently
//! misinterpreted. Parse failures name the offending 1-based line.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::trace::{Trace, TraceError, TraceMeta};

const NORMALIZATION: &str = "shot_sigma0=1";
const COLUMN_HEADER: &str = "signal,idler";

#[derive(Debug, Error)]
pub enum TraceFileError {
    #[error("refusing to overwrite existing file {path}; pass the overwrite flag to replace it")]
    AlreadyExists { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: malformed metadata line, expected '# key = value'")]
    MalformedHeader { path: PathBuf, line: usize },
    #[error("{path}:{line}: invalid value {value:?} for metadata key {key}")]
    InvalidMetadata {
        path: PathBuf,
        line: usize,
        key: String,
        value: String,
    },
    #[error(
        "{path}:{line}: unsupported normalization {value:?}; \
         this tool reads traces normalised to {NORMALIZATION:?}"
    )]
    UnsupportedNormalization {
        path: PathBuf,
        line: usize,
        value: String,
    },
    #[error("{path}:{line}: expected column header {COLUMN_HEADER:?}")]
    MissingColumnHeader { path: PathBuf, line: usize },
    #[error("{path}:{line}: expected two comma-separated samples, got {fields} field(s)")]
    BadRecord {
        path: PathBuf,
        line: usize,
        fields: usize,
    },
    #[error("{path}:{line}: cannot parse {value:?} as a number")]
    BadNumber {
        path: PathBuf,
        line: usize,
        value: String,
    },
    #[error("{path}:{line}: non-finite sample {value}")]
    NonFiniteSample {
        path: PathBuf,
        line: usize,
        value: f64,
    },
    #[error("{path}: header declares length {declared} but the file holds {actual} records")]
    LengthMismatch {
        path: PathBuf,
        declared: usize,
        actual: usize,
    },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Writes a trace to `path`. Refuses to replace an existing file unless
/// `overwrite` is set.
pub fn save_trace(trace: &Trace, path: &Path, overwrite: bool) -> Result<(), TraceFileError> {
    if !overwrite && path.exists() {
        return Err(TraceFileError::AlreadyExists {
            path: path.to_path_buf(),
        });
    }
    let io_err = |source| TraceFileError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    let meta = trace.meta();
    (|| -> io::Result<()> {
        writeln!(w, "# sample_rate_hz = {}", meta.sample_rate_hz)?;
        writeln!(w, "# demod_frequency_hz = {}", meta.demod_frequency_hz)?;
        writeln!(w, "# seed = {}", meta.seed)?;
        writeln!(w, "# normalization = {NORMALIZATION}")?;
        writeln!(w, "# length = {}", trace.len())?;
        writeln!(w, "{COLUMN_HEADER}")?;
        for (&s, &i) in trace.signal().iter().zip(trace.idler()) {
            writeln!(w, "{s:.16e},{i:.16e}")?;
        }
        w.flush()
    })()
    .map_err(io_err)
}

/// Reads a trace written by [`save_trace`] (or by anything else following
/// the same format). Metadata keys other than the documented ones are
/// ignored; a missing key falls back to the [`TraceMeta`] default.
pub fn load_trace(path: &Path) -> Result<Trace, TraceFileError> {
    let io_err = |source| TraceFileError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::open(path).map_err(io_err)?;
    let reader = BufReader::new(file);

    let mut meta = TraceMeta::default();
    let mut declared_length: Option<usize> = None;
    let mut saw_column_header = false;
    let mut signal = Vec::new();
    let mut idler = Vec::new();
    let mut line_no = 0usize;

    for line in reader.lines() {
        line_no += 1;
        let line = line.map_err(io_err)?;
        let line = line.trim_end_matches('\r');

        if let Some(rest) = line.strip_prefix('#') {
            if saw_column_header {
                // Comments after the header would hide record-count bugs;
                // the format does not allow them.
                return Err(TraceFileError::BadRecord {
                    path: path.to_path_buf(),
                    line: line_no,
                    fields: 1,
                });
            }
            let (key, value) =
                rest.split_once('=')
                    .ok_or_else(|| TraceFileError::MalformedHeader {
                        path: path.to_path_buf(),
                        line: line_no,
                    })?;
            let key = key.trim();
            let value = value.trim();
            let bad_value = || TraceFileError::InvalidMetadata {
                path: path.to_path_buf(),
                line: line_no,
                key: key.to_string(),
                value: value.to_string(),
            };
            match key {
                "sample_rate_hz" => {
                    meta.sample_rate_hz = value.parse().map_err(|_| bad_value())?;
                }
                "demod_frequency_hz" => {
                    meta.demod_frequency_hz = value.parse().map_err(|_| bad_value())?;
                }
                "seed" => {
                    meta.seed = value.parse().map_err(|_| bad_value())?;
                }
                "normalization" => {
                    if value != NORMALIZATION {
                        return Err(TraceFileError::UnsupportedNormalization {
                            path: path.to_path_buf(),
                            line: line_no,
                            value: value.to_string(),
                        });
                    }
                }
                "length" => {
                    declared_length = Some(value.parse().map_err(|_| bad_value())?);
                }
                // Unknown metadata is tolerated so externally produced
                // files can carry extra annotations.
                _ => {}
            }
            continue;
        }

        if !saw_column_header {
            if line != COLUMN_HEADER {
                return Err(TraceFileError::MissingColumnHeader {
                    path: path.to_path_buf(),
                    line: line_no,
                });
            }
            saw_column_header = true;
            continue;
        }

        let mut fields = line.split(',');
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(TraceFileError::BadRecord {
                    path: path.to_path_buf(),
                    line: line_no,
                    fields: line.split(',').count(),
                });
            }
        };
        let parse = |text: &str| -> Result<f64, TraceFileError> {
            let value: f64 = text.trim().parse().map_err(|_| TraceFileError::BadNumber {
                path: path.to_path_buf(),
                line: line_no,
                value: text.to_string(),
            })?;
            if !value.is_finite() {
                return Err(TraceFileError::NonFiniteSample {
                    path: path.to_path_buf(),
                    line: line_no,
                    value,
                });
            }
            Ok(value)
        };
        signal.push(parse(a)?);
        idler.push(parse(b)?);
    }

    if !saw_column_header {
        return Err(TraceFileError::MissingColumnHeader {
            path: path.to_path_buf(),
            line: line_no + 1,
        });
    }
    if let Some(declared) = declared_length {
        if declared != signal.len() {
            return Err(TraceFileError::LengthMismatch {
                path: path.to_path_buf(),
                declared,
                actual: signal.len(),
            });
        }
    }
    Ok(Trace::new(signal, idler, meta)?)
}
