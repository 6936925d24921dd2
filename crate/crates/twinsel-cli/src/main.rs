//! Command-line front end for the twin-beam conditional-preparation toolkit.
//!
//! Subcommands:
//!
//! * `simulate`  — draw a photocurrent trace from a configured model and
//!   save it as a plain-text trace file.
//! * `select`    — apply one idler selection band to a trace file and report
//!   the conditioned signal noise.
//! * `sweep`     — run the scenario a config describes (bandwidth sweep,
//!   gemellity sweep, multiband, histograms) and write `report.json` plus
//!   plot-ready CSV tables.
//! * `calibrate` — record a shot-noise reference and report its variance.
//! * `analyze`   — full statistical report on an existing trace file,
//!   optionally with a selection band.
//!
//! Exit status: 0 on success, 1 on any runtime failure (with a diagnostic on
//! stderr), 2 on usage errors.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use twinsel::config::{ScenarioConfig, ScenarioKind, WidthConvention};
use twinsel::scenario::{analyze_trace, generate_trace, run_scenario};
use twinsel::select::{select, SelectionBand};
use twinsel::tracefile::{load_trace, save_trace};

#[derive(Parser)]
#[command(
    name = "twinsel",
    version,
    about = "Conditional preparation of sub-Poissonian light from simulated twin-beam photocurrents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a trace from the configured model and save it to a file.
    Simulate {
        /// Scenario config (TOML); only model, n, seeds and quantizer are used.
        #[arg(long)]
        config: PathBuf,
        /// Where to write the trace file.
        #[arg(long)]
        out: PathBuf,
        /// Override the trace seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overwrite the output file if it already exists.
        #[arg(long)]
        force: bool,
    },
    /// Apply one idler selection band to a trace file.
    Select {
        /// Trace file to read.
        #[arg(long)]
        trace: PathBuf,
        /// Band center, in shot-noise units.
        #[arg(long)]
        center: f64,
        /// Band width, in shot-noise units (interpreted per --width-convention).
        #[arg(long)]
        width: f64,
        /// Whether --width is the half-width or the full width of the band.
        #[arg(long, value_enum, default_value_t = WidthArg::Half)]
        width_convention: WidthArg,
        /// Shot-noise variance reference for the Fano factor.
        #[arg(long, default_value_t = 1.0)]
        shot_variance: f64,
        /// Output format on stdout.
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run the scenario described by a config and write its report files.
    Sweep {
        /// Scenario config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Directory for report.json and the scenario's CSV tables.
        #[arg(long)]
        out_dir: PathBuf,
        /// Override the trace seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Record and report a shot-noise calibration reference.
    Calibrate {
        /// Scenario config (TOML); only n and seeds are used.
        #[arg(long)]
        config: PathBuf,
        /// Optional directory for report.json (report prints to stdout too).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override the calibration seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Report every measurable statistic of a trace file.
    Analyze {
        /// Trace file to read.
        #[arg(long)]
        trace: PathBuf,
        /// Optional band center for a selection summary.
        #[arg(long, requires = "width")]
        center: Option<f64>,
        /// Optional band width (requires --center).
        #[arg(long, requires = "center")]
        width: Option<f64>,
        /// Whether --width is the half-width or the full width of the band.
        #[arg(long, value_enum, default_value_t = WidthArg::Half)]
        width_convention: WidthArg,
        /// Shot-noise variance reference for the Fano factors.
        #[arg(long, default_value_t = 1.0)]
        shot_variance: f64,
        /// Output format on stdout.
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

/// Clap-friendly mirror of [`WidthConvention`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WidthArg {
    Half,
    Full,
}

impl From<WidthArg> for WidthConvention {
    fn from(value: WidthArg) -> Self {
        match value {
            WidthArg::Half => WidthConvention::Half,
            WidthArg::Full => WidthConvention::Full,
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate {
            config,
            out,
            seed,
            force,
        } => simulate(&config, &out, seed, force),
        Command::Select {
            trace,
            center,
            width,
            width_convention,
            shot_variance,
            format,
        } => run_select(
            &trace,
            center,
            width,
            width_convention.into(),
            shot_variance,
            format,
        ),
        Command::Sweep {
            config,
            out_dir,
            seed,
        } => sweep(&config, &out_dir, seed),
        Command::Calibrate {
            config,
            out_dir,
            seed,
        } => calibrate(&config, out_dir.as_deref(), seed),
        Command::Analyze {
            trace,
            center,
            width,
            width_convention,
            shot_variance,
            format,
        } => analyze(
            &trace,
            center,
            width,
            width_convention.into(),
            shot_variance,
            format,
        ),
    }
}

fn load_config(path: &std::path::Path) -> Result<ScenarioConfig> {
    ScenarioConfig::from_path(path)
        .with_context(|| format!("cannot load config {}", path.display()))
}

fn simulate(
    config: &std::path::Path,
    out: &std::path::Path,
    seed: Option<u64>,
    force: bool,
) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg.seeds.trace = seed;
    }
    let trace = generate_trace(&cfg).context("trace generation failed")?;
    save_trace(&trace, out, force)
        .with_context(|| format!("cannot save trace to {}", out.display()))?;
    eprintln!(
        "wrote {} samples (seed {}) to {}",
        trace.len(),
        cfg.seeds.trace,
        out.display()
    );
    Ok(())
}

fn run_select(
    trace_path: &std::path::Path,
    center: f64,
    width: f64,
    convention: WidthConvention,
    shot_variance: f64,
    format: Format,
) -> Result<()> {
    let trace = load_trace(trace_path)
        .with_context(|| format!("cannot load trace {}", trace_path.display()))?;
    let band = SelectionBand::new(center, convention.half_width(width))?;
    // Fail loudly on an unusable selection before producing any report.
    select(&trace, band).context("selection failed")?;
    let analysis = analyze_trace(&trace, Some(band), shot_variance)?;
    let summary = analysis
        .selection
        .as_ref()
        .expect("selection summary present when a band is given");
    match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(summary)?;
            text.push('\n');
            print!("{text}");
        }
        Format::Csv => {
            println!("center_sigma0,half_width_sigma0,accepted_count,success_rate,measured_db,predicted_db");
            println!(
                "{},{},{},{},{},{}",
                summary.center,
                summary.half_width,
                summary.accepted,
                summary.success_rate,
                summary.measured_db.map_or(String::new(), |v| v.to_string()),
                summary
                    .predicted_db
                    .map_or(String::new(), |v| v.to_string()),
            );
        }
    }
    Ok(())
}

fn sweep(config: &std::path::Path, out_dir: &std::path::Path, seed: Option<u64>) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg.seeds.trace = seed;
    }
    let outcome = run_scenario(&cfg, Some(out_dir)).context("scenario run failed")?;
    for path in &outcome.written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn calibrate(
    config: &std::path::Path,
    out_dir: Option<&std::path::Path>,
    seed: Option<u64>,
) -> Result<()> {
    let mut cfg = load_config(config)?;
    cfg.scenario = ScenarioKind::Calibrate;
    if let Some(seed) = seed {
        cfg.seeds.calibration = seed;
    }
    let outcome = run_scenario(&cfg, out_dir).context("calibration failed")?;
    print!("{}", outcome.report.to_json());
    for path in &outcome.written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn analyze(
    trace_path: &std::path::Path,
    center: Option<f64>,
    width: Option<f64>,
    convention: WidthConvention,
    shot_variance: f64,
    format: Format,
) -> Result<()> {
    let trace = load_trace(trace_path)
        .with_context(|| format!("cannot load trace {}", trace_path.display()))?;
    let band = match (center, width) {
        (Some(c), Some(w)) => Some(SelectionBand::new(c, convention.half_width(w))?),
        _ => None,
    };
    let analysis = analyze_trace(&trace, band, shot_variance)?;
    match format {
        Format::Json => print!("{}", analysis.to_json()),
        Format::Csv => print!("{}", analysis_csv(&analysis)?),
    }
    Ok(())
}

/// Flattens an analysis into `key,value` rows (selection fields prefixed).
fn analysis_csv(analysis: &twinsel::scenario::TraceAnalysis) -> Result<String> {
    let tree = serde_json::to_value(analysis)?;
    let mut out = String::from("key,value\n");
    flatten_json("", &tree, &mut out);
    Ok(out)
}

fn flatten_json(prefix: &str, value: &serde_json::Value, out: &mut String) {
    match value {
        serde_json::Value::Object(map) => {
            for (key, child) in map {
                let path = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                flatten_json(&path, child, out);
            }
        }
        other => {
            out.push_str(prefix);
            out.push(',');
            match other {
                serde_json::Value::String(s) => out.push_str(s),
                rest => out.push_str(&rest.to_string()),
            }
            out.push('\n');
        }
    }
}
