//! Integration checks on the config-driven scenario pipeline: the claims a
//! released report makes (matched measured/predicted columns, provenance,
//! physical plausibility of each scenario's output) and the practical
//! runtime envelope for full-size traces.

use std::time::Instant;

use twinsel::config::ScenarioConfig;
use twinsel::noise::to_db;
use twinsel::oracle::narrow_limit_db;
use twinsel::scenario::{analyze_trace, generate_trace, run_scenario};
use twinsel::select::SelectionBand;
use twinsel::tracefile::{load_trace, save_trace};

#[test]
fn histograms_scenario_reproduces_conditioning() {
    let config = ScenarioConfig::from_toml_str(
        r#"
        scenario = "histograms"
        n = 200000

        [model]
        excess_signal = 100.0
        excess_idler = 100.0
        gemellity = 0.178

        [seeds]
        trace = 1
        calibration = 2

        [histograms]
        center = 0.0
        width = 1.0
        "#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_scenario(&config, Some(dir.path())).unwrap();
    let report = outcome.report;

    // The idler carries ~20 dB of excess noise: Fano factor 100 within 5%.
    let idler = &report.histograms[0];
    let idler_fano = idler.std_dev * idler.std_dev;
    assert!(
        (idler_fano - 100.0).abs() < 5.0,
        "idler Fano {idler_fano} outside 100 ± 5%"
    );

    // The conditioned signal is narrower than the shot reference.
    let selected = &report.histograms[1];
    let shot = &report.histograms[2];
    assert_eq!(selected.label, "selected_signal");
    assert!(
        selected.std_dev < shot.std_dev,
        "selected σ {} not below shot σ {}",
        selected.std_dev,
        shot.std_dev
    );
    assert!(selected.std_dev * selected.std_dev < 1.0, "not sub-shot");

    // Every histogram carries its Gaussian fit, normalised like the
    // empirical probabilities.
    for series in &report.histograms {
        let empirical: f64 = series.bins.iter().map(|b| b.probability).sum();
        let fitted: f64 = series.bins.iter().map(|b| b.gaussian_fit).sum();
        assert!((empirical - 1.0).abs() < 1e-9);
        assert!((fitted - 1.0).abs() < 0.05, "fit mass {fitted}");
    }

    // Measured point paired with its prediction, and provenance present.
    let point = &report.points[0];
    assert!(point.measured_db.is_some());
    assert!(point.predicted_db.is_some());
    assert!(point.success_rate.is_some());
    assert_eq!(report.provenance.config_sha256.len(), 64);
    assert_eq!(report.provenance.trace_seed, 1);

    // One report plus three plot tables on disk.
    assert_eq!(outcome.written.len(), 4);
}

#[test]
fn loss_grid_tracks_the_gemellity_law() {
    // Symmetric detection loss from 0 to 80%: conditioned noise must track
    // the narrow-band law (gemellity + 3.01 dB with its G²/V correction)
    // within 0.3 dB wherever at least 500 samples are accepted, and any
    // point with gemellity above 1/2 must stay above shot noise.
    let config = ScenarioConfig::from_toml_str(
        r#"
        scenario = "gemellity_sweep"
        n = 2000000
        width_convention = "full"

        [model]
        excess_signal = 100.0
        excess_idler = 100.0
        gemellity = 0.178

        [seeds]
        trace = 1

        [gemellity_sweep]
        losses = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]
        center = 0.0
        width = 0.3
        "#,
    )
    .unwrap();
    let report = run_scenario(&config, None).unwrap().report;
    assert_eq!(report.points.len(), 9);

    for point in &report.points {
        let loss = point.loss.unwrap();
        let accepted = point.accepted_count.unwrap();
        assert!(accepted >= 500, "loss {loss}: only {accepted} accepted");

        let lossy_variance = (1.0 - loss) * 100.0 + loss;
        let gemellity = (1.0 - loss) * 0.178 + loss;
        let law_db = narrow_limit_db(to_db(gemellity).unwrap(), lossy_variance).unwrap();
        let measured_db = point.measured_db.unwrap();
        assert!(
            (measured_db - law_db).abs() <= 0.3,
            "loss {loss}: measured {measured_db:.3} dB vs law {law_db:.3} dB"
        );
        if gemellity > 0.5 {
            assert!(
                measured_db > 0.0,
                "loss {loss}: gemellity {gemellity:.3} but noise {measured_db:.3} dB"
            );
        }
        // Matched prediction and provenance-backed gemellity columns.
        assert!(point.predicted_db.is_some());
        assert!(point.gemellity_db.is_some());
        assert!(point.measured_gemellity_db.is_some());
        assert!((point.measured_gemellity_db.unwrap() - point.gemellity_db.unwrap()).abs() < 0.1);
    }
}

#[test]
fn plot_tables_pair_measured_with_predicted() {
    let config = ScenarioConfig::from_toml_str(
        r#"
        scenario = "multiband"
        n = 100000

        [model]
        excess_signal = 100.0
        excess_idler = 100.0
        gemellity = 0.178

        [seeds]
        trace = 5

        [multiband]
        centers = [-5.0, 0.0, 5.0]
        width = 1.0
        "#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&config, Some(dir.path())).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("multiband.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "center_sigma0,measured_db,success_rate,predicted_rate"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 4);
        // Every measured column is populated alongside its prediction.
        for field in fields {
            assert!(!field.is_empty());
            field.parse::<f64>().unwrap();
        }
    }
    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(json.contains("\"config_sha256\""));
    assert!(json.ends_with('\n'));
}

#[test]
fn full_size_trace_io_and_analysis_run_quickly() {
    let config = ScenarioConfig::from_toml_str(
        r#"
        scenario = "calibrate"
        n = 200000

        [model]
        excess_signal = 100.0
        excess_idler = 100.0
        gemellity = 0.178

        [seeds]
        trace = 9
        "#,
    )
    .unwrap();
    let trace = generate_trace(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");

    let start = Instant::now();
    save_trace(&trace, &path, false).unwrap();
    let reloaded = load_trace(&path).unwrap();
    let band = SelectionBand::new(0.0, 0.1).unwrap();
    let analysis = analyze_trace(&reloaded, Some(band), 1.0).unwrap();
    let elapsed = start.elapsed();

    assert_eq!(reloaded.len(), 200_000);
    assert!(analysis.selection.unwrap().accepted > 100);
    // Desk-scale budget: a full acquisition round-trips and analyzes in
    // seconds, with a wide margin against CI jitter.
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
}
