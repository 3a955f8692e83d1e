use std::fs;
use std::path::{Path, PathBuf};

use spatreg::pipeline::{
    run_pipeline, run_sweep, run_threshold_sweep, stars, OutputFormat, RunConfig, Stage, STALE_MARKER,
};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/zones50");

/// Copies the fixture into a scratch directory, applying `edit` to run.toml.
fn scratch(edit: impl FnOnce(String) -> String) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(FIXTURE).unwrap() {
        let p = entry.unwrap().path();
        fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
    }
    let cfg = dir.path().join("run.toml");
    let text = fs::read_to_string(&cfg).unwrap();
    fs::write(&cfg, edit(text)).unwrap();
    (dir, cfg)
}

fn load(path: &Path) -> RunConfig {
    RunConfig::load(path).unwrap()
}

#[test]
fn fixture_report_is_complete_and_consistent() {
    let (dir, cfg_path) = scratch(|t| t);
    let cfg = load(&cfg_path);
    let report = run_pipeline(&cfg, OutputFormat::Both).unwrap();
    let out = dir.path().join("output");
    for f in ["report.json", "report.txt", "assembly_report.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    assert!(!out.join(STALE_MARKER).exists());

    let names: Vec<_> = report.models.iter().map(|m| m.name).collect();
    assert_eq!(names, ["ols", "spatial_lag", "spatial_error", "gwr"]);
    assert_eq!(report.models[3].aic_label, "AICc");
    for k in 0..4 {
        assert!(report.aic[k].is_some() && report.adjusted_r2[k].is_some() && report.log_likelihood[k].is_some());
        assert!(report.morans_i[k].statistic.is_some());
        assert!(report.mae[k].test_mae.is_some());
    }
    let terms: Vec<_> = report.coefficients.iter().map(|r| r.term.as_str()).collect();
    assert_eq!(terms, ["intercept", "median_income", "stations", "rho", "lambda"]);
    let rho = &report.coefficients[3].cells;
    assert!(rho[1].is_some() && rho[0].is_none() && rho[2].is_none() && rho[3].is_none());

    // the lag model absorbs most of the residual autocorrelation
    let z = |k: usize| report.morans_i[k].z_score.unwrap().abs();
    assert!(z(0) > z(1), "OLS |z| {} vs SLM |z| {}", z(0), z(1));

    // stars agree with the p-values they decorate
    for row in &report.coefficients {
        for cell in row.cells.iter().flatten() {
            assert_eq!(cell.stars, cell.p_value.map(stars).unwrap_or(""));
        }
    }
    for m in &report.morans_i {
        assert_eq!(m.stars, stars(m.p_value.unwrap()));
    }
    let text = fs::read_to_string(out.join("report.txt")).unwrap();
    for m in &report.morans_i {
        let s = format!("{:.4}{}", m.statistic.unwrap(), m.stars);
        assert!(text.contains(&s), "{s} not in text report");
    }

    // warnings: each once, in both renderings
    let json: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    let warnings = json["metadata"]["warnings"].as_array().unwrap();
    assert!(!warnings.is_empty());
    for w in warnings {
        let w = w.as_str().unwrap();
        assert_eq!(warnings.iter().filter(|v| v.as_str() == Some(w)).count(), 1);
        assert_eq!(text.matches(w).count(), 1, "`{w}` in text");
    }

    let meta = &report.metadata;
    assert_eq!(meta.n, 50);
    assert_eq!(meta.config_sha256.len(), 64);
    assert_eq!(meta.defaults.threshold, 0.2);
    assert_eq!(meta.defaults.cv_k, 5);
    assert_eq!(meta.defaults.radii, [5.0, 10.0, 25.0, 50.0, 75.0, 100.0]);
    assert_eq!(meta.crosswalk_threshold, Some(0.2));
    assert_eq!((meta.randomness.cv_seed, meta.randomness.moran_seed), (7, 11));
    assert_eq!(meta.assembly.rows_dropped_missing, 1);
    assert_eq!(meta.assembly.unmatched_tracts.len(), 4);
    assert_eq!(report.vif.len(), 2);
}

#[test]
fn missing_input_is_a_config_error_naming_the_path() {
    let (dir, cfg_path) = scratch(|t| t.replace("stations.csv", "nowhere.csv"));
    let err = run_pipeline(&load(&cfg_path), OutputFormat::Json).unwrap_err();
    assert_eq!(err.stage, Stage::Config);
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("nowhere.csv"), "{err}");
    assert!(!dir.path().join("output").exists());

    let e = RunConfig::from_toml("target = 1", Path::new(".")).unwrap_err();
    assert!(matches!(e, spatreg::Error::Config(_)));
    let (_d, p) = scratch(|t| t.replace("seed = 7", "seed = 7\nfolds = 3"));
    assert!(RunConfig::load(&p).is_err());
}

#[test]
fn bad_data_leaves_a_stale_marker() {
    let (dir, cfg_path) = scratch(|t| t);
    fs::write(dir.path().join("ev.csv"), "zcta,ev_per_1000,median_income\n12000,abc,1\n").unwrap();
    let err = run_pipeline(&load(&cfg_path), OutputFormat::Both).unwrap_err();
    assert_eq!(err.stage, Stage::Ingestion);
    assert_eq!(err.exit_code(), 3);
    let marker = fs::read_to_string(dir.path().join("output").join(STALE_MARKER)).unwrap();
    assert!(marker.contains("ingestion"));
    assert!(!dir.path().join("output/report.json").exists());
}

#[test]
fn empty_crosswalk_is_rejected() {
    let (dir, cfg_path) = scratch(|t| t);
    fs::write(dir.path().join("crosswalk.csv"), "tract_id,zcta_id,population_share\n").unwrap();
    let err = run_pipeline(&load(&cfg_path), OutputFormat::Json).unwrap_err();
    assert!(err.to_string().contains("crosswalk"), "{err}");
    assert_ne!(err.exit_code(), 0);
    assert!(run_threshold_sweep(&load(&cfg_path)).is_err());
}

#[test]
fn threshold_sweep_curve() {
    let (dir, cfg_path) = scratch(|t| t);
    let s = run_threshold_sweep(&load(&cfg_path)).unwrap();
    assert_eq!(s.curve.len(), 11);
    assert!(s.curve.windows(2).all(|w| w[1].matched_zctas <= w[0].matched_zctas));
    assert_eq!(s.curve[0].matched_zctas, 50);
    assert_eq!(s.default_threshold, 0.2);
    let csv = fs::read_to_string(dir.path().join("output/sweep_threshold.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("threshold,matched_zctas"));
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn single_radius_sweep() {
    let (dir, cfg_path) = scratch(|t| {
        t.replace("radii = [5.0, 10.0, 25.0, 50.0, 75.0, 100.0]", "radii = [25.0]")
            .replace(r#"models = ["ols", "spatial_lag", "spatial_error", "gwr"]"#, r#"models = ["ols", "spatial_lag"]"#)
    });
    let (table, summary) = run_sweep(&load(&cfg_path)).unwrap();
    assert_eq!(table.cells.len(), 2);
    assert_eq!(summary.argmin_radius["ols"], 25.0);
    let csv = fs::read_to_string(dir.path().join("output/sweep_radius.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
