use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use super::config::RunConfig;
use super::report::{ComparisonReport, ModelOutcome, ReportContext};
use crate::diagnostics::{kfold_cv, morans_i, vif, CvResult, MoranResult, VifEntry};
use crate::error::{Error, Result};
use crate::estimators::{fit_model, select_bandwidth, LogDet, ModelFit, ModelFrame, ModelKind, ModelSpec};
use crate::fusion::{
    aggregate_to_zcta, assemble_frame, crosswalk_assign, radius_sweep, read_crosswalk, read_table,
    threshold_sensitivity, Assembled, CrosswalkRow, GeoLevel, GeoTable, SweepTable, ThresholdCount,
};
use crate::spatial::io::{read_points, read_polygons};
use crate::spatial::{
    build_queen_contiguity, count_within_radius, island_warnings, row_standardize, GeoPoint, KernelSpec,
    WeightMatrix, ZonePolygon,
};
use crate::transforms::zscore;

/// Length of a tract GEOID; block-group ids extend it by one digit.
const TRACT_ID_LEN: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingestion,
    Fusion,
    Weights,
    Fit,
    Diagnostics,
    CrossValidation,
    Sweep,
    Output,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingestion => "ingestion",
            Stage::Fusion => "fusion",
            Stage::Weights => "weights",
            Stage::Fit => "fit",
            Stage::Diagnostics => "diagnostics",
            Stage::CrossValidation => "cross-validation",
            Stage::Sweep => "sweep",
            Stage::Output => "output",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl PipelineError {
    /// 2 for configuration problems, 3 for ingestion/fusion/output, 4 for numerical stages.
    pub fn exit_code(&self) -> i32 {
        if matches!(self.source, Error::Config(_)) {
            return 2;
        }
        match self.stage {
            Stage::Config => 2,
            Stage::Ingestion | Stage::Fusion | Stage::Weights | Stage::Output => 3,
            Stage::Fit | Stage::Diagnostics | Stage::CrossValidation | Stage::Sweep => 4,
        }
    }
}

pub type StageResult<T> = std::result::Result<T, PipelineError>;

trait AtStage<T> {
    fn at(self, stage: Stage) -> StageResult<T>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> StageResult<T> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

/// Insertion-ordered set of warning strings.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Warnings(Vec<String>);

impl Warnings {
    pub fn push(&mut self, w: impl Into<String>) {
        let w = w.into();
        if !self.0.contains(&w) {
            log::warn!("{w}");
            self.0.push(w);
        }
    }

    pub fn extend<I: IntoIterator<Item = String>>(&mut self, ws: I) {
        for w in ws {
            self.push(w);
        }
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }
}

/// Everything up to and including the weights stage.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub assembled: Assembled,
    /// Binary queen contiguity in frame order.
    pub contiguity: WeightMatrix,
    /// The matrix models and diagnostics use (row-standardized unless disabled).
    pub weights: WeightMatrix,
    pub stations: Option<Vec<GeoPoint>>,
    pub warnings: Warnings,
}

impl Prepared {
    pub fn frame(&self) -> &ModelFrame {
        &self.assembled.frame
    }
}

fn load_tables(cfg: &RunConfig) -> Result<Vec<GeoTable>> {
    cfg.inputs
        .tables
        .iter()
        .map(|t| {
            let table = read_table(&cfg.resolve(&t.path), t.level)?;
            match &t.population_column {
                Some(c) => table.with_population_column(c),
                None => Ok(table),
            }
        })
        .collect()
}

pub fn load_crosswalk(cfg: &RunConfig) -> Result<Vec<CrosswalkRow>> {
    let path = cfg
        .inputs
        .crosswalk
        .as_ref()
        .ok_or_else(|| Error::Config("inputs.crosswalk is not set".into()))?;
    let rows = read_crosswalk(&cfg.resolve(path))?;
    if rows.is_empty() {
        return Err(Error::invalid(format!("crosswalk {} has no rows", path.display())));
    }
    Ok(rows)
}

/// Brings a tract or block-group table to the ZCTA level.
fn to_zcta(
    table: &GeoTable,
    assigned: &BTreeMap<String, String>,
    label: &str,
    warnings: &mut Warnings,
) -> Result<(GeoTable, Vec<String>)> {
    let map = match table.level {
        GeoLevel::Zcta => return Ok((table.clone(), Vec::new())),
        GeoLevel::Tract => assigned.clone(),
        GeoLevel::Cbg => {
            let mut map = BTreeMap::new();
            let mut orphans = 0;
            for id in table.rows.keys() {
                match id.get(..TRACT_ID_LEN).and_then(|t| assigned.get(t)) {
                    Some(z) => {
                        map.insert(id.clone(), z.clone());
                    }
                    None => orphans += 1,
                }
            }
            if orphans > 0 {
                warnings.push(format!("{label}: {orphans} block groups belong to no assigned tract"));
            }
            map
        }
    };
    let weights = match table.population() {
        Some(p) => p,
        None => {
            warnings.push(format!("{label}: no population column; units averaged with equal weight"));
            table.rows.keys().map(|k| (k.clone(), 1.0)).collect()
        }
    };
    let agg = aggregate_to_zcta(table, &map, &weights)?;
    warnings.extend(agg.warnings.into_iter().map(|w| format!("{label}: {w}")));
    Ok((agg.table, agg.unmatched_tracts))
}

/// Puts the station counts into the frame at the configured predictor position.
fn add_station_column(cfg: &RunConfig, assembled: &mut Assembled, stations: &[GeoPoint]) -> Result<()> {
    let Some(sc) = &cfg.stations else { return Ok(()) };
    let frame = &assembled.frame;
    let counts = count_within_radius(frame.centroids(), stations, sc.radius)?;
    let raw = DMatrix::from_iterator(counts.len(), 1, counts.iter().map(|&c| c as f64));
    let (z, params) = zscore(&raw, std::slice::from_ref(&sc.column))?;
    let n = frame.n();
    let mut x = DMatrix::zeros(n, cfg.predictors.len());
    let std = &mut assembled.standardization;
    let (mut means, mut sds) = (Vec::new(), Vec::new());
    for (j, name) in cfg.predictors.iter().enumerate() {
        if name == &sc.column {
            x.set_column(j, &z.column(0));
            means.push(params.means[0]);
            sds.push(params.std_devs[0]);
        } else {
            let k = frame.column_index(name).expect("table predictor present in assembled frame");
            x.set_column(j, &frame.x().column(k));
            means.push(std.means[k]);
            sds.push(std.std_devs[k]);
        }
    }
    std.columns = cfg.predictors.clone();
    std.means = means;
    std.std_devs = sds;
    assembled.frame = ModelFrame::new(
        frame.zone_ids().to_vec(),
        frame.y().to_vec(),
        x,
        cfg.predictors.clone(),
        frame.centroids().to_vec(),
    )?;
    Ok(())
}

/// Ingestion, fusion and weights.
pub fn prepare(cfg: &RunConfig) -> StageResult<Prepared> {
    let mut warnings = Warnings::default();
    let tables = load_tables(cfg).at(Stage::Ingestion)?;
    let polygons = read_polygons(&cfg.resolve(&cfg.inputs.polygons), &cfg.inputs.zone_id_property).at(Stage::Ingestion)?;
    let crosswalk = if cfg.needs_crosswalk() { Some(load_crosswalk(cfg).at(Stage::Ingestion)?) } else { None };
    let stations = match &cfg.stations {
        Some(s) => Some(
            read_points(&cfg.resolve(&s.path))
                .at(Stage::Ingestion)?
                .into_iter()
                .map(|p| p.point)
                .collect::<Vec<_>>(),
        ),
        None => None,
    };

    let mut unmatched = BTreeSet::new();
    let zcta_tables = match &crosswalk {
        None => tables,
        Some(rows) => {
            let assignment = crosswalk_assign(rows, cfg.threshold).at(Stage::Fusion)?;
            if !assignment.unmatched.is_empty() {
                warnings.push(format!(
                    "{} tracts have no ZCTA share at or above the {} threshold",
                    assignment.unmatched.len(),
                    cfg.threshold
                ));
            }
            unmatched.extend(assignment.unmatched.iter().cloned());
            let mut out = Vec::with_capacity(tables.len());
            for (table, input) in tables.iter().zip(&cfg.inputs.tables) {
                let label = input.path.display().to_string();
                let (t, missing) = to_zcta(table, &assignment.assigned, &label, &mut warnings).at(Stage::Fusion)?;
                if !missing.is_empty() {
                    warnings.push(format!("{label}: {} assigned tracts are absent from the table", missing.len()));
                }
                unmatched.extend(missing);
                out.push(t);
            }
            out
        }
    };

    let mut assembled = assemble_frame(
        &zcta_tables,
        &cfg.target,
        &cfg.table_predictors(),
        &polygons,
        cfg.boxcox_offset,
    )
    .at(Stage::Fusion)?;
    if let Some(st) = &stations {
        add_station_column(cfg, &mut assembled, st).at(Stage::Fusion)?;
    }
    assembled.report.unmatched_tracts = unmatched.into_iter().collect();
    assembled.report.threshold_used = crosswalk.as_ref().map(|_| cfg.threshold);
    if assembled.report.rows_dropped_missing > 0 {
        warnings.push(format!(
            "{} zones dropped for missing values (listwise deletion)",
            assembled.report.rows_dropped_missing
        ));
    }
    warnings.extend(assembled.warnings.iter().cloned());

    let by_id: BTreeMap<&str, &ZonePolygon> = polygons.iter().map(|p| (p.zone_id.as_str(), p)).collect();
    let ordered: Vec<ZonePolygon> = assembled
        .frame
        .zone_ids()
        .iter()
        .map(|id| (*by_id[id.as_str()]).clone())
        .collect();
    let contiguity = build_queen_contiguity(&ordered).at(Stage::Weights)?;
    assembled.report.island_zones = contiguity.island_ids();
    warnings.extend(island_warnings(&contiguity));
    let weights = if cfg.standardize_weights {
        row_standardize(&contiguity).at(Stage::Weights)?.0
    } else {
        contiguity.clone()
    };
    Ok(Prepared { assembled, contiguity, weights, stations, warnings })
}

/// The four fitted models in report order.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub fits: Vec<(ModelSpec, ModelFit)>,
    pub kernel: KernelSpec,
    /// True when the bandwidth was chosen by AICc rather than given.
    pub bandwidth_selected: bool,
}

pub fn gwr_kernel(cfg: &RunConfig, frame: &ModelFrame) -> Result<(KernelSpec, bool)> {
    match cfg.gwr_kernel() {
        Some(k) => {
            k.validate(frame.n())?;
            Ok((k, false))
        }
        None => Ok((select_bandwidth(frame, cfg.gwr.kernel, cfg.gwr.adaptive)?, true)),
    }
}

pub fn fit_all(cfg: &RunConfig, prep: &Prepared) -> StageResult<Fitted> {
    let frame = prep.frame();
    let (kernel, bandwidth_selected) = gwr_kernel(cfg, frame).at(Stage::Fit)?;
    let logdet = LogDet::new(&prep.weights).at(Stage::Fit)?;
    let specs = [ModelSpec::Ols, ModelSpec::SpatialLag, ModelSpec::SpatialError, ModelSpec::Gwr { kernel }];
    let fits = specs
        .iter()
        .map(|s| Ok((*s, fit_model(frame, &prep.weights, Some(&logdet), s)?)))
        .collect::<Result<Vec<_>>>()
        .at(Stage::Fit)?;
    Ok(Fitted { fits, kernel, bandwidth_selected })
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    /// One per fitted model, same order.
    pub moran: Vec<MoranResult>,
    pub vif: Vec<VifEntry>,
}

/// Residuals tested for autocorrelation: the model residuals, except that the
/// spatial error model is tested on its innovations u − λWu.
fn moran_residuals(fit: &ModelFit, w: &WeightMatrix) -> Result<Vec<f64>> {
    match fit {
        ModelFit::Global(f) if f.model_kind == ModelKind::SpatialError => {
            let lambda = f.rho.map(|r| r.estimate).unwrap_or(0.0);
            let wu = w.lag(&f.residuals)?;
            Ok(f.residuals.iter().zip(wu).map(|(u, l)| u - lambda * l).collect())
        }
        other => Ok(other.residuals().to_vec()),
    }
}

pub fn diagnose(cfg: &RunConfig, prep: &Prepared, fitted: &Fitted) -> StageResult<Diagnostics> {
    let moran = fitted
        .fits
        .iter()
        .map(|(_, fit)| {
            let r = moran_residuals(fit, &prep.weights)?;
            morans_i(&r, &prep.weights, cfg.moran.permutations, cfg.moran_seed())
        })
        .collect::<Result<Vec<_>>>()
        .at(Stage::Diagnostics)?;
    let frame = prep.frame();
    let vif = vif(frame.x(), frame.columns()).at(Stage::Diagnostics)?;
    Ok(Diagnostics { moran, vif })
}

pub fn cross_validate(cfg: &RunConfig, prep: &Prepared, fitted: &Fitted) -> StageResult<Vec<CvResult>> {
    fitted
        .fits
        .iter()
        .map(|(spec, _)| kfold_cv(prep.frame(), &prep.weights, spec, cfg.cv.k, cfg.cv_seed()))
        .collect::<Result<Vec<_>>>()
        .at(Stage::CrossValidation)
}

/// Full pipeline held in memory: fuse → weights → fit → diagnostics → CV → report.
pub fn build_report(cfg: &RunConfig) -> StageResult<(ComparisonReport, Prepared)> {
    cfg.validate().at(Stage::Config)?;
    let prep = prepare(cfg)?;
    let fitted = fit_all(cfg, &prep)?;
    let diagnostics = diagnose(cfg, &prep, &fitted)?;
    let cv = cross_validate(cfg, &prep, &fitted)?;
    let mut warnings = prep.warnings.clone();
    for (spec, fit) in &fitted.fits {
        if let ModelFit::Global(f) = fit {
            if !f.converged {
                warnings.push(format!("{}: optimizer did not converge", spec.label()));
            }
        }
    }
    let outcomes: Vec<ModelOutcome> = fitted
        .fits
        .iter()
        .zip(&diagnostics.moran)
        .zip(&cv)
        .map(|(((spec, fit), moran), cv)| ModelOutcome { spec: *spec, fit, moran, cv })
        .collect();
    let report = ComparisonReport::build(&ReportContext {
        config: cfg,
        prepared: &prep,
        outcomes: &outcomes,
        vif: &diagnostics.vif,
        kernel: fitted.kernel,
        bandwidth_selected: fitted.bandwidth_selected,
        warnings: warnings.as_slice(),
    });
    Ok((report, prep))
}

/// Which report renderings to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    Text,
    Json,
    #[default]
    Both,
}

impl OutputFormat {
    fn text(self) -> bool {
        self != OutputFormat::Json
    }
    fn json(self) -> bool {
        self != OutputFormat::Text
    }
}

pub const STALE_MARKER: &str = "STALE";

pub fn write_file(dir: &Path, name: &str, contents: &[u8]) -> StageResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| PipelineError { stage: Stage::Output, source: Error::io(&path, e) })?;
    Ok(path)
}

pub fn to_json<T: Serialize>(value: &T) -> StageResult<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(value).map_err(|e| PipelineError {
        stage: Stage::Output,
        source: Error::Numerical(format!("serialization failed: {e}")),
    })?;
    s.push(b'\n');
    Ok(s)
}

/// Runs `f` against `dir`, clearing any earlier stale marker first and leaving
/// one behind (naming the failed stage) if `f` fails.
pub fn with_stale_marker<T>(dir: &Path, f: impl FnOnce(&Path) -> StageResult<T>) -> StageResult<T> {
    fs::create_dir_all(dir).map_err(|e| PipelineError { stage: Stage::Output, source: Error::io(dir, e) })?;
    let marker = dir.join(STALE_MARKER);
    let _ = fs::remove_file(&marker);
    let out = f(dir);
    if let Err(e) = &out {
        let _ = fs::write(&marker, format!("stage: {}\nerror: {}\n", e.stage, e.source));
    }
    out
}

/// Writes assembly_report.json.
pub fn write_assembly(dir: &Path, prep: &Prepared) -> StageResult<PathBuf> {
    write_file(dir, "assembly_report.json", &to_json(&prep.assembled.report)?)
}

/// Runs the whole comparison and writes report.json / report.txt and
/// assembly_report.json into the configured output directory.
pub fn run_pipeline(cfg: &RunConfig, format: OutputFormat) -> StageResult<ComparisonReport> {
    cfg.validate().at(Stage::Config)?;
    with_stale_marker(&cfg.output_path(), |dir| {
        let (report, prep) = build_report(cfg)?;
        write_assembly(dir, &prep)?;
        if format.json() {
            write_file(dir, "report.json", &to_json(&report)?)?;
        }
        if format.text() {
            write_file(dir, "report.txt", report.to_text().as_bytes())?;
        }
        Ok(report)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub radii: Vec<f64>,
    pub models: Vec<&'static str>,
    /// model → radius with the lowest AIC (AICc for GWR)
    pub argmin_radius: BTreeMap<&'static str, f64>,
    pub gwr_kernel: Option<KernelSpec>,
    pub warnings: Vec<String>,
}

/// AIC of each sweep model at each station radius; writes sweep_radius.csv and
/// sweep_radius.json.
pub fn run_sweep(cfg: &RunConfig) -> StageResult<(SweepTable, SweepSummary)> {
    cfg.validate().at(Stage::Config)?;
    let sc = cfg
        .stations
        .as_ref()
        .ok_or_else(|| Error::Config("the radius sweep needs a [stations] section".into()))
        .at(Stage::Config)?;
    with_stale_marker(&cfg.output_path(), |dir| {
        let prep = prepare(cfg)?;
        let stations = prep.stations.as_deref().unwrap_or_default();
        let kernel = if cfg.sweep.models.contains(&super::config::ModelName::Gwr) {
            Some(gwr_kernel(cfg, prep.frame()).at(Stage::Sweep)?.0)
        } else {
            None
        };
        let models = cfg.sweep_models(kernel);
        let table = radius_sweep(prep.frame(), &sc.column, stations, &cfg.sweep.radii, &models, &prep.weights)
            .at(Stage::Sweep)?;
        let mut csv = Vec::new();
        table
            .write_csv(&mut csv)
            .map_err(|e| Error::io(dir, e))
            .at(Stage::Output)?;
        write_file(dir, "sweep_radius.csv", &csv)?;
        let summary = SweepSummary {
            radii: cfg.sweep.radii.clone(),
            models: models.iter().map(ModelSpec::name).collect(),
            argmin_radius: table.argmin.clone(),
            gwr_kernel: kernel,
            warnings: table.warnings.clone(),
        };
        write_file(dir, "sweep_radius.json", &to_json(&summary)?)?;
        Ok((table, summary))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdSummary {
    pub curve: Vec<ThresholdCount>,
    pub default_threshold: f64,
    /// Distinct matched ZCTAs at the default threshold.
    pub matched_at_default: usize,
    pub tracts: usize,
}

/// Matched-ZCTA counts across crosswalk thresholds; writes sweep_threshold.csv
/// and sweep_threshold.json.
pub fn run_threshold_sweep(cfg: &RunConfig) -> StageResult<ThresholdSummary> {
    cfg.validate().at(Stage::Config)?;
    if cfg.inputs.crosswalk.is_none() {
        return Err(Error::Config("the threshold sweep needs inputs.crosswalk".into())).at(Stage::Config);
    }
    with_stale_marker(&cfg.output_path(), |dir| {
        let rows = load_crosswalk(cfg).at(Stage::Ingestion)?;
        let curve = threshold_sensitivity(&rows, &cfg.sweep.thresholds).at(Stage::Fusion)?;
        let default = crate::fusion::DEFAULT_THRESHOLD;
        let matched_at_default = threshold_sensitivity(&rows, &[default]).at(Stage::Fusion)?[0].matched_zctas;
        let mut csv = String::from("threshold,matched_zctas\n");
        for c in &curve {
            csv.push_str(&format!("{},{}\n", c.threshold, c.matched_zctas));
        }
        write_file(dir, "sweep_threshold.csv", csv.as_bytes())?;
        let tracts: BTreeSet<&str> = rows.iter().map(|r| r.tract_id.as_str()).collect();
        let summary = ThresholdSummary { curve, default_threshold: default, matched_at_default, tracts: tracts.len() };
        write_file(dir, "sweep_threshold.json", &to_json(&summary)?)?;
        Ok(summary)
    })
}
