use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::ModelSpec;
use crate::fusion::{GeoLevel, DEFAULT_RADII, DEFAULT_THRESHOLD};
use crate::spatial::{KernelKind, KernelSpec};

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_offset() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_output() -> PathBuf {
    PathBuf::from("output")
}
fn default_id_property() -> String {
    "zcta".into()
}
fn default_station_column() -> String {
    "stations".into()
}
fn default_radius() -> f64 {
    10.0
}
fn default_radii() -> Vec<f64> {
    DEFAULT_RADII.to_vec()
}
fn default_thresholds() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}
fn default_models() -> Vec<ModelName> {
    vec![ModelName::Ols, ModelName::SpatialLag, ModelName::SpatialError, ModelName::Gwr]
}
fn default_kernel() -> KernelKind {
    KernelKind::Bisquare
}
fn default_k() -> usize {
    5
}
fn default_permutations() -> usize {
    999
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableInput {
    pub path: PathBuf,
    pub level: GeoLevel,
    #[serde(default)]
    pub population_column: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub tables: Vec<TableInput>,
    pub polygons: PathBuf,
    /// GeoJSON feature property holding the zone id.
    #[serde(default = "default_id_property")]
    pub zone_id_property: String,
    #[serde(default)]
    pub crosswalk: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationConfig {
    pub path: PathBuf,
    /// Predictor name the counts are stored under.
    #[serde(default = "default_station_column")]
    pub column: String,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Ols,
    SpatialLag,
    SpatialError,
    Gwr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelName>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { radii: default_radii(), thresholds: default_thresholds(), models: default_models() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GwrConfig {
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    #[serde(default = "default_true")]
    pub adaptive: bool,
    /// Selected by AICc when absent.
    #[serde(default)]
    pub bandwidth: Option<f64>,
}

impl Default for GwrConfig {
    fn default() -> Self {
        Self { kernel: default_kernel(), adaptive: true, bandwidth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { k: default_k(), seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoranConfig {
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for MoranConfig {
    fn default() -> Self {
        Self { permutations: default_permutations(), seed: None }
    }
}

/// Run configuration, read from TOML. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub target: String,
    pub predictors: Vec<String>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_offset")]
    pub boxcox_offset: f64,
    #[serde(default = "default_true")]
    pub standardize_weights: bool,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 lets rayon decide.
    #[serde(default)]
    pub threads: usize,
    pub inputs: Inputs,
    #[serde(default)]
    pub stations: Option<StationConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub gwr: GwrConfig,
    #[serde(default)]
    pub cv: CvConfig,
    #[serde(default)]
    pub moran: MoranConfig,
    #[serde(skip)]
    base_dir: PathBuf,
    #[serde(skip)]
    hash: String,
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.hash = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    /// SHA-256 of the config text.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// Replaces every seed with `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        self.cv.seed = Some(seed);
        self.moran.seed = Some(seed);
    }

    pub fn cv_seed(&self) -> u64 {
        self.cv.seed.unwrap_or(0)
    }

    pub fn moran_seed(&self) -> u64 {
        self.moran.seed.unwrap_or(0)
    }

    /// Predictors read from the input tables, i.e. all but the station column.
    pub fn table_predictors(&self) -> Vec<String> {
        let station = self.stations.as_ref().map(|s| s.column.as_str());
        self.predictors.iter().filter(|p| Some(p.as_str()) != station).cloned().collect()
    }

    pub fn needs_crosswalk(&self) -> bool {
        self.inputs.tables.iter().any(|t| t.level != GeoLevel::Zcta)
    }

    /// Fixed GWR kernel from the config, if a bandwidth is given.
    pub fn gwr_kernel(&self) -> Option<KernelSpec> {
        self.gwr.bandwidth.map(|h| KernelSpec { kind: self.gwr.kernel, bandwidth: h, adaptive: self.gwr.adaptive })
    }

    /// Model specs for the sweep, with GWR using `kernel`.
    pub fn sweep_models(&self, kernel: Option<KernelSpec>) -> Vec<ModelSpec> {
        self.sweep
            .models
            .iter()
            .filter_map(|m| match m {
                ModelName::Ols => Some(ModelSpec::Ols),
                ModelName::SpatialLag => Some(ModelSpec::SpatialLag),
                ModelName::SpatialError => Some(ModelSpec::SpatialError),
                ModelName::Gwr => kernel.map(|kernel| ModelSpec::Gwr { kernel }),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.target.is_empty() {
            return fail("target is empty".into());
        }
        if self.predictors.is_empty() {
            return fail("predictors list is empty".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &self.predictors {
            if p == &self.target {
                return fail(format!("`{p}` is both target and predictor"));
            }
            if !seen.insert(p) {
                return fail(format!("predictor `{p}` listed twice"));
            }
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return fail(format!("threshold must lie in [0, 1], got {}", self.threshold));
        }
        if !(self.boxcox_offset >= 0.0 && self.boxcox_offset.is_finite()) {
            return fail(format!("boxcox_offset must be finite and nonnegative, got {}", self.boxcox_offset));
        }
        if self.inputs.tables.is_empty() {
            return fail("no input tables".into());
        }
        let mut paths: Vec<(&str, &Path)> = vec![("polygons", &self.inputs.polygons)];
        for t in &self.inputs.tables {
            paths.push(("table", &t.path));
        }
        if let Some(c) = &self.inputs.crosswalk {
            paths.push(("crosswalk", c));
        } else if self.needs_crosswalk() {
            return fail("tract- or block-group-level tables require inputs.crosswalk".into());
        }
        if let Some(s) = &self.stations {
            paths.push(("stations", &s.path));
            if !self.predictors.contains(&s.column) {
                return fail(format!("station column `{}` must be listed among the predictors", s.column));
            }
            if !(s.radius > 0.0 && s.radius.is_finite()) {
                return fail(format!("station radius must be positive, got {}", s.radius));
            }
        }
        for (role, p) in paths {
            let full = self.resolve(p);
            if !full.is_file() {
                return fail(format!("{role} file {} does not exist", full.display()));
            }
        }
        if self.sweep.radii.is_empty() {
            return fail("sweep.radii is empty".into());
        }
        if self.sweep.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return fail("sweep radii must be positive".into());
        }
        if self.sweep.thresholds.iter().any(|t| !(0.0..=1.0).contains(t))
            || self.sweep.thresholds.windows(2).any(|w| w[1] <= w[0])
        {
            return fail("sweep.thresholds must be strictly increasing values in [0, 1]".into());
        }
        if let Some(h) = self.gwr.bandwidth {
            if !(h > 0.0 && h.is_finite()) || (self.gwr.adaptive && h.fract() != 0.0) {
                return fail(format!("invalid gwr.bandwidth {h}"));
            }
        }
        if self.cv.k < 2 {
            return fail(format!("cv.k must be at least 2, got {}", self.cv.k));
        }
        if self.cv.seed.is_none() {
            return fail("cv.seed is required (or pass --seed)".into());
        }
        if self.moran.permutations > 0 && self.moran.seed.is_none() {
            return fail("moran.seed is required when permutations > 0 (or pass --seed)".into());
        }
        Ok(())
    }
}
