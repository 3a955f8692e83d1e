use std::fmt::Write as _;

use serde::Serialize;

use super::config::RunConfig;
use super::run::Prepared;
use crate::diagnostics::{CvResult, MoranResult, VifEntry};
use crate::estimators::{ModelFit, ModelSpec, INTERCEPT};
use crate::fusion::{AssemblyReport, DEFAULT_RADII, DEFAULT_THRESHOLD};
use crate::spatial::KernelSpec;
use crate::transforms::{BoxCoxEstimate, StandardizationParams};

/// Significance stars: * p ≤ 0.05, ** p ≤ 0.01, *** p ≤ 0.001.
pub fn stars(p: f64) -> &'static str {
    if p <= 0.001 {
        "***"
    } else if p <= 0.01 {
        "**"
    } else if p <= 0.05 {
        "*"
    } else {
        ""
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// What one model contributes to the report.
pub struct ModelOutcome<'a> {
    pub spec: ModelSpec,
    pub fit: &'a ModelFit,
    pub moran: &'a MoranResult,
    pub cv: &'a CvResult,
}

pub struct ReportContext<'a> {
    pub config: &'a RunConfig,
    pub prepared: &'a Prepared,
    pub outcomes: &'a [ModelOutcome<'a>],
    pub vif: &'a [VifEntry],
    pub kernel: KernelSpec,
    pub bandwidth_selected: bool,
    pub warnings: &'a [String],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelColumn {
    pub name: &'static str,
    pub label: &'static str,
    /// "AIC", or "AICc" for GWR.
    pub aic_label: &'static str,
}

/// One coefficient cell. GWR cells hold the mean local coefficient and mean local
/// standard error and carry no p-value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientCell {
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub p_value: Option<f64>,
    pub stars: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRow {
    pub term: String,
    /// One per model; `None` where the term does not apply.
    pub cells: Vec<Option<CoefficientCell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoranCell {
    pub statistic: Option<f64>,
    pub z_score: Option<f64>,
    pub p_analytic: Option<f64>,
    pub p_permutation: Option<f64>,
    /// Permutation p-value when permutations were run, otherwise the analytic one.
    pub p_value: Option<f64>,
    pub stars: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvCell {
    pub train_mae: Option<f64>,
    pub test_mae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VifCell {
    pub column: String,
    /// `None` for perfectly collinear columns (infinite VIF).
    pub vif: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightsMeta {
    pub contiguity: &'static str,
    pub standardized: bool,
    pub links: usize,
    pub islands: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCoxMeta {
    pub lambda: f64,
    pub offset: f64,
    pub profile_log_likelihood: f64,
    pub at_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GwrMeta {
    pub kernel: KernelSpec,
    pub bandwidth_selected_by_aicc: bool,
    pub effective_parameters: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedMeta {
    pub cv_k: usize,
    pub cv_seed: u64,
    pub moran_permutations: usize,
    pub moran_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Defaults {
    pub threshold: f64,
    pub boxcox_offset: f64,
    pub cv_k: usize,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub engine_version: &'static str,
    pub config_sha256: String,
    pub n: usize,
    pub target: String,
    pub predictors: Vec<String>,
    pub crosswalk_threshold: Option<f64>,
    pub station_radius: Option<f64>,
    pub weights: WeightsMeta,
    pub boxcox: BoxCoxMeta,
    pub standardization: StandardizationParams,
    pub gwr: GwrMeta,
    pub randomness: SeedMeta,
    pub defaults: Defaults,
    pub assembly: AssemblyReport,
    pub decisions: Vec<String>,
    pub warnings: Vec<String>,
}

/// Four-model comparison table: coefficients with standard errors and stars,
/// residual Moran's I, fit statistics and cross-validated MAE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub models: Vec<ModelColumn>,
    pub coefficients: Vec<CoefficientRow>,
    pub morans_i: Vec<MoranCell>,
    pub adjusted_r2: Vec<Option<f64>>,
    pub aic: Vec<Option<f64>>,
    pub log_likelihood: Vec<Option<f64>>,
    pub mae: Vec<CvCell>,
    pub vif: Vec<VifCell>,
    pub metadata: Metadata,
}

fn coefficient_cell(fit: &ModelFit, term: &str) -> Option<CoefficientCell> {
    match fit {
        ModelFit::Global(f) => {
            let e = match term {
                "rho" | "lambda" => f.rho.filter(|_| f.model_kind.spatial_parameter() == Some(term))?,
                _ => f.coefficient(term)?,
            };
            Some(CoefficientCell {
                estimate: finite(e.estimate),
                std_error: finite(e.std_error),
                p_value: finite(e.p_value),
                stars: if e.p_value.is_finite() { stars(e.p_value) } else { "" },
            })
        }
        ModelFit::Gwr(g) => {
            let j = g.terms.iter().position(|t| t == term)?;
            Some(CoefficientCell {
                estimate: finite(g.mean_coefficients()[j]),
                std_error: finite(g.mean_std_errors()[j]),
                p_value: None,
                stars: "",
            })
        }
    }
}

fn moran_cell(m: &MoranResult) -> MoranCell {
    let p = m.p_permutation.unwrap_or(m.p_analytic);
    MoranCell {
        statistic: finite(m.statistic),
        z_score: finite(m.z_score),
        p_analytic: finite(m.p_analytic),
        p_permutation: m.p_permutation.and_then(finite),
        p_value: finite(p),
        stars: if p.is_finite() { stars(p) } else { "" },
    }
}

fn decisions(ctx: &ReportContext<'_>) -> Vec<String> {
    let cfg = ctx.config;
    let w = if cfg.standardize_weights { "row-standardized" } else { "binary" };
    let kernel = ctx.kernel;
    let bw = if kernel.adaptive {
        format!("{} nearest neighbors", kernel.bandwidth)
    } else {
        format!("{:.3} miles", kernel.bandwidth)
    };
    let mut d = vec![
        format!("spatial weights: queen contiguity (shared vertex within 1e-9), {w}; the same matrix drives SLM, SEM, residual Moran's I and CV"),
        format!("target: Box-Cox with lambda by profile likelihood on [-2, 2], offset {}", cfg.boxcox_offset),
        "predictors: z-scored with the sample standard deviation after listwise deletion".to_string(),
        "inference: OLS t-tests; SLM/SEM asymptotic z from the numerical Hessian; GWR reports mean local coefficients without p-values".to_string(),
        "aic: 2k - 2 logL with k counting sigma^2 and the spatial parameter; GWR column is AICc".to_string(),
        format!(
            "gwr: {:?} kernel, {bw}{}",
            kernel.kind,
            if ctx.bandwidth_selected { " chosen by AICc golden-section search" } else { " from config" }
        ),
        format!(
            "moran: randomization variance, {} permutations; SEM tested on its innovations u - lambda*Wu",
            cfg.moran.permutations
        ),
        format!(
            "cv: {} folds, trend-only prediction for SLM/SEM with W restricted to training zones, GWR local fit at held-out centroids, MAE on the transformed scale",
            cfg.cv.k
        ),
    ];
    if let Some(t) = ctx.prepared.assembled.report.threshold_used {
        d.push(format!("crosswalk: each tract goes to its largest-share ZCTA when that share is >= {t}; values population-weighted"));
    }
    if let Some(s) = &cfg.stations {
        d.push(format!("stations: `{}` counts stations within {} miles (haversine) of each zone centroid", s.column, s.radius));
    }
    d
}

impl ComparisonReport {
    pub fn build(ctx: &ReportContext<'_>) -> Self {
        let cfg = ctx.config;
        let prep = ctx.prepared;
        let frame = prep.frame();
        let models = ctx
            .outcomes
            .iter()
            .map(|o| ModelColumn {
                name: o.spec.name(),
                label: o.spec.label(),
                aic_label: if matches!(o.spec, ModelSpec::Gwr { .. }) { "AICc" } else { "AIC" },
            })
            .collect();
        let terms: Vec<String> = std::iter::once(INTERCEPT.to_string())
            .chain(frame.columns().iter().cloned())
            .chain(["rho".to_string(), "lambda".to_string()])
            .collect();
        let coefficients = terms
            .into_iter()
            .map(|term| CoefficientRow {
                cells: ctx.outcomes.iter().map(|o| coefficient_cell(o.fit, &term)).collect(),
                term,
            })
            .collect();
        let pick = |f: &dyn Fn(&ModelFit) -> f64| ctx.outcomes.iter().map(|o| finite(f(o.fit))).collect::<Vec<_>>();
        let adjusted_r2 = pick(&|m| match m {
            ModelFit::Global(f) => f.adjusted_r2,
            ModelFit::Gwr(g) => g.adjusted_r2,
        });
        let aic = pick(&|m| m.aic());
        let log_likelihood = pick(&|m| match m {
            ModelFit::Global(f) => f.log_likelihood,
            ModelFit::Gwr(g) => g.log_likelihood,
        });
        let effective_parameters = ctx.outcomes.iter().find_map(|o| match o.fit {
            ModelFit::Gwr(g) => finite(g.effective_parameters),
            _ => None,
        });
        let a = &prep.assembled;
        let bc: &BoxCoxEstimate = &a.boxcox_estimate;
        let metadata = Metadata {
            engine_version: env!("CARGO_PKG_VERSION"),
            config_sha256: cfg.hash().to_string(),
            n: frame.n(),
            target: cfg.target.clone(),
            predictors: frame.columns().to_vec(),
            crosswalk_threshold: a.report.threshold_used,
            station_radius: cfg.stations.as_ref().map(|s| s.radius),
            weights: WeightsMeta {
                contiguity: "queen",
                standardized: prep.weights.is_standardized(),
                links: prep.contiguity.nnz(),
                islands: prep.contiguity.island_ids(),
            },
            boxcox: BoxCoxMeta {
                lambda: a.boxcox.lambda,
                offset: a.boxcox.offset,
                profile_log_likelihood: bc.log_likelihood,
                at_bound: bc.at_bound,
            },
            standardization: a.standardization.clone(),
            gwr: GwrMeta { kernel: ctx.kernel, bandwidth_selected_by_aicc: ctx.bandwidth_selected, effective_parameters },
            randomness: SeedMeta {
                cv_k: cfg.cv.k,
                cv_seed: cfg.cv_seed(),
                moran_permutations: cfg.moran.permutations,
                moran_seed: cfg.moran_seed(),
            },
            defaults: Defaults {
                threshold: DEFAULT_THRESHOLD,
                boxcox_offset: 1.0,
                cv_k: 5,
                radii: DEFAULT_RADII.to_vec(),
            },
            assembly: a.report.clone(),
            decisions: decisions(ctx),
            warnings: ctx.warnings.to_vec(),
        };
        ComparisonReport {
            models,
            coefficients,
            morans_i: ctx.outcomes.iter().map(|o| moran_cell(o.moran)).collect(),
            adjusted_r2,
            aic,
            log_likelihood,
            mae: ctx
                .outcomes
                .iter()
                .map(|o| CvCell { train_mae: finite(o.cv.train_mae), test_mae: finite(o.cv.test_mae) })
                .collect(),
            vif: ctx.vif.iter().map(|v| VifCell { column: v.column.clone(), vif: finite(v.vif) }).collect(),
            metadata,
        }
    }

    /// Fixed-width table; coefficients and standard errors to two decimals.
    pub fn to_text(&self) -> String {
        const LEFT: usize = 18;
        const COL: usize = 22;
        let na = || "n/a".to_string();
        let two = |x: Option<f64>| x.map_or_else(na, |v| format!("{v:.2}"));
        let mut out = String::new();
        let line = |out: &mut String, label: &str, cells: Vec<String>| {
            let _ = write!(out, "{label:<LEFT$}");
            for c in cells {
                let _ = write!(out, "{c:>COL$}");
            }
            out.push('\n');
        };
        let rule = "-".repeat(LEFT + COL * self.models.len());
        let _ = writeln!(out, "Model comparison (target: {}, n = {})", self.metadata.target, self.metadata.n);
        out.push_str(&rule);
        out.push('\n');
        line(&mut out, "Variable", self.models.iter().map(|m| m.label.to_string()).collect());
        out.push_str(&rule);
        out.push('\n');
        for row in &self.coefficients {
            if row.cells.iter().all(Option::is_none) {
                continue;
            }
            line(
                &mut out,
                &row.term,
                row.cells
                    .iter()
                    .map(|c| match c {
                        Some(c) => format!("{}{}", two(c.estimate), c.stars),
                        None => String::new(),
                    })
                    .collect(),
            );
            line(
                &mut out,
                "",
                row.cells
                    .iter()
                    .map(|c| match c {
                        Some(c) => format!("({})", two(c.std_error)),
                        None => String::new(),
                    })
                    .collect(),
            );
        }
        out.push_str(&rule);
        out.push('\n');
        line(
            &mut out,
            "Moran's I",
            self.morans_i
                .iter()
                .map(|m| match (m.statistic, m.p_value) {
                    (Some(i), Some(p)) => format!("{i:.4}{} (p={p:.3})", m.stars),
                    _ => na(),
                })
                .collect(),
        );
        line(&mut out, "Adjusted R2", self.adjusted_r2.iter().map(|&v| two(v)).collect());
        line(
            &mut out,
            "AIC",
            self.aic
                .iter()
                .zip(&self.models)
                .map(|(&v, m)| {
                    let s = two(v);
                    if m.aic_label == "AIC" { s } else { format!("{s} ({})", m.aic_label) }
                })
                .collect(),
        );
        line(&mut out, "Log-likelihood", self.log_likelihood.iter().map(|&v| two(v)).collect());
        line(&mut out, "Training MAE", self.mae.iter().map(|c| c.train_mae.map_or_else(na, |v| format!("{v:.4}"))).collect());
        line(&mut out, "Testing MAE", self.mae.iter().map(|c| c.test_mae.map_or_else(na, |v| format!("{v:.4}"))).collect());
        out.push_str(&rule);
        out.push('\n');
        out.push_str("* p <= 0.05  ** p <= 0.01  *** p <= 0.001; GWR shows mean local coefficients and standard errors\n");
        out.push_str("\nVIF\n");
        for v in &self.vif {
            let _ = writeln!(out, "  {:<LEFT$}{}", v.column, v.vif.map_or_else(|| "inf".to_string(), |x| format!("{x:.2}")));
        }
        let m = &self.metadata;
        let _ = writeln!(
            out,
            "\nBox-Cox lambda = {:.4}, offset = {}; weights: {} queen contiguity",
            m.boxcox.lambda,
            m.boxcox.offset,
            if m.weights.standardized { "row-standardized" } else { "binary" }
        );
        if !m.warnings.is_empty() {
            out.push_str("\nWarnings\n");
            for w in &m.warnings {
                let _ = writeln!(out, "  - {w}");
            }
        }
        out
    }
}
