use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spatreg::estimators::ModelFit;
use spatreg::pipeline::{
    cross_validate, diagnose, fit_all, prepare, run_pipeline, run_sweep, run_threshold_sweep, to_json,
    with_stale_marker, write_assembly, write_file, OutputFormat, PipelineError, RunConfig, Stage, StageResult,
};

#[derive(Parser)]
#[command(name = "spatreg", version, about = "Spatial regression comparison runs from a TOML config")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for every stochastic step; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, 0 = automatic.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Check the config and that every input file exists.
    Validate,
    /// Crosswalk, aggregate and assemble the zone frame; writes assembly_report.json.
    Fuse,
    /// Build queen contiguity; writes weights.csv.
    Weights,
    /// Fit OLS, spatial lag, spatial error and GWR; writes fits.json.
    Fit,
    /// Residual Moran's I and VIF; writes diagnostics.json.
    Diagnose,
    /// k-fold cross-validated MAE; writes cv.json.
    Cv,
    /// AIC by station radius; writes sweep_radius.csv and sweep_radius.json.
    SweepRadius,
    /// Matched ZCTAs by crosswalk threshold; writes sweep_threshold.csv and sweep_threshold.json.
    SweepThreshold,
    /// Model comparison report; writes report.json and report.txt.
    Report,
    /// Report plus both sweeps.
    All,
}

fn config_error(msg: String) -> PipelineError {
    PipelineError { stage: Stage::Config, source: spatreg::Error::Config(msg) }
}

fn load(cli: &Cli) -> StageResult<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| config_error("--config is required".into()))?;
    let mut cfg = RunConfig::load(path).map_err(|source| PipelineError { stage: Stage::Config, source })?;
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    if let Some(out) = &cli.output {
        cfg.output_dir = std::env::current_dir().map(|d| d.join(out)).unwrap_or_else(|_| out.clone());
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    cfg.validate().map_err(|source| PipelineError { stage: Stage::Config, source })?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| config_error(format!("cannot set thread count: {e}")))?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> StageResult<()> {
    let cfg = load(cli)?;
    let format = match cli.format {
        Format::Text => OutputFormat::Text,
        Format::Json => OutputFormat::Json,
        Format::Both => OutputFormat::Both,
    };
    let dir = cfg.output_path();
    match cli.command {
        Command::Validate => {
            println!("config ok (sha256 {})", cfg.hash());
        }
        Command::Fuse => with_stale_marker(&dir, |dir| {
            let prep = prepare(&cfg)?;
            let path = write_assembly(dir, &prep)?;
            let r = &prep.assembled.report;
            println!(
                "{} zones in, {} dropped, {} kept; wrote {}",
                r.rows_in,
                r.rows_dropped_missing,
                r.rows_out,
                path.display()
            );
            Ok(())
        })?,
        Command::Weights => with_stale_marker(&dir, |dir| {
            let prep = prepare(&cfg)?;
            let mut csv = Vec::new();
            prep.weights
                .write_edge_list_to(&mut csv)
                .map_err(|e| PipelineError { stage: Stage::Output, source: spatreg::Error::Numerical(e.to_string()) })?;
            let path = write_file(dir, "weights.csv", &csv)?;
            println!(
                "{} zones, {} links, {} islands; wrote {}",
                prep.weights.n(),
                prep.contiguity.nnz(),
                prep.contiguity.islands().len(),
                path.display()
            );
            Ok(())
        })?,
        Command::Fit => with_stale_marker(&dir, |dir| {
            let prep = prepare(&cfg)?;
            let fitted = fit_all(&cfg, &prep)?;
            let fits: Vec<&ModelFit> = fitted.fits.iter().map(|(_, f)| f).collect();
            for (spec, fit) in &fitted.fits {
                println!("{:<14} AIC {:.4}", spec.label(), fit.aic());
            }
            write_file(dir, "fits.json", &to_json(&fits)?)?;
            Ok(())
        })?,
        Command::Diagnose => with_stale_marker(&dir, |dir| {
            let prep = prepare(&cfg)?;
            let fitted = fit_all(&cfg, &prep)?;
            let d = diagnose(&cfg, &prep, &fitted)?;
            for ((spec, _), m) in fitted.fits.iter().zip(&d.moran) {
                println!("{:<14} Moran's I {:.4} (z = {:.3})", spec.label(), m.statistic, m.z_score);
            }
            write_file(dir, "diagnostics.json", &to_json(&d)?)?;
            Ok(())
        })?,
        Command::Cv => with_stale_marker(&dir, |dir| {
            let prep = prepare(&cfg)?;
            let fitted = fit_all(&cfg, &prep)?;
            let cv = cross_validate(&cfg, &prep, &fitted)?;
            for c in &cv {
                println!("{:<14} train MAE {:.4}  test MAE {:.4}", c.model, c.train_mae, c.test_mae);
            }
            write_file(dir, "cv.json", &to_json(&cv)?)?;
            Ok(())
        })?,
        Command::SweepRadius => {
            let (_, summary) = run_sweep(&cfg)?;
            for (model, r) in &summary.argmin_radius {
                println!("{model:<14} lowest AIC at {r} miles");
            }
        }
        Command::SweepThreshold => {
            let s = run_threshold_sweep(&cfg)?;
            for c in &s.curve {
                println!("threshold {:.2}: {} ZCTAs", c.threshold, c.matched_zctas);
            }
            println!("default threshold {}: {} ZCTAs", s.default_threshold, s.matched_at_default);
        }
        Command::Report => {
            let report = run_pipeline(&cfg, format)?;
            if format != OutputFormat::Json {
                print!("{}", report.to_text());
            }
        }
        Command::All => {
            let report = run_pipeline(&cfg, format)?;
            if format != OutputFormat::Json {
                print!("{}", report.to_text());
            }
            if cfg.stations.is_some() {
                run_sweep(&cfg)?;
            }
            if cfg.inputs.crosswalk.is_some() {
                run_threshold_sweep(&cfg)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
