//! Command-line interface: fitting, selection, prediction, MUMV analysis,
//! and replacement-policy optimization with reproducible file outputs.
//!
//! Every command writes one JSON result document (embedding the resolved
//! configuration and library version) plus plain-CSV tables for anything
//! plot-shaped. Thresholds and condition values on the command line are
//! always on the data's own scale (e.g. a condition index with failure at
//! 40); conversion to internal degradation units happens once, here.
//!
//! A `--config file.json` may supply any parameter (snake_case keys);
//! explicit flags override it. Identical (config, input, seed) runs are
//! byte-identical.

mod io_util;

use btgp::analysis::{matched_mean_bngp, mumv, mumv_grid, predictive_band};
use btgp::inference::{
    census, cleanse, fit_mle, select_best_model, AssetHistory, FitOptions, FittedModel,
};
use btgp::model::{ModelSpec, Orientation, Theta, Variant};
use btgp::policy::{
    abr_rate, cbr_rate, optimize_abr, optimize_cbr, simulate_policy, threshold_sweep, CbrOptions,
    CostConfig, GridRange, Policy, PolicyDecision, SweepSpec,
};
use clap::{Args, Parser, Subcommand};
use io_util::{csv_table, load_inspections, CliError, CliResult, OutputWriter};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "btgp",
    version,
    about = "Bounded gamma-process deterioration modelling: fit, predict, and optimize replacement policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model variant to inspection histories by maximum likelihood
    Fit(FitArgs),
    /// Fit all candidate variants per asset and pick the minimum-AIC model
    Select(SelectArgs),
    /// Best-model census over all eligible histories
    Census(CensusArgs),
    /// Simulate sample paths of a model
    Simulate(SimulateArgs),
    /// Predictive bands, moment curves, and remaining life
    Predict(PredictArgs),
    /// Mean at maximum variance of a transformed model
    Mumv(MumvArgs),
    /// MUMV over a (theta2, theta3) grid
    MumvGrid(MumvGridArgs),
    /// Optimize the age-based replacement policy
    Abr(AbrArgs),
    /// Optimize the condition-based replacement policy
    Cbr(CbrArgs),
    /// Policy optima across a set of failure thresholds
    Sweep(SweepArgs),
    /// Cross-check an analytic policy rate against renewal-reward simulation
    McCheck(McCheckArgs),
}

// ---------------------------------------------------------------------
// Argument plumbing: every command has a clap/serde args struct whose
// explicit flags overlay the optional --config JSON, producing a fully
// resolved, serializable configuration.
// ---------------------------------------------------------------------

fn merge_value(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_value(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn resolve_config<A: Serialize, R: DeserializeOwned>(
    args: &A,
    config: &Option<PathBuf>,
) -> CliResult<R> {
    let mut base = match config {
        Some(p) => serde_json::from_str::<Value>(
            &std::fs::read_to_string(p).map_err(|e| CliError(format!("cannot read config: {e}")))?,
        )
        .map_err(|e| CliError(format!("config is not valid JSON: {e}")))?,
        None => Value::Object(Default::default()),
    };
    let overlay = serde_json::to_value(args).map_err(|e| CliError(e.to_string()))?;
    merge_value(&mut base, overlay);
    serde_json::from_value(base).map_err(|e| CliError(format!("invalid configuration: {e}")))
}

#[derive(Args, Serialize)]
struct ModelFlags {
    /// Model variant: BNGP, BTGP, or BTGP1..BTGP6
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    theta1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    theta2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    theta3: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    theta4: Option<f64>,
    /// Fixed upper bound of the measure (e.g. 100 for a condition index)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    xlim: Option<f64>,
    /// "decreasing" (condition index) or "increasing" (degradation)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    orientation: Option<String>,
}

#[derive(Deserialize, Serialize, Clone)]
struct ModelConfig {
    model: String,
    theta1: f64,
    theta2: f64,
    theta3: f64,
    #[serde(default)]
    theta4: Option<f64>,
    #[serde(default = "default_xlim")]
    xlim: f64,
    #[serde(default = "default_orientation")]
    orientation: String,
}

fn default_xlim() -> f64 {
    100.0
}

fn default_orientation() -> String {
    "decreasing".into()
}

fn default_out() -> PathBuf {
    PathBuf::from(".")
}

impl ModelConfig {
    fn build(&self) -> CliResult<ModelSpec> {
        let variant = Variant::parse(&self.model)?;
        let theta = match self.theta4 {
            Some(t4) => Theta::new4(self.theta1, self.theta2, self.theta3, t4),
            None => Theta::new3(self.theta1, self.theta2, self.theta3),
        };
        Ok(ModelSpec::new(
            variant,
            theta,
            self.xlim,
            Orientation::parse(&self.orientation)?,
        )?)
    }
}

/// Converts a user-scale value (condition index or degradation, per the
/// orientation) to internal degradation units.
fn to_degradation(m: &ModelSpec, value: f64) -> f64 {
    m.orientation().to_degradation(value, m.x_lim())
}

fn from_degradation(m: &ModelSpec, level: f64) -> f64 {
    m.orientation().from_degradation(level, m.x_lim())
}

#[derive(Serialize)]
struct Document<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    version: &'a str,
    config: C,
    result: R,
    outputs: Vec<String>,
    notices: Vec<String>,
}

fn emit<C: Serialize, R: Serialize>(
    writer: &mut OutputWriter,
    command: &str,
    config: &C,
    result: &R,
    notices: Vec<String>,
) -> CliResult<()> {
    let doc = Document {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        result,
        outputs: writer.files(),
        notices,
    };
    let mut json = serde_json::to_string_pretty(&doc).map_err(|e| CliError(e.to_string()))?;
    json.push('\n');
    writer.write(&format!("{command}.json"), &json)
}

fn main() {
    let cli = Cli::parse();
    let (name, outcome) = run(cli.command);
    if let Err(e) = outcome {
        let doc = serde_json::json!({ "command": name, "error": e.to_string() });
        eprintln!("{doc}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> (&'static str, CliResult<()>) {
    match command {
        Command::Fit(a) => ("fit", cmd_fit(a)),
        Command::Select(a) => ("select", cmd_select(a)),
        Command::Census(a) => ("census", cmd_census(a)),
        Command::Simulate(a) => ("simulate", cmd_simulate(a)),
        Command::Predict(a) => ("predict", cmd_predict(a)),
        Command::Mumv(a) => ("mumv", cmd_mumv(a)),
        Command::MumvGrid(a) => ("mumv-grid", cmd_mumv_grid(a)),
        Command::Abr(a) => ("abr", cmd_abr(a)),
        Command::Cbr(a) => ("cbr", cmd_cbr(a)),
        Command::Sweep(a) => ("sweep", cmd_sweep(a)),
        Command::McCheck(a) => ("mc-check", cmd_mc_check(a)),
    }
}

/// Runs the body with a tracked writer, discarding partial outputs on error.
fn with_writer<F>(out: &Path, body: F) -> CliResult<()>
where
    F: FnOnce(&mut OutputWriter) -> CliResult<()>,
{
    let mut writer = OutputWriter::new(out)?;
    match body(&mut writer) {
        Ok(()) => Ok(()),
        Err(e) => {
            writer.discard();
            Err(e)
        }
    }
}

fn fit_options(orientation: &str, seed: u64) -> CliResult<FitOptions> {
    let mut opts = FitOptions::new(Orientation::parse(orientation)?);
    opts.seed = seed;
    Ok(opts)
}

fn parse_candidates(models: &Option<String>) -> CliResult<Vec<Variant>> {
    match models {
        None => Ok(Variant::ALL.to_vec()),
        Some(spec) => spec
            .split(',')
            .map(|s| Variant::parse(s.trim()).map_err(CliError::from))
            .collect(),
    }
}

// ---------------------------------------------------------------- fit --

#[derive(Args, Serialize)]
struct FitArgs {
    #[arg(long)]
    #[serde(skip_serializing)]
    config: Option<PathBuf>,
    /// Inspection CSV: asset_id,age_years,condition
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    xlim: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    orientation: Option<String>,
    /// Seed for the multi-start optimizer
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize)]
struct FitConfig {
    data: PathBuf,
    model: String,
    #[serde(default = "default_xlim")]
    xlim: f64,
    #[serde(default = "default_orientation")]
    orientation: String,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_out")]
    out: PathBuf,
}

#[derive(Serialize)]
struct CleanseSummary {
    asset_id: String,
    kept: usize,
    merged: usize,
    dropped: usize,
    eligible: bool,
}

fn cleanse_all(
    histories: &[AssetHistory],
    orientation: Orientation,
) -> (Vec<AssetHistory>, Vec<CleanseSummary>) {
    let mut cleaned = Vec::new();
    let mut reports = Vec::new();
    for h in histories {
        let (c, rep) = cleanse(h, orientation);
        reports.push(CleanseSummary {
            asset_id: h.asset_id.clone(),
            kept: c.records.len(),
            merged: rep.merged.len(),
            dropped: rep.dropped.len(),
            eligible: rep.eligible,
        });
        if !c.records.is_empty() {
            cleaned.push(c);
        }
    }
    (cleaned, reports)
}

fn cmd_fit(args: FitArgs) -> CliResult<()> {
    let cfg: FitConfig = resolve_config(&args, &args.config)?;
    let variant = Variant::parse(&cfg.model)?;
    let orientation = Orientation::parse(&cfg.orientation)?;
    let loaded = load_inspections(&cfg.data, cfg.xlim)?;
    let (cleaned, cleansing) = cleanse_all(&loaded.histories, orientation);
    let opts = fit_options(&cfg.orientation, cfg.seed)?;
    let fitted = fit_mle(variant, &cleaned, cfg.xlim, &opts)?;

    #[derive(Serialize)]
    struct FitResult {
        fitted: FittedModel,
        cleansing: Vec<CleanseSummary>,
    }
    with_writer(&cfg.out.clone(), |w| {
        emit(
            w,
            "fit",
            &cfg,
            &FitResult {
                fitted: fitted.clone(),
                cleansing,
            },
            loaded.notices.clone(),
        )
    })
}

// ------------------------------------------------------------- select --

#[derive(Args, Serialize)]
struct SelectArgs {
    #[arg(long)]
    #[serde(skip_serializing)]
    config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<PathBuf>,
    /// Comma-separated candidate variants (default: all eight)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    models: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    xlim: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    orientation: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize)]
struct SelectConfig {
    data: PathBuf,
    #[serde(default)]
    models: Option<String>,
    #[serde(default = "default_xlim")]
    xlim: f64,
    #[serde(default = "default_orientation")]
    orientation: String,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_out")]
    out: PathBuf,
}

fn cmd_select(args: SelectArgs) -> CliResult<()> {
    let cfg: SelectConfig = resolve_config(&args, &args.config)?;
    let orientation = Orientation::parse(&cfg.orientation)?;
    let candidates = parse_candidates(&cfg.models)?;
    let loaded = load_inspections(&cfg.data, cfg.xlim)?;
    let (cleaned, cleansing) = cleanse_all(&loaded.histories, orientation);
    let opts = fit_options(&cfg.orientation, cfg.seed)?;

    #[derive(Serialize)]
    struct AssetSelection {
        asset_id: String,
        best: Option<String>,
        best_aic: Option<f64>,
        error: Option<String>,
        table: Option<Vec<btgp::inference::CandidateFit>>,
    }
    let mut rows = Vec::new();
    for h in &cleaned {
        match select_best_model(h, &candidates, &opts) {
            Ok(sel) => rows.push(AssetSelection {
                asset_id: h.asset_id.clone(),
                best: Some(sel.best.spec.variant().name().to_string()),
                best_aic: Some(sel.best.aic),
                error: None,
                table: Some(sel.table),
            }),
            Err(e) => rows.push(AssetSelection {
                asset_id: h.asset_id.clone(),
                best: None,
                best_aic: None,
                error: Some(e.to_string()),
                table: None,
            }),
        }
    }

    #[derive(Serialize)]
    struct SelectResult {
        selections: Vec<AssetSelection>,
        cleansing: Vec<CleanseSummary>,
    }
    with_writer(&cfg.out.clone(), |w| {
        emit(
            w,
            "select",
            &cfg,
            &SelectResult {
                selections: rows,
                cleansing,
            },
            loaded.notices.clone(),
        )
    })
}

// ------------------------------------------------------------- census --

#[derive(Args, Serialize)]
struct CensusArgs {
    #[arg(long)]
    #[serde(skip_serializing)]
    config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    models: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    xlim: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    orientation: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize)]
struct CensusConfig {
    data: PathBuf,
    #[serde(default)]
    models: Option<String>,
    #[serde(default = "default_xlim")]
    xlim: f64,
    #[serde(default = "default_orientation")]
    orientation: String,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_out")]
    out: PathBuf,
}

fn cmd_census(args: CensusArgs) -> CliResult<()> {
    let cfg: CensusConfig = resolve_config(&args, &args.config)?;
    let candidates = parse_candidates(&cfg.models)?;
    let loaded = load_inspections(&cfg.data, cfg.xlim)?;
    let opts = fit_options(&cfg.orientation, cfg.seed)?;
    let result = census(&loaded.histories, &candidates, &opts)?;

    with_writer(&cfg.out.clone(), |w| {
        let rows: Vec<String> = result
            .rows
            .iter()
            .map(|r| format!("{},{},{}", r.variant, r.wins, r.percent))
            .collect();
        w.write(
            "census.csv",
            &format!("variant,wins,percent\n{}\n", rows.join("\n")),
        )?;
        emit(w, "census", &cfg, &result, loaded.notices.clone())
    })
}

// ----------------------------------------------------------- simulate --

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    #[serde(skip_serializing)]
    config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelFlags,
    /// Simulation horizon in years
    #[arg(long = "grid-max")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_max: Option<f64>,
    /// Grid spacing in years
    #[arg(long = "grid-step")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_step: Option<f64>,
    /// Number of sample paths
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize)]
struct SimulateConfig {
    #[serde(flatten)]
    model: ModelConfig,
    #[serde(default = "default_horizon")]
    grid_max: f64,
    #[serde(default = "default_grid_step")]
    grid_step: f64,
    #[serde(default = "default_paths")]
    n: usize,
    /// Mandatory: stochastic commands have no wall-clock default.
    seed: Option<u64>,
    #[serde(default = "default_out")]
    out: PathBuf,
}

fn default_horizon() -> f64 {
    100.0
}

fn default_grid_step() -> f64 {
    1.0
}

fn default_paths() -> usize {
    100
}

fn require_seed(seed: Option<u64>) -> CliResult<u64> {
    seed.ok_or_else(|| {
        CliError("--seed is mandatory for stochastic commands (no wall-clock default)".into())
    })
}

fn time_grid(max: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(max > 0.0 && step > 0.0 && step <= max) {
        return Err(CliError(format!("invalid grid: max {max}, step {step}")));
    }
    let n = (max / step).round() as usize;
    Ok((0..=n).map(|k| k as f64 * step).collect())
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let cfg: SimulateConfig = resolve_config(&args, &args.config)?;
    let m = cfg.model.build()?;
    let seed = require_seed(cfg.seed)?;
    let grid = time_grid(cfg.grid_max, cfg.grid_step)?;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let paths = m.simulate_paths(&grid, cfg.n, &mut rng)?;

    with_writer(&cfg.out.clone(), |w| {
        let mut rows = Vec::with_capacity(paths.len() * grid.len());
        for (pid, p) in paths.iter().enumerate() {
            for (t, v) in grid.iter().zip(p) {
                rows.push(vec![pid as f64, *t, *v]);
            }
        }
        w.write("paths.csv", &csv_table("path,t,value", &rows))?;

        #[derive(Serialize)]
        struct SimResult {
            n_paths: usize,
            n_times: usize,
        }
        emit(
            w,
            "simulate",
            &cfg,
            &SimResult {
                n_paths: paths.len(),
                n_times: grid.len(),
            },
            vec![],
        )
    })
}

// ------------------------------------------------------------ predict --

#[derive(Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    #[serde(skip_serializing)]
    config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelFlags,
    #[arg(long = "grid-max")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_max: Option<f64>,
    #[arg(long = "grid-step")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_step: Option<f64>,
    /// Lower band quantile
    #[arg(long = "band-lower")]
    #[serde(skip_serializing_if = "Option::is_none")]
    band_lower: Option<f64>,
    /// Upper band quantile
    #[arg(long = "band-upper")]
    #[serde(skip_serializing_if = "Option::is_none")]
    band_upper: Option<f64>,
    /// Inspection age for the remaining-life calculation
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t0: Option<f64>,
    /// Observed value at t0 (user scale)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    x0: Option<f64>,
    /// Failure threshold (user scale)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    xi: Option<f64>,
    /// Also emit the moment curves of a mean-matched BNGP (BTGP only)
    #[arg(long = "compare-bngp")]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    compare_bngp: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize)]
struct PredictConfig {
    #[serde(flatten)]
    model: ModelConfig,
    #[serde(default = "default_horizon")]
    grid_max: f64,
    #[serde(default = "default_grid_step")]
    grid_step: f64,
    #[serde(default = "default_band_lower")]
    band_lower: f64,
    #[serde(default = "default_band_upper")]
    band_upper: f64,
    #[serde(default)]
    t0: Option<f64>,
    #[serde(default)]
    x0: Option<f64>,
    #[serde(default)]
    xi: Option<f64>,
    #[serde(default)]
    compare_bngp: bool,
    #[serde(default = "default_out")]
    out: PathBuf,
}

fn default_band_lower() -> f64 {
    0.025
}

fn default_band_upper() -> f64 {
    0.975
}

fn cmd_predict(args: PredictArgs) -> CliResult<()> {
    let cfg: PredictConfig = resolve_config(&args, &args.config)?;
    let m = cfg.model.build()?;
    let grid = time_grid(cfg.grid_max, cfg.grid_step)?;
    let band = predictive_band(&m, &grid, (cfg.band_lower, cfg.band_upper))?;

    #[derive(Serialize)]
    struct RlSummary {
        mean: f64,
        variance: f64,
        horizon: f64,
        degenerate: bool,
    }
    let mut rl_summary = None;
    let mut rl_curve = None;
    if let (Some(t0), Some(x0), Some(xi)) = (cfg.t0, cfg.x0, cfg.xi) {
        let rl = m.remaining_life(t0, to_degradation(&m, x0), to_degradation(&m, xi))?;
        let horizon = rl.horizon().max(1.0);
        let steps = 400usize;
        let rows: Vec<Vec<f64>> = (0..=steps)
            .map(|k| {
                let s = horizon * k as f64 / steps as f64;
                vec![s, rl.survival(s)]
            })
            .collect();
        rl_curve = Some(rows);
        rl_summary = Some(RlSummary {
            mean: rl.mean(),
            variance: rl.variance(),
            horizon: rl.horizon(),
            degenerate: rl.is_degenerate(),
        });
    }

    let matched = if cfg.compare_bngp {
        Some(matched_mean_bngp(&m)?)
    } else {
        None
    };

    with_writer(&cfg.out.clone(), |w| {
        let band_rows: Vec<Vec<f64>> = band
            .iter()
            .map(|b| vec![b.t, b.lower, b.mean, b.upper])
            .collect();
        w.write("band.csv", &csv_table("t,lower,mean,upper", &band_rows))?;
        let moment_rows: Vec<Vec<f64>> = grid
            .iter()
            .map(|&t| {
                let (mean_d, var) = m.mean_variance(t)?;
                Ok(vec![t, from_degradation(&m, mean_d), var])
            })
            .collect::<CliResult<_>>()?;
        w.write("moments.csv", &csv_table("t,mean,variance", &moment_rows))?;
        if let Some(rows) = &rl_curve {
            w.write("rl_survival.csv", &csv_table("s,survival", rows))?;
        }
        if let Some(matched) = &matched {
            let rows: Vec<Vec<f64>> = grid
                .iter()
                .map(|&t| {
                    let (mean_d, var) = matched.spec.mean_variance(t)?;
                    Ok(vec![t, from_degradation(&m, mean_d), var])
                })
                .collect::<CliResult<_>>()?;
            w.write("matched_bngp_moments.csv", &csv_table("t,mean,variance", &rows))?;
        }

        #[derive(Serialize)]
        struct PredictResult {
            remaining_life: Option<RlSummary>,
            matched_bngp: Option<btgp::analysis::MatchedBngp>,
        }
        emit(
            w,
            "predict",
            &cfg,
            &PredictResult {
                remaining_life: rl_summary,
                matched_bngp: matched,
            },
            vec![],
        )
    })
}

// --------------------------------------------------------------- mumv --

#[derive(Args, Serialize)]
struct MumvArgs {
    #[arg(long)]
    #[serde(skip_serializing)]
    config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelFlags,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize)]
struct MumvConfig {
    #[serde(flatten)]
    model: ModelConfig,
    #[serde(default = "default_out")]
    out: PathBuf,
}

fn cmd_mumv(args: MumvArgs) -> CliResult<()> {
    let cfg: MumvConfig = resolve_config(&args, &args.config)?;
    let m = cfg.model.build()?;
    let result = mumv(&m)?;
    with_writer(&cfg.out.clone(), |w| emit(w, "mumv", &cfg, &result, vec![]))
}

// ---------------------------------------------------------- mumv-grid --

#[derive(Args, Serialize)]
struct MumvGridArgs {
    #[arg(long)]
    #[serde(skip_serializing)]
    config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelFlags,
    #[arg(long = "grid-theta2-min")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_theta2_min: Option<f64>,
    #[arg(long = "grid-theta2-max")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_theta2_max: Option<f64>,
    #[arg(long = "grid-theta3-min")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_theta3_min: Option<f64>,
    #[arg(long = "grid-theta3-max")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_theta3_max: Option<f64>,
    /// Cells per axis
    #[arg(long = "grid-resolution")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_resolution: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize)]
struct MumvGridConfig {
    #[serde(flatten)]
    model: ModelConfig,
    #[serde(default = "default_t2_min")]
    grid_theta2_min: f64,
    #[serde(default = "default_t2_max")]
    grid_theta2_max: f64,
    #[serde(default = "default_t3_min")]
    grid_theta3_min: f64,
    #[serde(default = "default_t3_max")]
    grid_theta3_max: f64,
    #[serde(default = "default_resolution")]
    grid_resolution: usize,
    #[serde(default = "default_out")]
    out: PathBuf,
}

fn default_t2_min() -> f64 {
    0.1
}
fn default_t2_max() -> f64 {
    4.0
}
fn default_t3_min() -> f64 {
    1.0
}
fn default_t3_max() -> f64 {
    100.0
}
fn default_resolution() -> usize {
    21
}

fn cmd_mumv_grid(args: MumvGridArgs) -> CliResult<()> {
    let cfg: MumvGridConfig = resolve_config(&args, &args.config)?;
    let m = cfg.model.build()?;
    let grid = mumv_grid(
        &m,
        (cfg.grid_theta2_min, cfg.grid_theta2_max),
        (cfg.grid_theta3_min, cfg.grid_theta3_max),
        (cfg.grid_resolution, cfg.grid_resolution),
    )?;
    with_writer(&cfg.out.clone(), |w| {
        let mut rows = Vec::new();
        for (i, &t2) in grid.theta2.iter().enumerate() {
            for (j, &t3) in grid.theta3.iter().enumerate() {
                rows.push(vec![t2, t3, grid.values[i][j]]);
            }
        }
        w.write("mumv_grid.csv", &csv_table("theta2,theta3,mumv", &rows))?;

        #[derive(Serialize)]
        struct GridResult {
            cells: usize,
            failures: usize,
        }
        emit(
            w,
            "mumv-grid",
            &cfg,
            &GridResult {
                cells: grid.theta2.len() * grid.theta3.len(),
                failures: grid.failures.len(),
            },
            grid.failures
                .iter()
                .map(|(i, j, e)| format!("cell ({i},{j}) failed: {e}"))
                .collect(),
        )
    })
}

// ---------------------------------------------------------------- abr --

#[derive(Args, Serialize)]
struct CostFlags {
    /// Inspection cost per event
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ci: Option<f64>,
    /// Preventive replacement cost per event
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cr: Option<f64>,
    /// Failure replacement cost per event
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cf: Option<f64>,
}

#[derive(Deserialize, Serialize, Clone)]
struct CostConfigFile {
    #[serde(default = "default_ci")]
    ci: f64,
    #[serde(default = "default_cr")]
    cr: f64,
    #[serde(default = "default_cf")]
    cf: f64,
}

fn default_ci() -> f64 {
    1.0
}
fn default_cr() -> f64 {
    100.0
}
fn default_cf() -> f64 {
    500.0
}

impl CostConfigFile {
    fn build(&self) -> CliResult<CostConfig> {
        Ok(CostConfig::new(self.ci, self.cr, self.cf)?)
    }
}

#[derive(Args, Serialize)]
struct AbrArgs {
    #[arg(long)]
    #[serde(skip_serializing)]
    config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelFlags,
    /// Failure threshold (user scale)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    xi: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    costs: CostFlags,
    #[arg(long = "grid-min")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_min: Option<f64>,
    #[arg(long = "grid-max")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_max: Option<f64>,
    #[arg(long = "grid-step")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_step: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize)]
struct AbrConfig {
    #[serde(flatten)]
    model: ModelConfig,
    xi: f64,
    #[serde(flatten)]
    costs: CostConfigFile,
    #[serde(default = "default_abr_min")]
    grid_min: f64,
    #[serde(default = "default_abr_max")]
    grid_max: f64,
    #[serde(default = "default_policy_step")]
    grid_step: f64,
    #[serde(default = "default_out")]
    out: PathBuf,
}

fn default_abr_min() -> f64 {
    1.0
}
fn default_abr_max() -> f64 {
    150.0
}
fn default_policy_step() -> f64 {
    0.1
}

#[derive(Serialize)]
struct AbrResult {
    t_r: f64,
    rate: f64,
    warnings: Vec<String>,
}

fn cmd_abr(args: AbrArgs) -> CliResult<()> {
    let cfg: AbrConfig = resolve_config(&args, &args.config)?;
    let m = cfg.model.build()?;
    let costs = cfg.costs.build()?;
    let xi_deg = to_degradation(&m, cfg.xi);
    let grid = GridRange::new(cfg.grid_min, cfg.grid_max, cfg.grid_step)?;
    let opt = optimize_abr(&m, xi_deg, &costs, &grid)?;
    let PolicyDecision::Abr { t_r } = opt.decision else {
        unreachable!("ABR optimizer returns an ABR decision")
    };
    with_writer(&cfg.out.clone(), |w| {
        let rows: Vec<Vec<f64>> = opt.trace.iter().map(|p| vec![p.t, p.rate]).collect();
        w.write("abr_trace.csv", &csv_table("t_r,rate", &rows))?;
        emit(
            w,
            "abr",
            &cfg,
            &AbrResult {
                t_r,
                rate: opt.rate,
                warnings: costs.warnings(),
            },
            vec![],
        )
    })
}

// ---------------------------------------------------------------- cbr --

#[derive(Args, Serialize)]
struct CbrArgs {
    #[arg(long)]
    #[serde(skip_serializing)]
    config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelFlags,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    xi: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    costs: CostFlags,
    #[arg(long = "grid-min")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_min: Option<f64>,
    #[arg(long = "grid-max")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_max: Option<f64>,
    #[arg(long = "grid-step")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_step: Option<f64>,
    /// Preventive-threshold spacing on the user scale
    #[arg(long = "grid-xir-step")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_xir_step: Option<f64>,
    #[arg(long = "lattice-points")]
    #[serde(skip_serializing_if = "Option::is_none")]
    lattice_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize)]
struct CbrConfig {
    #[serde(flatten)]
    model: ModelConfig,
    xi: f64,
    #[serde(flatten)]
    costs: CostConfigFile,
    #[serde(default = "default_ti_min")]
    grid_min: f64,
    #[serde(default = "default_ti_max")]
    grid_max: f64,
    #[serde(default = "default_policy_step")]
    grid_step: f64,
    #[serde(default = "default_xir_step")]
    grid_xir_step: f64,
    #[serde(default = "default_lattice")]
    lattice_points: usize,
    #[serde(default = "default_out")]
    out: PathBuf,
}

fn default_ti_min() -> f64 {
    0.5
}
fn default_ti_max() -> f64 {
    20.0
}
fn default_xir_step() -> f64 {
    1.0
}
fn default_lattice() -> usize {
    400
}

/// Preventive thresholds strictly between 0 and the failure threshold in
/// degradation units, spaced by the user-scale step.
fn cbr_thresholds(m: &ModelSpec, xi_user: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0) {
        return Err(CliError(format!("threshold step must be > 0, got {step}")));
    }
    let xi_deg = to_degradation(m, xi_user);
    let mut out = Vec::new();
    let mut v = step;
    while v < xi_deg - 1e-9 {
        out.push(v);
        v += step;
    }
    if out.is_empty() {
        return Err(CliError(
            "no preventive thresholds between the bound and xi".into(),
        ));
    }
    Ok(out)
}

#[derive(Serialize)]
struct CbrResult {
    t_i: f64,
    /// Optimal preventive threshold on the user scale.
    xi_r: f64,
    rate: f64,
    warnings: Vec<String>,
}

fn cmd_cbr(args: CbrArgs) -> CliResult<()> {
    let cfg: CbrConfig = resolve_config(&args, &args.config)?;
    let m = cfg.model.build()?;
    let costs = cfg.costs.build()?;
    let xi_deg = to_degradation(&m, cfg.xi);
    let t_i_grid = GridRange::new(cfg.grid_min, cfg.grid_max, cfg.grid_step)?;
    let thresholds = cbr_thresholds(&m, cfg.xi, cfg.grid_xir_step)?;
    let opts = CbrOptions {
        lattice_points: cfg.lattice_points,
        ..CbrOptions::default()
    };
    let opt = optimize_cbr(&m, xi_deg, &costs, &t_i_grid, &thresholds, &opts)?;
    let PolicyDecision::Cbr { t_i, xi_r } = opt.decision else {
        unreachable!("CBR optimizer returns a CBR decision")
    };
    with_writer(&cfg.out.clone(), |w| {
        let rows: Vec<Vec<f64>> = opt
            .trace
            .iter()
            .map(|p| vec![p.t, from_degradation(&m, p.xi_r.unwrap()), p.rate])
            .collect();
        w.write("cbr_contour.csv", &csv_table("t_i,xi_r,rate", &rows))?;
        emit(
            w,
            "cbr",
            &cfg,
            &CbrResult {
                t_i,
                xi_r: from_degradation(&m, xi_r),
                rate: opt.rate,
                warnings: costs.warnings(),
            },
            vec![],
        )
    })
}

// -------------------------------------------------------------- sweep --

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    #[serde(skip_serializing)]
    config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelFlags,
    /// "abr" or "cbr"
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    policy: Option<String>,
    /// Comma-separated failure thresholds (user scale)
    #[arg(long = "xi-list")]
    #[serde(skip_serializing_if = "Option::is_none")]
    xi_list: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    costs: CostFlags,
    #[arg(long = "grid-min")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_min: Option<f64>,
    #[arg(long = "grid-max")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_max: Option<f64>,
    #[arg(long = "grid-step")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_step: Option<f64>,
    #[arg(long = "grid-xir-step")]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_xir_step: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize)]
struct SweepConfig {
    #[serde(flatten)]
    model: ModelConfig,
    policy: String,
    xi_list: String,
    #[serde(flatten)]
    costs: CostConfigFile,
    #[serde(default)]
    grid_min: Option<f64>,
    #[serde(default)]
    grid_max: Option<f64>,
    #[serde(default = "default_policy_step")]
    grid_step: f64,
    #[serde(default = "default_xir_step")]
    grid_xir_step: f64,
    #[serde(default = "default_out")]
    out: PathBuf,
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let cfg: SweepConfig = resolve_config(&args, &args.config)?;
    let m = cfg.model.build()?;
    let costs = cfg.costs.build()?;
    let xis_user: Vec<f64> = cfg
        .xi_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError(format!("cannot parse threshold '{s}'")))
        })
        .collect::<CliResult<_>>()?;
    let xis_deg: Vec<f64> = xis_user.iter().map(|&x| to_degradation(&m, x)).collect();
    let spec = match cfg.policy.to_ascii_lowercase().as_str() {
        "abr" => SweepSpec::Abr {
            grid: GridRange::new(
                cfg.grid_min.unwrap_or(default_abr_min()),
                cfg.grid_max.unwrap_or(default_abr_max()),
                cfg.grid_step,
            )?,
        },
        "cbr" => SweepSpec::Cbr {
            t_i_grid: GridRange::new(
                cfg.grid_min.unwrap_or(default_ti_min()),
                cfg.grid_max.unwrap_or(default_ti_max()),
                cfg.grid_step,
            )?,
            xi_r_step: cfg.grid_xir_step,
            opts: CbrOptions::default(),
        },
        other => return Err(CliError(format!("unknown policy kind '{other}'"))),
    };
    let rows = threshold_sweep(&m, &costs, &xis_deg, &spec)?;

    #[derive(Serialize)]
    struct SweepRowOut {
        xi: f64,
        t: f64,
        xi_r: Option<f64>,
        rate: f64,
    }
    let out_rows: Vec<SweepRowOut> = rows
        .iter()
        .zip(&xis_user)
        .map(|(r, &xi_user)| match r.decision {
            PolicyDecision::Abr { t_r } => SweepRowOut {
                xi: xi_user,
                t: t_r,
                xi_r: None,
                rate: r.rate,
            },
            PolicyDecision::Cbr { t_i, xi_r } => SweepRowOut {
                xi: xi_user,
                t: t_i,
                xi_r: Some(from_degradation(&m, xi_r)),
                rate: r.rate,
            },
        })
        .collect();

    with_writer(&cfg.out.clone(), |w| {
        let csv_rows: Vec<Vec<f64>> = out_rows
            .iter()
            .map(|r| vec![r.xi, r.t, r.xi_r.unwrap_or(f64::NAN), r.rate])
            .collect();
        w.write("sweep.csv", &csv_table("xi,t,xi_r,rate", &csv_rows))?;
        emit(w, "sweep", &cfg, &out_rows, vec![])
    })
}

// ----------------------------------------------------------- mc-check --

#[derive(Args, Serialize)]
struct McCheckArgs {
    #[arg(long)]
    #[serde(skip_serializing)]
    config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelFlags,
    /// "abr" or "cbr"
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    policy: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    xi: Option<f64>,
    /// Replacement age (ABR)
    #[arg(long = "t-r")]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_r: Option<f64>,
    /// Inspection interval (CBR)
    #[arg(long = "t-i")]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_i: Option<f64>,
    /// Preventive threshold (user scale, CBR)
    #[arg(long = "xi-r")]
    #[serde(skip_serializing_if = "Option::is_none")]
    xi_r: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    costs: CostFlags,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cycles: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize)]
struct McCheckConfig {
    #[serde(flatten)]
    model: ModelConfig,
    policy: String,
    xi: f64,
    #[serde(default)]
    t_r: Option<f64>,
    #[serde(default)]
    t_i: Option<f64>,
    #[serde(default)]
    xi_r: Option<f64>,
    #[serde(flatten)]
    costs: CostConfigFile,
    #[serde(default = "default_cycles")]
    cycles: usize,
    seed: Option<u64>,
    #[serde(default = "default_out")]
    out: PathBuf,
}

fn default_cycles() -> usize {
    100_000
}

fn cmd_mc_check(args: McCheckArgs) -> CliResult<()> {
    let cfg: McCheckConfig = resolve_config(&args, &args.config)?;
    let m = cfg.model.build()?;
    let costs = cfg.costs.build()?;
    let seed = require_seed(cfg.seed)?;
    let xi_deg = to_degradation(&m, cfg.xi);
    let (policy, analytic) = match cfg.policy.to_ascii_lowercase().as_str() {
        "abr" => {
            let t_r = cfg
                .t_r
                .ok_or_else(|| CliError("--t-r is required for an ABR check".into()))?;
            (Policy::Abr { t_r }, abr_rate(&m, xi_deg, &costs, t_r)?)
        }
        "cbr" => {
            let t_i = cfg
                .t_i
                .ok_or_else(|| CliError("--t-i is required for a CBR check".into()))?;
            let xi_r_user = cfg
                .xi_r
                .ok_or_else(|| CliError("--xi-r is required for a CBR check".into()))?;
            let xi_r = to_degradation(&m, xi_r_user);
            (
                Policy::Cbr { t_i, xi_r },
                cbr_rate(&m, xi_deg, xi_r, t_i, &costs, &CbrOptions::default())?,
            )
        }
        other => return Err(CliError(format!("unknown policy kind '{other}'"))),
    };
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let sim = simulate_policy(&m, &policy, xi_deg, &costs, cfg.cycles, &mut rng)?;

    #[derive(Serialize)]
    struct McCheckResult {
        analytic_rate: f64,
        empirical_rate: f64,
        std_error: f64,
        deviation_in_se: f64,
        pass: bool,
    }
    let deviation = (analytic - sim.rate).abs() / sim.std_error.max(1e-300);
    let result = McCheckResult {
        analytic_rate: analytic,
        empirical_rate: sim.rate,
        std_error: sim.std_error,
        deviation_in_se: deviation,
        pass: deviation <= 3.0,
    };
    with_writer(&cfg.out.clone(), |w| {
        emit(w, "mc-check", &cfg, &result, vec![])
    })
}
