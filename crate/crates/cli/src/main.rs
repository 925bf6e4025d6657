//! `tnngen`: drive training, evaluation, RTL generation and forecasting from
//! a run config.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tnngen_core::forecast::{self, reference, seeded_models, ForecastReport, Metric, RegressionModel};
use tnngen_core::pipeline::{self, parse_stages, ReportFormat, RunConfig, Stage};
use tnngen_core::rtl::Library;
use tnngen_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "tnngen",
    version,
    about = "TNN column design flow: train, evaluate, emit RTL, forecast PPA"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stages listed in the config (or --stages).
    Run(RunArgs),
    /// Train column weights with STDP.
    Train(RunArgs),
    /// Cluster the dataset with trained weights and score against k-means.
    Eval(RunArgs),
    /// Emit Verilog, testbench and flow scripts.
    Genrtl(RunArgs),
    /// Forecast area and leakage from synapse count.
    Forecast(ForecastArgs),
    /// Fit a forecast model to (synapse count, value) points.
    FitForecast(FitArgs),
    /// Render the results store.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of train,eval,genrtl,forecast.
    #[arg(long)]
    stages: Option<String>,
    /// Pre-trained weight file (overrides `weights`).
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Args)]
struct ForecastArgs {
    /// Run the forecast stage of this config and record it in the store.
    #[arg(long, conflicts_with_all = ["p", "synapses"])]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, requires = "q")]
    p: Option<u64>,
    #[arg(long, requires = "p")]
    q: Option<u64>,
    #[arg(long, conflicts_with = "p")]
    synapses: Option<u64>,
    #[arg(long)]
    area_model: Option<PathBuf>,
    #[arg(long)]
    leakage_model: Option<PathBuf>,
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Args)]
struct FitArgs {
    /// CSV of `synapse_count,value` rows.
    #[arg(long, conflicts_with = "reference")]
    points: Option<PathBuf>,
    /// Fit to the published post-layout results of this library instead.
    #[arg(long)]
    reference: Option<String>,
    /// area or leakage.
    #[arg(long, default_value = "area")]
    metric: String,
    /// Library the model describes (defaults to --reference, else tnn7).
    #[arg(long)]
    library: Option<String>,
    /// Write the model here; printed to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, required_unless_present = "config")]
    store: Option<PathBuf>,
    /// Report the store named by this config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "table")]
    format: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<String> {
    match cmd {
        Command::Run(args) => run(args, None),
        Command::Train(args) => run(args, Some(Stage::Train)),
        Command::Eval(args) => run(args, Some(Stage::Eval)),
        Command::Genrtl(args) => run(args, Some(Stage::Genrtl)),
        Command::Forecast(args) => forecast_cmd(args),
        Command::FitForecast(args) => fit_cmd(args),
        Command::Report(args) => report_cmd(args),
    }
}

fn load_config(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = out {
        cfg.out = out;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(args: RunArgs, only: Option<Stage>) -> Result<String> {
    let mut cfg = load_config(&args.config, args.out, args.seed)?;
    if let Some(list) = &args.stages {
        cfg.stages = parse_stages(list)?;
    }
    if let Some(stage) = only {
        cfg.stages = vec![stage];
    }
    if args.weights.is_some() {
        cfg.weights = args.weights;
    }
    // A lone eval or genrtl picks up weights left by an earlier train run.
    let trained = cfg.out.join("weights.txt");
    if cfg.weights.is_none() && !cfg.stages.contains(&Stage::Train) && trained.exists() {
        cfg.weights = Some(trained);
    }
    let record = pipeline::run(&cfg)?;
    Ok(serde_json::to_string_pretty(&record).map_err(Error::from)? + "\n")
}

fn forecast_cmd(args: ForecastArgs) -> Result<String> {
    if let Some(config) = &args.config {
        let mut cfg = load_config(config, args.out, args.seed)?;
        cfg.stages = vec![Stage::Forecast];
        if args.area_model.is_some() {
            cfg.forecast.area_model = args.area_model;
        }
        if args.leakage_model.is_some() {
            cfg.forecast.leakage_model = args.leakage_model;
        }
        let record = pipeline::run(&cfg)?;
        return Ok(serde_json::to_string_pretty(&record)? + "\n");
    }
    let count = match (args.synapses, args.p, args.q) {
        (Some(n), _, _) => n,
        (None, Some(p), Some(q)) => p * q,
        _ => return Err(Error::Config("give --config, --synapses or --p/--q".into())),
    };
    let (mut area, mut leak) = seeded_models();
    if let Some(path) = &args.area_model {
        area = RegressionModel::load(path)?;
    }
    if let Some(path) = &args.leakage_model {
        leak = RegressionModel::load(path)?;
    }
    for (model, want) in [(&area, Metric::AreaUm2), (&leak, Metric::LeakageUw)] {
        if model.metric != want {
            return Err(Error::Config(format!(
                "{} model given where a {} model is expected",
                model.metric.as_str(),
                want.as_str()
            )));
        }
    }
    let published = reference::by_synapse_count(count);
    let name = published.map_or_else(|| format!("{count} synapses"), |d| d.name.to_string());
    let mut reports = Vec::new();
    for model in [&area, &leak] {
        let mut r = ForecastReport::new(model);
        r.push(
            &name,
            count,
            published.and_then(|d| d.actual(model.metric, model.library)),
        );
        reports.push(r);
    }
    match args.format.as_str() {
        "json" => Ok(serde_json::to_string_pretty(&reports)? + "\n"),
        "csv" => Ok(reports
            .iter()
            .map(ForecastReport::to_csv)
            .collect::<Vec<_>>()
            .join("\n")),
        "table" => {
            let mut out = String::new();
            for r in &reports {
                let row = &r.rows[0];
                out += &format!(
                    "{:<12} {:>10.3}  ({} synapses, {} model: {} * n + {})\n",
                    r.metric.as_str(),
                    row.forecast,
                    row.synapse_count,
                    r.library,
                    r.slope,
                    r.intercept
                );
            }
            Ok(out)
        }
        other => Err(Error::Config(format!("unknown format `{other}` (table, csv, json)"))),
    }
}

fn fit_cmd(args: FitArgs) -> Result<String> {
    let metric: Metric = args.metric.parse()?;
    let (points, default_lib, note) = match (&args.points, &args.reference) {
        (Some(path), None) => (
            pipeline::load_points_csv(path)?,
            Library::Tnn7,
            format!("fit to {}", path.display()),
        ),
        (None, Some(lib)) => {
            let lib: Library = lib.parse()?;
            (
                reference::points(metric, lib),
                lib,
                format!("fit to published {lib} post-layout results"),
            )
        }
        _ => return Err(Error::Config("give exactly one of --points or --reference".into())),
    };
    let library = match &args.library {
        Some(l) => l.parse()?,
        None => default_lib,
    };
    let mut model = forecast::fit(&points, metric, library)?;
    model.note = note;
    match &args.out {
        Some(path) => {
            model.save(path)?;
            Ok(format!(
                "{} {}: slope {} intercept {} -> {}\n",
                model.library,
                model.metric.as_str(),
                model.slope,
                model.intercept,
                path.display()
            ))
        }
        None => Ok(serde_json::to_string_pretty(&model)? + "\n"),
    }
}

fn report_cmd(args: ReportArgs) -> Result<String> {
    let format: ReportFormat = args.format.parse()?;
    let store = match (args.store, &args.config) {
        (Some(s), _) => s,
        (None, Some(c)) => RunConfig::load(c)?.store_path(),
        (None, None) => unreachable!("clap requires --store or --config"),
    };
    pipeline::report(&store, format)
}
