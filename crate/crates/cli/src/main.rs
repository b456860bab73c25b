use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use fragnet::export::{indicator_correlations, read_indicators_file, write_indicator_correlations};
use fragnet::{load_prices, Method, PipelineConfig, PricePanelF64};

#[derive(Parser, Debug)]
#[command(name = "fragnet", version, about = "Rolling correlation networks and fragility indicators")]
struct Cli {
    /// TOML file whose keys mirror the command-line flags; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rolling-window indicators, optionally with graphs, weights and node series.
    Run(RunArgs),
    /// Whole-period network plus a 2-D classical MDS map.
    Mds(MdsArgs),
    /// Pearson correlations between the columns of an indicator file.
    IndicatorCorr(CorrArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    #[arg(long)]
    prices: Option<PathBuf>,
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    shift: Option<usize>,
    /// Repeat for several thresholds.
    #[arg(long = "threshold", allow_hyphen_values = true)]
    thresholds: Vec<f64>,
    /// mst, mst-threshold or pmfg
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    hr_max_path: Option<usize>,
    #[arg(long)]
    missing_day_fraction: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    emit_graphs: bool,
    #[arg(long)]
    emit_weights: bool,
    #[arg(long)]
    emit_node_series: bool,
    #[arg(long)]
    emit_frames: bool,
    #[arg(long)]
    keep_going: bool,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct MdsArgs {
    #[arg(long)]
    prices: Option<PathBuf>,
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CorrArgs {
    #[arg(long)]
    indicators: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    prices: Option<PathBuf>,
    meta: Option<PathBuf>,
    tau: Option<usize>,
    shift: Option<usize>,
    threshold: Option<Vec<f64>>,
    method: Option<Method>,
    hr_max_path: Option<usize>,
    missing_day_fraction: Option<f64>,
    out: Option<PathBuf>,
    emit_graphs: Option<bool>,
    emit_weights: Option<bool>,
    emit_node_series: Option<bool>,
    emit_frames: Option<bool>,
    keep_going: Option<bool>,
    workers: Option<usize>,
    indicators: Option<PathBuf>,
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn load_config(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut cfg: FileConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    // paths in the file are relative to the file itself
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [&mut cfg.prices, &mut cfg.meta, &mut cfg.out, &mut cfg.indicators].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(cfg)
}

fn required(flag: Option<PathBuf>, file: Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
    flag.or(file).ok_or_else(|| format!("missing required option --{name}").into())
}

fn pipeline_config(args: RunArgs, file: &FileConfig) -> CliResult<PipelineConfig> {
    let d = PipelineConfig::default();
    let thresholds = if !args.thresholds.is_empty() {
        args.thresholds
    } else {
        file.threshold.clone().unwrap_or(d.thresholds)
    };
    Ok(PipelineConfig {
        tau: args.tau.or(file.tau).unwrap_or(d.tau),
        shift: args.shift.or(file.shift).unwrap_or(d.shift),
        thresholds,
        method: args.method.or(file.method).unwrap_or(d.method),
        hr_max_path: args.hr_max_path.or(file.hr_max_path).unwrap_or(d.hr_max_path),
        output_dir: Some(required(args.out, file.out.clone(), "out")?),
        missing_day_fraction: args
            .missing_day_fraction
            .or(file.missing_day_fraction)
            .unwrap_or(d.missing_day_fraction),
        emit_graphs: args.emit_graphs || file.emit_graphs.unwrap_or(false),
        emit_weights: args.emit_weights || file.emit_weights.unwrap_or(false),
        emit_node_series: args.emit_node_series || file.emit_node_series.unwrap_or(false),
        emit_frames: args.emit_frames || file.emit_frames.unwrap_or(false),
        keep_going: args.keep_going || file.keep_going.unwrap_or(false),
        workers: args.workers.or(file.workers),
    })
}

fn load_panel(prices: &Path, meta: &Path) -> CliResult<PricePanelF64> {
    let p = File::open(prices).map_err(|e| format!("{}: {e}", prices.display()))?;
    let m = File::open(meta).map_err(|e| format!("{}: {e}", meta.display()))?;
    Ok(load_prices(p, m)?)
}

fn run(cli: Cli) -> CliResult<()> {
    let mut file = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Run(mut args) => {
            let prices = required(args.prices.take(), file.prices.clone(), "prices")?;
            let meta = required(args.meta.take(), file.meta.clone(), "meta")?;
            let cfg = pipeline_config(args, &file)?;
            cfg.validate()?;
            let panel = load_panel(&prices, &meta)?;
            let out = fragnet::run_pipeline(&cfg, &panel)?;
            if let Some(r) = &out.clean_report {
                log::info!(
                    "dropped {} day(s), forward-filled {} cell(s)",
                    r.dropped_dates.len(),
                    r.forward_filled
                );
            }
            println!(
                "{} return days, {} frames, {} failed",
                out.num_return_days,
                out.windows.len(),
                out.failed_frames.len()
            );
            for p in &out.written {
                log::info!("wrote {}", p.display());
            }
        }
        Command::Mds(args) => {
            let prices = required(args.prices, file.prices.clone(), "prices")?;
            let meta = required(args.meta, file.meta.clone(), "meta")?;
            file.out = args.out.or(file.out.take());
            let base = pipeline_config(RunArgs::default(), &file)?;
            let panel = load_panel(&prices, &meta)?;
            let out = fragnet::run_full_period(&base, &panel)?;
            let e = &out.embedding;
            println!(
                "{} indices, eigenvalues {:?}, clamped mass {:.6}",
                out.meta.len(),
                e.eigenvalues,
                e.clamped_mass
            );
        }
        Command::IndicatorCorr(args) => {
            let input = required(args.indicators, file.indicators.clone(), "indicators")?;
            let output = required(args.out, file.out.clone(), "out")?;
            let table = read_indicators_file(&input)?;
            let corr = indicator_correlations(&table)?;
            write_indicator_correlations(&corr, &output)?;
            println!("{} columns over {} frames", corr.columns.len(), table.rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = e.source();
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
