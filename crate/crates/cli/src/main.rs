//! Command-line driver: single runs, the correlation sweep, named
//! experiments, price-series ingestion, and the payoff matrix.

mod cli_config;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use bubblelab_core::analytics::{
    autocorrelation, burn_in_cutoff, geometric_mean_return, gross_returns, ingest_price_series,
    parse_price_series, payoff_matrix, predicted_mean_return, predicted_risk_growth,
    sample_sweep_grid, sweep_correlations, SignClass,
};
use bubblelab_core::experiments::{
    run_experiment, ExperimentName, ExperimentSpec, DEFAULT_EXPERIMENT_SEED,
};
use bubblelab_core::{ActivePolicy, ModelConfig};
use cli_config::CliConfig;

#[derive(Parser)]
#[command(name = "bubblelab")]
#[command(about = "Agent-based simulator of adaptive speculative-trading bubbles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its trace and summary
    Run(RunArgs),
    /// Sweep the (alpha, beta) plane and correlate mean returns with volatility
    Sweep(SweepArgs),
    /// Run a named experiment and check its expectations
    Experiment(ExperimentArgs),
    /// Ingest a daily price series (date,price CSV) and compute windowed statistics
    Ingest(IngestArgs),
    /// Print the stay-or-sell payoff matrix
    Payoff(PayoffArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (TOML)
    #[arg(long)]
    config: Option<PathBuf>,

    /// Seed override
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory (overrides BUBBLELAB_OUT and the config file)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Periods to simulate (overrides the config file)
    #[arg(long)]
    periods: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Number of (alpha, beta) cells
    #[arg(long)]
    cells: Option<usize>,

    /// Active counts to sweep (repeatable)
    #[arg(long = "active", value_name = "M")]
    active_counts: Vec<usize>,

    /// Worker threads for the cell fan-out (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// One of: fig1-top, fig1-mid, fig1-bottom, fig2, fig3, fig4, fig5, table1, table2
    name: String,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct IngestArgs {
    /// CSV file of `date,price` rows (ISO dates, header optional)
    file: PathBuf,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct PayoffArgs {
    /// Initial bond account
    #[arg(long, default_value_t = 100.0)]
    b0: f64,

    /// Initial stock account
    #[arg(long, default_value_t = 100.0)]
    s0: f64,

    /// Annual gross return
    #[arg(long = "return", default_value_t = 1.1)]
    annual_return: f64,

    /// Years of growth
    #[arg(long, default_value_t = 10)]
    years: u32,

    /// Fraction of the stock value a staying agent recovers
    #[arg(long, default_value_t = 0.1)]
    recovery: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Payoff(args) => cmd_payoff(args),
    };
    match outcome {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<CliConfig, String> {
    match &common.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
            CliConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
        }
        None => Ok(CliConfig::default()),
    }
}

/// Output directory precedence: --out, then BUBBLELAB_OUT, then the config
/// file, then ./out.
fn output_dir(common: &CommonArgs, config: &CliConfig) -> PathBuf {
    if let Some(dir) = &common.out {
        return dir.clone();
    }
    if let Ok(dir) = std::env::var("BUBBLELAB_OUT") {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    config
        .output_dir
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn resolve_seed(common: &CommonArgs, config: &CliConfig) -> u64 {
    common
        .seed
        .or(config.seed)
        .unwrap_or(DEFAULT_EXPERIMENT_SEED)
}

fn write_text(path: &Path, text: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| format!("creating {}: {e}", parent.display()))?;
    }
    let mut file =
        fs::File::create(path).map_err(|e| format!("creating {}: {e}", path.display()))?;
    file.write_all(text.as_bytes())
        .map_err(|e| format!("writing {}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let json = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    write_text(path, &(json + "\n"))
}

#[derive(Serialize)]
struct RunReport {
    seed: u64,
    config: ModelConfig,
    final_price: f64,
    burn_in_cutoff: usize,
    geometric_mean_per_period: f64,
    geometric_mean_annualized: f64,
    predicted_mean_return_annual: f64,
    predicted_risk_growth_annual: f64,
    lag1_autocorrelation: Option<f64>,
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, String> {
    let config = load_config(&args.common)?;
    let seed = resolve_seed(&args.common, &config);
    let dir = output_dir(&args.common, &config).join("run");

    let mut model = config.model_config(seed)?;
    if let Some(periods) = args.periods {
        model.horizon_periods = periods;
        model.validate().map_err(|e| e.to_string())?;
    }

    let trace = bubblelab_core::run(&model).map_err(|e| e.to_string())?;

    let mut csv = String::from(
        "period,price_before,price_after,gross_return,dollar_volume,mean_target_ratio,active,traded\n",
    );
    for r in &trace.records {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.period,
            r.price_before,
            r.price_after,
            r.gross_return,
            r.dollar_volume,
            r.mean_target_ratio,
            r.active_indices.len(),
            r.traded
        ));
    }
    write_text(&dir.join("trace.csv"), &csv)?;

    let series = gross_returns(&trace).map_err(|e| e.to_string())?;
    let report = RunReport {
        seed,
        final_price: trace.final_price(),
        burn_in_cutoff: burn_in_cutoff(&series),
        geometric_mean_per_period: geometric_mean_return(&series, false)
            .map_err(|e| e.to_string())?,
        geometric_mean_annualized: geometric_mean_return(&series, true)
            .map_err(|e| e.to_string())?,
        predicted_mean_return_annual: predicted_mean_return(&model),
        predicted_risk_growth_annual: predicted_risk_growth(&model),
        lag1_autocorrelation: autocorrelation(&series, 1).ok().map(|acf| acf[1]),
        config: model,
    };
    write_json(&dir.join("report.json"), &report)?;

    println!(
        "run: {} periods, final price {}, geometric mean {:.6}/period ({:.6}/year, closed form {:.6})",
        trace.records.len(),
        report.final_price,
        report.geometric_mean_per_period,
        report.geometric_mean_annualized,
        report.predicted_mean_return_annual
    );
    println!("wrote {}", dir.join("trace.csv").display());
    println!("wrote {}", dir.join("report.json").display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SweepReport {
    seed: u64,
    cells: usize,
    seeds_per_cell: u32,
    cell_periods: usize,
    alpha_range: (f64, f64),
    beta_range: (f64, f64),
    results: Vec<SweepRunSummary>,
}

#[derive(Serialize)]
struct SweepRunSummary {
    active_count: usize,
    positive_correlation: Option<f64>,
    negative_correlation: Option<f64>,
    positive_cells: usize,
    negative_cells: usize,
    file: String,
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, String> {
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let config = load_config(&args.common)?;
    let seed = resolve_seed(&args.common, &config);
    let dir = output_dir(&args.common, &config).join("sweep");

    let cells = args.cells.or(config.sweep.cells).unwrap_or(1000);
    let seeds_per_cell = config.sweep.seeds_per_cell.unwrap_or(1);
    let cell_periods = config.sweep.cell_periods.unwrap_or(500);
    let alpha_range = (
        config.sweep.alpha_min.unwrap_or(0.8),
        config.sweep.alpha_max.unwrap_or(1.5),
    );
    let beta_range = (
        config.sweep.beta_min.unwrap_or(0.8),
        config.sweep.beta_max.unwrap_or(1.5),
    );
    let active_counts = if args.active_counts.is_empty() {
        config.sweep.active_counts.clone().unwrap_or(vec![10, 50])
    } else {
        args.active_counts.clone()
    };

    let mut base = config.model_config(seed)?;
    base.horizon_periods = cell_periods;
    let grid = sample_sweep_grid(cells, alpha_range, beta_range, seed);

    let mut results = Vec::new();
    for active in active_counts {
        let mut cell_config = base.clone();
        cell_config.active_policy = ActivePolicy::Fixed(active);
        cell_config.validate().map_err(|e| e.to_string())?;
        let sweep =
            sweep_correlations(&cell_config, &grid, seeds_per_cell).map_err(|e| e.to_string())?;

        let file = format!("cells_m{active}.csv");
        let mut csv = String::from("alpha,beta,mean_log_return,std_log_return,class\n");
        for cell in &sweep.cells {
            let class = match cell.class {
                Some(SignClass::Positive) => "positive",
                Some(SignClass::Negative) => "negative",
                None => "zero",
            };
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                cell.alpha, cell.beta, cell.mean_log_return, cell.std_log_return, class
            ));
        }
        write_text(&dir.join(&file), &csv)?;

        println!(
            "m={active}: positive-class corr {:?}, negative-class corr {:?}",
            sweep.positive_correlation, sweep.negative_correlation
        );
        results.push(SweepRunSummary {
            active_count: active,
            positive_correlation: sweep.positive_correlation,
            negative_correlation: sweep.negative_correlation,
            positive_cells: sweep
                .cells
                .iter()
                .filter(|c| c.class == Some(SignClass::Positive))
                .count(),
            negative_cells: sweep
                .cells
                .iter()
                .filter(|c| c.class == Some(SignClass::Negative))
                .count(),
            file,
        });
    }

    let report = SweepReport {
        seed,
        cells,
        seeds_per_cell,
        cell_periods,
        alpha_range,
        beta_range,
        results,
    };
    write_json(&dir.join("report.json"), &report)?;
    println!("wrote {}", dir.join("report.json").display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode, String> {
    let name: ExperimentName = args.name.parse().map_err(|e| format!("{e}"))?;
    let config = load_config(&args.common)?;
    let seed = resolve_seed(&args.common, &config);
    let dir = output_dir(&args.common, &config);

    let spec = ExperimentSpec::new(name, dir.clone())
        .with_seed(seed)
        .with_overrides(config.overrides()?);
    let report = run_experiment(&spec).map_err(|e| e.to_string())?;

    for check in &report.checks {
        let status = if check.passed { "pass" } else { "FAIL" };
        println!(
            "{status}: {} (expected {}, measured {})",
            check.name, check.expected, check.measured
        );
    }
    println!(
        "{}: {} (report {})",
        name,
        if report.passed { "pass" } else { "FAIL" },
        dir.join(name.as_str()).join("report.json").display()
    );
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_ingest(args: IngestArgs) -> Result<ExitCode, String> {
    let config = load_config(&args.common)?;
    let dir = output_dir(&args.common, &config).join("ingest");

    let text = fs::read_to_string(&args.file)
        .map_err(|e| format!("reading {}: {e}", args.file.display()))?;
    let rows = parse_price_series(&text).map_err(|e| e.to_string())?;
    let result = ingest_price_series(&rows).map_err(|e| e.to_string())?;

    let mut csv = String::from("start_date,end_date,mean_log_return,std_log_return\n");
    for window in &result.windows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            window.start_date, window.end_date, window.mean_log_return, window.std_log_return
        ));
    }
    write_text(&dir.join("windows.csv"), &csv)?;
    write_json(&dir.join("report.json"), &result)?;

    println!(
        "{} prices, {} returns, {} semi-annual windows",
        result.n_prices,
        result.n_returns,
        result.windows.len()
    );
    println!(
        "positive-class corr {:?}, negative-class corr {:?}",
        result.positive_correlation, result.negative_correlation
    );
    println!("wrote {}", dir.join("windows.csv").display());
    println!("wrote {}", dir.join("report.json").display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_payoff(args: PayoffArgs) -> Result<ExitCode, String> {
    let matrix = payoff_matrix(
        args.b0,
        args.s0,
        args.annual_return,
        args.years,
        args.recovery,
    )
    .map_err(|e| e.to_string())?;
    println!(
        "payoff matrix after {} years at annual return {} (b0 {}, s0 {}, recovery {}):",
        args.years, args.annual_return, args.b0, args.s0, args.recovery
    );
    println!("{:>12} {:>14} {:>14}", "", "market stay", "market sell");
    println!(
        "{:>12} {:>14.2} {:>14.2}",
        "agent stay", matrix.stay_stay, matrix.stay_sell
    );
    println!(
        "{:>12} {:>14.2} {:>14.2}",
        "agent sell", matrix.sell_stay, matrix.sell_sell
    );
    Ok(ExitCode::SUCCESS)
}
