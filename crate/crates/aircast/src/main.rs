//! Command-line interface: dataset preparation, the individual model
//! runners, metric evaluation and the full multi-station benchmark.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use aircast::additive::{self, AdditiveConfig, SeasonalityMode};
use aircast::arima::{self, ArimaFit};
use aircast::bench::{self, ModelFamily, RunConfig};
use aircast::dataset::{self, DailyDataset, ScalerState};
use aircast::metrics::MetricRow;
use aircast::neural::{self, Activation, NetworkKind, NetworkSpec};
use aircast::stationarity::{self, Regression};

const DATA_DIR_ENV: &str = "AIRCAST_DATA_DIR";

#[derive(Parser)]
#[command(
    name = "aircast",
    about = "PM2.5 forecasting models and a multi-station benchmark harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a raw hourly station CSV into a daily dataset plus sidecar
    Prepare(PrepareArgs),
    /// Augmented Dickey-Fuller unit-root test on a single-column CSV
    Adf(AdfArgs),
    /// Automatic ARIMA order search and forecasting on a daily dataset
    Arima(ArimaArgs),
    /// Additive trend/seasonality model fits and forecasts
    Additive(AdditiveArgs),
    /// Train an LSTM or 1D-CNN and forecast the held-out tail
    Nn(NnArgs),
    /// Evaluate a two-column actual,predicted CSV
    Eval(EvalArgs),
    /// Run the full benchmark across stations and emit reports
    Bench(BenchArgs),
}

#[derive(Args)]
struct PrepareArgs {
    /// Raw hourly station CSV (18 columns, NA for missing)
    #[arg(long)]
    input: PathBuf,
    /// Cleaned daily dataset destination
    #[arg(long)]
    out_csv: PathBuf,
    /// Sidecar JSON destination (wd mapping + scaler states)
    #[arg(long)]
    out_sidecar: PathBuf,
    /// Fraction of days forming the pre-test block the scalers see
    #[arg(long, default_value_t = 0.75)]
    train_fraction: f64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum RegressionArg {
    C,
    Ct,
}

#[derive(Args)]
struct AdfArgs {
    /// Single-column CSV of the series (header tolerated)
    #[arg(long)]
    input: PathBuf,
    /// Lag ceiling for the AIC search; Schwert's rule when omitted
    #[arg(long)]
    max_lag: Option<usize>,
    /// Deterministic terms: c (constant) or ct (constant+trend)
    #[arg(long, value_enum, default_value = "ct")]
    regression: RegressionArg,
}

#[derive(Args)]
struct ArimaArgs {
    /// Cleaned daily dataset CSV (date,PM2.5,features...)
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 5)]
    p_max: usize,
    #[arg(long, default_value_t = 5)]
    q_max: usize,
    #[arg(long, default_value_t = 0)]
    d: usize,
    /// Days held out from the end and forecast with their features
    #[arg(long, default_value_t = 0)]
    horizon: usize,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Additive,
    Multiplicative,
}

#[derive(Args)]
struct AdditiveArgs {
    /// Cleaned daily dataset CSV (date,PM2.5,features...)
    #[arg(long)]
    input: PathBuf,
    /// JSON file with a list of configurations to sweep
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Sweep the built-in 144-cell default grid
    #[arg(long, conflicts_with = "grid")]
    default_grid: bool,
    /// Days held out from the end and forecast with their features
    #[arg(long, default_value_t = 0)]
    horizon: usize,
    #[arg(long, default_value_t = 25)]
    n_changepoints: usize,
    #[arg(long, default_value_t = 0.8)]
    changepoint_range: f64,
    #[arg(long, default_value_t = 0.05)]
    trend_flexibility: f64,
    #[arg(long, default_value_t = 10.0)]
    seasonality_strength: f64,
    #[arg(long, value_enum, default_value = "additive")]
    mode: ModeArg,
    #[arg(long, default_value_t = 10)]
    yearly_order: usize,
    #[arg(long, default_value_t = 3)]
    weekly_order: usize,
    #[arg(long, default_value_t = 0.95)]
    interval_width: f64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Lstm,
    Cnn,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ActivationArg {
    Tanh,
    Relu,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Activation {
        match a {
            ActivationArg::Tanh => Activation::Tanh,
            ActivationArg::Relu => Activation::Relu,
        }
    }
}

#[derive(Args)]
struct NnArgs {
    /// Cleaned daily dataset CSV (date,PM2.5,features...)
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, value_enum, default_value = "tanh")]
    activation: ActivationArg,
    #[arg(long, default_value_t = 1)]
    lookback: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 128)]
    units: usize,
    #[arg(long, default_value_t = 128)]
    filters: usize,
    /// Days held out from the end and forecast after training
    #[arg(long, default_value_t = 0)]
    horizon: usize,
    /// Fraction of the training block used for validation
    #[arg(long, default_value_t = 0.2)]
    validation_fraction: f64,
    /// Persist the trained parameters to this path
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Two-column CSV: actual,predicted (header tolerated)
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory with PRSA_Data_<Station>_*.csv files
    /// (defaults to $AIRCAST_DATA_DIR)
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Report output directory
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated station subset (default: all 12)
    #[arg(long, value_delimiter = ',')]
    stations: Vec<String>,
    /// Comma-separated family subset: additive,arima,lstm,cnn
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rayon worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0.75)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0.20)]
    validation_fraction: f64,
    /// Comma-separated epoch budgets for the deep sweeps
    #[arg(long, value_delimiter = ',')]
    epochs: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    activations: Vec<String>,
    #[arg(long, default_value_t = 5)]
    p_max: usize,
    #[arg(long, default_value_t = 5)]
    q_max: usize,
    #[arg(long, default_value_t = 0)]
    d: usize,
    /// JSON file overriding the additive hyperparameter grid
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    lstm_units: usize,
    #[arg(long, default_value_t = 128)]
    conv_filters: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Prepare(args) => prepare(args),
        Command::Adf(args) => adf(args),
        Command::Arima(args) => arima_cmd(args),
        Command::Additive(args) => additive_cmd(args),
        Command::Nn(args) => nn(args),
        Command::Eval(args) => eval(args),
        Command::Bench(args) => bench_cmd(args),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

#[derive(Serialize)]
struct PrepareSidecar {
    station: String,
    wd_mapping: Vec<(String, u32)>,
    train_fraction: f64,
    scaler_rows: usize,
    feature_scaler: ScalerState,
    target_scaler: ScalerState,
}

fn prepare(args: PrepareArgs) -> Result<()> {
    let file = std::fs::File::open(&args.input)
        .with_context(|| format!("opening {}", args.input.display()))?;
    let raw = dataset::parse_station_csv(std::io::BufReader::new(file))?;
    let filled = dataset::forward_fill(&raw)?;
    let encoded = dataset::encode_wind_direction(&filled)?;
    let daily = dataset::aggregate_daily(&encoded)?;

    let block_len = ((daily.len() as f64) * args.train_fraction).floor() as usize;
    if block_len == 0 {
        bail!("train fraction {} leaves an empty scaling block", args.train_fraction);
    }
    let block = daily.slice(0, block_len);
    let sidecar = PrepareSidecar {
        station: encoded.station.clone(),
        wd_mapping: encoded.wd_mapping.clone().unwrap_or_default(),
        train_fraction: args.train_fraction,
        scaler_rows: block_len,
        feature_scaler: ScalerState::fit(&block.features, &block.feature_names)?,
        target_scaler: ScalerState::fit_series(&block.target, dataset::TARGET_COLUMN)?,
    };

    let out = std::fs::File::create(&args.out_csv)
        .with_context(|| format!("creating {}", args.out_csv.display()))?;
    daily.write_csv(std::io::BufWriter::new(out))?;
    std::fs::write(&args.out_sidecar, serde_json::to_string_pretty(&sidecar)?)?;
    eprintln!(
        "wrote {} daily rows to {} (sidecar {})",
        daily.len(),
        args.out_csv.display(),
        args.out_sidecar.display()
    );
    Ok(())
}

fn read_single_column(path: &PathBuf) -> Result<Vec<f64>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let cell = line.split(',').next().unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => continue, // header
            Err(_) => bail!("line {}: cannot parse '{cell}' as a number", i + 1),
        }
    }
    if values.is_empty() {
        bail!("no numeric rows in {}", path.display());
    }
    Ok(values)
}

fn adf(args: AdfArgs) -> Result<()> {
    let series = read_single_column(&args.input)?;
    let regression = match args.regression {
        RegressionArg::C => Regression::Constant,
        RegressionArg::Ct => Regression::ConstantTrend,
    };
    let result = stationarity::adf_test(&series, args.max_lag, regression)?;
    print_json(&result)
}

#[derive(Serialize)]
struct ArimaSummary<'a> {
    spec: &'a arima::ArimaSpec,
    intercept: f64,
    ar_coefficients: &'a [f64],
    ma_coefficients: &'a [f64],
    exog_coefficients: &'a [f64],
    innovation_variance: f64,
    log_likelihood: f64,
    aic: f64,
    warnings: &'a [String],
}

impl<'a> From<&'a ArimaFit> for ArimaSummary<'a> {
    fn from(fit: &'a ArimaFit) -> Self {
        ArimaSummary {
            spec: &fit.spec,
            intercept: fit.intercept,
            ar_coefficients: &fit.ar_coefficients,
            ma_coefficients: &fit.ma_coefficients,
            exog_coefficients: &fit.exog_coefficients,
            innovation_variance: fit.innovation_variance,
            log_likelihood: fit.log_likelihood,
            aic: fit.aic,
            warnings: &fit.warnings,
        }
    }
}

fn load_daily(path: &PathBuf) -> Result<DailyDataset> {
    let file =
        std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(DailyDataset::read_csv(std::io::BufReader::new(file))?)
}

fn split_horizon(data: &DailyDataset, horizon: usize) -> Result<(DailyDataset, DailyDataset)> {
    if horizon >= data.len() {
        bail!("horizon {horizon} does not leave any training rows");
    }
    Ok((data.slice(0, data.len() - horizon), data.slice(data.len() - horizon, data.len())))
}

fn arima_cmd(args: ArimaArgs) -> Result<()> {
    let daily = load_daily(&args.input)?;
    let (train, holdout) = split_horizon(&daily, args.horizon)?;
    let search =
        arima::auto_arima(&train.target, &train.features, args.p_max, args.q_max, args.d)?;
    let forecast = if args.horizon > 0 {
        arima::forecast_arima(&search.best, args.horizon, &holdout.features)?
    } else {
        Vec::new()
    };

    #[derive(Serialize)]
    struct Output<'a> {
        fit: ArimaSummary<'a>,
        cells: &'a [arima::OrderCell],
        forecast_dates: Vec<String>,
        forecast: Vec<f64>,
        holdout_metrics: Option<MetricRow>,
    }
    let holdout_metrics = if args.horizon > 0 {
        Some(MetricRow::evaluate(&holdout.target, &forecast)?)
    } else {
        None
    };
    print_json(&Output {
        fit: ArimaSummary::from(&search.best),
        cells: &search.cells,
        forecast_dates: holdout.dates.iter().map(|d| d.to_string()).collect(),
        forecast,
        holdout_metrics,
    })
}

fn additive_cmd(args: AdditiveArgs) -> Result<()> {
    let daily = load_daily(&args.input)?;
    let (train, holdout) = split_horizon(&daily, args.horizon)?;
    let grid: Vec<AdditiveConfig> = if let Some(path) = &args.grid {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).context("parsing grid JSON")?
    } else if args.default_grid {
        additive::hyperparameter_grid()
    } else {
        vec![AdditiveConfig {
            n_changepoints: args.n_changepoints,
            changepoint_range: args.changepoint_range,
            trend_flexibility: args.trend_flexibility,
            seasonality_strength: args.seasonality_strength,
            seasonality_mode: match args.mode {
                ModeArg::Additive => SeasonalityMode::Additive,
                ModeArg::Multiplicative => SeasonalityMode::Multiplicative,
            },
            yearly_order: args.yearly_order,
            weekly_order: args.weekly_order,
            interval_width: args.interval_width,
        }]
    };

    #[derive(Serialize)]
    struct CellOutput {
        config: AdditiveConfig,
        residual_std: Option<f64>,
        holdout_metrics: Option<MetricRow>,
        forecast: Option<additive::ForecastResult>,
        error: Option<String>,
    }
    let mut outputs = Vec::with_capacity(grid.len());
    for config in grid {
        match additive::fit_additive(&train, &config) {
            Ok(fit) => {
                let forecast = if args.horizon > 0 {
                    Some(additive::predict_additive(&fit, &holdout.dates, &holdout.features)?)
                } else {
                    None
                };
                let holdout_metrics = forecast
                    .as_ref()
                    .map(|f| MetricRow::evaluate(&holdout.target, &f.point))
                    .transpose()?;
                outputs.push(CellOutput {
                    config,
                    residual_std: Some(fit.residual_std),
                    holdout_metrics,
                    forecast,
                    error: None,
                });
            }
            Err(err) => outputs.push(CellOutput {
                config,
                residual_std: None,
                holdout_metrics: None,
                forecast: None,
                error: Some(err.to_string()),
            }),
        }
    }
    print_json(&outputs)
}

fn nn(args: NnArgs) -> Result<()> {
    let daily = load_daily(&args.input)?;
    let (block, holdout) = split_horizon(&daily, args.horizon)?;
    let val_len = ((block.len() as f64) * args.validation_fraction).floor() as usize;
    let train_len = block.len() - val_len;
    if train_len == 0 {
        bail!("validation fraction leaves no training rows");
    }
    let train = block.slice(0, train_len);
    let validation = block.slice(train_len, block.len());

    let feature_scaler = ScalerState::fit(&block.features, &block.feature_names)?;
    let target_scaler = ScalerState::fit_series(&block.target, dataset::TARGET_COLUMN)?;
    let spec = NetworkSpec {
        kind: match args.kind {
            KindArg::Lstm => NetworkKind::Lstm,
            KindArg::Cnn => NetworkKind::Cnn1d,
        },
        lstm_units: args.units,
        lstm_activation: args.activation.into(),
        conv_filters: args.filters,
        conv_kernel: 2,
        pool_size: 2,
        dense_hidden: 64,
        lookback: args.lookback,
        seed: args.seed,
        batch_size: args.batch,
        epochs: args.epochs,
        adam: Default::default(),
    };

    let train_features = feature_scaler.transform(&train.features)?;
    let train_target = target_scaler.transform_series(&train.target)?;
    let val_features = feature_scaler.transform(&validation.features)?;
    let val_target = target_scaler.transform_series(&validation.target)?;
    let validation_pair = if val_len > 0 {
        Some((val_features.as_slice(), val_target.as_slice()))
    } else {
        None
    };
    let fit = neural::build_and_train(
        &spec,
        &train_features,
        &train_target,
        validation_pair,
        &target_scaler,
        &feature_scaler,
    )?;

    let forecast = if args.horizon > 0 {
        let holdout_features = feature_scaler.transform(&holdout.features)?;
        neural::predict_network(&fit, &holdout_features, &feature_scaler)?
    } else {
        Vec::new()
    };
    let holdout_metrics = if args.horizon > 0 {
        Some(MetricRow::evaluate(&holdout.target, &forecast)?)
    } else {
        None
    };
    if let Some(path) = &args.save {
        neural::save_network(&fit, path)?;
        eprintln!("saved model to {}", path.display());
    }

    #[derive(Serialize)]
    struct Output {
        spec: NetworkSpec,
        final_train_mae: Option<f64>,
        final_validation_mae: Option<f64>,
        clip_events: u64,
        forecast_dates: Vec<String>,
        forecast: Vec<f64>,
        holdout_metrics: Option<MetricRow>,
    }
    print_json(&Output {
        final_train_mae: fit.train_loss_history.last().copied(),
        final_validation_mae: fit.validation_loss_history.last().copied(),
        clip_events: fit.clip_events,
        spec: fit.spec,
        forecast_dates: holdout.dates.iter().map(|d| d.to_string()).collect(),
        forecast,
        holdout_metrics,
    })
}

fn eval(args: EvalArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let mut actual = Vec::new();
    let mut predicted = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() < 2 {
            continue;
        }
        match (cells[0].parse::<f64>(), cells[1].parse::<f64>()) {
            (Ok(a), Ok(p)) => {
                actual.push(a);
                predicted.push(p);
            }
            _ if i == 0 => continue, // header
            _ => bail!("line {}: expected two numbers, got '{line}'", i + 1),
        }
    }
    print_json(&MetricRow::evaluate(&actual, &predicted)?)
}

fn bench_cmd(args: BenchArgs) -> Result<()> {
    let data_dir = args
        .data_dir
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .with_context(|| format!("pass --data-dir or set ${DATA_DIR_ENV}"))?;
    if let Some(workers) = args.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("configuring worker pool")?;
    }

    let mut config = RunConfig::new(data_dir, args.out.clone());
    config.seed = args.seed;
    config.workers = args.workers;
    config.train_fraction = args.train_fraction;
    config.validation_fraction = args.validation_fraction;
    config.p_max = args.p_max;
    config.q_max = args.q_max;
    config.d = args.d;
    config.lstm_units = args.lstm_units;
    config.conv_filters = args.conv_filters;
    config.batch_size = args.batch;
    if !args.stations.is_empty() {
        config.stations = args.stations.clone();
    }
    if !args.epochs.is_empty() {
        config.epochs_sweep = args.epochs.clone();
    }
    if !args.models.is_empty() {
        config.models = args
            .models
            .iter()
            .map(|m| match m.as_str() {
                "additive" | "fbprophet" | "prophet" => Ok(ModelFamily::Additive),
                "arima" => Ok(ModelFamily::Arima),
                "lstm" => Ok(ModelFamily::Lstm),
                "cnn" => Ok(ModelFamily::Cnn),
                other => bail!("unknown model family '{other}'"),
            })
            .collect::<Result<Vec<_>>>()?;
    }
    if !args.activations.is_empty() {
        config.activations = args
            .activations
            .iter()
            .map(|a| match a.as_str() {
                "tanh" => Ok(Activation::Tanh),
                "relu" => Ok(Activation::Relu),
                other => bail!("unknown activation '{other}'"),
            })
            .collect::<Result<Vec<_>>>()?;
    }
    if let Some(path) = &args.grid {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        config.additive_grid = serde_json::from_str(&text).context("parsing grid JSON")?;
    }

    let report = bench::run_bench(&config)?;
    let paths = bench::emit_report(&report, &args.out)?;
    eprintln!("wrote {} report files under {}", paths.len(), args.out.display());
    for (family, m) in &report.averages {
        println!(
            "{:<10} rmse={:8.3} mae={:8.3} mape={:8.3} rrse={:6.4}",
            family.label(),
            m.rmse,
            m.mae,
            m.mape,
            m.rrse
        );
    }
    Ok(())
}
