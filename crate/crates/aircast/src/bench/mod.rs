//! End-to-end benchmark orchestration: per-station pipeline from raw
//! CSV through model sweeps to evaluated forecasts, sweep-winner
//! selection, cross-station averaging and report emission.

mod report;
mod svg;

pub use report::emit_report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::additive::{self, AdditiveConfig, SeasonalityMode};
use crate::arima::{self, ArimaSpec, OrderCell};
use crate::dataset::{self, DailyDataset, ScalerState};
use crate::metrics::MetricRow;
use crate::neural::{self, Activation, NetworkKind, NetworkSpec};
use crate::stationarity::{self, AdfResult, Regression};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("station {station}: {source}")]
    Station {
        station: String,
        #[source]
        source: Box<BenchError>,
    },
    #[error("no CSV matching PRSA_Data_{station}_*.csv under {dir}")]
    MissingStation { station: String, dir: PathBuf },
    #[error("selection over an empty or fully-failed row set")]
    Selection,
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Stationarity(#[from] stationarity::StationarityError),
    #[error(transparent)]
    Arima(#[from] arima::ArimaError),
    #[error(transparent)]
    Additive(#[from] additive::AdditiveError),
    #[error(transparent)]
    Neural(#[from] neural::NeuralError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}

pub type Result<T> = std::result::Result<T, BenchError>;

fn with_station<T>(station: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| BenchError::Station {
        station: station.to_string(),
        source: Box::new(e),
    })
}

/// The twelve monitoring sites of the source dataset.
pub const DEFAULT_STATIONS: [&str; 12] = [
    "Aotizhongxin",
    "Changping",
    "Dingling",
    "Dongsi",
    "Guanyuan",
    "Gucheng",
    "Huairou",
    "Nongzhanguan",
    "Shunyi",
    "Tiantan",
    "Wanliu",
    "Wanshouxigong",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Additive,
    Arima,
    Lstm,
    Cnn,
}

impl ModelFamily {
    pub fn label(self) -> &'static str {
        match self {
            ModelFamily::Additive => "FBProphet",
            ModelFamily::Arima => "ARIMA",
            ModelFamily::Lstm => "LSTM",
            ModelFamily::Cnn => "CNN",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            ModelFamily::Additive => "additive",
            ModelFamily::Arima => "arima",
            ModelFamily::Lstm => "lstm",
            ModelFamily::Cnn => "cnn",
        }
    }
}

pub const ALL_FAMILIES: [ModelFamily; 4] = [
    ModelFamily::Additive,
    ModelFamily::Arima,
    ModelFamily::Lstm,
    ModelFamily::Cnn,
];

/// Everything a full benchmark run needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    pub stations: Vec<String>,
    pub models: Vec<ModelFamily>,
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub epochs_sweep: Vec<usize>,
    pub activations: Vec<Activation>,
    pub seed: u64,
    pub p_max: usize,
    pub q_max: usize,
    pub d: usize,
    pub adf_regression: Regression,
    /// Additive sweep; defaults to the 144-cell grid.
    pub additive_grid: Vec<AdditiveConfig>,
    pub lstm_units: usize,
    pub conv_filters: usize,
    pub batch_size: usize,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn new(data_dir: PathBuf, output_dir: PathBuf) -> RunConfig {
        RunConfig {
            data_dir,
            output_dir,
            stations: DEFAULT_STATIONS.iter().map(|s| s.to_string()).collect(),
            models: ALL_FAMILIES.to_vec(),
            train_fraction: 0.75,
            validation_fraction: 0.20,
            epochs_sweep: vec![200, 400, 600, 800, 1000],
            activations: vec![Activation::Tanh, Activation::Relu],
            seed: 0,
            p_max: 5,
            q_max: 5,
            d: 0,
            adf_regression: Regression::ConstantTrend,
            additive_grid: additive::hyperparameter_grid(),
            lstm_units: 128,
            conv_filters: 128,
            batch_size: 32,
            workers: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs_sweep.is_empty() {
            return Err(BenchError::Config("epochs sweep is empty".into()));
        }
        if self.stations.is_empty() {
            return Err(BenchError::Config("no stations requested".into()));
        }
        if self.models.is_empty() {
            return Err(BenchError::Config("no model families requested".into()));
        }
        Ok(())
    }
}

/// One sweep cell's outcome on one station.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub station: String,
    pub family: ModelFamily,
    /// Human-readable hyperparameter summary of the cell.
    pub cell: String,
    /// Selection criterion value (validation MAE, validation RMSE or
    /// AIC depending on the family); lower is better.
    pub selection_score: Option<f64>,
    /// Test-set metrics in µg/m³; absent for failed cells.
    pub metrics: Option<MetricRow>,
    pub error: Option<String>,
    pub selected: bool,
}

/// Test-window plot series for one station.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationPlotData {
    pub station: String,
    pub dates: Vec<NaiveDate>,
    pub actual: Vec<f64>,
    /// (family, point forecast) for each selected model.
    pub series: Vec<(ModelFamily, Vec<f64>)>,
    /// Additive-model interval band, when that family ran.
    pub band: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationManifest {
    pub station: String,
    pub n_days: usize,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub train_len: usize,
    pub validation_len: usize,
    pub test_len: usize,
    pub adf: AdfResult,
    pub wd_mapping: Vec<(String, u32)>,
    /// Sweep cell counts per family.
    pub sweep_cardinality: BTreeMap<String, usize>,
    pub arima_cells: Vec<OrderCell>,
    /// FNV-1a checksum of the train+validation block every fit saw.
    pub selection_inputs_checksum: String,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    /// Winner-picking rule per family.
    pub selection_policy: BTreeMap<String, String>,
    pub stations: Vec<StationManifest>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct StationReport {
    pub rows: Vec<ReportRow>,
    pub plot: StationPlotData,
    pub manifest: StationManifest,
}

/// Full benchmark outcome across stations.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    /// Arithmetic mean of the selected rows' metrics per family.
    pub averages: Vec<(ModelFamily, MetricRow)>,
    /// Per-LSTM-activation averages of the best cell per station.
    pub activation_averages: Vec<(String, MetricRow)>,
    pub plots: Vec<StationPlotData>,
    pub manifest: Manifest,
}

// FNV-1a over the little-endian bytes of the block's dates and values.
fn fnv1a_extend(hash: &mut u64, bytes: &[u8]) {
    for &b in bytes {
        *hash ^= b as u64;
        *hash = hash.wrapping_mul(0x100000001b3);
    }
}

/// Checksum of everything model fitting is allowed to see.
pub fn dataset_checksum(data: &DailyDataset) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for (i, date) in data.dates.iter().enumerate() {
        let days = (*date - NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()).num_days();
        fnv1a_extend(&mut hash, &days.to_le_bytes());
        fnv1a_extend(&mut hash, &data.target[i].to_bits().to_le_bytes());
        for v in &data.features[i] {
            fnv1a_extend(&mut hash, &v.to_bits().to_le_bytes());
        }
    }
    hash
}

/// Index of the winning row: minimal selection score, ties to the
/// earliest row. Rows without a score (failed cells) never win.
pub fn select_best(rows: &[ReportRow]) -> Result<usize> {
    rows.iter()
        .enumerate()
        .filter_map(|(i, r)| r.selection_score.map(|s| (i, s)))
        .filter(|(i, _)| rows[*i].metrics.is_some())
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .ok_or(BenchError::Selection)
}

fn additive_cell_label(config: &AdditiveConfig) -> String {
    let mode = match (config.seasonality_mode, config.weekly_order) {
        (SeasonalityMode::Additive, 0) => "additive_no_weekly",
        (SeasonalityMode::Additive, _) => "additive",
        (SeasonalityMode::Multiplicative, _) => "multiplicative",
    };
    format!(
        "flex={} strength={} cp={} mode={mode}",
        config.trend_flexibility, config.seasonality_strength, config.n_changepoints
    )
}

fn locate_station_csv(data_dir: &Path, station: &str) -> Result<PathBuf> {
    let prefix = format!("PRSA_Data_{station}_");
    let exact = format!("PRSA_Data_{station}.csv");
    let mut candidates: Vec<PathBuf> = std::fs::read_dir(data_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.ends_with(".csv") && (n.starts_with(&prefix) || n == exact))
                .unwrap_or(false)
        })
        .collect();
    candidates.sort();
    candidates.into_iter().next().ok_or_else(|| BenchError::MissingStation {
        station: station.to_string(),
        dir: data_dir.to_path_buf(),
    })
}

type Band = (Vec<f64>, Vec<f64>);

struct FamilyOutcome {
    rows: Vec<ReportRow>,
    /// forecast (and optional band) of each row's model on the test window
    forecasts: Vec<Option<(Vec<f64>, Option<Band>)>>,
}

fn evaluate_forecast(test: &DailyDataset, forecast: &[f64]) -> std::result::Result<MetricRow, String> {
    MetricRow::evaluate(&test.target, forecast).map_err(|e| e.to_string())
}

fn run_additive_family(
    station: &str,
    config: &RunConfig,
    train: &DailyDataset,
    validation: &DailyDataset,
    test: &DailyDataset,
) -> FamilyOutcome {
    let outcomes: Vec<_> = config
        .additive_grid
        .par_iter()
        .map(|cell_config| {
            let fit = additive::fit_additive(train, cell_config).map_err(|e| e.to_string())?;
            let val_pred = additive::predict_additive(&fit, &validation.dates, &validation.features)
                .map_err(|e| e.to_string())?;
            let val_rmse =
                crate::metrics::rmse(&validation.target, &val_pred.point).map_err(|e| e.to_string())?;
            let test_pred = additive::predict_additive(&fit, &test.dates, &test.features)
                .map_err(|e| e.to_string())?;
            let row_metrics = evaluate_forecast(test, &test_pred.point)?;
            let band = test_pred.lower.zip(test_pred.upper);
            Ok::<_, String>((val_rmse, row_metrics, test_pred.point, band))
        })
        .collect();

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut forecasts = Vec::with_capacity(outcomes.len());
    for (cell_config, outcome) in config.additive_grid.iter().zip(outcomes) {
        let cell = additive_cell_label(cell_config);
        match outcome {
            Ok((val_rmse, metric_row, point, band)) => {
                rows.push(ReportRow {
                    station: station.to_string(),
                    family: ModelFamily::Additive,
                    cell,
                    selection_score: Some(val_rmse),
                    metrics: Some(metric_row),
                    error: None,
                    selected: false,
                });
                forecasts.push(Some((point, band)));
            }
            Err(err) => {
                rows.push(ReportRow {
                    station: station.to_string(),
                    family: ModelFamily::Additive,
                    cell,
                    selection_score: None,
                    metrics: None,
                    error: Some(err),
                    selected: false,
                });
                forecasts.push(None);
            }
        }
    }
    FamilyOutcome { rows, forecasts }
}

fn run_arima_family(
    station: &str,
    config: &RunConfig,
    block: &DailyDataset,
    test: &DailyDataset,
) -> Result<(FamilyOutcome, Vec<OrderCell>)> {
    let search = arima::auto_arima(&block.target, &block.features, config.p_max, config.q_max, config.d)?;

    let outcomes: Vec<_> = search
        .cells
        .par_iter()
        .map(|cell| {
            if let Some(err) = &cell.error {
                return Err(err.clone());
            }
            let spec = ArimaSpec {
                p: cell.p,
                d: config.d,
                q: cell.q,
                include_intercept: true,
            };
            let fit = match arima::fit_arima(&block.target, &block.features, spec) {
                Ok(f) => f,
                Err(arima::ArimaError::NonConvergence { best }) => *best,
                Err(e) => return Err(e.to_string()),
            };
            let forecast = arima::forecast_arima(&fit, test.len(), &test.features)
                .map_err(|e| e.to_string())?;
            let metric_row = evaluate_forecast(test, &forecast)?;
            Ok::<_, String>((metric_row, forecast))
        })
        .collect();

    let mut rows = Vec::with_capacity(search.cells.len());
    let mut forecasts = Vec::with_capacity(search.cells.len());
    for (cell, outcome) in search.cells.iter().zip(outcomes) {
        let label = format!("p={} d={} q={}", cell.p, config.d, cell.q);
        match outcome {
            Ok((metric_row, forecast)) => {
                rows.push(ReportRow {
                    station: station.to_string(),
                    family: ModelFamily::Arima,
                    cell: label,
                    selection_score: cell.aic,
                    metrics: Some(metric_row),
                    error: None,
                    selected: false,
                });
                forecasts.push(Some((forecast, None)));
            }
            Err(err) => {
                rows.push(ReportRow {
                    station: station.to_string(),
                    family: ModelFamily::Arima,
                    cell: label,
                    selection_score: None,
                    metrics: None,
                    error: Some(err),
                    selected: false,
                });
                forecasts.push(None);
            }
        }
    }
    Ok((FamilyOutcome { rows, forecasts }, search.cells))
}

struct ScaledBlocks {
    feature_scaler: ScalerState,
    target_scaler: ScalerState,
    train_features: Vec<Vec<f64>>,
    train_target: Vec<f64>,
    val_features: Vec<Vec<f64>>,
    val_target: Vec<f64>,
    test_features: Vec<Vec<f64>>,
}

fn scale_blocks(
    train: &DailyDataset,
    validation: &DailyDataset,
    test: &DailyDataset,
) -> Result<ScaledBlocks> {
    // scalers see the train+validation block only
    let mut block_features = train.features.clone();
    block_features.extend(validation.features.iter().cloned());
    let mut block_target = train.target.clone();
    block_target.extend_from_slice(&validation.target);
    let feature_scaler = ScalerState::fit(&block_features, &train.feature_names)?;
    let target_scaler = ScalerState::fit_series(&block_target, dataset::TARGET_COLUMN)?;
    Ok(ScaledBlocks {
        train_features: feature_scaler.transform(&train.features)?,
        train_target: target_scaler.transform_series(&train.target)?,
        val_features: feature_scaler.transform(&validation.features)?,
        val_target: target_scaler.transform_series(&validation.target)?,
        test_features: feature_scaler.transform(&test.features)?,
        feature_scaler,
        target_scaler,
    })
}

fn network_spec_for(config: &RunConfig, kind: NetworkKind, activation: Activation, epochs: usize) -> NetworkSpec {
    NetworkSpec {
        kind,
        lstm_units: config.lstm_units,
        lstm_activation: activation,
        conv_filters: config.conv_filters,
        conv_kernel: 2,
        pool_size: 2,
        dense_hidden: 64,
        lookback: 1,
        seed: config.seed,
        batch_size: config.batch_size,
        epochs: 0,
        adam: Default::default(),
    }
    .with_epochs(epochs)
}

trait WithEpochs {
    fn with_epochs(self, epochs: usize) -> Self;
}

impl WithEpochs for NetworkSpec {
    fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }
}

fn run_network_family(
    station: &str,
    config: &RunConfig,
    family: ModelFamily,
    scaled: &ScaledBlocks,
    test: &DailyDataset,
) -> FamilyOutcome {
    let kind = match family {
        ModelFamily::Lstm => NetworkKind::Lstm,
        ModelFamily::Cnn => NetworkKind::Cnn1d,
        _ => unreachable!("network family"),
    };
    let activations: Vec<Activation> = match family {
        ModelFamily::Lstm => config.activations.clone(),
        _ => vec![Activation::Relu],
    };
    let mut budgets = config.epochs_sweep.clone();
    budgets.sort_unstable();
    budgets.dedup();

    let mut rows = Vec::new();
    let mut forecasts = Vec::new();
    for activation in activations {
        let spec = network_spec_for(config, kind, activation, *budgets.last().unwrap());
        let outcome = neural::train_with_snapshots(
            &spec,
            &scaled.train_features,
            &scaled.train_target,
            Some((&scaled.val_features, &scaled.val_target)),
            &scaled.target_scaler,
            &scaled.feature_scaler,
            &budgets,
        );
        match outcome {
            Ok(fits) => {
                for fit in fits {
                    let label = match family {
                        ModelFamily::Lstm => {
                            format!("activation={:?} epochs={}", activation, fit.spec.epochs)
                                .to_lowercase()
                        }
                        _ => format!("epochs={}", fit.spec.epochs),
                    };
                    let score = fit.validation_loss_history.last().copied();
                    match neural::predict_network(&fit, &scaled.test_features, &scaled.feature_scaler)
                        .map_err(|e| e.to_string())
                        .and_then(|forecast| {
                            let m = evaluate_forecast(test, &forecast)?;
                            Ok((forecast, m))
                        }) {
                        Ok((forecast, metric_row)) => {
                            rows.push(ReportRow {
                                station: station.to_string(),
                                family,
                                cell: label,
                                selection_score: score,
                                metrics: Some(metric_row),
                                error: None,
                                selected: false,
                            });
                            forecasts.push(Some((forecast, None)));
                        }
                        Err(err) => {
                            rows.push(ReportRow {
                                station: station.to_string(),
                                family,
                                cell: label,
                                selection_score: score,
                                metrics: None,
                                error: Some(err),
                                selected: false,
                            });
                            forecasts.push(None);
                        }
                    }
                }
            }
            Err(err) => {
                // the whole trajectory failed: one error row per budget
                for budget in &budgets {
                    let label = match family {
                        ModelFamily::Lstm => {
                            format!("activation={activation:?} epochs={budget}").to_lowercase()
                        }
                        _ => format!("epochs={budget}"),
                    };
                    rows.push(ReportRow {
                        station: station.to_string(),
                        family,
                        cell: label,
                        selection_score: None,
                        metrics: None,
                        error: Some(err.to_string()),
                        selected: false,
                    });
                    forecasts.push(None);
                }
            }
        }
    }
    FamilyOutcome { rows, forecasts }
}

/// Runs the full pipeline for one station: parse → fill → encode →
/// aggregate → unit-root check → split → per-family sweeps → test
/// evaluation → winner selection.
pub fn run_station(station: &str, config: &RunConfig) -> Result<StationReport> {
    with_station(station, run_station_inner(station, config))
}

fn run_station_inner(station: &str, config: &RunConfig) -> Result<StationReport> {
    let started = Instant::now();
    let csv_path = locate_station_csv(&config.data_dir, station)?;
    let file = std::fs::File::open(&csv_path)?;
    let raw = dataset::parse_station_csv(std::io::BufReader::new(file))?;
    let filled = dataset::forward_fill(&raw)?;
    let encoded = dataset::encode_wind_direction(&filled)?;
    let daily = dataset::aggregate_daily(&encoded)?;

    // logged, never gates the pipeline
    let adf = stationarity::adf_test(&daily.target, None, config.adf_regression)?;

    let split = dataset::chronological_split(&daily, config.train_fraction, config.validation_fraction)?;
    let block_len = split.train.len() + split.validation.len();
    let block = daily.slice(0, block_len);
    let checksum = dataset_checksum(&block);

    let mut rows = Vec::new();
    let mut plot_series = Vec::new();
    let mut plot_band = None;
    let mut arima_cells = Vec::new();
    let mut cardinality = BTreeMap::new();

    for family in &config.models {
        let mut outcome = match family {
            ModelFamily::Additive => {
                run_additive_family(station, config, &split.train, &split.validation, &split.test)
            }
            ModelFamily::Arima => {
                let (outcome, cells) = run_arima_family(station, config, &block, &split.test)?;
                arima_cells = cells;
                outcome
            }
            ModelFamily::Lstm | ModelFamily::Cnn => {
                let scaled = scale_blocks(&split.train, &split.validation, &split.test)?;
                run_network_family(station, config, *family, &scaled, &split.test)
            }
        };
        cardinality.insert(family.key().to_string(), outcome.rows.len());
        let winner = select_best(&outcome.rows)?;
        outcome.rows[winner].selected = true;
        if let Some((point, band)) = outcome.forecasts[winner].clone() {
            plot_series.push((*family, point));
            if *family == ModelFamily::Additive {
                plot_band = band;
            }
        }
        rows.extend(outcome.rows);
    }

    let manifest = StationManifest {
        station: station.to_string(),
        n_days: daily.len(),
        first_date: daily.dates[0],
        last_date: *daily.dates.last().unwrap(),
        train_len: split.train.len(),
        validation_len: split.validation.len(),
        test_len: split.test.len(),
        adf,
        wd_mapping: encoded.wd_mapping.clone().unwrap_or_default(),
        sweep_cardinality: cardinality,
        arima_cells,
        selection_inputs_checksum: format!("{checksum:016x}"),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };

    Ok(StationReport {
        rows,
        plot: StationPlotData {
            station: station.to_string(),
            dates: split.test.dates.clone(),
            actual: split.test.target.clone(),
            series: plot_series,
            band: plot_band,
        },
        manifest,
    })
}

fn mean_metrics(rows: &[&ReportRow]) -> Option<MetricRow> {
    let metrics: Vec<&MetricRow> = rows.iter().filter_map(|r| r.metrics.as_ref()).collect();
    if metrics.is_empty() {
        return None;
    }
    let n = metrics.len() as f64;
    Some(MetricRow {
        rmse: metrics.iter().map(|m| m.rmse).sum::<f64>() / n,
        mae: metrics.iter().map(|m| m.mae).sum::<f64>() / n,
        mape: metrics.iter().map(|m| m.mape).sum::<f64>() / n,
        rrse: metrics.iter().map(|m| m.rrse).sum::<f64>() / n,
    })
}

fn selection_policy(config: &RunConfig) -> BTreeMap<String, String> {
    let mut policy = BTreeMap::new();
    for family in &config.models {
        let rule = match family {
            ModelFamily::Additive => "min validation RMSE over the 144-cell grid, refit on the train carve-out",
            ModelFamily::Arima => "min AIC over the (p,q) grid on a common conditioning sample",
            ModelFamily::Lstm | ModelFamily::Cnn => "min final-epoch validation MAE across the sweep",
        };
        policy.insert(family.key().to_string(), rule.to_string());
    }
    policy
}

/// Runs every requested station and assembles the cross-station report.
pub fn run_bench(config: &RunConfig) -> Result<EvalReport> {
    config.validate()?;
    let started = Instant::now();
    let station_reports: Vec<Result<StationReport>> = config
        .stations
        .par_iter()
        .map(|station| run_station(station, config))
        .collect();

    let mut rows = Vec::new();
    let mut plots = Vec::new();
    let mut station_manifests = Vec::new();
    for outcome in station_reports {
        let report = outcome?;
        rows.extend(report.rows);
        plots.push(report.plot);
        station_manifests.push(report.manifest);
    }

    let averages: Vec<(ModelFamily, MetricRow)> = ALL_FAMILIES
        .iter()
        .filter(|f| config.models.contains(f))
        .filter_map(|family| {
            let selected: Vec<&ReportRow> = rows
                .iter()
                .filter(|r| r.family == *family && r.selected)
                .collect();
            mean_metrics(&selected).map(|m| (*family, m))
        })
        .collect();

    // per-activation LSTM comparison: best epochs cell per station and
    // activation, averaged across stations
    let mut activation_averages = Vec::new();
    if config.models.contains(&ModelFamily::Lstm) {
        for activation in &config.activations {
            let tag = format!("activation={activation:?}").to_lowercase();
            let mut best_rows: Vec<&ReportRow> = Vec::new();
            for station in &config.stations {
                let candidates: Vec<&ReportRow> = rows
                    .iter()
                    .filter(|r| {
                        r.station == *station
                            && r.family == ModelFamily::Lstm
                            && r.cell.starts_with(&tag)
                            && r.metrics.is_some()
                    })
                    .collect();
                if let Some(best) = candidates.iter().min_by(|a, b| {
                    a.selection_score
                        .unwrap_or(f64::INFINITY)
                        .total_cmp(&b.selection_score.unwrap_or(f64::INFINITY))
                }) {
                    best_rows.push(best);
                }
            }
            if let Some(m) = mean_metrics(&best_rows) {
                activation_averages.push((format!("{activation:?}").to_lowercase(), m));
            }
        }
    }

    Ok(EvalReport {
        rows,
        averages,
        activation_averages,
        plots,
        manifest: Manifest {
            config: config.clone(),
            selection_policy: selection_policy(config),
            stations: station_manifests,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
    })
}
