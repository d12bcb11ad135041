//! Decomposable forecasting model: piecewise-linear trend with
//! changepoints, Fourier seasonalities, optional holiday indicator and
//! extra regressors, fit by penalized least squares with Gaussian
//! prediction intervals.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::dataset::DailyDataset;
use crate::linalg;

pub const YEARLY_PERIOD_DAYS: f64 = 365.25;
pub const WEEKLY_PERIOD_DAYS: f64 = 7.0;

#[derive(Debug, Error)]
pub enum AdditiveError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training dataset is empty")]
    EmptyTrain,
    #[error("expected {expected} regressor columns over {rows} rows, got {actual} over {actual_rows}")]
    FeatureMismatch {
        expected: usize,
        actual: usize,
        rows: usize,
        actual_rows: usize,
    },
    #[error("penalized system could not be solved: {0}")]
    Numerical(String),
    #[error("non-finite value in training data")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, AdditiveError>;

/// How the seasonal component combines with the trend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeasonalityMode {
    Additive,
    Multiplicative,
}

/// Hyperparameters of one model configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveConfig {
    pub n_changepoints: usize,
    /// Fraction of history eligible for changepoints, in (0, 1].
    pub changepoint_range: f64,
    /// Inverse penalty weight on changepoint slope adjustments.
    pub trend_flexibility: f64,
    /// Inverse penalty weight on Fourier coefficients.
    pub seasonality_strength: f64,
    pub seasonality_mode: SeasonalityMode,
    pub yearly_order: usize,
    pub weekly_order: usize,
    pub interval_width: f64,
}

impl Default for AdditiveConfig {
    fn default() -> Self {
        AdditiveConfig {
            n_changepoints: 25,
            changepoint_range: 0.8,
            trend_flexibility: 0.05,
            seasonality_strength: 10.0,
            seasonality_mode: SeasonalityMode::Additive,
            yearly_order: 10,
            weekly_order: 3,
            interval_width: 0.95,
        }
    }
}

impl AdditiveConfig {
    fn validate(&self) -> Result<()> {
        if !(self.changepoint_range > 0.0 && self.changepoint_range <= 1.0) {
            return Err(AdditiveError::Config(format!(
                "changepoint_range must lie in (0,1], got {}",
                self.changepoint_range
            )));
        }
        if self.trend_flexibility <= 0.0 || self.seasonality_strength <= 0.0 {
            return Err(AdditiveError::Config(
                "trend_flexibility and seasonality_strength must be positive".into(),
            ));
        }
        if !(self.interval_width > 0.0 && self.interval_width < 1.0) {
            return Err(AdditiveError::Config(format!(
                "interval_width must lie in (0,1), got {}",
                self.interval_width
            )));
        }
        Ok(())
    }
}

/// A fitted additive model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdditiveFit {
    /// Base trend slope per day.
    pub base_slope: f64,
    /// Base trend offset at the first training date.
    pub base_offset: f64,
    pub changepoint_times: Vec<NaiveDate>,
    /// Slope adjustments taking effect at each changepoint.
    pub changepoint_deltas: Vec<f64>,
    pub yearly_coefficients: Vec<f64>,
    pub weekly_coefficients: Vec<f64>,
    /// Coefficient on the holiday indicator; empty when no holidays
    /// were supplied.
    pub holiday_effects: Vec<f64>,
    pub holiday_dates: Vec<NaiveDate>,
    pub regressor_coefficients: Vec<f64>,
    pub residual_std: f64,
    pub config: AdditiveConfig,
    pub train_start: NaiveDate,
    pub feature_names: Vec<String>,
}

/// Point forecasts with optional interval bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastResult {
    pub dates: Vec<NaiveDate>,
    pub point: Vec<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

/// Places changepoints at evenly spaced quantiles of the first
/// `changepoint_range` fraction of the training dates.
pub fn place_changepoints(
    train_dates: &[NaiveDate],
    n_changepoints: usize,
    changepoint_range: f64,
) -> Result<Vec<NaiveDate>> {
    let limit = (train_dates.len() as f64 * changepoint_range).floor() as usize;
    if n_changepoints > 0 && n_changepoints >= limit {
        return Err(AdditiveError::Config(format!(
            "{n_changepoints} changepoints do not fit into the first {limit} eligible days"
        )));
    }
    Ok((1..=n_changepoints)
        .map(|j| train_dates[j * limit / (n_changepoints + 1)])
        .collect())
}

fn epoch_days(date: NaiveDate) -> f64 {
    (date - NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()).num_days() as f64
}

/// Fourier design block: columns sin(2πkt/P), cos(2πkt/P) for
/// k = 1..order, with t in days since the epoch.
pub fn fourier_basis(dates: &[NaiveDate], period_days: f64, order: usize) -> Vec<Vec<f64>> {
    dates
        .iter()
        .map(|&d| {
            let t = epoch_days(d);
            let mut row = Vec::with_capacity(2 * order);
            for k in 1..=order {
                let arg = 2.0 * std::f64::consts::PI * k as f64 * t / period_days;
                row.push(arg.sin());
                row.push(arg.cos());
            }
            row
        })
        .collect()
}

/// Piecewise-linear trend value at `t` days after the training start.
pub fn trend_at(fit: &AdditiveFit, t: f64) -> f64 {
    let mut g = fit.base_offset + fit.base_slope * t;
    for (cp, delta) in fit.changepoint_times.iter().zip(&fit.changepoint_deltas) {
        let s = (*cp - fit.train_start).num_days() as f64;
        if t > s {
            g += delta * (t - s);
        }
    }
    g
}

fn seasonal_at(fit: &AdditiveFit, dates: &[NaiveDate]) -> Vec<f64> {
    let yearly = fourier_basis(dates, YEARLY_PERIOD_DAYS, fit.config.yearly_order);
    let weekly = fourier_basis(dates, WEEKLY_PERIOD_DAYS, fit.config.weekly_order);
    (0..dates.len())
        .map(|i| {
            let mut s = 0.0;
            for (x, c) in yearly[i].iter().zip(&fit.yearly_coefficients) {
                s += x * c;
            }
            for (x, c) in weekly[i].iter().zip(&fit.weekly_coefficients) {
                s += x * c;
            }
            s
        })
        .collect()
}

fn holiday_at(fit: &AdditiveFit, dates: &[NaiveDate]) -> Vec<f64> {
    match fit.holiday_effects.first() {
        None => vec![0.0; dates.len()],
        Some(effect) => dates
            .iter()
            .map(|d| {
                if fit.holiday_dates.contains(d) {
                    *effect
                } else {
                    0.0
                }
            })
            .collect(),
    }
}

/// Per-date pieces of a prediction: trend, seasonal, holiday and
/// regressor effects.
pub struct Components {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub holiday: Vec<f64>,
    pub regressor: Vec<f64>,
}

/// Evaluates the fitted components on arbitrary dates; the trend beyond
/// training continues with the final post-changepoint slope.
pub fn components(
    fit: &AdditiveFit,
    dates: &[NaiveDate],
    regressors: &[Vec<f64>],
) -> Result<Components> {
    check_regressors(fit, dates, regressors)?;
    let trend: Vec<f64> = dates
        .iter()
        .map(|&d| trend_at(fit, (d - fit.train_start).num_days() as f64))
        .collect();
    let seasonal = seasonal_at(fit, dates);
    let holiday = holiday_at(fit, dates);
    let regressor: Vec<f64> = (0..dates.len())
        .map(|i| {
            if fit.regressor_coefficients.is_empty() {
                0.0
            } else {
                regressors[i]
                    .iter()
                    .zip(&fit.regressor_coefficients)
                    .map(|(x, c)| x * c)
                    .sum()
            }
        })
        .collect();
    Ok(Components {
        trend,
        seasonal,
        holiday,
        regressor,
    })
}

fn check_regressors(fit: &AdditiveFit, dates: &[NaiveDate], regressors: &[Vec<f64>]) -> Result<()> {
    let expected = fit.regressor_coefficients.len();
    if expected == 0 {
        return Ok(());
    }
    if regressors.len() != dates.len() || regressors.iter().any(|r| r.len() != expected) {
        return Err(AdditiveError::FeatureMismatch {
            expected,
            actual: regressors.first().map_or(0, Vec::len),
            rows: dates.len(),
            actual_rows: regressors.len(),
        });
    }
    Ok(())
}

/// Fits the model on a daily dataset, using every feature column as an
/// unpenalized extra regressor.
pub fn fit_additive(train: &DailyDataset, config: &AdditiveConfig) -> Result<AdditiveFit> {
    fit_additive_with_holidays(train, config, &[])
}

/// [`fit_additive`] plus a date-indexed holiday indicator; an empty
/// list disables the holiday term.
pub fn fit_additive_with_holidays(
    train: &DailyDataset,
    config: &AdditiveConfig,
    holidays: &[NaiveDate],
) -> Result<AdditiveFit> {
    config.validate()?;
    if train.is_empty() {
        return Err(AdditiveError::EmptyTrain);
    }
    if train.target.iter().any(|v| !v.is_finite())
        || train.features.iter().flatten().any(|v| !v.is_finite())
    {
        return Err(AdditiveError::NonFinite);
    }

    let n = train.len();
    let changepoints =
        place_changepoints(&train.dates, config.n_changepoints, config.changepoint_range)?;
    let start_date = train.dates[0];
    let t_rel: Vec<f64> = train
        .dates
        .iter()
        .map(|&d| (d - start_date).num_days() as f64)
        .collect();
    let cp_rel: Vec<f64> = changepoints
        .iter()
        .map(|&d| (d - start_date).num_days() as f64)
        .collect();
    let yearly = fourier_basis(&train.dates, YEARLY_PERIOD_DAYS, config.yearly_order);
    let weekly = fourier_basis(&train.dates, WEEKLY_PERIOD_DAYS, config.weekly_order);
    let holiday_col: Vec<f64> = train
        .dates
        .iter()
        .map(|d| if holidays.contains(d) { 1.0 } else { 0.0 })
        .collect();
    let use_holidays = !holidays.is_empty();

    let n_trend = 2 + cp_rel.len();
    let n_yearly = 2 * config.yearly_order;
    let n_weekly = 2 * config.weekly_order;
    let n_seasonal = n_yearly + n_weekly;
    let n_regressors = train.n_features();
    let n_cols = n_trend + n_seasonal + usize::from(use_holidays) + n_regressors;

    // seasonal_scale multiplies the seasonal block row-wise; pass one is
    // plain additive, pass two (multiplicative only) rescales by the
    // pass-one trend
    let build_design = |seasonal_scale: &[f64]| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let mut row = Vec::with_capacity(n_cols);
                row.push(1.0);
                row.push(t_rel[i]);
                for &s in &cp_rel {
                    row.push((t_rel[i] - s).max(0.0));
                }
                let scale = seasonal_scale[i];
                row.extend(yearly[i].iter().map(|v| v * scale));
                row.extend(weekly[i].iter().map(|v| v * scale));
                if use_holidays {
                    row.push(holiday_col[i]);
                }
                row.extend(train.features[i].iter().copied());
                row
            })
            .collect()
    };

    let mut penalties = vec![0.0; n_cols];
    for p in penalties.iter_mut().skip(2).take(cp_rel.len()) {
        *p = 1.0 / config.trend_flexibility;
    }
    for p in penalties.iter_mut().skip(n_trend).take(n_seasonal) {
        *p = 1.0 / config.seasonality_strength;
    }

    let solve_pass = |design: &[Vec<f64>]| -> Result<Vec<f64>> {
        let mut lhs = linalg::gram(design);
        for i in 0..n_cols {
            // ridge penalties plus a vanishing per-column jitter so
            // degenerate (all-zero) regressor columns stay solvable
            lhs[i][i] += penalties[i] + 1e-12 * lhs[i][i] + 1e-12;
        }
        let rhs = linalg::gram_vec(design, &train.target);
        linalg::cholesky_solve(&lhs, &rhs)
            .or_else(|| linalg::solve(lhs.clone(), rhs.clone()))
            .ok_or_else(|| AdditiveError::Numerical("penalized normal equations singular".into()))
    };

    let ones = vec![1.0; n];
    let beta = solve_pass(&build_design(&ones))?;
    let beta = match config.seasonality_mode {
        SeasonalityMode::Additive => beta,
        SeasonalityMode::Multiplicative => {
            let trend_pass_one: Vec<f64> = (0..n)
                .map(|i| {
                    let mut g = beta[0] + beta[1] * t_rel[i];
                    for (j, &s) in cp_rel.iter().enumerate() {
                        g += beta[2 + j] * (t_rel[i] - s).max(0.0);
                    }
                    g
                })
                .collect();
            solve_pass(&build_design(&trend_pass_one))?
        }
    };

    let mut cursor = 0usize;
    let mut take = |len: usize| -> Vec<f64> {
        let out = beta[cursor..cursor + len].to_vec();
        cursor += len;
        out
    };
    let trend_block = take(n_trend);
    let yearly_coefficients = take(n_yearly);
    let weekly_coefficients = take(n_weekly);
    let holiday_effects = if use_holidays { take(1) } else { Vec::new() };
    let regressor_coefficients = take(n_regressors);

    let fit = AdditiveFit {
        base_offset: trend_block[0],
        base_slope: trend_block[1],
        changepoint_times: changepoints,
        changepoint_deltas: trend_block[2..].to_vec(),
        yearly_coefficients,
        weekly_coefficients,
        holiday_effects,
        holiday_dates: holidays.to_vec(),
        regressor_coefficients,
        residual_std: 0.0,
        config: config.clone(),
        train_start: start_date,
        feature_names: train.feature_names.clone(),
    };

    let predicted = predict_points(&fit, &train.dates, &train.features)?;
    let residual_sq: f64 = train
        .target
        .iter()
        .zip(&predicted)
        .map(|(y, p)| (y - p) * (y - p))
        .sum();
    let residual_std = (residual_sq / (n.max(2) - 1) as f64).sqrt();
    Ok(AdditiveFit {
        residual_std,
        ..fit
    })
}

fn predict_points(
    fit: &AdditiveFit,
    dates: &[NaiveDate],
    regressors: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let parts = components(fit, dates, regressors)?;
    Ok((0..dates.len())
        .map(|i| match fit.config.seasonality_mode {
            SeasonalityMode::Additive => {
                parts.trend[i] + parts.seasonal[i] + parts.holiday[i] + parts.regressor[i]
            }
            SeasonalityMode::Multiplicative => {
                parts.trend[i] * (1.0 + parts.seasonal[i]) + parts.holiday[i] + parts.regressor[i]
            }
        })
        .collect())
}

/// Evaluates the fit on the given dates and aligned regressor rows,
/// with symmetric Gaussian prediction intervals from the training
/// residual spread.
pub fn predict_additive(
    fit: &AdditiveFit,
    dates: &[NaiveDate],
    regressors: &[Vec<f64>],
) -> Result<ForecastResult> {
    let point = predict_points(fit, dates, regressors)?;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let z = normal.inverse_cdf(0.5 + fit.config.interval_width / 2.0);
    let half = z * fit.residual_std;
    let lower = point.iter().map(|p| p - half).collect();
    let upper = point.iter().map(|p| p + half).collect();
    Ok(ForecastResult {
        dates: dates.to_vec(),
        point,
        lower: Some(lower),
        upper: Some(upper),
    })
}

/// The default hyperparameter sweep: 4 trend flexibilities × 4
/// seasonality strengths × 3 changepoint counts × 3 mode variants
/// (additive, multiplicative, additive without weekly seasonality),
/// 144 configurations in total, all at interval width 0.95.
pub fn hyperparameter_grid() -> Vec<AdditiveConfig> {
    let mut grid = Vec::with_capacity(144);
    for &trend_flexibility in &[0.001, 0.01, 0.1, 0.5] {
        for &seasonality_strength in &[0.01, 0.1, 1.0, 10.0] {
            for &n_changepoints in &[15usize, 25, 35] {
                for variant in 0..3 {
                    let (seasonality_mode, weekly_order) = match variant {
                        0 => (SeasonalityMode::Additive, 3),
                        1 => (SeasonalityMode::Multiplicative, 3),
                        _ => (SeasonalityMode::Additive, 0),
                    };
                    grid.push(AdditiveConfig {
                        n_changepoints,
                        changepoint_range: 0.8,
                        trend_flexibility,
                        seasonality_strength,
                        seasonality_mode,
                        yearly_order: 10,
                        weekly_order,
                        interval_width: 0.95,
                    });
                }
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn dates_from(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
        (0..n).map(|i| start + Duration::days(i as i64)).collect()
    }

    fn dataset(
        dates: Vec<NaiveDate>,
        target: Vec<f64>,
        features: Vec<Vec<f64>>,
        names: Vec<String>,
    ) -> DailyDataset {
        DailyDataset {
            dates,
            target,
            features,
            feature_names: names,
        }
    }

    fn plain_config(n_changepoints: usize, yearly: usize, weekly: usize) -> AdditiveConfig {
        AdditiveConfig {
            n_changepoints,
            yearly_order: yearly,
            weekly_order: weekly,
            ..AdditiveConfig::default()
        }
    }

    #[test]
    fn changepoints_at_even_quantiles() {
        let start = NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        let dates = dates_from(start, 100);
        let cps = place_changepoints(&dates, 3, 1.0).unwrap();
        assert_eq!(cps, vec![dates[25], dates[50], dates[75]]);

        assert!(place_changepoints(&dates, 0, 1.0).unwrap().is_empty());

        let dates = dates_from(start, 1095);
        let cps = place_changepoints(&dates, 25, 0.8).unwrap();
        assert_eq!(cps.len(), 25);
        for cp in cps {
            assert!((cp - start).num_days() < 876);
        }

        assert!(place_changepoints(&dates_from(start, 10), 9, 0.5).is_err());
    }

    #[test]
    fn fourier_rows_at_known_phases() {
        let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
        let rows = fourier_basis(&[epoch], 14.0, 1);
        assert!((rows[0][0] - 0.0).abs() < 1e-12);
        assert!((rows[0][1] - 1.0).abs() < 1e-12);

        let rows = fourier_basis(&[epoch + Duration::days(7)], 14.0, 1);
        assert!(rows[0][0].abs() < 1e-12);
        assert!((rows[0][1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn fourier_columns_nearly_orthogonal_over_two_years() {
        let start = NaiveDate::from_ymd_opt(2013, 1, 1).unwrap();
        let dates = dates_from(start, 730);
        let basis = fourier_basis(&dates, YEARLY_PERIOD_DAYS, 3);
        for a in 0..6 {
            for b in 0..a {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for row in &basis {
                    dot += row[a] * row[b];
                    na += row[a] * row[a];
                    nb += row[b] * row[b];
                }
                let cosine = dot.abs() / (na.sqrt() * nb.sqrt());
                assert!(cosine < 0.02, "columns {a},{b} correlate: {cosine}");
            }
        }
    }

    #[test]
    fn fit_recovers_noiseless_line() {
        let start = NaiveDate::from_ymd_opt(2014, 1, 1).unwrap();
        let dates = dates_from(start, 200);
        let target: Vec<f64> = (0..200).map(|t| 2.0 * t as f64 + 1.0).collect();
        let data = dataset(dates, target, vec![vec![]; 200], vec![]);
        let fit = fit_additive(&data, &plain_config(0, 0, 0)).unwrap();
        assert!((fit.base_slope - 2.0).abs() < 1e-6, "k {}", fit.base_slope);
        assert!((fit.base_offset - 1.0).abs() < 1e-6, "m {}", fit.base_offset);
    }

    #[test]
    fn fit_generalizes_line_plus_yearly_sinusoid() {
        let start = NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        let dates = dates_from(start, 1095);
        let target: Vec<f64> = dates
            .iter()
            .enumerate()
            .map(|(t, &d)| {
                let phase = 2.0 * std::f64::consts::PI * epoch_days(d) / YEARLY_PERIOD_DAYS;
                30.0 + 0.01 * t as f64 + 10.0 * phase.sin()
            })
            .collect();
        let data = dataset(dates.clone(), target.clone(), vec![vec![]; 1095], vec![]);
        let train = data.slice(0, 730);
        let test = data.slice(730, 1095);
        let fit = fit_additive(&train, &plain_config(5, 6, 0)).unwrap();
        let pred = predict_additive(&fit, &test.dates, &test.features).unwrap();
        let mean = test.target.iter().sum::<f64>() / test.target.len() as f64;
        let ss_res: f64 = test
            .target
            .iter()
            .zip(&pred.point)
            .map(|(y, p)| (y - p) * (y - p))
            .sum();
        let ss_tot: f64 = test.target.iter().map(|y| (y - mean) * (y - mean)).sum();
        let r2 = 1.0 - ss_res / ss_tot;
        assert!(r2 > 0.95, "held-out R² {r2}");
    }

    #[test]
    fn fit_recovers_regressor_weight() {
        let start = NaiveDate::from_ymd_opt(2015, 6, 1).unwrap();
        let dates = dates_from(start, 400);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let xs: Vec<f64> = (0..400).map(|_| StandardNormal.sample(&mut rng)).collect();
        let target: Vec<f64> = xs
            .iter()
            .map(|x| {
                let e: f64 = StandardNormal.sample(&mut rng);
                5.0 + 3.0 * x + 0.1 * e
            })
            .collect();
        let features: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let data = dataset(dates, target, features, vec!["x".into()]);
        let fit = fit_additive(&data, &plain_config(0, 0, 0)).unwrap();
        assert!(
            (2.9..=3.1).contains(&fit.regressor_coefficients[0]),
            "weight {}",
            fit.regressor_coefficients[0]
        );
    }

    #[test]
    fn predict_interpolates_training_data_with_loose_penalties() {
        let start = NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        let dates = dates_from(start, 300);
        let target: Vec<f64> = dates
            .iter()
            .enumerate()
            .map(|(t, &d)| {
                let yearly = 2.0 * std::f64::consts::PI * epoch_days(d) / YEARLY_PERIOD_DAYS;
                let weekly = 2.0 * std::f64::consts::PI * epoch_days(d) / WEEKLY_PERIOD_DAYS;
                3.0 + 0.5 * t as f64 + 4.0 * yearly.sin() + 2.0 * weekly.cos()
            })
            .collect();
        let data = dataset(dates.clone(), target.clone(), vec![vec![]; 300], vec![]);
        let config = AdditiveConfig {
            n_changepoints: 0,
            trend_flexibility: 1e9,
            seasonality_strength: 1e9,
            yearly_order: 1,
            weekly_order: 1,
            ..AdditiveConfig::default()
        };
        let fit = fit_additive(&data, &config).unwrap();
        let pred = predict_additive(&fit, &dates, &data.features).unwrap();
        for (y, p) in target.iter().zip(&pred.point) {
            assert!((y - p).abs() < 1e-8, "{y} vs {p}");
        }
    }

    #[test]
    fn interval_halfwidth_matches_gaussian_quantile() {
        let start = NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        let dates = dates_from(start, 60);
        let target: Vec<f64> = (0..60).map(|t| t as f64).collect();
        let data = dataset(dates.clone(), target, vec![vec![]; 60], vec![]);
        let mut fit = fit_additive(&data, &plain_config(0, 0, 0)).unwrap();
        fit.residual_std = 10.0;
        let pred = predict_additive(&fit, &dates, &data.features).unwrap();
        let half = pred.upper.as_ref().unwrap()[0] - pred.point[0];
        assert!((half - 19.59964).abs() < 1e-4, "half width {half}");
        assert!((pred.point[0] - pred.lower.as_ref().unwrap()[0] - half).abs() < 1e-12);
    }

    #[test]
    fn zero_regressor_column_does_not_move_predictions() {
        let start = NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        let dates = dates_from(start, 120);
        let target: Vec<f64> = (0..120).map(|t| 1.0 + 0.3 * t as f64).collect();
        let features: Vec<Vec<f64>> = (0..120).map(|_| vec![0.0]).collect();
        let data = dataset(dates.clone(), target, features.clone(), vec!["zero".into()]);
        let mut fit = fit_additive(&data, &plain_config(0, 0, 0)).unwrap();
        let base = predict_additive(&fit, &dates, &features).unwrap();
        fit.regressor_coefficients[0] = 1234.5;
        let moved = predict_additive(&fit, &dates, &features).unwrap();
        assert_eq!(base.point, moved.point);
    }

    #[test]
    fn trend_is_continuous_at_changepoints() {
        let start = NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        let dates = dates_from(start, 400);
        let target: Vec<f64> = (0..400)
            .map(|t| if t < 200 { t as f64 } else { 200.0 + 3.0 * (t - 200) as f64 })
            .collect();
        let data = dataset(dates, target, vec![vec![]; 400], vec![]);
        let fit = fit_additive(&data, &plain_config(10, 0, 0)).unwrap();
        for cp in &fit.changepoint_times {
            let s = (*cp - fit.train_start).num_days() as f64;
            let eps = 1e-7;
            let jump = (trend_at(&fit, s - eps) - trend_at(&fit, s + eps)).abs();
            assert!(jump < 1e-5, "trend jumps by {jump} at {cp}");
        }
    }

    #[test]
    fn additive_components_recompose_point_forecast() {
        let start = NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        let dates = dates_from(start, 250);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let target: Vec<f64> = (0..250)
            .map(|t| {
                let e: f64 = StandardNormal.sample(&mut rng);
                20.0 + 0.1 * t as f64 + e
            })
            .collect();
        let features: Vec<Vec<f64>> = (0..250).map(|t| vec![(t % 5) as f64]).collect();
        let data = dataset(dates.clone(), target, features.clone(), vec!["x".into()]);
        let fit = fit_additive(&data, &plain_config(8, 3, 2)).unwrap();
        let pred = predict_additive(&fit, &dates, &features).unwrap();
        let parts = components(&fit, &dates, &features).unwrap();
        for i in 0..dates.len() {
            let recomposed =
                parts.trend[i] + parts.seasonal[i] + parts.holiday[i] + parts.regressor[i];
            assert!((recomposed - pred.point[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn stiffer_trend_penalty_never_grows_deltas() {
        let start = NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        let dates = dates_from(start, 500);
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let target: Vec<f64> = (0..500)
            .map(|t| {
                let e: f64 = StandardNormal.sample(&mut rng);
                let bend = if t > 250 { 2.0 * (t - 250) as f64 } else { 0.0 };
                10.0 + 0.5 * t as f64 + bend + 3.0 * e
            })
            .collect();
        let data = dataset(dates, target, vec![vec![]; 500], vec![]);
        let mut last_norm = f64::INFINITY;
        for flexibility in [0.5, 0.1, 0.01, 0.001] {
            let config = AdditiveConfig {
                n_changepoints: 15,
                trend_flexibility: flexibility,
                yearly_order: 0,
                weekly_order: 0,
                ..AdditiveConfig::default()
            };
            let fit = fit_additive(&data, &config).unwrap();
            let norm: f64 = fit.changepoint_deltas.iter().map(|d| d * d).sum::<f64>().sqrt();
            assert!(
                norm <= last_norm + 1e-9,
                "delta norm grew from {last_norm} to {norm} at flexibility {flexibility}"
            );
            last_norm = norm;
        }
    }

    #[test]
    fn multiplicative_mode_scales_seasonality_with_trend() {
        let start = NaiveDate::from_ymd_opt(2013, 1, 1).unwrap();
        let dates = dates_from(start, 1095);
        let target: Vec<f64> = dates
            .iter()
            .enumerate()
            .map(|(t, &d)| {
                let phase = 2.0 * std::f64::consts::PI * epoch_days(d) / YEARLY_PERIOD_DAYS;
                let trend = 50.0 + 0.05 * t as f64;
                trend * (1.0 + 0.3 * phase.sin())
            })
            .collect();
        let data = dataset(dates.clone(), target.clone(), vec![vec![]; 1095], vec![]);
        let config = AdditiveConfig {
            n_changepoints: 0,
            seasonality_mode: SeasonalityMode::Multiplicative,
            yearly_order: 3,
            weekly_order: 0,
            seasonality_strength: 1e6,
            ..AdditiveConfig::default()
        };
        let fit = fit_additive(&data, &config).unwrap();
        let pred = predict_additive(&fit, &dates, &data.features).unwrap();
        let rmse = (target
            .iter()
            .zip(&pred.point)
            .map(|(y, p)| (y - p) * (y - p))
            .sum::<f64>()
            / 1095.0)
            .sqrt();
        let additive_fit = fit_additive(
            &data,
            &AdditiveConfig {
                seasonality_mode: SeasonalityMode::Additive,
                ..config.clone()
            },
        )
        .unwrap();
        let additive_pred = predict_additive(&additive_fit, &dates, &data.features).unwrap();
        let additive_rmse = (target
            .iter()
            .zip(&additive_pred.point)
            .map(|(y, p)| (y - p) * (y - p))
            .sum::<f64>()
            / 1095.0)
            .sqrt();
        assert!(
            rmse < additive_rmse * 0.5,
            "multiplicative {rmse} vs additive {additive_rmse}"
        );
    }

    #[test]
    fn holiday_indicator_captures_spikes() {
        let start = NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        let dates = dates_from(start, 200);
        let holidays: Vec<NaiveDate> = (0..200)
            .step_by(50)
            .map(|i| start + Duration::days(i as i64))
            .collect();
        let target: Vec<f64> = dates
            .iter()
            .map(|d| if holidays.contains(d) { 25.0 } else { 5.0 })
            .collect();
        let data = dataset(dates, target, vec![vec![]; 200], vec![]);
        let fit = fit_additive_with_holidays(&data, &plain_config(0, 0, 0), &holidays).unwrap();
        assert_eq!(fit.holiday_effects.len(), 1);
        assert!((fit.holiday_effects[0] - 20.0).abs() < 0.5);
    }

    #[test]
    fn default_grid_has_144_entries_at_interval_95() {
        let grid = hyperparameter_grid();
        assert_eq!(grid.len(), 144);
        assert!(grid.iter().all(|c| c.interval_width == 0.95));
        let unique: std::collections::BTreeSet<String> =
            grid.iter().map(|c| format!("{c:?}")).collect();
        assert_eq!(unique.len(), 144);
    }

    #[test]
    fn predict_rejects_feature_mismatch() {
        let start = NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        let dates = dates_from(start, 60);
        let features: Vec<Vec<f64>> = (0..60).map(|t| vec![t as f64]).collect();
        let data = dataset(
            dates.clone(),
            (0..60).map(|t| t as f64).collect(),
            features,
            vec!["x".into()],
        );
        let fit = fit_additive(&data, &plain_config(0, 0, 0)).unwrap();
        let wrong: Vec<Vec<f64>> = (0..60).map(|t| vec![t as f64, 0.0]).collect();
        assert!(matches!(
            predict_additive(&fit, &dates, &wrong),
            Err(AdditiveError::FeatureMismatch { .. })
        ));
    }
}
