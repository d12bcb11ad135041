//! Ordinary least squares plus Dickey-Fuller / augmented Dickey-Fuller
//! unit-root testing.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error)]
pub enum StationarityError {
    #[error("difference order {order} requires a series longer than {order}, got {len}")]
    DifferenceOrder { order: usize, len: usize },
    #[error("series too short: need at least {needed} observations, got {len}")]
    TooShort { needed: usize, len: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("design must have more rows ({rows}) than columns ({cols})")]
    NotEnoughRows { rows: usize, cols: usize },
    #[error("series has zero variance; unit-root test undefined")]
    DegenerateSeries,
    #[error("series contains a non-finite value")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, StationarityError>;

/// Deterministic terms included in the unit-root regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regression {
    /// Constant only.
    Constant,
    /// Constant plus linear time trend.
    ConstantTrend,
}

impl Regression {
    fn deterministic_terms(self) -> usize {
        match self {
            Regression::Constant => 1,
            Regression::ConstantTrend => 2,
        }
    }
}

/// Ordinary least squares fit via the normal equations.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// Unbiased residual variance, RSS / (n - k).
    pub residual_variance: f64,
    pub n_obs: usize,
    pub n_params: usize,
}

impl OlsFit {
    /// Gaussian log-likelihood at the maximum-likelihood variance RSS/n.
    pub fn log_likelihood(&self) -> f64 {
        let n = self.n_obs as f64;
        let rss: f64 = self.residuals.iter().map(|e| e * e).sum();
        let sigma2 = (rss / n).max(f64::MIN_POSITIVE);
        -0.5 * n * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0)
    }

    /// Akaike information criterion, 2k − 2·log-likelihood with the
    /// variance counted as a parameter.
    pub fn aic(&self) -> f64 {
        2.0 * (self.n_params as f64 + 1.0) - 2.0 * self.log_likelihood()
    }
}

/// d-th difference of a series; d = 0 returns the input unchanged.
pub fn difference(series: &[f64], order: usize) -> Result<Vec<f64>> {
    if series.len() <= order {
        return Err(StationarityError::DifferenceOrder {
            order,
            len: series.len(),
        });
    }
    let mut out = series.to_vec();
    for _ in 0..order {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// Least-squares regression of `response` on the row-major `design`.
pub fn ols(design: &[Vec<f64>], response: &[f64]) -> Result<OlsFit> {
    let n = response.len();
    let k = design.first().map_or(0, Vec::len);
    if design.len() != n || n <= k || k == 0 {
        return Err(StationarityError::NotEnoughRows { rows: n, cols: k });
    }
    let xtx = linalg::gram(design);
    let xty = linalg::gram_vec(design, response);
    let coefficients =
        linalg::solve(xtx.clone(), xty).ok_or(StationarityError::RankDeficient)?;
    let fitted = linalg::mat_vec(design, &coefficients);
    let residuals: Vec<f64> = response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let residual_variance = rss / (n - k) as f64;
    let inv = linalg::invert(&xtx).ok_or(StationarityError::RankDeficient)?;
    let standard_errors = (0..k)
        .map(|i| (residual_variance * inv[i][i]).max(0.0).sqrt())
        .collect();
    Ok(OlsFit {
        coefficients,
        residuals,
        standard_errors,
        residual_variance,
        n_obs: n,
        n_params: k,
    })
}

/// Outcome of an (augmented) Dickey-Fuller test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-ratio of the lagged-level coefficient; large negative values
    /// speak against a unit root.
    pub statistic: f64,
    pub lag_order: usize,
    pub regression: Regression,
    /// Coefficient on the lagged level in the differenced regression
    /// (the level-form autoregressive coefficient minus one).
    pub lagged_level_coef: f64,
    /// Coefficients on the lagged differences.
    pub diff_lag_coefs: Vec<f64>,
    pub p_value: f64,
    pub reject_unit_root_at_5pct: bool,
    pub n_obs: usize,
}

/// Default lag ceiling, floor(12·(n/100)^0.25) (Schwert's rule).
pub fn schwert_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Augmented Dickey-Fuller test with AIC-based lag selection up to
/// `max_lag` (Schwert's rule when `None`). The lag order is chosen on a
/// common estimation sample trimmed to the longest candidate lag, then
/// the test regression is refit on the full sample for that lag.
pub fn adf_test(
    series: &[f64],
    max_lag: Option<usize>,
    regression: Regression,
) -> Result<AdfResult> {
    let n = series.len();
    let max_lag = max_lag.unwrap_or_else(|| schwert_max_lag(n));
    validate_series(series, max_lag)?;

    let start = max_lag + 1;
    let mut best: Option<(f64, usize)> = None;
    for lag in 0..=max_lag {
        let fit = adf_regression(series, lag, start, regression)?;
        let aic = fit.aic();
        if best.is_none_or(|(b, _)| aic < b) {
            best = Some((aic, lag));
        }
    }
    let (_, lag) = best.expect("at least the zero-lag candidate is fit");
    adf_test_fixed_lag(series, lag, regression)
}

/// Augmented Dickey-Fuller test at a fixed lag order.
pub fn adf_test_fixed_lag(
    series: &[f64],
    lag: usize,
    regression: Regression,
) -> Result<AdfResult> {
    validate_series(series, lag)?;
    let fit = adf_regression(series, lag, lag + 1, regression)?;
    let level_idx = regression.deterministic_terms();
    let coef = fit.coefficients[level_idx];
    let se = fit.standard_errors[level_idx];
    if se == 0.0 {
        return Err(StationarityError::DegenerateSeries);
    }
    let statistic = coef / se;
    let p_value = mackinnon_p_value(statistic, regression);
    Ok(AdfResult {
        statistic,
        lag_order: lag,
        regression,
        lagged_level_coef: coef,
        diff_lag_coefs: fit.coefficients[level_idx + 1..].to_vec(),
        p_value,
        reject_unit_root_at_5pct: p_value < 0.05,
        n_obs: fit.n_obs,
    })
}

fn validate_series(series: &[f64], max_lag: usize) -> Result<()> {
    let n = series.len();
    if series.iter().any(|v| !v.is_finite()) {
        return Err(StationarityError::NonFinite);
    }
    if n < 20 + max_lag {
        return Err(StationarityError::TooShort {
            needed: 20 + max_lag,
            len: n,
        });
    }
    let first = series[0];
    if series.iter().all(|&v| v == first) {
        return Err(StationarityError::DegenerateSeries);
    }
    Ok(())
}

/// Regresses Δy_s on [c, (trend), y_{s−1}, Δy_{s−1..s−lag}] for
/// s = start..n−1 (0-based), so callers can pin a common sample across
/// candidate lag orders.
fn adf_regression(
    series: &[f64],
    lag: usize,
    start: usize,
    regression: Regression,
) -> Result<OlsFit> {
    let n = series.len();
    debug_assert!(start > lag);
    let diffs: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let mut design = Vec::with_capacity(n - start);
    let mut response = Vec::with_capacity(n - start);
    for s in start..n {
        let mut row = Vec::with_capacity(regression.deterministic_terms() + 1 + lag);
        row.push(1.0);
        if regression == Regression::ConstantTrend {
            row.push(s as f64);
        }
        row.push(series[s - 1]);
        for j in 1..=lag {
            row.push(diffs[s - 1 - j]);
        }
        design.push(row);
        response.push(diffs[s - 1]);
    }
    ols(&design, &response)
}

// MacKinnon (1994, 2010) response-surface coefficients for approximate
// asymptotic p-values of the single-series ADF t statistic, as tabulated
// in statsmodels 0.14 (adfvalues.py). Outside [tau_min, tau_max] the
// p-value saturates at 0 or 1; below tau_star the small-p polynomial
// applies, above it the large-p polynomial.
struct PValueSurface {
    tau_star: f64,
    tau_min: f64,
    tau_max: f64,
    small_p: [f64; 3],
    large_p: [f64; 4],
}

const SURFACE_CONSTANT: PValueSurface = PValueSurface {
    tau_star: -1.61,
    tau_min: -18.83,
    tau_max: 2.74,
    small_p: [2.1659, 1.4412, 0.038269],
    large_p: [1.7339, 0.93202, -0.12745, -0.010368],
};

const SURFACE_CONSTANT_TREND: PValueSurface = PValueSurface {
    tau_star: -2.89,
    tau_min: -16.18,
    tau_max: 0.7,
    small_p: [3.2512, 1.6047, 0.049588],
    large_p: [2.5261, 0.61654, -0.37956, -0.060285],
};

/// Approximate asymptotic p-value for an ADF t statistic.
pub fn mackinnon_p_value(statistic: f64, regression: Regression) -> f64 {
    let surface = match regression {
        Regression::Constant => &SURFACE_CONSTANT,
        Regression::ConstantTrend => &SURFACE_CONSTANT_TREND,
    };
    if statistic > surface.tau_max {
        return 1.0;
    }
    if statistic < surface.tau_min {
        return 0.0;
    }
    let z = if statistic <= surface.tau_star {
        polyval_ascending(&surface.small_p, statistic)
    } else {
        polyval_ascending(&surface.large_p, statistic)
    };
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.cdf(z)
}

fn polyval_ascending(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}
