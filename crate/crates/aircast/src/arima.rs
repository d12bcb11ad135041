//! ARIMA(p,d,q) with exogenous regressors: conditional-sum-of-squares
//! estimation, AIC-driven order search over a (p,q) grid, and iterated
//! multi-step forecasting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stationarity::{difference, ols};

#[derive(Debug, Error)]
pub enum ArimaError {
    #[error("series too short: need more than {needed} observations for ({p},{d},{q}), got {len}")]
    TooShort {
        needed: usize,
        len: usize,
        p: usize,
        d: usize,
        q: usize,
    },
    #[error("exogenous matrix has {rows} rows, series has {len}")]
    ExogMismatch { rows: usize, len: usize },
    #[error("expected {expected} exogenous columns, got {actual}")]
    FeatureMismatch { expected: usize, actual: usize },
    #[error("exogenous horizon rows ({rows}) do not cover the forecast horizon ({horizon})")]
    HorizonMismatch { rows: usize, horizon: usize },
    #[error("optimizer did not converge within the iteration budget")]
    NonConvergence { best: Box<ArimaFit> },
    #[error("every (p,q) grid cell failed to fit")]
    GridExhausted,
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error(transparent)]
    Difference(#[from] crate::stationarity::StationarityError),
}

pub type Result<T> = std::result::Result<T, ArimaError>;

/// Model orders and intercept switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArimaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub include_intercept: bool,
}

impl ArimaSpec {
    pub fn new(p: usize, d: usize, q: usize) -> ArimaSpec {
        ArimaSpec {
            p,
            d,
            q,
            include_intercept: true,
        }
    }
}

/// A fitted ARIMA model plus everything needed to forecast from the end
/// of its training sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArimaFit {
    pub spec: ArimaSpec,
    pub intercept: f64,
    pub ar_coefficients: Vec<f64>,
    pub ma_coefficients: Vec<f64>,
    pub exog_coefficients: Vec<f64>,
    pub innovation_variance: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    /// CSS residuals on the differenced scale, one per conditioned
    /// observation (n − d − p of them).
    pub residuals: Vec<f64>,
    /// Last differenced levels, newest last.
    tail_levels: Vec<f64>,
    /// Last residuals, newest last.
    tail_residuals: Vec<f64>,
    /// Final value of the i-times differenced training series for
    /// i = 0..d, used to undifference forecasts.
    undiff_offsets: Vec<f64>,
    /// Stationarity / invertibility notes from the post-fit check.
    pub warnings: Vec<String>,
}

impl ArimaFit {
    pub fn n_exog(&self) -> usize {
        self.exog_coefficients.len()
    }
}

fn validate_exog(exog: &[Vec<f64>], len: usize) -> Result<usize> {
    if exog.is_empty() {
        return Ok(0);
    }
    if exog.len() != len {
        return Err(ArimaError::ExogMismatch {
            rows: exog.len(),
            len,
        });
    }
    let width = exog[0].len();
    for row in exog {
        if row.len() != width {
            return Err(ArimaError::FeatureMismatch {
                expected: width,
                actual: row.len(),
            });
        }
    }
    Ok(width)
}

/// View into the flat optimizer parameter vector, laid out as
/// [intercept?, ar.., ma.., exog..].
struct Params<'a> {
    intercept: f64,
    ar: &'a [f64],
    ma: &'a [f64],
    exog: &'a [f64],
}

fn unpack<'a>(params: &'a [f64], spec: &ArimaSpec, n_exog: usize) -> Params<'a> {
    let offset = usize::from(spec.include_intercept);
    Params {
        intercept: if spec.include_intercept { params[0] } else { 0.0 },
        ar: &params[offset..offset + spec.p],
        ma: &params[offset + spec.p..offset + spec.p + spec.q],
        exog: &params[offset + spec.p + spec.q..offset + spec.p + spec.q + n_exog],
    }
}

fn css_residuals_from(
    params: &[f64],
    series: &[f64],
    exog: &[Vec<f64>],
    spec: &ArimaSpec,
    start: usize,
) -> Option<Vec<f64>> {
    let n = series.len();
    let n_exog = exog.first().map_or(0, Vec::len);
    let pr = unpack(params, spec, n_exog);
    let mut resid = vec![0.0; n];
    for t in start..n {
        let mut pred = pr.intercept;
        for (i, beta) in pr.ar.iter().enumerate() {
            pred += beta * series[t - 1 - i];
        }
        for (j, phi) in pr.ma.iter().enumerate() {
            if t > j {
                pred += phi * resid[t - 1 - j];
            }
        }
        if n_exog > 0 {
            for (g, x) in pr.exog.iter().zip(&exog[t]) {
                pred += g * x;
            }
        }
        let e = series[t] - pred;
        if !e.is_finite() || e.abs() > 1e150 {
            return None;
        }
        resid[t] = e;
    }
    Some(resid[start..].to_vec())
}

fn css_negative_loglik_from(
    params: &[f64],
    series: &[f64],
    exog: &[Vec<f64>],
    spec: &ArimaSpec,
    start: usize,
) -> f64 {
    let residuals = match css_residuals_from(params, series, exog, spec, start) {
        Some(r) => r,
        None => return f64::INFINITY,
    };
    let n = residuals.len() as f64;
    if n <= 0.0 {
        return f64::INFINITY;
    }
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let sigma2 = (rss / n).max(1e-300);
    0.5 * n * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0)
}

/// Gaussian negative log-likelihood under the conditional-sum-of-squares
/// approximation: presample residuals are pinned at zero and the first
/// `p` observations are conditioned on. Explosive parameter vectors
/// return +∞.
pub fn css_negative_loglik(
    params: &[f64],
    series: &[f64],
    exog: &[Vec<f64>],
    spec: &ArimaSpec,
) -> f64 {
    css_negative_loglik_from(params, series, exog, spec, spec.p)
}

// Nelder-Mead simplex with the textbook coefficients and one restart
// from the incumbent before giving up.
fn nelder_mead(
    objective: impl Fn(&[f64]) -> f64,
    start: &[f64],
    max_iter: usize,
) -> (Vec<f64>, f64, bool) {
    let dim = start.len();
    let build_simplex = |origin: &[f64]| -> Vec<Vec<f64>> {
        let mut simplex = vec![origin.to_vec()];
        for i in 0..dim {
            let mut v = origin.to_vec();
            v[i] = if v[i] != 0.0 { v[i] * 1.05 } else { 0.00025 };
            simplex.push(v);
        }
        simplex
    };
    let mut best_point = start.to_vec();
    let mut best_value = objective(start);
    let mut converged = false;

    for _restart in 0..2 {
        let mut simplex = build_simplex(&best_point);
        let mut values: Vec<f64> = simplex.iter().map(|v| objective(v)).collect();
        for _ in 0..max_iter {
            let mut order: Vec<usize> = (0..simplex.len()).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let f_spread = values[dim] - values[0];
            let x_spread = (0..dim)
                .map(|j| {
                    simplex
                        .iter()
                        .map(|v| (v[j] - simplex[0][j]).abs())
                        .fold(0.0f64, f64::max)
                })
                .fold(0.0f64, f64::max);
            if f_spread.abs() < 1e-9 * (1.0 + values[0].abs()) && x_spread < 1e-7 {
                converged = true;
                break;
            }

            let centroid: Vec<f64> = (0..dim)
                .map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64)
                .collect();
            let worst = simplex[dim].clone();
            let blend = |a: f64| -> Vec<f64> {
                (0..dim)
                    .map(|j| centroid[j] + a * (centroid[j] - worst[j]))
                    .collect()
            };
            let reflected = blend(1.0);
            let f_reflected = objective(&reflected);
            if f_reflected < values[0] {
                let expanded = blend(2.0);
                let f_expanded = objective(&expanded);
                if f_expanded < f_reflected {
                    simplex[dim] = expanded;
                    values[dim] = f_expanded;
                } else {
                    simplex[dim] = reflected;
                    values[dim] = f_reflected;
                }
            } else if f_reflected < values[dim - 1] {
                simplex[dim] = reflected;
                values[dim] = f_reflected;
            } else {
                let contracted = if f_reflected < values[dim] {
                    blend(0.5)
                } else {
                    blend(-0.5)
                };
                let f_contracted = objective(&contracted);
                if f_contracted < values[dim].min(f_reflected) {
                    simplex[dim] = contracted;
                    values[dim] = f_contracted;
                } else {
                    // shrink toward the best vertex
                    for i in 1..=dim {
                        for j in 0..dim {
                            simplex[i][j] =
                                simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                        }
                        values[i] = objective(&simplex[i]);
                    }
                }
            }
        }
        let best_idx = (0..values.len())
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .unwrap();
        if values[best_idx] < best_value {
            best_value = values[best_idx];
            best_point = simplex[best_idx].clone();
        }
        if converged {
            break;
        }
    }
    (best_point, best_value, converged)
}

// Schur-Cohn reduction: true iff all roots of the polynomial (highest
// degree first) lie strictly inside the unit circle.
fn roots_inside_unit_circle(coeffs_desc: &[f64]) -> bool {
    let mut a = coeffs_desc.to_vec();
    while a.len() > 1 {
        let n = a.len() - 1;
        let k = a[n] / a[0];
        if !k.is_finite() || k.abs() >= 1.0 {
            return false;
        }
        let next: Vec<f64> = (0..n).map(|i| a[i] - k * a[n - i]).collect();
        a = next;
    }
    true
}

struct Prepared {
    series: Vec<f64>,
    exog_d: Vec<Vec<f64>>,
    start: Vec<f64>,
}

// Validation, differencing and the deterministic starting point shared
// by fit_arima and the order-search pass: series mean for the intercept,
// 0.1 for the lag weights, OLS pre-fit for the exogenous coefficients.
fn prepare(train: &[f64], exog: &[Vec<f64>], spec: &ArimaSpec) -> Result<Prepared> {
    if train.iter().any(|v| !v.is_finite()) {
        return Err(ArimaError::NonFinite);
    }
    let needed = 10 * (spec.p + spec.q + 1);
    if train.len() <= needed.max(spec.d) {
        return Err(ArimaError::TooShort {
            needed,
            len: train.len(),
            p: spec.p,
            d: spec.d,
            q: spec.q,
        });
    }
    let n_exog = validate_exog(exog, train.len())?;
    let series = difference(train, spec.d)?;
    let exog_d: Vec<Vec<f64>> = if n_exog > 0 {
        exog[spec.d..].to_vec()
    } else {
        Vec::new()
    };

    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let mut start = Vec::new();
    if spec.include_intercept {
        start.push(mean);
    }
    start.resize(start.len() + spec.p + spec.q, 0.1);
    if n_exog > 0 {
        let design: Vec<Vec<f64>> = exog_d
            .iter()
            .map(|row| {
                let mut r = vec![1.0];
                r.extend_from_slice(row);
                r
            })
            .collect();
        match ols(&design, &series) {
            Ok(prefit) => start.extend_from_slice(&prefit.coefficients[1..]),
            Err(_) => start.resize(start.len() + n_exog, 0.0),
        }
    }
    Ok(Prepared {
        series,
        exog_d,
        start,
    })
}

/// Fits an ARIMA model by minimizing the CSS negative log-likelihood
/// with a derivative-free simplex from a deterministic start. AR
/// stationarity and MA invertibility are checked after the fit and
/// reported as warnings, not errors.
pub fn fit_arima(train: &[f64], exog: &[Vec<f64>], spec: ArimaSpec) -> Result<ArimaFit> {
    let prep = prepare(train, exog, &spec)?;
    let objective =
        |params: &[f64]| css_negative_loglik(params, &prep.series, &prep.exog_d, &spec);
    let (solution, nll, converged) = if prep.start.is_empty() {
        (Vec::new(), objective(&[]), true)
    } else {
        nelder_mead(objective, &prep.start, 400 * prep.start.len())
    };

    let fit = build_fit(&solution, train, &prep.series, &prep.exog_d, spec, nll)?;
    if !converged {
        return Err(ArimaError::NonConvergence {
            best: Box::new(fit),
        });
    }
    Ok(fit)
}

fn build_fit(
    params: &[f64],
    train: &[f64],
    series: &[f64],
    exog_d: &[Vec<f64>],
    spec: ArimaSpec,
    nll: f64,
) -> Result<ArimaFit> {
    let n_exog = exog_d.first().map_or(0, Vec::len);
    let pr = unpack(params, &spec, n_exog);
    let residuals =
        css_residuals_from(params, series, exog_d, &spec, spec.p).ok_or(ArimaError::NonFinite)?;
    let n_eff = residuals.len() as f64;
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let innovation_variance = (rss / n_eff).max(1e-300);
    let log_likelihood = -nll;
    let k = spec.p + spec.q + n_exog + usize::from(spec.include_intercept) + 1;
    let aic = 2.0 * k as f64 - 2.0 * log_likelihood;

    let mut warnings = Vec::new();
    if spec.p > 0 {
        let mut poly = vec![1.0];
        poly.extend(pr.ar.iter().map(|b| -b));
        if !roots_inside_unit_circle(&poly) {
            warnings
                .push("AR polynomial on or outside the unit circle; fit is non-stationary".into());
        }
    }
    if spec.q > 0 {
        let mut poly = vec![1.0];
        poly.extend(pr.ma.iter().copied());
        if !roots_inside_unit_circle(&poly) {
            warnings
                .push("MA polynomial on or outside the unit circle; fit is non-invertible".into());
        }
    }

    let tail = spec.p.max(spec.q);
    let tail_levels = series[series.len().saturating_sub(tail)..].to_vec();
    let tail_residuals = residuals[residuals.len().saturating_sub(tail)..].to_vec();
    let mut undiff_offsets = Vec::with_capacity(spec.d);
    for i in 0..spec.d {
        let diffed = difference(train, i)?;
        undiff_offsets.push(*diffed.last().unwrap());
    }

    Ok(ArimaFit {
        spec,
        intercept: pr.intercept,
        ar_coefficients: pr.ar.to_vec(),
        ma_coefficients: pr.ma.to_vec(),
        exog_coefficients: pr.exog.to_vec(),
        innovation_variance,
        log_likelihood,
        aic,
        residuals,
        tail_levels,
        tail_residuals,
        undiff_offsets,
        warnings,
    })
}

/// One cell of the automatic order search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderCell {
    pub p: usize,
    pub q: usize,
    pub aic: Option<f64>,
    pub error: Option<String>,
}

/// Result of [`auto_arima`]: the AIC-minimal fit plus the full grid log.
#[derive(Debug)]
pub struct AutoArimaResult {
    pub best: ArimaFit,
    pub cells: Vec<OrderCell>,
}

// One selection-pass cell: optimizes the CSS objective conditioned on a
// common presample of `condition_on` observations so AIC values are
// comparable across different p.
fn grid_cell_aic(
    train: &[f64],
    exog: &[Vec<f64>],
    spec: &ArimaSpec,
    condition_on: usize,
) -> std::result::Result<f64, String> {
    let prep = prepare(train, exog, spec).map_err(|e| e.to_string())?;
    let objective = |params: &[f64]| {
        css_negative_loglik_from(params, &prep.series, &prep.exog_d, spec, condition_on)
    };
    let (_, nll, converged) = if prep.start.is_empty() {
        (Vec::new(), objective(&[]), true)
    } else {
        nelder_mead(objective, &prep.start, 400 * prep.start.len())
    };
    if !nll.is_finite() {
        return Err("objective diverged".into());
    }
    if !converged {
        return Err("optimizer did not converge within the iteration budget".into());
    }
    let n_exog = prep.exog_d.first().map_or(0, Vec::len);
    let k = spec.p + spec.q + n_exog + usize::from(spec.include_intercept) + 1;
    Ok(2.0 * k as f64 + 2.0 * nll)
}

/// Fits every (p,q) in [0, p_max] × [0, q_max] at the given differencing
/// degree and returns the fit whose AIC is minimal. The search pass
/// conditions every cell on a common p_max-observation presample so the
/// likelihoods are comparable; the winner is then refit with its own
/// conditioning. Ties break toward smaller p+q, then smaller p. Failed
/// cells are recorded rather than fatal, unless the whole grid fails.
pub fn auto_arima(
    train: &[f64],
    exog: &[Vec<f64>],
    p_max: usize,
    q_max: usize,
    d: usize,
) -> Result<AutoArimaResult> {
    let orders: Vec<(usize, usize)> = (0..=p_max)
        .flat_map(|p| (0..=q_max).map(move |q| (p, q)))
        .collect();
    let outcomes: Vec<(usize, usize, std::result::Result<f64, String>)> = orders
        .par_iter()
        .map(|&(p, q)| {
            let spec = ArimaSpec {
                p,
                d,
                q,
                include_intercept: true,
            };
            (p, q, grid_cell_aic(train, exog, &spec, p_max))
        })
        .collect();

    let cells: Vec<OrderCell> = outcomes
        .iter()
        .map(|(p, q, outcome)| match outcome {
            Ok(aic) => OrderCell {
                p: *p,
                q: *q,
                aic: Some(*aic),
                error: None,
            },
            Err(err) => OrderCell {
                p: *p,
                q: *q,
                aic: None,
                error: Some(err.clone()),
            },
        })
        .collect();

    let mut ranked: Vec<(f64, usize, usize)> = outcomes
        .iter()
        .filter_map(|(p, q, outcome)| outcome.as_ref().ok().map(|&aic| (aic, *p, *q)))
        .collect();
    ranked.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| (a.1 + a.2).cmp(&(b.1 + b.2)))
            .then_with(|| a.1.cmp(&b.1))
    });

    for (_, p, q) in ranked {
        let spec = ArimaSpec {
            p,
            d,
            q,
            include_intercept: true,
        };
        match fit_arima(train, exog, spec) {
            Ok(best) => return Ok(AutoArimaResult { best, cells }),
            Err(ArimaError::NonConvergence { best }) => {
                let mut best = *best;
                best.warnings
                    .push("final refit hit the iteration budget; best point kept".into());
                return Ok(AutoArimaResult { best, cells });
            }
            Err(_) => continue,
        }
    }
    Err(ArimaError::GridExhausted)
}

/// Iterated h-step forecast: future shocks are zero, forecasts stand in
/// for unknown levels, and the result is undifferenced back to the
/// original scale.
pub fn forecast_arima(
    fit: &ArimaFit,
    horizon: usize,
    exog_future: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let n_exog = fit.n_exog();
    if n_exog > 0 {
        if exog_future.len() < horizon {
            return Err(ArimaError::HorizonMismatch {
                rows: exog_future.len(),
                horizon,
            });
        }
        for row in exog_future.iter().take(horizon) {
            if row.len() != n_exog {
                return Err(ArimaError::FeatureMismatch {
                    expected: n_exog,
                    actual: row.len(),
                });
            }
        }
    }
    let mut levels = fit.tail_levels.clone();
    let mut resids = fit.tail_residuals.clone();
    let mut forecasts = Vec::with_capacity(horizon);
    for step in 0..horizon {
        let mut pred = fit.intercept;
        for (i, beta) in fit.ar_coefficients.iter().enumerate() {
            if let Some(v) = levels.len().checked_sub(1 + i).and_then(|ix| levels.get(ix)) {
                pred += beta * v;
            }
        }
        for (j, phi) in fit.ma_coefficients.iter().enumerate() {
            if let Some(v) = resids.len().checked_sub(1 + j).and_then(|ix| resids.get(ix)) {
                pred += phi * v;
            }
        }
        if n_exog > 0 {
            for (g, x) in fit.exog_coefficients.iter().zip(&exog_future[step]) {
                pred += g * x;
            }
        }
        forecasts.push(pred);
        levels.push(pred);
        resids.push(0.0);
    }
    // integrate back through each differencing level
    for &offset in fit.undiff_offsets.iter().rev() {
        let mut acc = offset;
        for f in forecasts.iter_mut() {
            acc += *f;
            *f = acc;
        }
    }
    Ok(forecasts)
}
