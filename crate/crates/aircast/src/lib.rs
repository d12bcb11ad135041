// index-based loops are the clearer idiom in the dense numeric kernels
#![allow(clippy::needless_range_loop)]

//! Forecasting engine and benchmark harness for daily PM2.5 levels.
//!
//! The crate covers the full pipeline from raw hourly station CSVs to
//! evaluated forecasts: cleaning and daily aggregation ([`dataset`]),
//! unit-root testing ([`stationarity`]), ARIMA with exogenous regressors
//! ([`arima`]), a decomposable trend/seasonality model ([`additive`]),
//! small deterministic LSTM / 1D-CNN networks trained from scratch
//! ([`neural`]), the four evaluation metrics ([`metrics`]), and the
//! per-station benchmark orchestration with report emission ([`bench`]).

pub mod additive;
pub mod arima;
pub mod bench;
pub mod dataset;
pub mod linalg;
pub mod metrics;
pub mod neural;
pub mod stationarity;
