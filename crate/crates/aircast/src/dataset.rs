//! Raw hourly station CSVs to clean daily datasets: parsing, forward
//! fill, wind-direction encoding, daily aggregation, chronological
//! splitting and min-max scaling.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The 18 raw columns of a station file, in canonical order.
pub const RAW_COLUMNS: [&str; 18] = [
    "No", "year", "month", "day", "hour", "PM2.5", "PM10", "SO2", "NO2", "CO", "O3", "TEMP",
    "PRES", "DEWP", "RAIN", "wd", "WSPM", "station",
];

/// Numeric measurement columns, in canonical order. `PM2.5` is the target.
pub const NUMERIC_COLUMNS: [&str; 11] = [
    "PM2.5", "PM10", "SO2", "NO2", "CO", "O3", "TEMP", "PRES", "DEWP", "RAIN", "WSPM",
];

pub const TARGET_COLUMN: &str = "PM2.5";
pub const WIND_COLUMN: &str = "wd";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing required column '{0}'")]
    MissingColumn(String),
    #[error("row {row}: cannot parse {column}='{value}' as a number")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("input has a header but no data rows")]
    EmptyInput,
    #[error("row {row}: {message}")]
    Validation { row: usize, message: String },
    #[error("column '{0}' has no observed values to fill from")]
    UnfillableColumn(String),
    #[error("column '{0}' still has missing values; run forward_fill first")]
    NotFilled(String),
    #[error("wind direction not encoded; run encode_wind_direction first")]
    NotEncoded,
    #[error("no hourly rows for {0} inside the covered date range")]
    DateGap(NaiveDate),
    #[error("invalid split: {0}")]
    Split(String),
    #[error("scaler state mismatch: expected columns {expected:?}, got {actual:?}")]
    StateMismatch {
        expected: Vec<String>,
        actual: Vec<String>,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// One station's hourly records in columnar form. Numeric cells are
/// `None` where the file said `NA`.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub station: String,
    pub dates: Vec<NaiveDate>,
    pub hours: Vec<u32>,
    /// Column-major cells aligned with [`NUMERIC_COLUMNS`].
    pub numeric: Vec<Vec<Option<f64>>>,
    pub wd: Vec<Option<String>>,
    /// Per-row wind-direction codes, present after encoding.
    pub wd_codes: Option<Vec<f64>>,
    /// Category → code mapping, lexicographic, present after encoding.
    pub wd_mapping: Option<Vec<(String, u32)>>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }
}

/// A clean daily-resolution dataset: contiguous dates, a target series
/// and an aligned exogenous feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyDataset {
    pub dates: Vec<NaiveDate>,
    /// Daily mean PM2.5 in µg/m³.
    pub target: Vec<f64>,
    /// Row-major daily feature means, one row per date.
    pub features: Vec<Vec<f64>>,
    pub feature_names: Vec<String>,
}

impl DailyDataset {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Copy of one feature column.
    pub fn feature_column(&self, idx: usize) -> Vec<f64> {
        self.features.iter().map(|row| row[idx]).collect()
    }

    /// Contiguous sub-dataset over `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> DailyDataset {
        DailyDataset {
            dates: self.dates[start..end].to_vec(),
            target: self.target[start..end].to_vec(),
            features: self.features[start..end].to_vec(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Checks the structural invariants: aligned lengths, strictly
    /// one-day date steps, and finite values.
    pub fn validate(&self) -> Result<()> {
        if self.target.len() != self.dates.len() || self.features.len() != self.dates.len() {
            return Err(DatasetError::Validation {
                row: 0,
                message: "dates, target and features lengths differ".into(),
            });
        }
        for (i, w) in self.dates.windows(2).enumerate() {
            if w[1] - w[0] != Duration::days(1) {
                return Err(DatasetError::Validation {
                    row: i + 1,
                    message: format!("dates not contiguous: {} then {}", w[0], w[1]),
                });
            }
        }
        for (i, row) in self.features.iter().enumerate() {
            if row.len() != self.feature_names.len() {
                return Err(DatasetError::Validation {
                    row: i,
                    message: "feature row width differs from feature_names".into(),
                });
            }
            if !self.target[i].is_finite() || row.iter().any(|v| !v.is_finite()) {
                return Err(DatasetError::Validation {
                    row: i,
                    message: "non-finite value".into(),
                });
            }
        }
        Ok(())
    }

    /// Writes `date,PM2.5,<features...>` with full-precision floats.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string(), TARGET_COLUMN.to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![self.dates[i].format("%Y-%m-%d").to_string()];
            rec.push(self.target[i].to_string());
            rec.extend(self.features[i].iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a dataset written by [`DailyDataset::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> Result<DailyDataset> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let mut iter = headers.iter();
        if iter.next() != Some("date") || iter.next() != Some(TARGET_COLUMN) {
            return Err(DatasetError::MissingColumn(format!(
                "expected leading 'date,{TARGET_COLUMN}' columns"
            )));
        }
        let feature_names: Vec<String> = iter.map(str::to_string).collect();
        let mut dates = Vec::new();
        let mut target = Vec::new();
        let mut features = Vec::new();
        for (row_idx, record) in r.records().enumerate() {
            let record = record?;
            let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|_| {
                DatasetError::Validation {
                    row: row_idx,
                    message: format!("bad date '{}'", &record[0]),
                }
            })?;
            let parse = |idx: usize| -> Result<f64> {
                record[idx].parse().map_err(|_| DatasetError::ParseCell {
                    row: row_idx,
                    column: headers[idx].to_string(),
                    value: record[idx].to_string(),
                })
            };
            dates.push(date);
            target.push(parse(1)?);
            let row: Vec<f64> = (2..record.len()).map(parse).collect::<Result<_>>()?;
            features.push(row);
        }
        if dates.is_empty() {
            return Err(DatasetError::EmptyInput);
        }
        let out = DailyDataset {
            dates,
            target,
            features,
            feature_names,
        };
        out.validate()?;
        Ok(out)
    }
}

/// Chronological train / validation / test partitions.
#[derive(Debug, Clone)]
pub struct SplitBundle {
    pub train: DailyDataset,
    /// Chronological tail of the pre-test block; may be empty.
    pub validation: DailyDataset,
    pub test: DailyDataset,
}

/// Parses a raw station CSV. Columns may appear in any order; `NA` and
/// empty cells are missing markers.
pub fn parse_station_csv<R: Read>(reader: R) -> Result<RawTable> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    for name in RAW_COLUMNS {
        col(name)?;
    }
    let year_idx = col("year")?;
    let month_idx = col("month")?;
    let day_idx = col("day")?;
    let hour_idx = col("hour")?;
    let wd_idx = col(WIND_COLUMN)?;
    let station_idx = col("station")?;
    let numeric_idx: Vec<usize> = NUMERIC_COLUMNS
        .iter()
        .map(|n| col(n))
        .collect::<Result<_>>()?;

    let mut table = RawTable {
        station: String::new(),
        dates: Vec::new(),
        hours: Vec::new(),
        numeric: vec![Vec::new(); NUMERIC_COLUMNS.len()],
        wd: Vec::new(),
        wd_codes: None,
        wd_mapping: None,
    };

    for (row_idx, record) in r.records().enumerate() {
        let record = record?;
        let int_cell = |idx: usize| -> Result<i64> {
            record[idx]
                .trim()
                .parse()
                .map_err(|_| DatasetError::ParseCell {
                    row: row_idx,
                    column: headers[idx].to_string(),
                    value: record[idx].to_string(),
                })
        };
        let year = int_cell(year_idx)?;
        let month = int_cell(month_idx)?;
        let day = int_cell(day_idx)?;
        let hour = int_cell(hour_idx)?;
        if !(0..=23).contains(&hour) {
            return Err(DatasetError::Validation {
                row: row_idx,
                message: format!("hour {hour} outside 0..=23"),
            });
        }
        let date = NaiveDate::from_ymd_opt(year as i32, month as u32, day as u32).ok_or(
            DatasetError::Validation {
                row: row_idx,
                message: format!("invalid calendar date {year}-{month}-{day}"),
            },
        )?;
        if let (Some(&prev_date), Some(&prev_hour)) = (table.dates.last(), table.hours.last()) {
            if (date, hour as u32) <= (prev_date, prev_hour) {
                return Err(DatasetError::Validation {
                    row: row_idx,
                    message: "rows not strictly increasing by (date, hour)".into(),
                });
            }
        }
        let station = record[station_idx].trim();
        if table.station.is_empty() {
            table.station = station.to_string();
        } else if table.station != station {
            return Err(DatasetError::Validation {
                row: row_idx,
                message: format!("multiple stations in one file: {} vs {station}", table.station),
            });
        }
        for (c, &idx) in numeric_idx.iter().enumerate() {
            let cell = record[idx].trim();
            let value = if cell.is_empty() || cell == "NA" {
                None
            } else {
                Some(cell.parse().map_err(|_| DatasetError::ParseCell {
                    row: row_idx,
                    column: headers[idx].to_string(),
                    value: cell.to_string(),
                })?)
            };
            table.numeric[c].push(value);
        }
        let wd_cell = record[wd_idx].trim();
        table.wd.push(if wd_cell.is_empty() || wd_cell == "NA" {
            None
        } else {
            Some(wd_cell.to_string())
        });
        table.dates.push(date);
        table.hours.push(hour as u32);
    }
    if table.dates.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    Ok(table)
}

fn fill_column<T: Clone>(cells: &mut [Option<T>]) -> bool {
    let first = match cells.iter().position(Option::is_some) {
        Some(i) => i,
        None => return false,
    };
    // back-fill the head from the first observation, then carry forward
    let head = cells[first].clone();
    for cell in cells[..first].iter_mut() {
        *cell = head.clone();
    }
    let mut last = head;
    for cell in cells.iter_mut() {
        match cell {
            Some(v) => last = Some(v.clone()),
            None => *cell = last.clone(),
        }
    }
    true
}

/// Replaces every missing cell with the nearest preceding observation;
/// leading gaps take the first observation. Applies to the numeric
/// columns and the wind-direction column alike.
pub fn forward_fill(table: &RawTable) -> Result<RawTable> {
    let mut out = table.clone();
    for (c, column) in out.numeric.iter_mut().enumerate() {
        if !fill_column(column) {
            return Err(DatasetError::UnfillableColumn(NUMERIC_COLUMNS[c].into()));
        }
    }
    if !fill_column(&mut out.wd) {
        return Err(DatasetError::UnfillableColumn(WIND_COLUMN.into()));
    }
    Ok(out)
}

/// Replaces wind-direction categories with integer codes assigned in
/// lexicographic order, recording the mapping on the table.
pub fn encode_wind_direction(table: &RawTable) -> Result<RawTable> {
    let mut out = table.clone();
    let mut distinct = BTreeSet::new();
    for cell in &out.wd {
        match cell {
            Some(v) => {
                distinct.insert(v.clone());
            }
            None => return Err(DatasetError::NotFilled(WIND_COLUMN.into())),
        }
    }
    let mapping: Vec<(String, u32)> = distinct
        .into_iter()
        .enumerate()
        .map(|(code, cat)| (cat, code as u32))
        .collect();
    let code_of = |cat: &str| -> f64 {
        mapping
            .iter()
            .find(|(c, _)| c == cat)
            .map(|(_, code)| *code as f64)
            .expect("category collected above")
    };
    out.wd_codes = Some(
        out.wd
            .iter()
            .map(|c| code_of(c.as_deref().expect("checked non-missing")))
            .collect(),
    );
    out.wd_mapping = Some(mapping);
    Ok(out)
}

/// Collapses hourly rows to one row per calendar date by arithmetic
/// mean. The encoded wind direction is averaged like any numeric column
/// and lands between RAIN and WSPM in the feature order.
pub fn aggregate_daily(table: &RawTable) -> Result<DailyDataset> {
    let wd_codes = table.wd_codes.as_ref().ok_or(DatasetError::NotEncoded)?;
    for (c, column) in table.numeric.iter().enumerate() {
        if column.iter().any(Option::is_none) {
            return Err(DatasetError::NotFilled(NUMERIC_COLUMNS[c].into()));
        }
    }
    if table.dates.is_empty() {
        return Err(DatasetError::EmptyInput);
    }

    let mut feature_names: Vec<String> = Vec::new();
    for name in NUMERIC_COLUMNS {
        if name == TARGET_COLUMN {
            continue;
        }
        if name == "WSPM" {
            feature_names.push(WIND_COLUMN.to_string());
        }
        feature_names.push(name.to_string());
    }

    let first = table.dates[0];
    let last = *table.dates.last().unwrap();
    let n_days = (last - first).num_days() as usize + 1;
    let mut dates = Vec::with_capacity(n_days);
    let mut target = Vec::with_capacity(n_days);
    let mut features = Vec::with_capacity(n_days);

    let mut row = 0usize;
    let mut date = first;
    while date <= last {
        let start = row;
        while row < table.n_rows() && table.dates[row] == date {
            row += 1;
        }
        if row == start {
            return Err(DatasetError::DateGap(date));
        }
        let count = (row - start) as f64;
        let mean_of = |cells: &[Option<f64>]| -> f64 {
            cells[start..row].iter().map(|v| v.unwrap()).sum::<f64>() / count
        };
        let mut feat_row = Vec::with_capacity(feature_names.len());
        for (c, name) in NUMERIC_COLUMNS.iter().enumerate() {
            let mean = mean_of(&table.numeric[c]);
            if *name == TARGET_COLUMN {
                target.push(mean);
            } else {
                if *name == "WSPM" {
                    feat_row.push(wd_codes[start..row].iter().sum::<f64>() / count);
                }
                feat_row.push(mean);
            }
        }
        dates.push(date);
        features.push(feat_row);
        date += Duration::days(1);
    }

    let out = DailyDataset {
        dates,
        target,
        features,
        feature_names,
    };
    out.validate()?;
    Ok(out)
}

/// Splits a daily dataset chronologically. The first
/// `floor(n·train_fraction)` days form the pre-test block; the last
/// `floor(block·validation_fraction_of_train)` of those become the
/// validation tail; everything after the block is test.
pub fn chronological_split(
    data: &DailyDataset,
    train_fraction: f64,
    validation_fraction_of_train: f64,
) -> Result<SplitBundle> {
    if data.is_empty() {
        return Err(DatasetError::Split("dataset is empty".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::Split(format!(
            "train_fraction must lie in (0,1), got {train_fraction}"
        )));
    }
    if !(0.0..1.0).contains(&validation_fraction_of_train) {
        return Err(DatasetError::Split(format!(
            "validation fraction must lie in [0,1), got {validation_fraction_of_train}"
        )));
    }
    let n = data.len();
    let block = (n as f64 * train_fraction).floor() as usize;
    let val_len = (block as f64 * validation_fraction_of_train).floor() as usize;
    let train_len = block - val_len;
    if train_len == 0 {
        return Err(DatasetError::Split("train partition is empty".into()));
    }
    if validation_fraction_of_train > 0.0 && val_len == 0 {
        return Err(DatasetError::Split("validation partition is empty".into()));
    }
    if block == n {
        return Err(DatasetError::Split("test partition is empty".into()));
    }
    Ok(SplitBundle {
        train: data.slice(0, train_len),
        validation: data.slice(train_len, block),
        test: data.slice(block, n),
    })
}

/// Fitted per-column min/max bounds for the [0,1] scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerState {
    pub labels: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalerState {
    /// Fits bounds per column over row-major data. Fit this on the
    /// training block only.
    pub fn fit(rows: &[Vec<f64>], labels: &[String]) -> Result<ScalerState> {
        if rows.is_empty() {
            return Err(DatasetError::EmptyInput);
        }
        let k = labels.len();
        let mut min = vec![f64::INFINITY; k];
        let mut max = vec![f64::NEG_INFINITY; k];
        for row in rows {
            if row.len() != k {
                return Err(DatasetError::StateMismatch {
                    expected: labels.to_vec(),
                    actual: vec![format!("{} columns", row.len())],
                });
            }
            for (c, &v) in row.iter().enumerate() {
                min[c] = min[c].min(v);
                max[c] = max[c].max(v);
            }
        }
        Ok(ScalerState {
            labels: labels.to_vec(),
            min,
            max,
        })
    }

    /// Fits a single-column scaler for a series.
    pub fn fit_series(series: &[f64], label: &str) -> Result<ScalerState> {
        let rows: Vec<Vec<f64>> = series.iter().map(|&v| vec![v]).collect();
        ScalerState::fit(&rows, &[label.to_string()])
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.labels.len() {
            return Err(DatasetError::StateMismatch {
                expected: self.labels.clone(),
                actual: vec![format!("{width} columns")],
            });
        }
        Ok(())
    }

    /// Checks that `labels` names exactly the fitted columns.
    pub fn check_labels(&self, labels: &[String]) -> Result<()> {
        if labels != self.labels.as_slice() {
            return Err(DatasetError::StateMismatch {
                expected: self.labels.clone(),
                actual: labels.to_vec(),
            });
        }
        Ok(())
    }

    /// Maps each column by (x − min)/(max − min); degenerate columns
    /// map to 0.
    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter()
            .map(|row| {
                self.check_width(row.len())?;
                Ok(row
                    .iter()
                    .enumerate()
                    .map(|(c, &v)| {
                        let span = self.max[c] - self.min[c];
                        if span == 0.0 {
                            0.0
                        } else {
                            (v - self.min[c]) / span
                        }
                    })
                    .collect())
            })
            .collect()
    }

    /// Inverse of [`ScalerState::transform`]; degenerate columns return
    /// their fitted constant.
    pub fn inverse_transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter()
            .map(|row| {
                self.check_width(row.len())?;
                Ok(row
                    .iter()
                    .enumerate()
                    .map(|(c, &v)| v * (self.max[c] - self.min[c]) + self.min[c])
                    .collect())
            })
            .collect()
    }

    /// Single-column convenience over [`ScalerState::transform`].
    pub fn transform_series(&self, series: &[f64]) -> Result<Vec<f64>> {
        self.check_width(1)?;
        let rows: Vec<Vec<f64>> = series.iter().map(|&v| vec![v]).collect();
        Ok(self.transform(&rows)?.into_iter().map(|r| r[0]).collect())
    }

    /// Single-column convenience over [`ScalerState::inverse_transform`].
    pub fn inverse_series(&self, series: &[f64]) -> Result<Vec<f64>> {
        self.check_width(1)?;
        let rows: Vec<Vec<f64>> = series.iter().map(|&v| vec![v]).collect();
        Ok(self
            .inverse_transform(&rows)?
            .into_iter()
            .map(|r| r[0])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "No,year,month,day,hour,PM2.5,PM10,SO2,NO2,CO,O3,TEMP,PRES,DEWP,RAIN,wd,WSPM,station";

    fn tiny_csv(rows: &[&str]) -> String {
        let mut s = String::from(HEADER);
        for r in rows {
            s.push('\n');
            s.push_str(r);
        }
        s
    }

    #[test]
    fn parse_roundtrip_with_missing_cells() {
        let csv = tiny_csv(&[
            "1,2013,3,1,0,4,8,1,2,300,50,10,1020,-5,0,N,2.1,Test",
            "2,2013,3,1,1,NA,9,1,2,310,55,11,1021,-4,0,,2.2,Test",
        ]);
        let t = parse_station_csv(csv.as_bytes()).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.station, "Test");
        assert_eq!(t.numeric[0], vec![Some(4.0), None]);
        assert_eq!(t.wd[1], None);
    }

    #[test]
    fn parse_accepts_any_column_order() {
        let csv = "station,wd,PM2.5,No,year,month,day,hour,PM10,SO2,NO2,CO,O3,TEMP,PRES,DEWP,RAIN,WSPM\n\
                    Test,N,4,1,2013,3,1,0,8,1,2,300,50,10,1020,-5,0,2.1";
        let t = parse_station_csv(csv.as_bytes()).unwrap();
        assert_eq!(t.numeric[0], vec![Some(4.0)]);
        assert_eq!(t.wd[0].as_deref(), Some("N"));
    }

    #[test]
    fn parse_errors() {
        let no_pm = "No,year,month,day,hour,PM10,SO2,NO2,CO,O3,TEMP,PRES,DEWP,RAIN,wd,WSPM,station\n";
        match parse_station_csv(no_pm.as_bytes()) {
            Err(DatasetError::MissingColumn(c)) => assert_eq!(c, "PM2.5"),
            other => panic!("expected missing column, got {other:?}"),
        }
        assert!(matches!(
            parse_station_csv(tiny_csv(&[]).as_bytes()),
            Err(DatasetError::EmptyInput)
        ));
        let bad_hour = tiny_csv(&["1,2013,3,1,25,4,8,1,2,300,50,10,1020,-5,0,N,2.1,Test"]);
        assert!(matches!(
            parse_station_csv(bad_hour.as_bytes()),
            Err(DatasetError::Validation { .. })
        ));
        let bad_cell = tiny_csv(&["1,2013,3,1,0,x,8,1,2,300,50,10,1020,-5,0,N,2.1,Test"]);
        match parse_station_csv(bad_cell.as_bytes()) {
            Err(DatasetError::ParseCell { row, column, .. }) => {
                assert_eq!((row, column.as_str()), (0, "PM2.5"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    fn table_with_column(cells: &[Option<f64>]) -> RawTable {
        let n = cells.len();
        RawTable {
            station: "Test".into(),
            dates: (0..n)
                .map(|i| NaiveDate::from_ymd_opt(2013, 3, 1).unwrap() + Duration::days(i as i64))
                .collect(),
            hours: vec![0; n],
            numeric: (0..NUMERIC_COLUMNS.len())
                .map(|c| {
                    if c == 0 {
                        cells.to_vec()
                    } else {
                        vec![Some(1.0); n]
                    }
                })
                .collect(),
            wd: vec![Some("N".into()); n],
            wd_codes: None,
            wd_mapping: None,
        }
    }

    #[test]
    fn forward_fill_examples() {
        let t = table_with_column(&[Some(1.0), None, None, Some(4.0)]);
        let f = forward_fill(&t).unwrap();
        assert_eq!(f.numeric[0], vec![Some(1.0), Some(1.0), Some(1.0), Some(4.0)]);

        let t = table_with_column(&[None, Some(2.0), None]);
        let f = forward_fill(&t).unwrap();
        assert_eq!(f.numeric[0], vec![Some(2.0), Some(2.0), Some(2.0)]);

        let t = table_with_column(&[None, None]);
        match forward_fill(&t) {
            Err(DatasetError::UnfillableColumn(c)) => assert_eq!(c, "PM2.5"),
            other => panic!("expected unfillable column, got {other:?}"),
        }
    }

    #[test]
    fn forward_fill_is_idempotent() {
        let t = table_with_column(&[None, Some(2.0), None, Some(5.0), None]);
        let once = forward_fill(&t).unwrap();
        let twice = forward_fill(&once).unwrap();
        assert_eq!(once.numeric, twice.numeric);
        assert_eq!(once.wd, twice.wd);
    }

    #[test]
    fn encode_assigns_lexicographic_codes() {
        let mut t = table_with_column(&[Some(1.0), Some(1.0), Some(1.0)]);
        t.wd = vec![Some("NW".into()), Some("E".into()), Some("N".into())];
        let e = encode_wind_direction(&t).unwrap();
        assert_eq!(
            e.wd_mapping.unwrap(),
            vec![("E".into(), 0), ("N".into(), 1), ("NW".into(), 2)]
        );
        assert_eq!(e.wd_codes.unwrap(), vec![2.0, 0.0, 1.0]);
    }

    #[test]
    fn encode_single_category_and_full_compass() {
        let t = table_with_column(&[Some(1.0); 2]);
        let e = encode_wind_direction(&t).unwrap();
        assert_eq!(e.wd_codes.unwrap(), vec![0.0, 0.0]);

        let compass = [
            "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE", "S", "SSW", "SW", "WSW", "W",
            "WNW", "NW", "NNW",
        ];
        let mut t = table_with_column(&[Some(1.0); 16]);
        t.wd = compass.iter().map(|c| Some(c.to_string())).collect();
        let e = encode_wind_direction(&t).unwrap();
        let mapping = e.wd_mapping.unwrap();
        assert_eq!(mapping.len(), 16);
        let codes: BTreeSet<u32> = mapping.iter().map(|(_, c)| *c).collect();
        assert_eq!(codes, (0..16).collect());
        let mut cats: Vec<&str> = mapping.iter().map(|(c, _)| c.as_str()).collect();
        let sorted = {
            let mut s = cats.clone();
            s.sort_unstable();
            s
        };
        cats.sort_by_key(|c| mapping.iter().find(|(cat, _)| cat == c).unwrap().1);
        assert_eq!(cats, sorted);
    }

    fn hourly_table(days: usize, hours_per_day: usize, pm: impl Fn(usize, usize) -> f64) -> RawTable {
        let start = NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        let n = days * hours_per_day;
        let mut dates = Vec::with_capacity(n);
        let mut hours = Vec::with_capacity(n);
        let mut pm_col = Vec::with_capacity(n);
        for d in 0..days {
            for h in 0..hours_per_day {
                dates.push(start + Duration::days(d as i64));
                hours.push(h as u32);
                pm_col.push(Some(pm(d, h)));
            }
        }
        RawTable {
            station: "Test".into(),
            dates,
            hours,
            numeric: (0..NUMERIC_COLUMNS.len())
                .map(|c| if c == 0 { pm_col.clone() } else { vec![Some(c as f64); n] })
                .collect(),
            wd: vec![Some("N".into()); n],
            wd_codes: Some(vec![0.0; n]),
            wd_mapping: Some(vec![("N".into(), 0)]),
        }
    }

    #[test]
    fn aggregate_means_per_day() {
        let t = hourly_table(1, 24, |_, _| 10.0);
        let d = aggregate_daily(&t).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.target[0], 10.0);

        let t = hourly_table(1, 24, |_, h| h as f64);
        let d = aggregate_daily(&t).unwrap();
        assert!((d.target[0] - 11.5).abs() < 1e-12);
    }

    #[test]
    fn aggregate_feature_layout_and_length() {
        let t = hourly_table(5, 3, |d, _| d as f64);
        let d = aggregate_daily(&t).unwrap();
        assert_eq!(d.len(), 5);
        assert_eq!(
            d.feature_names,
            vec!["PM10", "SO2", "NO2", "CO", "O3", "TEMP", "PRES", "DEWP", "RAIN", "wd", "WSPM"]
        );
        // wd codes averaged like any numeric column
        let wd_idx = d.feature_names.iter().position(|n| n == "wd").unwrap();
        assert_eq!(d.features[0][wd_idx], 0.0);
    }

    #[test]
    fn aggregate_reports_gap_date() {
        let mut t = hourly_table(3, 2, |_, _| 1.0);
        // drop the middle day's rows
        let keep: Vec<usize> = (0..t.n_rows())
            .filter(|&i| t.dates[i] != NaiveDate::from_ymd_opt(2013, 3, 2).unwrap())
            .collect();
        t.dates = keep.iter().map(|&i| t.dates[i]).collect();
        t.hours = keep.iter().map(|&i| t.hours[i]).collect();
        for col in &mut t.numeric {
            *col = keep.iter().map(|&i| col[i]).collect();
        }
        t.wd = keep.iter().map(|&i| t.wd[i].clone()).collect();
        t.wd_codes = Some(keep.iter().map(|_| 0.0).collect());
        match aggregate_daily(&t) {
            Err(DatasetError::DateGap(d)) => {
                assert_eq!(d, NaiveDate::from_ymd_opt(2013, 3, 2).unwrap());
            }
            other => panic!("expected gap error, got {other:?}"),
        }
    }

    fn daily(n: usize) -> DailyDataset {
        let start = NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        DailyDataset {
            dates: (0..n).map(|i| start + Duration::days(i as i64)).collect(),
            target: (0..n).map(|i| i as f64).collect(),
            features: (0..n).map(|i| vec![i as f64 * 2.0]).collect(),
            feature_names: vec!["f0".into()],
        }
    }

    #[test]
    fn split_matches_fraction_arithmetic() {
        let s = chronological_split(&daily(1461), 0.75, 0.20).unwrap();
        assert_eq!(s.train.len(), 876);
        assert_eq!(s.validation.len(), 219);
        assert_eq!(s.test.len(), 366);

        let s = chronological_split(&daily(4), 0.75, 0.0).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (3, 0, 1));
    }

    #[test]
    fn split_is_ordered_partition() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let n = rng.gen_range(4..500);
            let tf = rng.gen_range(0.3..0.9);
            let vf = rng.gen_range(0.0..0.5);
            let data = daily(n);
            let s = match chronological_split(&data, tf, vf) {
                Ok(s) => s,
                Err(_) => continue, // empty-partition configs are rejected, not mangled
            };
            let mut dates = s.train.dates.clone();
            dates.extend(&s.validation.dates);
            dates.extend(&s.test.dates);
            assert_eq!(dates, data.dates);
            let mut target = s.train.target.clone();
            target.extend(&s.validation.target);
            target.extend(&s.test.target);
            assert_eq!(target, data.target);
        }
    }

    #[test]
    fn split_rejects_empty_partitions() {
        assert!(chronological_split(&daily(4), 0.75, 0.1).is_err()); // validation would be empty
        assert!(chronological_split(&daily(2), 0.4, 0.0).is_err()); // train block empty
    }

    #[test]
    fn scaler_formula_and_roundtrip() {
        let s = ScalerState::fit_series(&[2.0, 4.0, 6.0], "x").unwrap();
        assert_eq!(s.transform_series(&[2.0, 4.0, 6.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        let back = s
            .inverse_series(&s.transform_series(&[2.7, 5.9, 3.3]).unwrap())
            .unwrap();
        for (a, b) in back.iter().zip([2.7, 5.9, 3.3]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scaler_degenerate_column() {
        let s = ScalerState::fit_series(&[5.0, 5.0, 5.0], "x").unwrap();
        let scaled = s.transform_series(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(scaled, vec![0.0, 0.0, 0.0]);
        assert_eq!(s.inverse_series(&scaled).unwrap(), vec![5.0, 5.0, 5.0]);
    }

    #[test]
    fn scaler_label_mismatch() {
        let s = ScalerState::fit_series(&[1.0, 2.0], "x").unwrap();
        assert!(matches!(
            s.check_labels(&["y".to_string()]),
            Err(DatasetError::StateMismatch { .. })
        ));
        assert!(s.inverse_transform(&[vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn scaler_output_in_unit_interval_on_fitted_rows() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..4).map(|_| rng.gen_range(-50.0..50.0)).collect())
            .collect();
        let labels: Vec<String> = (0..4).map(|i| format!("c{i}")).collect();
        let s = ScalerState::fit(&rows, &labels).unwrap();
        for row in s.transform(&rows).unwrap() {
            for v in row {
                assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            }
        }
    }

    #[test]
    fn daily_csv_roundtrip() {
        let d = daily(10);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = DailyDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }
}
