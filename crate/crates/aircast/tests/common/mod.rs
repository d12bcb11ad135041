//! Shared helpers for the integration suites: a synthetic hourly
//! station generator with realistic structure (seasonal target, a few
//! correlated covariates, missing cells, categorical wind directions).

use std::fmt::Write as _;

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const COMPASS: [&str; 16] = [
    "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE", "S", "SSW", "SW", "WSW", "W", "WNW", "NW",
    "NNW",
];

/// Builds a full raw station CSV covering `days` consecutive days of
/// hourly rows starting at `start`. Roughly 1% of measurement cells are
/// NA so forward fill has work to do. PM2.5 stays strictly positive.
pub fn synthetic_station_csv(station: &str, start: NaiveDate, days: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::with_capacity(days * 24 * 96);
    out.push_str(
        "No,year,month,day,hour,PM2.5,PM10,SO2,NO2,CO,O3,TEMP,PRES,DEWP,RAIN,wd,WSPM,station\n",
    );
    let mut pollution_level = 60.0f64;
    let mut row_no = 1usize;
    for d in 0..days {
        let date = start + Duration::days(d as i64);
        let season = (2.0 * std::f64::consts::PI * date.ordinal() as f64 / 365.25).sin();
        // slow-moving AR(1) day level keeps the series stationary
        pollution_level = 60.0 + 0.7 * (pollution_level - 60.0) + 25.0 * season
            - 25.0 * 0.7 * season
            + 6.0 * rng.gen_range(-1.0..1.0);
        for hour in 0..24u32 {
            let diurnal = (2.0 * std::f64::consts::PI * hour as f64 / 24.0).sin();
            let pm25 = (pollution_level + 8.0 * diurnal + rng.gen_range(-4.0..4.0)).max(2.0);
            let pm10 = pm25 * 1.4 + rng.gen_range(0.0..15.0);
            let so2 = (6.0 + 0.08 * pm25 + rng.gen_range(-2.0..2.0)).max(0.5);
            let no2 = (25.0 + 0.3 * pm25 + rng.gen_range(-8.0..8.0)).max(1.0);
            let co = (500.0 + 9.0 * pm25 + rng.gen_range(-150.0..150.0)).max(100.0);
            let o3 = (70.0 - 0.25 * pm25 + 20.0 * diurnal + rng.gen_range(-10.0..10.0)).max(1.0);
            let temp = 12.0 - 14.0 * season + 5.0 * diurnal + rng.gen_range(-2.0..2.0);
            let pres = 1012.0 + 8.0 * season + rng.gen_range(-3.0..3.0);
            let dewp = temp - rng.gen_range(2.0..10.0);
            let rain = if rng.gen_bool(0.04) { rng.gen_range(0.1..5.0) } else { 0.0 };
            let wspm = rng.gen_range(0.2..6.0);
            let wd = COMPASS[rng.gen_range(0..COMPASS.len())];

            let cell = |value: f64, rng: &mut ChaCha8Rng| -> String {
                if rng.gen_bool(0.01) {
                    "NA".to_string()
                } else {
                    format!("{value:.2}")
                }
            };
            let pm25_cell = cell(pm25, &mut rng);
            let pm10_cell = cell(pm10, &mut rng);
            let so2_cell = cell(so2, &mut rng);
            let no2_cell = cell(no2, &mut rng);
            let co_cell = cell(co, &mut rng);
            let o3_cell = cell(o3, &mut rng);
            let wd_cell = if rng.gen_bool(0.01) { "NA" } else { wd };
            let _ = writeln!(
                out,
                "{row_no},{},{},{},{hour},{pm25_cell},{pm10_cell},{so2_cell},{no2_cell},{co_cell},{o3_cell},{temp:.2},{pres:.2},{dewp:.2},{rain:.2},{wd_cell},{wspm:.2},{station}",
                date.year(),
                date.month(),
                date.day(),
            );
            row_no += 1;
        }
    }
    out
}

/// Writes a synthetic station file under `dir` using the benchmark's
/// expected PRSA_Data_<Station>_ naming.
pub fn write_station_file(
    dir: &std::path::Path,
    station: &str,
    start: NaiveDate,
    days: usize,
    seed: u64,
) -> std::path::PathBuf {
    let path = dir.join(format!("PRSA_Data_{station}_{}.csv", start.format("%Y%m%d")));
    std::fs::write(&path, synthetic_station_csv(station, start, days, seed)).unwrap();
    path
}
