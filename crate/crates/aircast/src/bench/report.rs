//! Report emission: CSV/text metric tables, the activation comparison,
//! the JSON run manifest, per-station plot data and SVG charts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::svg::{line_chart, Series};
use super::{BenchError, EvalReport, ModelFamily, ReportRow, Result, ALL_FAMILIES};
use crate::metrics::MetricRow;

/// Published reference averages for the same four-model, 12-station
/// protocol, kept alongside fresh runs for comparison.
pub const REFERENCE_AVERAGES: [(ModelFamily, MetricRow); 4] = [
    (ModelFamily::Additive, MetricRow { rmse: 21.2, mae: 14.4, mape: 34.7, rrse: 0.295 }),
    (ModelFamily::Arima, MetricRow { rmse: 21.2, mae: 14.1, mape: 30.5, rrse: 0.308 }),
    (ModelFamily::Lstm, MetricRow { rmse: 20.8, mae: 13.2, mape: 22.7, rrse: 0.292 }),
    (ModelFamily::Cnn, MetricRow { rmse: 22.4, mae: 14.3, mape: 26.3, rrse: 0.312 }),
];

/// Published reference per-activation LSTM averages.
pub const REFERENCE_ACTIVATION_AVERAGES: [(&str, MetricRow); 2] = [
    ("tanh", MetricRow { rmse: 22.9, mae: 14.4, mape: 25.9, rrse: 0.320 }),
    ("relu", MetricRow { rmse: 21.2, mae: 13.3, mape: 22.9, rrse: 0.297 }),
];

fn family_color(family: ModelFamily) -> &'static str {
    match family {
        ModelFamily::Additive => "#1f77b4",
        ModelFamily::Arima => "#d62728",
        ModelFamily::Lstm => "#2ca02c",
        ModelFamily::Cnn => "#ff7f0e",
    }
}

// "p=1 d=0 q=3" → "ARIMA(1,0,3)"; other families use their fixed label.
fn table_model_label(row: &ReportRow) -> String {
    match row.family {
        ModelFamily::Arima => {
            let digits: Vec<&str> = row
                .cell
                .split_whitespace()
                .filter_map(|part| part.split('=').nth(1))
                .collect();
            if digits.len() == 3 {
                format!("ARIMA({},{},{})", digits[0], digits[1], digits[2])
            } else {
                "ARIMA".to_string()
            }
        }
        other => other.label().to_string(),
    }
}

fn write_file(paths: &mut Vec<PathBuf>, path: PathBuf, contents: &str) -> Result<()> {
    std::fs::write(&path, contents)?;
    paths.push(path);
    Ok(())
}

fn metric_cells(m: &MetricRow) -> String {
    format!("{:.6},{:.6},{:.6},{:.6}", m.rmse, m.mae, m.mape, m.rrse)
}

fn selected_rows(report: &EvalReport) -> Vec<&ReportRow> {
    report.rows.iter().filter(|r| r.selected).collect()
}

fn station_metrics_csv(report: &EvalReport) -> String {
    let mut out = String::from("station,model,cell,rmse,mae,mape,rrse\n");
    for row in selected_rows(report) {
        let m = row.metrics.as_ref().expect("selected rows carry metrics");
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.station,
            table_model_label(row),
            row.cell.replace(',', ";"),
            metric_cells(m)
        );
    }
    out
}

fn station_metrics_txt(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Predicted results per station");
    let _ = writeln!(
        out,
        "{:<16} {:<14} {:>7} {:>7} {:>7} {:>7}",
        "Station", "Model", "RMSE", "MAE", "MAPE", "RRSE"
    );
    let _ = writeln!(out, "{}", "-".repeat(64));
    let mut last_station = String::new();
    for row in selected_rows(report) {
        let m = row.metrics.as_ref().expect("selected rows carry metrics");
        let station = if row.station == last_station {
            String::new()
        } else {
            last_station = row.station.clone();
            row.station.clone()
        };
        let _ = writeln!(
            out,
            "{:<16} {:<14} {:>7.1} {:>7.1} {:>7.1} {:>7.2}",
            station,
            table_model_label(row),
            m.rmse,
            m.mae,
            m.mape,
            m.rrse
        );
    }
    out
}

fn reference_row(family: ModelFamily) -> &'static MetricRow {
    &REFERENCE_AVERAGES
        .iter()
        .find(|(f, _)| *f == family)
        .expect("every family has a reference row")
        .1
}

fn averaged_metrics_csv(report: &EvalReport) -> String {
    let mut out = String::from(
        "model,rmse,mae,mape,rrse,reference_rmse,reference_mae,reference_mape,reference_rrse\n",
    );
    for (family, m) in &report.averages {
        let p = reference_row(*family);
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            family.label(),
            metric_cells(m),
            p.rmse,
            p.mae,
            p.mape,
            p.rrse
        );
    }
    out
}

fn averaged_metrics_txt(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Averaged predicted results (reference values in brackets)");
    let _ = writeln!(
        out,
        "{:<12} {:>16} {:>16} {:>16} {:>16}",
        "Model", "RMSE", "MAE", "MAPE", "RRSE"
    );
    let _ = writeln!(out, "{}", "-".repeat(80));
    for (family, m) in &report.averages {
        let p = reference_row(*family);
        let _ = writeln!(
            out,
            "{:<12} {:>9.1} [{:>4.1}] {:>9.1} [{:>4.1}] {:>9.1} [{:>4.1}] {:>9.3} [{:>5.3}]",
            family.label(),
            m.rmse,
            p.rmse,
            m.mae,
            p.mae,
            m.mape,
            p.mape,
            m.rrse,
            p.rrse
        );
    }
    out
}

fn activation_csv(report: &EvalReport) -> String {
    let mut out = String::from(
        "activation,rmse,mae,mape,rrse,reference_rmse,reference_mae,reference_mape,reference_rrse\n",
    );
    for (activation, m) in &report.activation_averages {
        let reference = REFERENCE_ACTIVATION_AVERAGES
            .iter()
            .find(|(a, _)| a == activation)
            .map(|(_, m)| m);
        let reference_cells = match reference {
            Some(p) => format!("{},{},{},{}", p.rmse, p.mae, p.mape, p.rrse),
            None => ",,,".to_string(),
        };
        let _ = writeln!(out, "{activation},{},{reference_cells}", metric_cells(m));
    }
    out
}

fn sweep_cells_csv(report: &EvalReport) -> String {
    let mut out =
        String::from("station,family,cell,selection_score,rmse,mae,mape,rrse,selected,error\n");
    for row in &report.rows {
        let score = row
            .selection_score
            .map(|s| format!("{s:.6}"))
            .unwrap_or_default();
        let metrics = row
            .metrics
            .as_ref()
            .map(metric_cells)
            .unwrap_or_else(|| ",,,".to_string());
        let _ = writeln!(
            out,
            "{},{},{},{score},{metrics},{},{}",
            row.station,
            row.family.key(),
            row.cell.replace(',', ";"),
            row.selected,
            row.error.clone().unwrap_or_default().replace(',', ";")
        );
    }
    out
}

fn plot_data_csv(plot: &super::StationPlotData) -> String {
    let mut header = String::from("date,actual");
    for (family, _) in &plot.series {
        let _ = write!(header, ",{}", family.key());
    }
    if plot.band.is_some() {
        header.push_str(",additive_lower,additive_upper");
    }
    let mut out = header;
    out.push('\n');
    for i in 0..plot.dates.len() {
        let _ = write!(out, "{},{:.6}", plot.dates[i].format("%Y-%m-%d"), plot.actual[i]);
        for (_, values) in &plot.series {
            let _ = write!(out, ",{:.6}", values[i]);
        }
        if let Some((lower, upper)) = &plot.band {
            let _ = write!(out, ",{:.6},{:.6}", lower[i], upper[i]);
        }
        out.push('\n');
    }
    out
}

/// Writes the full report tree under `output_dir` and returns the paths
/// written: metric tables (CSV and aligned text), the activation
/// comparison, every sweep cell, the JSON manifest, and per-station
/// plot data plus one SVG per model.
pub fn emit_report(report: &EvalReport, output_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(output_dir)?;
    let plots_dir = output_dir.join("plots");
    std::fs::create_dir_all(&plots_dir)?;
    let mut paths = Vec::new();

    write_file(&mut paths, output_dir.join("station_metrics.csv"), &station_metrics_csv(report))?;
    write_file(&mut paths, output_dir.join("station_metrics.txt"), &station_metrics_txt(report))?;
    write_file(&mut paths, output_dir.join("averaged_metrics.csv"), &averaged_metrics_csv(report))?;
    write_file(&mut paths, output_dir.join("averaged_metrics.txt"), &averaged_metrics_txt(report))?;
    write_file(&mut paths, output_dir.join("activation_comparison.csv"), &activation_csv(report))?;
    write_file(&mut paths, output_dir.join("sweep_cells.csv"), &sweep_cells_csv(report))?;

    let manifest_json = serde_json::to_string_pretty(&report.manifest)
        .map_err(|e| BenchError::Config(format!("manifest serialization: {e}")))?;
    write_file(&mut paths, output_dir.join("manifest.json"), &manifest_json)?;

    for plot in &report.plots {
        write_file(
            &mut paths,
            plots_dir.join(format!("{}_plot_data.csv", plot.station)),
            &plot_data_csv(plot),
        )?;
        for family in ALL_FAMILIES {
            let Some((_, forecast)) = plot.series.iter().find(|(f, _)| *f == family) else {
                continue;
            };
            let band = if family == ModelFamily::Additive {
                plot.band
                    .as_ref()
                    .map(|(lower, upper)| (lower.as_slice(), upper.as_slice()))
            } else {
                None
            };
            let chart = line_chart(
                &format!("{} — {} test forecast", plot.station, family.label()),
                &plot.dates,
                &[
                    Series { label: "actual", color: "#222222", values: &plot.actual },
                    Series { label: family.label(), color: family_color(family), values: forecast },
                ],
                band,
            );
            write_file(
                &mut paths,
                plots_dir.join(format!("{}_{}.svg", plot.station, family.key())),
                &chart,
            )?;
        }
    }
    Ok(paths)
}
