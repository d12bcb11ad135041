//! Minimal hand-rolled SVG line charts: polylines over a date axis with
//! an optional interval band. No drawing dependencies.

use chrono::NaiveDate;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub values: &'a [f64],
}

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;

pub fn line_chart(
    title: &str,
    dates: &[NaiveDate],
    series: &[Series<'_>],
    band: Option<(&[f64], &[f64])>,
) -> String {
    let n = dates.len();
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &v in s.values {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    if let Some((lower, upper)) = band {
        for &v in lower.iter().chain(upper) {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    let pad = ((y_max - y_min) * 0.05).max(1e-9);
    y_min -= pad;
    y_max += pad;

    let x_at = |i: usize| -> f64 {
        if n <= 1 {
            MARGIN_LEFT + plot_w / 2.0
        } else {
            MARGIN_LEFT + plot_w * i as f64 / (n - 1) as f64
        }
    };
    let y_at = |v: f64| MARGIN_TOP + plot_h * (1.0 - (v - y_min) / (y_max - y_min));
    let polyline_points = |values: &[f64]| -> String {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", x_at(i), y_at(v)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    ));

    if let Some((lower, upper)) = band {
        let mut points = Vec::with_capacity(2 * n);
        for (i, &v) in lower.iter().enumerate() {
            points.push(format!("{:.2},{:.2}", x_at(i), y_at(v)));
        }
        for (i, &v) in upper.iter().enumerate().rev() {
            points.push(format!("{:.2},{:.2}", x_at(i), y_at(v)));
        }
        svg.push_str(&format!(
            "<polygon points=\"{}\" fill=\"#77aadd\" fill-opacity=\"0.25\" stroke=\"none\"/>\n",
            points.join(" ")
        ));
    }

    // axes
    svg.push_str(&format!(
        "<line x1=\"{l:.1}\" y1=\"{t:.1}\" x2=\"{l:.1}\" y2=\"{b:.1}\" stroke=\"#333\"/>\n\
         <line x1=\"{l:.1}\" y1=\"{b:.1}\" x2=\"{r:.1}\" y2=\"{b:.1}\" stroke=\"#333\"/>\n",
        l = MARGIN_LEFT,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_h,
        r = MARGIN_LEFT + plot_w,
    ));
    for tick in 0..=4 {
        let v = y_min + (y_max - y_min) * tick as f64 / 4.0;
        let y = y_at(v);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.2}\" x2=\"{:.1}\" y2=\"{y:.2}\" stroke=\"#bbb\" stroke-dasharray=\"3,4\"/>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.2}\" text-anchor=\"end\">{v:.1}</text>\n",
            MARGIN_LEFT - 6.0,
            y + 4.0
        ));
    }
    let n_x_labels = 6usize.min(n.max(1));
    for k in 0..n_x_labels {
        let i = if n_x_labels <= 1 { 0 } else { k * (n - 1) / (n_x_labels - 1) };
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            x_at(i),
            MARGIN_TOP + plot_h + 18.0,
            dates[i].format("%Y-%m-%d")
        ));
    }

    for s in series {
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.4\"/>\n",
            polyline_points(s.values),
            s.color
        ));
    }

    // legend
    let mut ly = MARGIN_TOP + 6.0;
    for s in series {
        let lx = MARGIN_LEFT + plot_w - 150.0;
        svg.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            lx + 22.0,
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            lx + 28.0,
            ly + 4.0,
            s.label
        ));
        ly += 18.0;
    }
    svg.push_str("</svg>\n");
    svg
}
