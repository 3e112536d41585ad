//! Minimal SVG line charts.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::metrics::{Dataset, Summary};
use super::Scheme;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Optional symmetric error per point.
    pub errors: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Tick labels for categorical x axes, placed at x = 0, 1, ...
    pub x_ticks: Option<Vec<String>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl Chart {
    pub fn render(&self) -> String {
        let (x0, x1) = bounds(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
        let ys = self.series.iter().flat_map(|s| {
            s.points.iter().enumerate().flat_map(move |(i, p)| {
                let e = s.errors.as_ref().map_or(0.0, |e| e[i]);
                [p.1 - e, p.1 + e]
            })
        });
        let (y0, y1) = bounds(ys);
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let y = y0 + (y1 - y0) * i as f64 / 4.0;
            let py = sy(y);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{py:.1}" x2="{}" y2="{py:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                py + 4.0,
                fmt_tick(y)
            );
        }
        match &self.x_ticks {
            Some(labels) => {
                for (i, l) in labels.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
                        sx(i as f64),
                        TOP + ph + 18.0,
                        escape(l)
                    );
                }
            }
            None => {
                for i in 0..=4 {
                    let x = x0 + (x1 - x0) * i as f64 / 4.0;
                    let _ = writeln!(
                        s,
                        r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
                        sx(x),
                        TOP + ph + 18.0,
                        fmt_tick(x)
                    );
                }
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (k, series) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|p| p.1.is_finite())
                .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                pts.join(" ")
            );
            if let Some(errs) = &series.errors {
                for (&(x, y), e) in series
                    .points
                    .iter()
                    .zip(errs)
                    .filter(|(p, e)| p.1.is_finite() && e.is_finite())
                {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="{color}"/>"#,
                        sx(x),
                        sy(y - e),
                        sy(y + e)
                    );
                }
            }
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 1e4) {
        format!("{v:.2}")
    } else {
        format!("{v:.1e}")
    }
}

/// Mean utility per episode, averaged over replications, one series per
/// scheme. Only the first sweep point is drawn.
pub fn learning_curve(data: &Dataset) -> Chart {
    let first = data.rows.first().map(|r| r.sweep_value.clone()).unwrap_or_default();
    let mut acc: BTreeMap<Scheme, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for r in data.rows.iter().filter(|r| r.sweep_value == first) {
        let Ok(scheme) = r.scheme.parse::<Scheme>() else {
            continue;
        };
        let e = acc.entry(scheme).or_default().entry(r.episode).or_default();
        e.0 += r.mean_system_utility;
        e.1 += 1;
    }
    Chart {
        title: "System utility per episode".into(),
        x_label: "episode".into(),
        y_label: "mean system utility".into(),
        series: acc
            .into_iter()
            .map(|(scheme, eps)| Series {
                name: scheme.name().into(),
                points: eps.into_iter().map(|(e, (s, n))| (e as f64, s / n as f64)).collect(),
                errors: None,
            })
            .collect(),
        x_ticks: None,
    }
}

/// Summary utility against the sweep axis with one-std error bars.
pub fn sweep_chart(summary: &Summary, axis: &str) -> Chart {
    let mut values: Vec<String> = Vec::new();
    for r in &summary.rows {
        if !values.contains(&r.sweep_value) {
            values.push(r.sweep_value.clone());
        }
    }
    let numeric: Option<Vec<f64>> = values.iter().map(|v| v.parse().ok()).collect();
    let x_of = |v: &str| {
        let i = values.iter().position(|x| x == v).unwrap_or(0);
        numeric.as_ref().map_or(i as f64, |n| n[i])
    };
    let mut series = Vec::new();
    for scheme in Scheme::ALL {
        let rows: Vec<_> = summary.rows.iter().filter(|r| r.scheme == scheme.name()).collect();
        if rows.is_empty() {
            continue;
        }
        series.push(Series {
            name: scheme.name().into(),
            points: rows.iter().map(|r| (x_of(&r.sweep_value), r.utility_mean)).collect(),
            errors: Some(rows.iter().map(|r| r.utility_std).collect()),
        });
    }
    Chart {
        title: format!("System utility vs {}", axis.replace('_', " ")),
        x_label: axis.replace('_', " "),
        y_label: "mean system utility".into(),
        series,
        x_ticks: if numeric.is_some() { None } else { Some(values) },
    }
}
