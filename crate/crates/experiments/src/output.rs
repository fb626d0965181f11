//! CSV rows, seed averaging and SVG line charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "suite,eps,k,d,sigma2,seed,iter,metric,value,wall_time_ms";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub suite: String,
    pub eps: f64,
    pub k: usize,
    pub d: usize,
    pub sigma2: f64,
    pub seed: u64,
    pub iter: Option<usize>,
    pub metric: String,
    pub value: f64,
    pub wall_time_ms: Option<f64>,
}

pub fn write_csv<W: Write>(rows: &[ResultRow], w: W) -> anyhow::Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> anyhow::Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        anyhow::bail!("unexpected CSV header {:?}", header.join(","));
    }
    rdr.deserialize().map(|r| r.map_err(Into::into)).collect()
}

/// Grid coordinates of a row, with floats keyed by their bit patterns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointKey {
    pub eps: u64,
    pub k: usize,
    pub d: usize,
    pub sigma2: u64,
}

impl PointKey {
    pub fn of(r: &ResultRow) -> Self {
        PointKey {
            eps: r.eps.to_bits(),
            k: r.k,
            d: r.d,
            sigma2: r.sigma2.to_bits(),
        }
    }

    pub fn eps(&self) -> f64 {
        f64::from_bits(self.eps)
    }

    pub fn sigma2(&self) -> f64 {
        f64::from_bits(self.sigma2)
    }
}

/// Seed average of `metric` per grid point and iteration.
pub fn seed_means(rows: &[ResultRow], metric: &str) -> BTreeMap<(PointKey, Option<usize>), f64> {
    let mut acc: BTreeMap<(PointKey, Option<usize>), (f64, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.metric == metric) {
        let e = acc.entry((PointKey::of(r), r.iter)).or_default();
        e.0 += r.value;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 150.0, 40.0, 50.0);
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl LineChart {
    /// Renders the chart. Non-finite points are dropped.
    pub fn to_svg(&self) -> String {
        let finite: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = finite.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if finite.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let (ml, mr, mt, mb) = MARGIN;
        let pw = WIDTH - ml - mr;
        let ph = HEIGHT - mt - mb;
        let px = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| mt + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, ml + pw / 2.0, escape(&self.title));
        let _ = writeln!(
            s,
            r#"<path d="M{ml} {mt} V{} H{}" fill="none" stroke="black"/>"#,
            mt + ph,
            ml + pw
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let (x, y) = (px(xv), py(yv));
            let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#, mt + ph, mt + ph + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, mt + ph + 18.0, tick_label(xv));
            let _ = writeln!(s, r#"<line x1="{:.1}" y1="{y:.1}" x2="{ml}" y2="{y:.1}" stroke="black"/>"#, ml - 5.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, ml - 8.0, y + 4.0, tick_label(yv));
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, ml + pw / 2.0, HEIGHT - 8.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            mt + ph / 2.0,
            mt + ph / 2.0,
            escape(&self.y_label)
        );
        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, pts.join(" "));
            for p in &pts {
                let (cx, cy) = p.split_once(',').expect("formatted pair");
                let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
            }
            let ly = mt + 10.0 + 18.0 * i as f64;
            let lx = WIDTH - mr + 15.0;
            let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&series.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn most_common(values: impl Iterator<Item = usize>) -> Option<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    values.for_each(|v| *counts.entry(v).or_default() += 1);
    counts.into_iter().max_by_key(|&(v, c)| (c, std::cmp::Reverse(v))).map(|(v, _)| v)
}

/// Charts for the mean suite: rescaled MSE against `k` at the most common `d`,
/// and against `d` at the most common `k`, one line per `ε`.
pub fn mean_charts(rows: &[ResultRow]) -> Vec<(String, LineChart)> {
    let means = seed_means(rows, "rescaled_relative_mse");
    let keys: Vec<PointKey> = means.keys().map(|(p, _)| *p).collect();
    let mut out = Vec::new();
    let axes: [(&str, fn(&PointKey) -> usize, fn(&PointKey) -> usize); 2] =
        [("k", |p| p.k, |p| p.d), ("d", |p| p.d, |p| p.k)];
    for (axis, x_of, fixed_of) in axes {
        let Some(fixed) = most_common(keys.iter().map(fixed_of)) else { continue };
        let mut by_eps: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
        for (p, v) in means.iter().filter(|((p, _), _)| fixed_of(p) == fixed) {
            by_eps.entry(p.0.eps).or_default().push((x_of(&p.0) as f64, *v));
        }
        if by_eps.values().all(|pts| pts.len() < 2) {
            continue;
        }
        let other = if axis == "k" { "d" } else { "k" };
        let series = by_eps
            .into_iter()
            .map(|(eps, mut points)| {
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                Series {
                    label: format!("eps = {}", f64::from_bits(eps)),
                    points,
                }
            })
            .collect();
        out.push((
            format!("rescaled_mse_vs_{axis}.svg"),
            LineChart {
                title: format!("Rescaled relative MSE ({other} = {fixed})"),
                x_label: axis.to_string(),
                y_label: "rescaled relative MSE".into(),
                series,
            },
        ));
    }
    out
}

/// `ln` of the seed-averaged squared error against the iteration, one line per grid point.
pub fn trace_chart(rows: &[ResultRow], title: &str) -> LineChart {
    let means = seed_means(rows, "sq_error");
    let mut by_point: BTreeMap<PointKey, Vec<(f64, f64)>> = BTreeMap::new();
    for ((p, iter), v) in means {
        if let Some(t) = iter {
            by_point.entry(p).or_default().push((t as f64, v.ln()));
        }
    }
    LineChart {
        title: title.to_string(),
        x_label: "iteration".into(),
        y_label: "ln squared error".into(),
        series: by_point
            .into_iter()
            .map(|(p, points)| Series {
                label: format!("eps={} s2={}", p.eps(), p.sigma2()),
                points,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(metric: &str, seed: u64, iter: Option<usize>, value: f64) -> ResultRow {
        ResultRow {
            suite: "regress".into(),
            eps: 0.1,
            k: 5,
            d: 50,
            sigma2: 0.01,
            seed,
            iter,
            metric: metric.into(),
            value,
            wall_time_ms: None,
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut rows = vec![
            row("sq_error", 0, Some(0), 5.0),
            row("log_sq_error", 0, Some(3), f64::NEG_INFINITY),
            row("relative_mse", 1, None, 0.1 + 0.2),
        ];
        rows[2].wall_time_ms = Some(12.5);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
        assert!(text.contains(",0,,relative_mse,") || text.contains(",1,,relative_mse,"));
        assert_eq!(read_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn averages_over_seeds() {
        let rows = vec![row("sq_error", 0, Some(1), 1.0), row("sq_error", 1, Some(1), 3.0), row("other", 0, Some(1), 9.0)];
        let m = seed_means(&rows, "sq_error");
        assert_eq!(m.len(), 1);
        assert_eq!(*m.values().next().unwrap(), 2.0);
    }

    #[test]
    fn svg_is_well_formed() {
        let rows = vec![row("sq_error", 0, Some(0), 1.0), row("sq_error", 0, Some(1), 0.0), row("sq_error", 0, Some(2), 1e-3)];
        let svg = trace_chart(&rows, "a < b").to_svg();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
