//! Numeric distribution exports (histograms, Gaussian KDE curves) and a
//! minimal SVG line plot.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{std_dev, Summary};

pub const MIN_BANDWIDTH: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width bins over the sample range. A constant sample gets a unit
/// -width range centred on its value.
pub fn histogram(xs: &[f64], bins: usize) -> Result<Histogram> {
    if xs.is_empty() || bins == 0 {
        return Err(Error::invalid("histogram needs samples and at least one bin"));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("histogram samples must be finite"));
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0; bins];
    for &x in xs {
        let b = (((x - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Scott's rule `s * n^(-1/5)` (sample standard deviation), floored at
/// `MIN_BANDWIDTH`.
pub fn scott_bandwidth(xs: &[f64]) -> Result<f64> {
    let s = std_dev(xs).ok_or_else(|| Error::invalid("bandwidth of an empty sample"))?;
    Ok((s * (xs.len() as f64).powf(-0.2)).max(MIN_BANDWIDTH))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdeCurve {
    pub bandwidth: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

/// Gaussian KDE sampled at `points` evenly spaced positions spanning the
/// data plus three bandwidths on each side.
pub fn gaussian_kde(xs: &[f64], points: usize) -> Result<KdeCurve> {
    if points < 2 {
        return Err(Error::invalid("KDE needs at least two evaluation points"));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("KDE samples must be finite"));
    }
    let h = scott_bandwidth(xs)?;
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (points - 1) as f64;
    let norm = 1.0 / (xs.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let x: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
    let density = x
        .iter()
        .map(|&t| {
            norm * xs
                .iter()
                .map(|&s| {
                    let z = (t - s) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok(KdeCurve {
        bandwidth: h,
        x,
        density,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricDistribution {
    pub group: String,
    pub metric: String,
    pub summary: Summary,
    pub histogram: Histogram,
    pub kde: KdeCurve,
}

/// Named samples of both metrics, e.g. one scenario or one direction.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricSamples {
    pub group: String,
    pub w1_h0: Vec<f64>,
    pub lt_max_h1: Vec<f64>,
}

pub fn distributions(groups: &[MetricSamples], bins: usize, kde_points: usize) -> Result<Vec<MetricDistribution>> {
    if groups.is_empty() {
        return Err(Error::invalid("no result rows to report"));
    }
    let mut out = Vec::new();
    for g in groups {
        for (metric, xs) in [("w1_h0", &g.w1_h0), ("lt_max_h1", &g.lt_max_h1)] {
            out.push(MetricDistribution {
                group: g.group.clone(),
                metric: metric.to_owned(),
                summary: Summary::of(xs)?,
                histogram: histogram(xs, bins)?,
                kde: gaussian_kde(xs, kde_points)?,
            });
        }
    }
    Ok(out)
}

/// Reads the `w1_h0` and `lt_max_h1` columns of a results CSV. Rows are
/// grouped by the `scenario` column when present (and by `epsilon` when it
/// takes several values), otherwise the whole file forms one group named
/// `default_group`.
pub fn read_metric_csv(path: &Path, default_group: &str) -> Result<Vec<MetricSamples>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (w1, lt) = match (col("w1_h0"), col("lt_max_h1")) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::invalid(format!(
                "{} lacks w1_h0 / lt_max_h1 columns",
                path.display()
            )))
        }
    };
    let scenario = col("scenario");
    let epsilon = col("epsilon");
    let dimension = col("dimension");
    let mut rows: Vec<(Vec<String>, f64, f64)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parse = |c: usize| -> Result<f64> {
            rec.get(c).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: format!("column {} is not a number", headers.get(c).unwrap_or("?")),
            })
        };
        let key = [("scenario", scenario), ("dimension", dimension), ("epsilon", epsilon)]
            .iter()
            .filter_map(|(name, c)| c.map(|c| format!("{name}={}", rec.get(c).unwrap_or(""))))
            .collect();
        rows.push((key, parse(w1)?, parse(lt)?));
    }
    if rows.is_empty() {
        return Err(Error::invalid(format!("{} has no result rows", path.display())));
    }
    // keep only key parts that vary
    let parts = rows[0].0.len();
    let varying: Vec<bool> = (0..parts)
        .map(|p| rows.iter().any(|r| r.0[p] != rows[0].0[p]))
        .collect();
    let mut groups: BTreeMap<String, MetricSamples> = BTreeMap::new();
    for (key, a, b) in rows {
        let label: Vec<&str> = key
            .iter()
            .zip(&varying)
            .filter(|(_, v)| **v)
            .map(|(k, _)| k.as_str())
            .collect();
        let name = if label.is_empty() {
            default_group.to_owned()
        } else {
            format!("{default_group}[{}]", label.join(","))
        };
        let g = groups.entry(name.clone()).or_insert_with(|| MetricSamples {
            group: name,
            ..Default::default()
        });
        g.w1_h0.push(a);
        g.lt_max_h1.push(b);
    }
    Ok(groups.into_values().collect())
}

/// A curve with an optional lower/upper band.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSeries {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub band: Option<(Vec<f64>, Vec<f64>)>,
}

const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Axes, one polyline per series, translucent bands and a legend.
pub fn svg_line_plot(title: &str, x_label: &str, y_label: &str, series: &[LineSeries]) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.x.is_empty() || s.x.len() != s.y.len()) {
        return Err(Error::invalid(
            "line plot needs non-empty series of equal-length x and y",
        ));
    }
    let (w, h, ml, mr, mt, mb) = (640.0, 400.0, 60.0, 20.0, 30.0, 50.0);
    let all_x = series.iter().flat_map(|s| s.x.iter().copied());
    let all_y = series.iter().flat_map(|s| {
        let band = s.band.iter().flat_map(|(lo, hi)| lo.iter().chain(hi)).copied();
        s.y.iter().copied().chain(band)
    });
    let span = |it: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = span(&mut all_x.into_iter());
    let (y0, y1) = span(&mut all_y.into_iter());
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{ml}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        h - mb,
        w - mr,
        h - mb
    );
    let _ = writeln!(
        s,
        r#"<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{}" stroke="black"/>"#,
        h - mb
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{xv:.3}</text>"#,
            px(xv),
            h - mb + 15.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{yv:.3}</text>"#,
            ml - 5.0,
            py(yv) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (ml + w - mr) / 2.0,
        h - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some((lo, hi)) = &ser.band {
            let mut pts: Vec<String> = ser
                .x
                .iter()
                .zip(hi)
                .map(|(&x, &y)| format!("{:.1},{:.1}", px(x), py(y)))
                .collect();
            pts.extend(
                ser.x
                    .iter()
                    .zip(lo)
                    .rev()
                    .map(|(&x, &y)| format!("{:.1},{:.1}", px(x), py(y))),
            );
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                pts.join(" ")
            );
        }
        let pts: Vec<String> = ser
            .x
            .iter()
            .zip(&ser.y)
            .map(|(&x, &y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let ly = mt + 5.0 + 15.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            w - mr - 120.0,
            w - mr - 100.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            w - mr - 95.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
