//! `report`: histogram and KDE export of result CSVs.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use semtopo::report::{distributions, read_metric_csv, svg_line_plot, LineSeries, MetricSamples};

use crate::{Command, Finished, Outputs};

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Result CSVs with w1_h0 and lt_max_h1 columns.
    #[arg(long = "input", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 20, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub bins: usize,
    #[arg(long, default_value_t = 200, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(2..))]
    pub kde_points: usize,
    /// Also write one SVG of the KDE curves per metric.
    #[arg(long)]
    pub plot: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct KdeRow<'a> {
    group: &'a str,
    metric: &'a str,
    x: f64,
    density: f64,
}

#[derive(Serialize)]
struct HistogramRow<'a> {
    group: &'a str,
    metric: &'a str,
    bin_start: f64,
    bin_end: f64,
    count: usize,
}

pub(crate) fn report(args: ReportArgs) -> Result<Finished> {
    let mut groups: Vec<MetricSamples> = Vec::new();
    for path in &args.inputs {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "results".to_owned());
        groups.extend(read_metric_csv(path, &name).with_context(|| format!("reading {}", path.display()))?);
    }
    let dists = distributions(&groups, args.bins, args.kde_points)?;
    let mut outputs = Outputs::create(&args.out)?;

    let mut kde = csv::Writer::from_writer(outputs.file("kde.csv")?);
    let mut hist = csv::Writer::from_writer(outputs.file("histogram.csv")?);
    for d in &dists {
        for (&x, &density) in d.kde.x.iter().zip(&d.kde.density) {
            kde.serialize(KdeRow {
                group: &d.group,
                metric: &d.metric,
                x,
                density,
            })?;
        }
        for (i, &count) in d.histogram.counts.iter().enumerate() {
            hist.serialize(HistogramRow {
                group: &d.group,
                metric: &d.metric,
                bin_start: d.histogram.edges[i],
                bin_end: d.histogram.edges[i + 1],
                count,
            })?;
        }
        println!(
            "{} {}: n={} mean {:.4} [IQR {:.4}, {:.4}] bandwidth {:.4}",
            d.group, d.metric, d.summary.count, d.summary.mean, d.summary.q25, d.summary.q75, d.kde.bandwidth
        );
    }
    kde.flush()?;
    hist.flush()?;
    outputs.write_json("report.json", &dists)?;

    if args.plot {
        for metric in ["w1_h0", "lt_max_h1"] {
            let series: Vec<LineSeries> = dists
                .iter()
                .filter(|d| d.metric == metric)
                .map(|d| LineSeries {
                    label: d.group.clone(),
                    x: d.kde.x.clone(),
                    y: d.kde.density.clone(),
                    band: None,
                })
                .collect();
            let svg = svg_line_plot(&format!("KDE of {metric}"), metric, "density", &series)?;
            let path = outputs.path(format!("kde_{metric}.svg"));
            std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(Finished {
        invocation: Command::Report(args),
        seed: None,
        outputs,
    })
}
