//! `simulate` and `sweep`.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use semtopo::report::{svg_line_plot, LineSeries};
use semtopo::simulation::{
    dimension_grid_configs, dimension_sweep, epsilon_sweep, projection_robustness, run_simulation, write_trials_csv,
    Scenario, ScenarioConfig, ScoreSummary, SimulationRun, DEFAULT_TRIALS,
};

use crate::{Command, Finished, Outputs};

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Scenario config JSON; defaults to D=256, N=64, n_parent=32, sigma=0.1.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "scenario", value_parser = clap::value_parser!(u8).range(1..=3), default_values_t = [1u8, 2])]
    pub scenarios: Vec<u8>,
    #[arg(long, default_value_t = DEFAULT_TRIALS, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub trials: usize,
    /// Overrides the config's neighborhood scale.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Config as resolved by the first run.
    #[arg(skip)]
    #[serde(default)]
    pub resolved: Option<ScenarioConfig>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "scenario", value_parser = clap::value_parser!(u8).range(1..=3), default_values_t = [1u8, 2])]
    pub scenarios: Vec<u8>,
    #[arg(long, default_value_t = DEFAULT_TRIALS, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub trials: usize,
    /// Ascending scales, comma separated; defaults to 0.2..=3.0 in steps of 0.2.
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with_all = ["dims", "dimension_grid"])]
    pub epsilon_grid: Option<Vec<f64>>,
    /// Random-projection target dimensions, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with = "dimension_grid")]
    pub dims: Option<Vec<usize>>,
    /// Scenario 1 vs 2 on the three fixed (D, N, n_parent) configurations.
    #[arg(long)]
    pub dimension_grid: bool,
    /// Scale used by --dims; overrides the config.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write SVG line plots with interquartile bands.
    #[arg(long)]
    pub plot: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(skip)]
    #[serde(default)]
    pub resolved: Option<ScenarioConfig>,
}

fn resolve(
    resolved: &Option<ScenarioConfig>,
    path: &Option<PathBuf>,
    epsilon: Option<f64>,
    seed: Option<u64>,
) -> Result<ScenarioConfig> {
    if let Some(c) = resolved {
        c.validate()?;
        return Ok(c.clone());
    }
    let mut config = match path {
        Some(p) => ScenarioConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => ScenarioConfig::baseline(),
    };
    if let Some(e) = epsilon {
        config.epsilon = e;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate().context("invalid scenario config")?;
    Ok(config)
}

fn scenarios(ids: &[u8]) -> Result<Vec<Scenario>> {
    let mut out: Vec<Scenario> = Vec::new();
    for &id in ids {
        let s = Scenario::try_from(id)?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    Ok(out)
}

fn print_summary(s: &ScoreSummary) {
    println!(
        "scenario {} D={} eps={}: W1(H0) {:.4} [IQR {:.4}, {:.4}]  LT_max(H1) {:.4} [IQR {:.4}, {:.4}]  (n={})",
        s.scenario.id(),
        s.dimension,
        s.epsilon,
        s.w1_h0.mean,
        s.w1_h0.q25,
        s.w1_h0.q75,
        s.lt_max_h1.mean,
        s.lt_max_h1.q25,
        s.lt_max_h1.q75,
        s.n_trials,
    );
}

#[derive(Serialize)]
struct SummaryRow {
    scenario: u8,
    dimension: usize,
    epsilon: f64,
    n_trials: usize,
    w1_mean: f64,
    w1_q25: f64,
    w1_median: f64,
    w1_q75: f64,
    lt_mean: f64,
    lt_q25: f64,
    lt_median: f64,
    lt_q75: f64,
}

fn write_summary_csv(outputs: &mut Outputs, runs: &[SimulationRun]) -> Result<()> {
    let mut w = csv::Writer::from_writer(outputs.file("summary.csv")?);
    for s in runs.iter().flat_map(|r| &r.summaries) {
        w.serialize(SummaryRow {
            scenario: s.scenario.id(),
            dimension: s.dimension,
            epsilon: s.epsilon,
            n_trials: s.n_trials,
            w1_mean: s.w1_h0.mean,
            w1_q25: s.w1_h0.q25,
            w1_median: s.w1_h0.median,
            w1_q75: s.w1_h0.q75,
            lt_mean: s.lt_max_h1.mean,
            lt_q25: s.lt_max_h1.q25,
            lt_median: s.lt_max_h1.median,
            lt_q75: s.lt_max_h1.q75,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn write_trials(outputs: &mut Outputs, name: &str, runs: &[SimulationRun], with_dimension: bool) -> Result<()> {
    let trials: Vec<_> = runs.iter().flat_map(|r| r.trials.iter().copied()).collect();
    write_trials_csv(outputs.file(name)?, &trials, with_dimension)?;
    Ok(())
}

#[derive(Serialize)]
struct Delta {
    w1_h0: f64,
    lt_max_h1: f64,
    w1_iqr_disjoint: bool,
    lt_iqr_disjoint: bool,
}

fn delta(runs: &[SimulationRun]) -> Option<Delta> {
    let find = |s| runs.iter().find(|r| r.scenario == s).map(|r| r.summary());
    let (one, two) = (find(Scenario::One)?, find(Scenario::Two)?);
    Some(Delta {
        w1_h0: two.w1_h0.mean - one.w1_h0.mean,
        lt_max_h1: two.lt_max_h1.mean - one.lt_max_h1.mean,
        w1_iqr_disjoint: one.w1_h0.iqr_disjoint(&two.w1_h0),
        lt_iqr_disjoint: one.lt_max_h1.iqr_disjoint(&two.lt_max_h1),
    })
}

#[derive(Serialize)]
struct RunSummary<'a> {
    config: &'a ScenarioConfig,
    n_trials: usize,
    summaries: Vec<&'a ScoreSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario_two_minus_one: Option<Delta>,
}

pub(crate) fn simulate(mut args: SimulateArgs) -> Result<Finished> {
    let config = resolve(&args.resolved, &args.config, args.epsilon, args.seed)?;
    let scenarios = scenarios(&args.scenarios)?;
    let mut outputs = Outputs::create(&args.out)?;
    let runs: Vec<SimulationRun> = scenarios
        .iter()
        .map(|&s| run_simulation(&config, s, args.trials))
        .collect::<semtopo::Result<_>>()?;
    write_trials(&mut outputs, "trials.csv", &runs, false)?;
    let d = delta(&runs);
    for r in &runs {
        print_summary(r.summary());
    }
    if let Some(d) = &d {
        println!(
            "scenario 2 - scenario 1: W1(H0) {:+.4}  LT_max(H1) {:+.4}",
            d.w1_h0, d.lt_max_h1
        );
    }
    outputs.write_json(
        "summary.json",
        &RunSummary {
            config: &config,
            n_trials: args.trials,
            summaries: runs.iter().map(|r| r.summary()).collect(),
            scenario_two_minus_one: d,
        },
    )?;
    let seed = config.seed;
    args.resolved = Some(config);
    Ok(Finished {
        invocation: Command::Simulate(args),
        seed: Some(seed),
        outputs,
    })
}

pub(crate) fn sweep(mut args: SweepArgs) -> Result<Finished> {
    let config = resolve(&args.resolved, &args.config, args.epsilon, args.seed)?;
    let mut outputs = Outputs::create(&args.out)?;
    if args.dimension_grid {
        let comparisons = dimension_sweep(&dimension_grid_configs(config.seed), args.trials)?;
        let runs_csv = outputs.file("dimension_grid.csv")?;
        let mut w = csv::Writer::from_writer(runs_csv);
        for c in &comparisons {
            for s in [&c.scenario_one, &c.scenario_two] {
                print_summary(s);
            }
            println!(
                "D={} N={} n_parent={}: delta W1(H0) {:+.4} (IQRs disjoint: {})  delta LT_max(H1) {:+.4} (IQRs disjoint: {})",
                c.config.dimension,
                c.config.topics,
                c.config.n_parent,
                c.delta_w1_h0,
                c.w1_iqr_disjoint,
                c.delta_lt_max_h1,
                c.lt_iqr_disjoint
            );
            w.serialize(GridRow {
                dimension: c.config.dimension,
                topics: c.config.topics,
                n_parent: c.config.n_parent,
                delta_w1_h0: c.delta_w1_h0,
                w1_iqr_disjoint: c.w1_iqr_disjoint,
                delta_lt_max_h1: c.delta_lt_max_h1,
                lt_iqr_disjoint: c.lt_iqr_disjoint,
            })?;
        }
        w.flush()?;
        outputs.write_json("summary.json", &comparisons)?;
    } else {
        let scenarios = scenarios(&args.scenarios)?;
        let by_dims = args.dims.is_some();
        let runs: Vec<SimulationRun> = scenarios
            .iter()
            .map(|&s| match (&args.dims, &args.epsilon_grid) {
                (Some(dims), _) => projection_robustness(&config, s, dims, args.trials),
                (None, Some(grid)) => epsilon_sweep(&config, s, grid, args.trials),
                (None, None) => epsilon_sweep(&config, s, &crate::default_grid(), args.trials),
            })
            .collect::<semtopo::Result<_>>()?;
        write_trials(&mut outputs, "sweep.csv", &runs, by_dims)?;
        write_summary_csv(&mut outputs, &runs)?;
        for s in runs.iter().flat_map(|r| &r.summaries) {
            print_summary(s);
        }
        let all: Vec<&ScoreSummary> = runs.iter().flat_map(|r| &r.summaries).collect();
        outputs.write_json(
            "summary.json",
            &RunSummary {
                config: &config,
                n_trials: args.trials,
                summaries: all,
                scenario_two_minus_one: None,
            },
        )?;
        if args.plot {
            plot(&mut outputs, &runs, by_dims)?;
        }
    }
    let seed = config.seed;
    args.resolved = Some(config);
    Ok(Finished {
        invocation: Command::Sweep(args),
        seed: Some(seed),
        outputs,
    })
}

#[derive(Serialize)]
struct GridRow {
    dimension: usize,
    topics: usize,
    n_parent: usize,
    delta_w1_h0: f64,
    w1_iqr_disjoint: bool,
    delta_lt_max_h1: f64,
    lt_iqr_disjoint: bool,
}

fn plot(outputs: &mut Outputs, runs: &[SimulationRun], by_dims: bool) -> Result<()> {
    let x_label = if by_dims { "dimension" } else { "epsilon" };
    for (metric, title) in [("w1_h0", "W1(H0)"), ("lt_max_h1", "LT_max(H1)")] {
        let series: Vec<LineSeries> = runs
            .iter()
            .map(|r| {
                let pick = |s: &ScoreSummary| if metric == "w1_h0" { s.w1_h0 } else { s.lt_max_h1 };
                let x = r
                    .summaries
                    .iter()
                    .map(|s| if by_dims { s.dimension as f64 } else { s.epsilon })
                    .collect();
                LineSeries {
                    label: format!("scenario {}", r.scenario.id()),
                    x,
                    y: r.summaries.iter().map(|s| pick(s).mean).collect(),
                    band: Some((
                        r.summaries.iter().map(|s| pick(s).q25).collect(),
                        r.summaries.iter().map(|s| pick(s).q75).collect(),
                    )),
                }
            })
            .collect();
        let svg = svg_line_plot(&format!("{title} by {x_label}"), x_label, title, &series)?;
        let path = outputs.path(format!("{metric}.svg"));
        std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
