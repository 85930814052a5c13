use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{sample_scenario, Scenario, ScenarioConfig, SimulatedPair};
use crate::error::{Error, Result};
use crate::geometry::{random_projection, Vector};
use crate::index::VectorIndex;
use crate::neighborhood::{build_neighborhood, check_grid, AmbiguityScore};
use crate::rng::{derive_seed, derive_seed_path};
use crate::stats::Summary;

pub const DEFAULT_TRIALS: usize = 200;

/// `(dimension, topics, n_parent)` of the dimension grid.
pub const DIMENSION_GRID: [(usize, usize, usize); 3] = [(64, 16, 12), (128, 32, 16), (256, 64, 32)];

/// Target dimensions of the projection study from 256.
pub const PROJECTION_DIMS: [usize; 4] = [224, 192, 128, 64];

/// One trial's score at one scale. `dimension` is the embedding dimension
/// after any projection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialScore {
    pub trial_id: usize,
    pub scenario: Scenario,
    pub dimension: usize,
    pub epsilon: f64,
    pub w1_h0: f64,
    pub lt_max_h1: f64,
    pub points_used: usize,
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub scenario: Scenario,
    pub dimension: usize,
    pub epsilon: f64,
    pub n_trials: usize,
    pub w1_h0: Summary,
    pub lt_max_h1: Summary,
}

impl ScoreSummary {
    pub fn of(scores: &[TrialScore]) -> Result<Self> {
        let first = scores
            .first()
            .ok_or_else(|| Error::invalid("no trial scores to summarize"))?;
        let w1: Vec<f64> = scores.iter().map(|s| s.w1_h0).collect();
        let lt: Vec<f64> = scores.iter().map(|s| s.lt_max_h1).collect();
        Ok(Self {
            scenario: first.scenario,
            dimension: first.dimension,
            epsilon: first.epsilon,
            n_trials: scores.len(),
            w1_h0: Summary::of(&w1)?,
            lt_max_h1: Summary::of(&lt)?,
        })
    }
}

/// Trial rows plus one summary per (dimension, epsilon) group, in input order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationRun {
    pub config: ScenarioConfig,
    pub scenario: Scenario,
    pub n_trials: usize,
    pub trials: Vec<TrialScore>,
    pub summaries: Vec<ScoreSummary>,
}

impl SimulationRun {
    pub fn summary_at(&self, dimension: usize, epsilon: f64) -> Option<&ScoreSummary> {
        self.summaries
            .iter()
            .find(|s| s.dimension == dimension && s.epsilon == epsilon)
    }

    /// Summary of a single-scale, unprojected run.
    pub fn summary(&self) -> &ScoreSummary {
        &self.summaries[0]
    }
}

/// Seed of trial `t`; shared across scenarios so paired trials see the same
/// vocabulary.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, trial as u64)
}

fn score_pair(
    trial_id: usize,
    pair: &SimulatedPair,
    query: &Vector<f64>,
    corpus: Vec<Vector<f64>>,
    k: usize,
    grid: &[f64],
) -> Result<Vec<TrialScore>> {
    let dimension = query.dim();
    let index = VectorIndex::from_vectors(corpus)?;
    let nb = build_neighborhood(query, &index, k)?;
    grid.iter()
        .map(|&e| {
            let AmbiguityScore {
                epsilon,
                w1_h0,
                lt_max_h1,
                points_used,
                degenerate,
            } = nb.score_at(e)?;
            Ok(TrialScore {
                trial_id,
                scenario: pair.scenario,
                dimension,
                epsilon,
                w1_h0,
                lt_max_h1,
                points_used,
                degenerate,
            })
        })
        .collect()
}

fn run_grid(
    config: &ScenarioConfig,
    scenario: Scenario,
    n_trials: usize,
    grid: &[f64],
    target_dims: &[usize],
) -> Result<SimulationRun> {
    config.validate()?;
    if n_trials == 0 {
        return Err(Error::invalid("n_trials must be at least 1"));
    }
    check_grid(grid)?;
    for &d in target_dims {
        if d >= config.dimension || d < 2 {
            return Err(Error::invalid(format!(
                "projection target {d} must lie in [2, {})",
                config.dimension
            )));
        }
    }
    let per_trial: Vec<Vec<TrialScore>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(config.seed, t);
            let pair = sample_scenario(&config.with_seed(seed), scenario)?;
            let mut rows = score_pair(t, &pair, &pair.query, pair.corpus.clone(), config.corpus_size, grid)?;
            for &d in target_dims {
                // query and corpus share one matrix per trial and dimension
                let mut all = Vec::with_capacity(pair.corpus.len() + 1);
                all.push(pair.query.clone());
                all.extend(pair.corpus.iter().cloned());
                let mut projected = random_projection(&all, d, derive_seed_path(seed, &[2, d as u64]))?;
                let corpus = projected.split_off(1);
                rows.extend(score_pair(t, &pair, &projected[0], corpus, config.corpus_size, grid)?);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut groups: Vec<(usize, f64)> = Vec::new();
    groups.push((config.dimension, grid[0]));
    for &d in std::iter::once(&config.dimension).chain(target_dims) {
        for &e in grid {
            if !groups.contains(&(d, e)) {
                groups.push((d, e));
            }
        }
    }
    let trials: Vec<TrialScore> = per_trial.into_iter().flatten().collect();
    let summaries = groups
        .iter()
        .map(|&(d, e)| {
            let g: Vec<TrialScore> = trials
                .iter()
                .filter(|s| s.dimension == d && s.epsilon == e)
                .copied()
                .collect();
            ScoreSummary::of(&g)
        })
        .collect::<Result<_>>()?;
    Ok(SimulationRun {
        config: config.clone(),
        scenario,
        n_trials,
        trials,
        summaries,
    })
}

/// `n_trials` independent trials scored at `config.epsilon` with
/// `k = corpus_size`.
pub fn run_simulation(config: &ScenarioConfig, scenario: Scenario, n_trials: usize) -> Result<SimulationRun> {
    run_grid(config, scenario, n_trials, &[config.epsilon], &[])
}

/// Scores the same trials at every scale of an ascending grid.
pub fn epsilon_sweep(
    config: &ScenarioConfig,
    scenario: Scenario,
    epsilon_grid: &[f64],
    n_trials: usize,
) -> Result<SimulationRun> {
    run_grid(config, scenario, n_trials, epsilon_grid, &[])
}

/// Unprojected baseline plus one jointly projected copy of every trial per
/// target dimension, all at `config.epsilon`.
pub fn projection_robustness(
    config: &ScenarioConfig,
    scenario: Scenario,
    target_dims: &[usize],
    n_trials: usize,
) -> Result<SimulationRun> {
    run_grid(config, scenario, n_trials, &[config.epsilon], target_dims)
}

/// Scenario 1 and 2 results for one configuration of the dimension grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimensionComparison {
    pub config: ScenarioConfig,
    pub scenario_one: ScoreSummary,
    pub scenario_two: ScoreSummary,
    /// Scenario 2 mean minus Scenario 1 mean.
    pub delta_w1_h0: f64,
    pub delta_lt_max_h1: f64,
    pub w1_iqr_disjoint: bool,
    pub lt_iqr_disjoint: bool,
}

/// Grid configs at sigma = 0.1, epsilon = 0.4.
pub fn dimension_grid_configs(seed: u64) -> Vec<ScenarioConfig> {
    DIMENSION_GRID
        .iter()
        .map(|&(d, n, p)| ScenarioConfig::new(d, n, p, 0.1).with_seed(seed))
        .collect()
}

pub fn dimension_sweep(configs: &[ScenarioConfig], n_trials: usize) -> Result<Vec<DimensionComparison>> {
    configs
        .iter()
        .map(|c| {
            let one = *run_simulation(c, Scenario::One, n_trials)?.summary();
            let two = *run_simulation(c, Scenario::Two, n_trials)?.summary();
            Ok(DimensionComparison {
                config: c.clone(),
                delta_w1_h0: two.w1_h0.mean - one.w1_h0.mean,
                delta_lt_max_h1: two.lt_max_h1.mean - one.lt_max_h1.mean,
                w1_iqr_disjoint: one.w1_h0.iqr_disjoint(&two.w1_h0),
                lt_iqr_disjoint: one.lt_max_h1.iqr_disjoint(&two.lt_max_h1),
                scenario_one: one,
                scenario_two: two,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct TrialRow {
    trial_id: usize,
    scenario: u8,
    epsilon: f64,
    w1_h0: f64,
    lt_max_h1: f64,
}

#[derive(Serialize)]
struct DimensionRow {
    dimension: usize,
    trial_id: usize,
    scenario: u8,
    epsilon: f64,
    w1_h0: f64,
    lt_max_h1: f64,
}

/// `(trial_id, scenario, epsilon, w1_h0, lt_max_h1)` rows. With
/// `with_dimension`, a leading `dimension` column is added.
pub fn write_trials_csv<W: Write>(writer: W, trials: &[TrialScore], with_dimension: bool) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for t in trials {
        if with_dimension {
            out.serialize(DimensionRow {
                dimension: t.dimension,
                trial_id: t.trial_id,
                scenario: t.scenario.id(),
                epsilon: t.epsilon,
                w1_h0: t.w1_h0,
                lt_max_h1: t.lt_max_h1,
            })?;
        } else {
            out.serialize(TrialRow {
                trial_id: t.trial_id,
                scenario: t.scenario.id(),
                epsilon: t.epsilon,
                w1_h0: t.w1_h0,
                lt_max_h1: t.lt_max_h1,
            })?;
        }
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        let mut c = ScenarioConfig::new(64, 16, 12, 0.1);
        c.corpus_size = 20;
        c.seed = 5;
        c
    }

    #[test]
    fn single_trial_is_deterministic() {
        let a = run_simulation(&small(), Scenario::One, 1).unwrap();
        let b = run_simulation(&small(), Scenario::One, 1).unwrap();
        assert_eq!(a.trials.len(), 1);
        assert_eq!(a.trials, b.trials);
        assert_eq!(a.summary().n_trials, 1);
    }

    #[test]
    fn runs_are_independent_of_thread_count() {
        let c = small();
        let par = run_simulation(&c, Scenario::Two, 8).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| run_simulation(&c, Scenario::Two, 8).unwrap());
        assert_eq!(par.trials, serial.trials);
    }

    #[test]
    fn sweep_contains_run_simulation() {
        let c = small();
        let sweep = epsilon_sweep(&c, Scenario::One, &[0.2, 0.4, 0.8], 4).unwrap();
        assert_eq!(sweep.trials.len(), 12);
        assert_eq!(sweep.summaries.len(), 3);
        let single = run_simulation(&c, Scenario::One, 4).unwrap();
        let at = sweep.summary_at(64, 0.4).unwrap();
        assert_eq!(at, single.summary());
        assert!(epsilon_sweep(&c, Scenario::One, &[0.4, 0.2], 4).is_err());
        assert!(epsilon_sweep(&c, Scenario::One, &[], 4).is_err());
    }

    #[test]
    fn projection_baseline_and_dims() {
        let c = small();
        let empty = projection_robustness(&c, Scenario::One, &[], 3).unwrap();
        assert_eq!(empty.trials, run_simulation(&c, Scenario::One, 3).unwrap().trials);
        let r = projection_robustness(&c, Scenario::One, &[48, 32], 3).unwrap();
        assert_eq!(
            r.summaries.iter().map(|s| s.dimension).collect::<Vec<_>>(),
            vec![64, 48, 32]
        );
        assert!(projection_robustness(&c, Scenario::One, &[64], 3).is_err());
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(run_simulation(&small(), Scenario::One, 0).is_err());
    }

    #[test]
    fn csv_columns() {
        let r = run_simulation(&small(), Scenario::One, 1).unwrap();
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &r.trials, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("trial_id,scenario,epsilon,w1_h0,lt_max_h1\n0,1,0.4,"));
        assert_eq!(text.lines().count(), 2);
    }
}
