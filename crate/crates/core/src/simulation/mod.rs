//! Topic-model generator for controlled query/corpus pairs and the
//! experiments run on them.

mod experiments;
mod scenario;
mod vocabulary;

pub use experiments::{
    dimension_grid_configs, dimension_sweep, epsilon_sweep, projection_robustness, run_simulation, trial_seed,
    write_trials_csv, DimensionComparison, ScoreSummary, SimulationRun, TrialScore, DEFAULT_TRIALS, DIMENSION_GRID,
    PROJECTION_DIMS,
};
pub use scenario::{sample_pair, sample_scenario, Scenario, ScenarioConfig, SimulatedPair};
pub use vocabulary::{generate_datapoints, generate_vocabulary, Datapoint, GramStats, TopicVocabulary};
