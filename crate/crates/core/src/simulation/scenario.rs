use std::fmt;
use std::path::Path;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::vocabulary::{generate_vocabulary, sample_datapoints, Datapoint, TopicVocabulary};
use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::rng::{derive_seed, rng_from_seed, Rng};

fn default_corpus_size() -> usize {
    50
}

fn default_epsilon() -> f64 {
    0.4
}

fn half() -> f64 {
    0.5
}

fn yes() -> bool {
    true
}

/// Parameters of one simulated query/corpus family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Embedding dimension `D`.
    pub dimension: usize,
    /// Vocabulary size `N`.
    pub topics: usize,
    pub n_parent: usize,
    /// Defaults to `n_parent / 2`.
    #[serde(default)]
    pub n_child: Option<usize>,
    pub sigma_noise: f64,
    #[serde(default = "default_corpus_size")]
    pub corpus_size: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    /// Scenario 3: share of corpus children from the query's lineage.
    #[serde(default = "half")]
    pub mix_ratio: f64,
    /// Scenario 2: share of corpus parents from the query's lineage.
    #[serde(default = "half")]
    pub lineage_ratio: f64,
    /// Median-mask the orthonormal topics; false keeps the raw columns.
    #[serde(default = "yes")]
    pub binarize: bool,
}

impl ScenarioConfig {
    pub fn new(dimension: usize, topics: usize, n_parent: usize, sigma_noise: f64) -> Self {
        Self {
            dimension,
            topics,
            n_parent,
            n_child: None,
            sigma_noise,
            corpus_size: default_corpus_size(),
            epsilon: default_epsilon(),
            seed: 0,
            mix_ratio: half(),
            lineage_ratio: half(),
            binarize: true,
        }
    }

    /// D = 256, N = 64, n_parent = 32, sigma = 0.1, epsilon = 0.4.
    pub fn baseline() -> Self {
        Self::new(256, 64, 32, 0.1)
    }

    pub fn n_child(&self) -> usize {
        self.n_child.unwrap_or(self.n_parent / 2)
    }

    pub fn validate(&self) -> Result<()> {
        let n_child = self.n_child();
        if n_child == 0 {
            return Err(Error::invalid("n_child must be at least 1"));
        }
        if !(n_child < self.n_parent && self.n_parent <= self.topics && self.topics <= self.dimension) {
            return Err(Error::invalid(format!(
                "need n_child < n_parent <= topics <= dimension, got {n_child}, {}, {}, {}",
                self.n_parent, self.topics, self.dimension
            )));
        }
        if self.corpus_size < 2 {
            return Err(Error::invalid("corpus_size must be at least 2"));
        }
        if !(self.sigma_noise >= 0.0 && self.sigma_noise.is_finite()) {
            return Err(Error::invalid("sigma_noise must be finite and non-negative"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon must be finite and non-negative"));
        }
        for (name, r) in [("mix_ratio", self.mix_ratio), ("lineage_ratio", self.lineage_ratio)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Scenario {
    /// Query spans a parent topic set; corpus holds its children.
    One,
    /// Query is a child; corpus holds parents, some outside its lineage.
    Two,
    /// Scenario 1 query with children from mixed lineages.
    Three,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::One, Scenario::Two, Scenario::Three];

    pub fn id(self) -> u8 {
        match self {
            Scenario::One => 1,
            Scenario::Two => 2,
            Scenario::Three => 3,
        }
    }
}

impl TryFrom<u8> for Scenario {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Scenario::One),
            2 => Ok(Scenario::Two),
            3 => Ok(Scenario::Three),
            _ => Err(Error::invalid(format!("unknown scenario {id}; expected 1, 2 or 3"))),
        }
    }
}

impl From<Scenario> for u8 {
    fn from(s: Scenario) -> u8 {
        s.id()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// A query, its corpus, and the topic sets each was built from.
#[derive(Clone, Debug)]
pub struct SimulatedPair {
    pub scenario: Scenario,
    pub query: Vector<f64>,
    pub query_topics: Vec<usize>,
    pub corpus: Vec<Vector<f64>>,
    pub corpus_topics: Vec<Vec<usize>>,
}

/// Draws a fresh vocabulary and a pair from `config.seed`.
pub fn sample_scenario(config: &ScenarioConfig, scenario: Scenario) -> Result<SimulatedPair> {
    config.validate()?;
    let vocab = generate_vocabulary(
        config.topics,
        config.dimension,
        derive_seed(config.seed, 0),
        config.binarize,
    )?;
    let mut rng = rng_from_seed(derive_seed(config.seed, 1));
    sample_pair(config, scenario, &vocab, &mut rng)
}

fn topic_subset(rng: &mut Rng, n_topics: usize, k: usize) -> Vec<usize> {
    let mut s = sample(rng, n_topics, k).into_vec();
    s.sort_unstable();
    s
}

fn share(total: usize, ratio: f64) -> usize {
    ((total as f64 * ratio).round() as usize).min(total)
}

/// Scenario sampling against a given vocabulary. Lineage points are drawn
/// before cross-lineage points, so Scenario 3 with mix 1.0 consumes the
/// generator exactly like Scenario 1.
pub fn sample_pair(
    config: &ScenarioConfig,
    scenario: Scenario,
    vocab: &TopicVocabulary,
    rng: &mut Rng,
) -> Result<SimulatedPair> {
    config.validate()?;
    if vocab.len() != config.topics || vocab.dimension() != config.dimension {
        return Err(Error::invalid("vocabulary does not match the config"));
    }
    let (n_parent, n_child, sigma, size) = (
        config.n_parent,
        config.n_child(),
        config.sigma_noise,
        config.corpus_size,
    );
    let (query, corpus): (Datapoint, Vec<Datapoint>) = match scenario {
        Scenario::One => {
            let q = sample_datapoints(n_parent, &[], vocab, 1, sigma, rng)?.remove(0);
            let c = sample_datapoints(n_child, &q.topics, vocab, size, sigma, rng)?;
            (q, c)
        }
        Scenario::Two => {
            let parent = topic_subset(rng, vocab.len(), n_parent);
            let q = sample_datapoints(n_child, &parent, vocab, 1, sigma, rng)?.remove(0);
            let n_lineage = share(size, config.lineage_ratio);
            let mut c = sample_datapoints(n_parent, &parent, vocab, n_lineage, sigma, rng)?;
            c.extend(sample_datapoints(n_parent, &[], vocab, size - n_lineage, sigma, rng)?);
            (q, c)
        }
        Scenario::Three => {
            let q = sample_datapoints(n_parent, &[], vocab, 1, sigma, rng)?.remove(0);
            let n_lineage = share(size, config.mix_ratio);
            let mut c = sample_datapoints(n_child, &q.topics, vocab, n_lineage, sigma, rng)?;
            for _ in n_lineage..size {
                let other = topic_subset(rng, vocab.len(), n_parent);
                c.extend(sample_datapoints(n_child, &other, vocab, 1, sigma, rng)?);
            }
            (q, c)
        }
    };
    let (corpus, corpus_topics) = corpus.into_iter().map(|d| (d.vector, d.topics)).unzip();
    Ok(SimulatedPair {
        scenario,
        query: query.vector,
        query_topics: query.topics,
        corpus,
        corpus_topics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::householder_qr;

    fn small() -> ScenarioConfig {
        let mut c = ScenarioConfig::new(32, 16, 8, 0.0);
        c.corpus_size = 10;
        c.seed = 17;
        c
    }

    #[test]
    fn config_json_defaults() {
        let c = ScenarioConfig::from_json(r#"{"dimension":256,"topics":64,"n_parent":32,"sigma_noise":0.1}"#).unwrap();
        assert_eq!(c, ScenarioConfig::baseline());
        assert_eq!(c.n_child(), 16);
        assert!(ScenarioConfig::from_json(r#"{"dimension":4,"topics":8,"n_parent":2,"sigma_noise":0}"#).is_err());
        assert!(
            ScenarioConfig::from_json(r#"{"dimension":4,"topics":4,"n_parent":2,"sigma_noise":0,"extra":1}"#).is_err()
        );
    }

    #[test]
    fn config_bounds() {
        let mut c = small();
        c.n_child = Some(8);
        assert!(c.validate().is_err());
        let mut c = small();
        c.corpus_size = 1;
        assert!(c.validate().is_err());
        let mut c = small();
        c.mix_ratio = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn scenario_ids() {
        assert_eq!(Scenario::try_from(2).unwrap(), Scenario::Two);
        assert!(Scenario::try_from(4).is_err());
        assert_eq!(serde_json::to_string(&Scenario::Three).unwrap(), "3");
    }

    #[test]
    fn scenario_one_children_lie_in_query_span() {
        let mut c = small();
        c.binarize = false;
        for seed in 0..5 {
            let pair = sample_scenario(&c.with_seed(seed), Scenario::One).unwrap();
            assert_eq!(pair.corpus.len(), 10);
            assert_eq!(pair.query_topics.len(), 8);
            for ts in &pair.corpus_topics {
                assert_eq!(ts.len(), 4);
                assert!(ts.iter().all(|t| pair.query_topics.contains(t)));
            }
        }
    }

    #[test]
    fn scenario_one_span_residual_with_masks() {
        // binarized topics are not orthogonal; project onto an orthonormal
        // basis of the query's topic span
        let c = small();
        let vocab = generate_vocabulary(c.topics, c.dimension, derive_seed(c.seed, 0), true).unwrap();
        let pair = sample_scenario(&c, Scenario::One).unwrap();
        let cols: Vec<Vec<f64>> = pair
            .query_topics
            .iter()
            .map(|&t| vocab.topic(t).as_slice().to_vec())
            .collect();
        let q = householder_qr(&cols).unwrap().q;
        for p in &pair.corpus {
            let mut residual = p.as_slice().to_vec();
            for b in &q {
                let coef: f64 = b.iter().zip(p.iter()).map(|(x, y)| x * y).sum();
                for (r, x) in residual.iter_mut().zip(b) {
                    *r -= coef * x;
                }
            }
            let norm = residual.iter().map(|r| r * r).sum::<f64>().sqrt();
            assert!(norm < 1e-9, "{norm}");
        }
    }

    #[test]
    fn scenario_two_reaches_outside_query_topics() {
        let pair = sample_scenario(&small(), Scenario::Two).unwrap();
        assert_eq!(pair.query_topics.len(), 4);
        assert!(pair.corpus_topics.iter().all(|ts| ts.len() == 8));
        assert!(pair
            .corpus_topics
            .iter()
            .all(|ts| ts.iter().any(|t| !pair.query_topics.contains(t))));
        // lineage parents contain the query topics
        assert!(pair.corpus_topics[..5]
            .iter()
            .all(|ts| pair.query_topics.iter().all(|t| ts.contains(t))));
    }

    #[test]
    fn scenario_three_full_mix_is_scenario_one() {
        let mut c = small();
        c.sigma_noise = 0.05;
        c.mix_ratio = 1.0;
        let a = sample_scenario(&c, Scenario::One).unwrap();
        let b = sample_scenario(&c, Scenario::Three).unwrap();
        assert_eq!(a.query, b.query);
        assert_eq!(a.corpus, b.corpus);
    }

    #[test]
    fn scenario_three_zero_mix_is_cross_lineage() {
        let mut c = small();
        c.mix_ratio = 0.0;
        c.corpus_size = 40;
        let pair = sample_scenario(&c, Scenario::Three).unwrap();
        let outside = pair
            .corpus_topics
            .iter()
            .filter(|ts| ts.iter().any(|t| !pair.query_topics.contains(t)))
            .count();
        assert!(outside > 30, "{outside}");
    }

    #[test]
    fn pairs_are_unit_and_seeded() {
        let mut c = small();
        c.sigma_noise = 0.1;
        for s in Scenario::ALL {
            let a = sample_scenario(&c, s).unwrap();
            let b = sample_scenario(&c, s).unwrap();
            assert_eq!(a.corpus, b.corpus);
            assert!((a.query.norm() - 1.0).abs() < 1e-12);
            assert!(a.corpus.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        }
    }
}
