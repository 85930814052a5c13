use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::text::Document;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Planted-topic corpus: every cluster owns its own topics, every document
/// is a run of fixed-length segments, and every segment draws its words
/// from one topic of the document's cluster plus a shared pool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticCorpusConfig {
    pub clusters: usize,
    pub topics_per_cluster: usize,
    pub documents_per_cluster: usize,
    pub segments_per_document: usize,
    pub segment_tokens: usize,
    pub words_per_topic: usize,
    pub shared_words: usize,
    /// Probability that a token comes from the segment's topic.
    pub topic_share: f64,
    pub seed: u64,
}

impl Default for SyntheticCorpusConfig {
    fn default() -> Self {
        Self {
            clusters: 3,
            topics_per_cluster: 4,
            documents_per_cluster: 6,
            segments_per_document: 12,
            segment_tokens: 250,
            words_per_topic: 80,
            shared_words: 400,
            topic_share: 0.3,
            seed: 0,
        }
    }
}

/// A generated document with the topic of each segment.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedDocument {
    pub document: Document,
    pub cluster: usize,
    pub segment_topics: Vec<usize>,
}

impl SyntheticCorpusConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("clusters", self.clusters),
            ("topics_per_cluster", self.topics_per_cluster),
            ("documents_per_cluster", self.documents_per_cluster),
            ("segments_per_document", self.segments_per_document),
            ("segment_tokens", self.segment_tokens),
            ("words_per_topic", self.words_per_topic),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{name} must be at least 1")));
        }
        if !(0.0..=1.0).contains(&self.topic_share) || (self.shared_words == 0 && self.topic_share < 1.0) {
            return Err(Error::invalid(
                "topic_share must lie in [0, 1] and needs shared words below 1",
            ));
        }
        Ok(())
    }
}

fn word(prefix: &str, i: usize) -> String {
    format!("{prefix}{i}")
}

/// Documents named `c<cluster>d<index>`. Consecutive segments of a document
/// never share a topic when the cluster has more than one.
pub fn synthetic_corpus(config: &SyntheticCorpusConfig) -> Result<Vec<PlantedDocument>> {
    config.validate()?;
    let shared: Vec<String> = (0..config.shared_words).map(|i| word("s", i)).collect();
    let mut docs = Vec::new();
    for cluster in 0..config.clusters {
        let topics: Vec<usize> = (0..config.topics_per_cluster)
            .map(|t| cluster * config.topics_per_cluster + t)
            .collect();
        for d in 0..config.documents_per_cluster {
            let mut rng = rng_from_seed(derive_seed(
                config.seed,
                (cluster * config.documents_per_cluster + d) as u64,
            ));
            let mut segment_topics = Vec::with_capacity(config.segments_per_document);
            let mut tokens: Vec<String> = Vec::new();
            for _ in 0..config.segments_per_document {
                let topic = loop {
                    let t = *topics.choose(&mut rng).expect("non-empty");
                    if topics.len() == 1 || segment_topics.last() != Some(&t) {
                        break t;
                    }
                };
                segment_topics.push(topic);
                for _ in 0..config.segment_tokens {
                    if rng.random_bool(config.topic_share) {
                        let w = rng.random_range(0..config.words_per_topic);
                        tokens.push(format!("t{topic}w{w}"));
                    } else {
                        tokens.push(shared.choose(&mut rng).expect("non-empty").clone());
                    }
                }
            }
            docs.push(PlantedDocument {
                document: Document {
                    id: format!("c{cluster}d{d}"),
                    text: tokens.join(" "),
                },
                cluster,
                segment_topics,
            });
        }
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let c = SyntheticCorpusConfig::default();
        let a = synthetic_corpus(&c).unwrap();
        assert_eq!(a.len(), 18);
        assert_eq!(a[0].document.text.split_whitespace().count(), 12 * 250);
        assert!(a.iter().all(|d| d.segment_topics.windows(2).all(|w| w[0] != w[1])));
        assert!(a[7].segment_topics.iter().all(|t| (4..8).contains(t)));
        assert_eq!(a, synthetic_corpus(&c).unwrap());
    }

    #[test]
    fn invalid_configs() {
        let c = SyntheticCorpusConfig {
            clusters: 0,
            ..Default::default()
        };
        assert!(synthetic_corpus(&c).is_err());
        let c = SyntheticCorpusConfig {
            shared_words: 0,
            ..Default::default()
        };
        assert!(synthetic_corpus(&c).is_err());
    }
}
