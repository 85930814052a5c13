use rand::seq::index::sample;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{orthonormal_columns, Vector};
use crate::rng::{rng_from_seed, Rng};

/// `N` unit topic vectors in `R^D`.
#[derive(Clone, Debug)]
pub struct TopicVocabulary {
    dimension: usize,
    topics: Vec<Vector<f64>>,
    binarized: bool,
}

/// Off-diagonal statistics of the topic Gram matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramStats {
    pub mean_off_diagonal: f64,
    pub max_abs_off_diagonal: f64,
    pub max_norm_deviation: f64,
}

impl TopicVocabulary {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn topic(&self, i: usize) -> &Vector<f64> {
        &self.topics[i]
    }

    pub fn topics(&self) -> &[Vector<f64>] {
        &self.topics
    }

    pub fn binarized(&self) -> bool {
        self.binarized
    }

    pub fn gram_stats(&self) -> GramStats {
        let n = self.topics.len();
        let (mut sum, mut count, mut max_abs) = (0.0, 0usize, 0.0f64);
        for i in 0..n {
            for j in (i + 1)..n {
                let g = self.topics[i].dot(&self.topics[j]);
                sum += g;
                count += 1;
                max_abs = max_abs.max(g.abs());
            }
        }
        let max_norm_deviation = self.topics.iter().map(|t| (t.norm() - 1.0).abs()).fold(0.0, f64::max);
        GramStats {
            mean_off_diagonal: if count == 0 { 0.0 } else { sum / count as f64 },
            max_abs_off_diagonal: max_abs,
            max_norm_deviation,
        }
    }
}

/// Orthonormal columns of a seeded Gaussian matrix, optionally replaced by
/// their normalized median masks (1 where the entry is at or above the
/// column median, else 0).
pub fn generate_vocabulary(n_topics: usize, dimension: usize, seed: u64, binarize: bool) -> Result<TopicVocabulary> {
    if n_topics > dimension {
        return Err(Error::invalid(format!(
            "topic count {n_topics} exceeds dimension {dimension}"
        )));
    }
    let basis = orthonormal_columns::<f64>(dimension, n_topics, seed)?;
    let topics = if binarize {
        basis.columns().iter().map(median_mask).collect::<Result<Vec<_>>>()?
    } else {
        basis.into_columns()
    };
    Ok(TopicVocabulary {
        dimension,
        topics,
        binarized: binarize,
    })
}

fn median_mask(column: &Vector<f64>) -> Result<Vector<f64>> {
    let mut sorted = column.as_slice().to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n.is_multiple_of(2) {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    } else {
        sorted[n / 2]
    };
    let mask = column.iter().map(|&x| if x >= median { 1.0 } else { 0.0 }).collect();
    Vector::new(mask)?.normalize()
}

/// A generated point with the topic indices it was summed from (ascending).
#[derive(Clone, Debug, PartialEq)]
pub struct Datapoint {
    pub vector: Vector<f64>,
    pub topics: Vec<usize>,
}

/// `n_points` points, each the normalized sum of `k_topics` distinct topics
/// drawn from `pool` (all topics when empty) plus N(0, sigma) noise per
/// coordinate.
pub fn generate_datapoints(
    k_topics: usize,
    pool: &[usize],
    vocab: &TopicVocabulary,
    n_points: usize,
    sigma_noise: f64,
    seed: u64,
) -> Result<Vec<Datapoint>> {
    sample_datapoints(k_topics, pool, vocab, n_points, sigma_noise, &mut rng_from_seed(seed))
}

pub(crate) fn sample_datapoints(
    k_topics: usize,
    pool: &[usize],
    vocab: &TopicVocabulary,
    n_points: usize,
    sigma_noise: f64,
    rng: &mut Rng,
) -> Result<Vec<Datapoint>> {
    let all: Vec<usize>;
    let pool = if pool.is_empty() {
        all = (0..vocab.len()).collect();
        &all
    } else {
        pool
    };
    if k_topics == 0 {
        return Err(Error::invalid("k_topics must be at least 1"));
    }
    if k_topics > pool.len() {
        return Err(Error::invalid(format!(
            "cannot sample {k_topics} topics from a pool of {}",
            pool.len()
        )));
    }
    if let Some(&bad) = pool.iter().find(|&&i| i >= vocab.len()) {
        return Err(Error::invalid(format!(
            "topic index {bad} out of range for {} topics",
            vocab.len()
        )));
    }
    let noise = if sigma_noise > 0.0 {
        Some(Normal::new(0.0, sigma_noise).map_err(|e| Error::invalid(e.to_string()))?)
    } else if sigma_noise == 0.0 {
        None
    } else {
        return Err(Error::invalid("sigma_noise must be finite and non-negative"));
    };

    (0..n_points)
        .map(|_| {
            let mut topics: Vec<usize> = sample(rng, pool.len(), k_topics).into_iter().map(|i| pool[i]).collect();
            topics.sort_unstable();
            let mut sum = vec![0.0; vocab.dimension()];
            for &t in &topics {
                for (s, x) in sum.iter_mut().zip(vocab.topic(t).iter()) {
                    *s += x;
                }
            }
            if let Some(noise) = &noise {
                for s in sum.iter_mut() {
                    *s += noise.sample(rng);
                }
            }
            Ok(Datapoint {
                vector: Vector::new(sum)?.normalize()?,
                topics,
            })
        })
        .collect()
}
