use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::embed::{embed_chunks, embed_texts, Embedder, EmbeddingRecord};
use super::experiment::{analyze_direction, build_index, record_vectors, DirectionSummary};
use super::text::ChunkSet;
use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::neighborhood::DEFAULT_K;
use crate::rng::{derive_seed, rng_from_seed, Rng};

/// Cluster assignment from spherical k-means.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vector<f64>>,
    pub iterations: usize,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == cluster)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        (0..self.centroids.len()).map(|c| self.members(c).len()).collect()
    }
}

fn nearest(v: &Vector<f64>, centroids: &[Vector<f64>]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (c, m) in centroids.iter().enumerate() {
        let s = v.dot(m);
        if s > best.1 {
            best = (c, s);
        }
    }
    best
}

/// k-means on the unit sphere under cosine similarity, with k-means++
/// seeding. An emptied cluster is reseeded with the worst-fitting point.
pub fn spherical_kmeans(vectors: &[Vector<f64>], k: usize, seed: u64, max_iter: usize) -> Result<Clustering> {
    if vectors.is_empty() {
        return Err(Error::invalid("cannot cluster an empty corpus"));
    }
    if k == 0 || k > vectors.len() {
        return Err(Error::invalid(format!(
            "cluster count {k} must lie in [1, {}]",
            vectors.len()
        )));
    }
    let unit = vectors.iter().map(Vector::normalize).collect::<Result<Vec<_>>>()?;
    let mut rng = rng_from_seed(seed);
    let mut centroids = vec![unit[rng.random_range(0..unit.len())].clone()];
    while centroids.len() < k {
        let weights: Vec<f64> = unit.iter().map(|v| (1.0 - nearest(v, &centroids).1).max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random_range(0.0..total);
            weights
                .iter()
                .position(|&w| {
                    r -= w;
                    r < 0.0
                })
                .unwrap_or(unit.len() - 1)
        } else {
            rng.random_range(0..unit.len())
        };
        centroids.push(unit[pick].clone());
    }

    let mut assignments = vec![usize::MAX; unit.len()];
    let mut iterations = 0;
    while iterations < max_iter.max(1) {
        iterations += 1;
        let next: Vec<usize> = unit.iter().map(|v| nearest(v, &centroids).0).collect();
        let changed = next != assignments;
        assignments = next;
        let dim = unit[0].dim();
        let mut sums = vec![vec![0.0; dim]; k];
        for (v, &c) in unit.iter().zip(&assignments) {
            for (s, x) in sums[c].iter_mut().zip(v.iter()) {
                *s += x;
            }
        }
        for (c, sum) in sums.into_iter().enumerate() {
            match Vector::new(sum)?.normalize() {
                Ok(m) if assignments.contains(&c) => centroids[c] = m,
                _ => {
                    let worst = (0..unit.len())
                        .min_by(|&a, &b| {
                            unit[a]
                                .dot(&centroids[assignments[a]])
                                .total_cmp(&unit[b].dot(&centroids[assignments[b]]))
                        })
                        .expect("non-empty");
                    centroids[c] = unit[worst].clone();
                    assignments[worst] = c;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(Clustering {
        assignments,
        centroids,
        iterations,
    })
}

fn default_parts() -> usize {
    3
}

fn default_queries() -> usize {
    30
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_grid() -> Vec<f64> {
    vec![0.4]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub cluster_count: usize,
    /// Chunks concatenated into each synthetic query.
    #[serde(default = "default_parts")]
    pub parts: usize,
    /// Queries of each kind.
    #[serde(default = "default_queries")]
    pub queries: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_grid")]
    pub epsilon_grid: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl CalibrationConfig {
    pub fn new(cluster_count: usize) -> Self {
        Self {
            cluster_count,
            parts: default_parts(),
            queries: default_queries(),
            k: default_k(),
            epsilon_grid: default_grid(),
            seed: 0,
        }
    }
}

/// Reference score distributions of concatenated multi-cluster queries and
/// of concatenated same-cluster queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBaseline {
    pub config: CalibrationConfig,
    pub cluster_sizes: Vec<usize>,
    pub multi_factual: DirectionSummary,
    pub single_cluster: DirectionSummary,
}

// distinct chunks where the clusters allow it; repeats only when a cluster
// has fewer members than the parts assigned to it
fn pick_chunks(clusters: &[usize], clustering: &Clustering, rng: &mut Rng) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::new();
    for &c in clusters {
        if !order.contains(&c) {
            order.push(c);
        }
    }
    let mut picked = Vec::with_capacity(clusters.len());
    for c in order {
        let members = clustering.members(c);
        let need = clusters.iter().filter(|&&x| x == c).count();
        let draw = sample(rng, members.len(), need.min(members.len())).into_vec();
        picked.extend((0..need).map(|i| members[draw[i % draw.len()]]));
    }
    picked
}

/// Clusters the embedded corpus, builds `queries` multi-cluster and
/// same-cluster concatenations, and scores both kinds against the corpus.
/// Query `i` of both kinds starts from the same seed, so with one cluster
/// the two kinds are identical.
pub fn calibrate(
    corpus: &ChunkSet,
    embedder: &dyn Embedder,
    config: &CalibrationConfig,
) -> Result<CalibrationBaseline> {
    if corpus.is_empty() {
        return Err(Error::invalid("calibration corpus is empty"));
    }
    if config.cluster_count == 0 || config.cluster_count > corpus.len() {
        return Err(Error::invalid(format!(
            "cluster_count {} must lie in [1, {}]",
            config.cluster_count,
            corpus.len()
        )));
    }
    if config.parts < 2 || config.queries == 0 {
        return Err(Error::invalid("calibration needs parts >= 2 and queries >= 1"));
    }
    let records = embed_chunks(corpus, embedder)?;
    let clustering = spherical_kmeans(
        &record_vectors(&records)?,
        config.cluster_count,
        derive_seed(config.seed, 0),
        100,
    )?;
    let index = build_index(records)?;

    let mut multi_texts = Vec::with_capacity(config.queries);
    let mut single_texts = Vec::with_capacity(config.queries);
    for q in 0..config.queries {
        let mut rng = rng_from_seed(derive_seed(config.seed, 1 + q as u64));
        let perm = sample(&mut rng, config.cluster_count, config.parts.min(config.cluster_count)).into_vec();
        let multi: Vec<usize> = (0..config.parts).map(|i| perm[i % perm.len()]).collect();
        let single = vec![perm[0]; config.parts];
        let join = |ids: Vec<usize>| {
            ids.iter()
                .map(|&i| corpus.chunks[i].text.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        };
        multi_texts.push(join(pick_chunks(&multi, &clustering, &mut rng.clone())));
        single_texts.push(join(pick_chunks(&single, &clustering, &mut rng)));
    }

    let score = |label: &str, texts: &[String]| -> Result<DirectionSummary> {
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let queries: Vec<EmbeddingRecord> = embed_texts(embedder, &refs)?
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                Ok(EmbeddingRecord {
                    doc_id: String::new(),
                    chunk_id: format!("{label}:{i}"),
                    token_start: 0,
                    token_end: 0,
                    model_tag: embedder.model_tag(),
                    vector: Vector::new(v)?.normalize()?.into_inner(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(analyze_direction(label, &queries, &index, config.k, &config.epsilon_grid, false)?.summary)
    };
    Ok(CalibrationBaseline {
        config: config.clone(),
        cluster_sizes: clustering.sizes(),
        multi_factual: score("multi_factual", &multi_texts)?,
        single_cluster: score("single_cluster", &single_texts)?,
    })
}
