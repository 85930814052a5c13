use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embed::{embed_chunks, Embedder, EmbeddingRecord};
use super::text::{containment_check, ChunkSet};
use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::index::VectorIndex;
use crate::neighborhood::{build_neighborhood, check_grid, write_scores_csv, AmbiguityScore};
use crate::stats::Summary;

/// Embedding records with an exact cosine index over their vectors.
#[derive(Clone, Debug)]
pub struct ChunkIndex {
    records: Vec<EmbeddingRecord>,
    index: VectorIndex<f64>,
}

impl ChunkIndex {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn index(&self) -> &VectorIndex<f64> {
        &self.index
    }
}

pub fn build_index(records: Vec<EmbeddingRecord>) -> Result<ChunkIndex> {
    let vectors = records
        .iter()
        .map(EmbeddingRecord::to_vector)
        .collect::<Result<Vec<_>>>()?;
    let index = VectorIndex::from_vectors(vectors)?;
    Ok(ChunkIndex { records, index })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryProfile {
    pub query_id: String,
    pub scores: Vec<AmbiguityScore<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub w1_h0: Summary,
    pub lt_max_h1: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionSummary {
    pub label: String,
    pub n_queries: usize,
    pub scored: usize,
    /// Queries whose nearest corpus vector coincides with them.
    pub skipped_zero_distance: usize,
    /// Queries whose top hit is not nested with them in one document.
    pub skipped_containment: usize,
    /// Empty when no query was scored.
    pub per_epsilon: Vec<EpsilonSummary>,
}

impl DirectionSummary {
    pub fn at(&self, epsilon: f64) -> Option<&EpsilonSummary> {
        self.per_epsilon.iter().find(|s| s.epsilon == epsilon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionResult {
    pub summary: DirectionSummary,
    pub profiles: Vec<QueryProfile>,
}

pub(crate) fn summarize(
    label: &str,
    n_queries: usize,
    skipped: (usize, usize),
    profiles: &[QueryProfile],
    grid: &[f64],
) -> Result<DirectionSummary> {
    let per_epsilon = if profiles.is_empty() {
        log::warn!("{label}: no query was scored");
        Vec::new()
    } else {
        grid.iter()
            .enumerate()
            .map(|(i, &epsilon)| {
                let w1: Vec<f64> = profiles.iter().map(|p| p.scores[i].w1_h0).collect();
                let lt: Vec<f64> = profiles.iter().map(|p| p.scores[i].lt_max_h1).collect();
                Ok(EpsilonSummary {
                    epsilon,
                    w1_h0: Summary::of(&w1)?,
                    lt_max_h1: Summary::of(&lt)?,
                })
            })
            .collect::<Result<_>>()?
    };
    Ok(DirectionSummary {
        label: label.to_owned(),
        n_queries,
        scored: profiles.len(),
        skipped_zero_distance: skipped.0,
        skipped_containment: skipped.1,
        per_epsilon,
    })
}

enum Outcome {
    Scored(QueryProfile),
    ZeroDistance,
    NotContained,
}

/// Scores every query against the corpus index. With `require_containment`,
/// a query counts only when its top hit is nested with it in one document.
pub fn analyze_direction(
    label: &str,
    queries: &[EmbeddingRecord],
    corpus: &ChunkIndex,
    k: usize,
    epsilon_grid: &[f64],
    require_containment: bool,
) -> Result<DirectionResult> {
    check_grid(epsilon_grid)?;
    let outcomes: Vec<Outcome> = queries
        .par_iter()
        .map(|q| {
            let v = q.to_vector()?;
            if v.dim() != corpus.dim() {
                return Err(Error::DimensionMismatch {
                    expected: corpus.dim(),
                    found: v.dim(),
                });
            }
            let nb = match build_neighborhood(&v, corpus.index(), k) {
                Ok(nb) => nb,
                Err(Error::ZeroDistance { .. }) => return Ok(Outcome::ZeroDistance),
                Err(e) => return Err(e),
            };
            if require_containment {
                let top = &corpus.records()[nb.neighbors()[0].position];
                if !containment_check(q, top) {
                    return Ok(Outcome::NotContained);
                }
            }
            Ok(Outcome::Scored(QueryProfile {
                query_id: q.chunk_id.clone(),
                scores: nb.profile(epsilon_grid)?,
            }))
        })
        .collect::<Result<_>>()?;

    let (mut zero, mut outside) = (0, 0);
    let mut profiles = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Scored(p) => profiles.push(p),
            Outcome::ZeroDistance => zero += 1,
            Outcome::NotContained => outside += 1,
        }
    }
    let summary = summarize(label, queries.len(), (zero, outside), &profiles, epsilon_grid)?;
    Ok(DirectionResult { summary, profiles })
}

/// `Q=C<query granularity>;C=C<corpus granularity>`.
pub fn direction_label(query_granularity: usize, corpus_granularity: usize) -> String {
    format!("Q=C{query_granularity};C=C{corpus_granularity}")
}

/// Embeds both chunk sets, indexes the corpus side and scores every query
/// chunk that passes the containment filter.
pub fn retrieval_experiment(
    queries: &ChunkSet,
    corpus: &ChunkSet,
    embedder: &dyn Embedder,
    k: usize,
    epsilon_grid: &[f64],
) -> Result<DirectionResult> {
    let q = embed_chunks(queries, embedder)?;
    let c = build_index(embed_chunks(corpus, embedder)?)?;
    analyze_direction(
        &direction_label(queries.granularity, corpus.granularity),
        &q,
        &c,
        k,
        epsilon_grid,
        true,
    )
}

/// Per-query score rows of one direction.
pub fn write_direction_csv<W: Write>(writer: W, result: &DirectionResult) -> Result<()> {
    write_scores_csv(
        writer,
        result
            .profiles
            .iter()
            .flat_map(|p| p.scores.iter().map(move |s| (p.query_id.as_str(), s))),
    )
}

pub(crate) fn record_vectors(records: &[EmbeddingRecord]) -> Result<Vec<Vector<f64>>> {
    records.iter().map(EmbeddingRecord::to_vector).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(doc: &str, id: &str, s: usize, e: usize, v: &[f64]) -> EmbeddingRecord {
        EmbeddingRecord {
            doc_id: doc.into(),
            chunk_id: id.into(),
            token_start: s,
            token_end: e,
            model_tag: "t".into(),
            vector: Vector::from_slice(v).unwrap().normalize().unwrap().into_inner(),
        }
    }

    #[test]
    fn index_sizes_and_dims() {
        let one = build_index(vec![rec("a", "a0", 0, 1, &[1.0, 0.0])]).unwrap();
        assert_eq!(one.len(), 1);
        let mixed = build_index(vec![
            rec("a", "a0", 0, 1, &[1.0, 0.0]),
            rec("a", "a1", 1, 2, &[1.0, 0.0, 1.0]),
        ]);
        assert!(mixed.is_err());
    }

    #[test]
    fn filters_are_counted() {
        let corpus = build_index(vec![
            rec("a", "a:2:0", 0, 2, &[1.0, 0.1, 0.0]),
            rec("a", "a:2:1", 2, 4, &[0.0, 1.0, 0.1]),
            rec("b", "b:2:0", 0, 2, &[0.1, 0.0, 1.0]),
        ])
        .unwrap();
        let queries = vec![
            // nested in a:2:0 and nearest to it
            rec("a", "a:1:0", 0, 1, &[1.0, 0.2, 0.0]),
            // nearest is a:2:1, which does not contain it
            rec("a", "a:1:0x", 0, 1, &[0.0, 1.0, 0.2]),
            // identical to b:2:0
            rec("b", "b:2:0", 0, 2, &[0.1, 0.0, 1.0]),
        ];
        let r = analyze_direction("x", &queries, &corpus, 3, &[0.4, 1.0], true).unwrap();
        assert_eq!(r.summary.scored, 1);
        assert_eq!(r.summary.skipped_containment, 1);
        assert_eq!(r.summary.skipped_zero_distance, 1);
        assert_eq!(r.profiles[0].query_id, "a:1:0");
        assert_eq!(r.summary.per_epsilon.len(), 2);
        let open = analyze_direction("x", &queries, &corpus, 3, &[0.4], false).unwrap();
        assert_eq!(open.summary.scored, 2);
    }

    #[test]
    fn mismatched_dims_error() {
        let corpus = build_index(vec![
            rec("a", "a", 0, 1, &[1.0, 0.0, 0.0]),
            rec("a", "b", 1, 2, &[0.0, 1.0, 0.0]),
        ])
        .unwrap();
        let q = vec![rec("a", "q", 0, 1, &[1.0, 0.5])];
        assert!(matches!(
            analyze_direction("x", &q, &corpus, 2, &[0.4], false),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn no_scored_queries_gives_empty_summary() {
        let corpus = build_index(vec![rec("a", "a", 0, 1, &[1.0, 0.0]), rec("a", "b", 1, 2, &[0.0, 1.0])]).unwrap();
        let q = vec![rec("a", "a", 0, 1, &[1.0, 0.0])];
        let r = analyze_direction("x", &q, &corpus, 2, &[0.4], true).unwrap();
        assert!(r.summary.per_epsilon.is_empty());
        let mut buf = Vec::new();
        write_direction_csv(&mut buf, &r).unwrap();
        assert!(buf.is_empty());
    }
}
