//! Query neighborhoods scaled relative to the nearest neighbor, and the
//! persistence-based ambiguity scores computed on them.
//!
//! For neighbors ranked by cosine similarity, `d_i` is the Euclidean norm of
//! `v_i - v_q` and `eps_i = d_i / d_0 - 1`. Selecting all neighbors with
//! `eps_i <= eps` and normalizing their difference vectors gives the cloud
//! whose Rips persistence is summarized. The query itself is not part of the
//! cloud.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pairwise_distances, Vector};
use crate::index::VectorIndex;
use crate::persistence::{lt_max_h1, rips_persistence, w1_h0};
use crate::scalar::Scalar;

pub const DEFAULT_K: usize = 50;

/// `0.2, 0.4, ..., 3.0`.
pub fn default_epsilon_grid() -> Vec<f64> {
    (1..=15).map(|i| f64::from(i) * 0.2).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor<T> {
    /// Position in the index.
    pub position: usize,
    pub vector: Vector<T>,
    pub similarity: T,
    /// `||v_i - v_q||`.
    pub distance: T,
}

#[derive(Clone, Debug)]
pub struct QueryNeighborhood<T> {
    query: Vector<T>,
    neighbors: Vec<Neighbor<T>>,
    epsilons: Vec<T>,
    truncated: bool,
}

impl<T: Scalar> QueryNeighborhood<T> {
    /// Unit-normalized query.
    pub fn query(&self) -> &Vector<T> {
        &self.query
    }

    pub fn neighbors(&self) -> &[Neighbor<T>] {
        &self.neighbors
    }

    pub fn epsilons(&self) -> &[T] {
        &self.epsilons
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// True when fewer neighbors than requested were available.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Ranks with `eps_i <= epsilon`, in rank order. Rank 0 is always included.
    pub fn select_by_scale(&self, epsilon: T) -> Vec<usize> {
        let end = self
            .epsilons
            .iter()
            .take_while(|&&e| e <= epsilon)
            .count()
            .max(1)
            .min(self.len());
        (0..end).collect()
    }

    /// Unit difference vectors `(v_i - v_q) / ||v_i - v_q||` for the given ranks.
    pub fn difference_cloud(&self, ranks: &[usize]) -> Result<Vec<Vector<T>>> {
        if ranks.is_empty() {
            return Err(Error::invalid("difference cloud of an empty subset"));
        }
        ranks
            .iter()
            .map(|&r| {
                let n = self
                    .neighbors
                    .get(r)
                    .ok_or_else(|| Error::invalid(format!("rank {r} out of range")))?;
                n.vector.sub(&self.query)?.normalize()
            })
            .collect()
    }

    pub fn score_at(&self, epsilon: T) -> Result<AmbiguityScore<T>> {
        if !(epsilon >= T::zero()) {
            return Err(Error::invalid("epsilon must be non-negative"));
        }
        let ranks = self.select_by_scale(epsilon);
        if ranks.len() < 2 {
            return Ok(AmbiguityScore::degenerate(epsilon, ranks.len()));
        }
        let cloud = self.difference_cloud(&ranks)?;
        let diagram = rips_persistence(&pairwise_distances(&cloud)?, 1)?;
        let h0 = w1_h0(&diagram);
        Ok(AmbiguityScore {
            epsilon,
            w1_h0: h0.value,
            lt_max_h1: lt_max_h1(&diagram),
            points_used: ranks.len(),
            degenerate: h0.degenerate,
        })
    }

    /// One score per grid value; the grid must be ascending.
    pub fn profile(&self, grid: &[T]) -> Result<Vec<AmbiguityScore<T>>> {
        check_grid(grid)?;
        grid.iter().map(|&e| self.score_at(e)).collect()
    }
}

/// The pair (W1(H0), LT_max(H1)) at one neighborhood scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AmbiguityScore<T> {
    pub epsilon: T,
    pub w1_h0: T,
    pub lt_max_h1: T,
    pub points_used: usize,
    /// Fewer than two points were selected; both metrics are zero.
    pub degenerate: bool,
}

impl<T: Scalar> AmbiguityScore<T> {
    pub fn degenerate(epsilon: T, points_used: usize) -> Self {
        Self {
            epsilon,
            w1_h0: T::zero(),
            lt_max_h1: T::zero(),
            points_used,
            degenerate: true,
        }
    }
}

pub(crate) fn check_grid<T: Scalar>(grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("epsilon grid is empty"));
    }
    if grid.iter().any(|e| !(*e >= T::zero())) {
        return Err(Error::invalid("epsilon grid values must be non-negative"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("epsilon grid must be sorted ascending"));
    }
    Ok(())
}

/// Top-`k` cosine neighbors of `query` with their relative scales.
pub fn build_neighborhood<T: Scalar>(
    query: &Vector<T>,
    index: &VectorIndex<T>,
    k: usize,
) -> Result<QueryNeighborhood<T>> {
    if k < 2 {
        return Err(Error::invalid("neighborhoods need k >= 2"));
    }
    if index.is_empty() {
        return Err(Error::invalid("index is empty"));
    }
    query.check_dim(index.dim())?;
    let truncated = index.len() < k;
    if truncated {
        log::warn!(
            "requested k = {k} neighbors but the index holds only {}; using all of them",
            index.len()
        );
    }
    let query = query.normalize()?;
    let mut neighbors = index
        .search(&query, k)?
        .into_iter()
        .map(|hit| {
            let vector = index.vector(hit.position).clone();
            let distance = vector.euclidean(&query);
            Neighbor {
                position: hit.position,
                vector,
                similarity: hit.similarity,
                distance,
            }
        })
        .collect::<Vec<_>>();
    // on the unit sphere this only repairs rounding-level inversions
    neighbors.sort_by(|a, b| a.distance.total_cmp_scalar(&b.distance));

    // below this a unit-sphere distance is indistinguishable from rounding
    let nearest = neighbors[0].distance;
    if !(nearest > T::epsilon().sqrt()) {
        return Err(Error::ZeroDistance {
            position: neighbors[0].position,
        });
    }
    let epsilons = neighbors
        .iter()
        .enumerate()
        .map(|(i, n)| {
            if i == 0 {
                T::zero()
            } else {
                (n.distance / nearest - T::one()).max(T::zero())
            }
        })
        .collect();
    Ok(QueryNeighborhood {
        query,
        neighbors,
        epsilons,
        truncated,
    })
}

pub fn ambiguity_score<T: Scalar>(
    query: &Vector<T>,
    index: &VectorIndex<T>,
    k: usize,
    epsilon: T,
) -> Result<AmbiguityScore<T>> {
    build_neighborhood(query, index, k)?.score_at(epsilon)
}

pub fn ambiguity_profile<T: Scalar>(
    query: &Vector<T>,
    index: &VectorIndex<T>,
    k: usize,
    grid: &[T],
) -> Result<Vec<AmbiguityScore<T>>> {
    check_grid(grid)?;
    build_neighborhood(query, index, k)?.profile(grid)
}

/// Profiles for many queries against one index, computed in parallel.
pub fn score_queries<T: Scalar>(
    queries: &[Vector<T>],
    index: &VectorIndex<T>,
    k: usize,
    grid: &[T],
) -> Vec<Result<Vec<AmbiguityScore<T>>>> {
    queries
        .par_iter()
        .map(|q| ambiguity_profile(q, index, k, grid))
        .collect()
}

#[derive(Serialize)]
struct ScoreRow<'a, T> {
    query_id: &'a str,
    epsilon: T,
    w1_h0: T,
    lt_max_h1: T,
    points_used: usize,
    degenerate_flag: bool,
}

/// Writes `(query_id, epsilon, w1_h0, lt_max_h1, points_used, degenerate_flag)` rows.
pub fn write_scores_csv<'a, T, W, I>(writer: W, rows: I) -> Result<()>
where
    T: Scalar,
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a AmbiguityScore<T>)>,
{
    let mut out = csv::Writer::from_writer(writer);
    for (query_id, s) in rows {
        out.serialize(ScoreRow {
            query_id,
            epsilon: s.epsilon,
            w1_h0: s.w1_h0,
            lt_max_h1: s.lt_max_h1,
            points_used: s.points_used,
            degenerate_flag: s.degenerate,
        })?;
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::{h0_deaths_via_mst, lt_max_h1};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn v(xs: &[f64]) -> Vector<f64> {
        Vector::from_slice(xs).unwrap()
    }

    fn unit_cloud(n: usize, dim: usize, seed: u64) -> Vec<Vector<f64>> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| {
                Vector::new((0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
                    .unwrap()
                    .normalize()
                    .unwrap()
            })
            .collect()
    }

    // query on the x axis, corpus on the unit circle at chosen distances
    fn circle_at_distances(ds: &[f64]) -> (Vector<f64>, VectorIndex<f64>) {
        let q = v(&[1.0, 0.0]);
        let pts = ds
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                // chord length d subtends angle 2 asin(d/2)
                let t = 2.0 * (d / 2.0).asin() * if i % 2 == 0 { 1.0 } else { -1.0 };
                v(&[t.cos(), t.sin()])
            })
            .collect();
        (q, VectorIndex::from_vectors(pts).unwrap())
    }

    #[test]
    fn epsilons_follow_distance_ratios() {
        let (q, idx) = circle_at_distances(&[0.2, 0.3, 0.5]);
        let nb = build_neighborhood(&q, &idx, 3).unwrap();
        let eps = nb.epsilons();
        assert_eq!(eps[0], 0.0);
        assert!((eps[1] - 0.5).abs() < 1e-12);
        assert!((eps[2] - 1.5).abs() < 1e-12);
        assert_eq!(nb.select_by_scale(0.4), vec![0]);
        assert_eq!(nb.select_by_scale(0.0), vec![0]);
        assert_eq!(nb.select_by_scale(1.5 + 1e-9), vec![0, 1, 2]);
        assert_eq!(nb.select_by_scale(10.0), vec![0, 1, 2]);
    }

    #[test]
    fn k_larger_than_corpus_truncates() {
        let (q, idx) = circle_at_distances(&[0.2, 0.3]);
        let nb = build_neighborhood(&q, &idx, 50).unwrap();
        assert_eq!(nb.len(), 2);
        assert!(nb.truncated());
    }

    #[test]
    fn duplicate_query_is_rejected() {
        let q = v(&[0.6, 0.8]);
        let idx = VectorIndex::from_vectors(vec![q.scale(3.0), v(&[1.0, 0.0])]).unwrap();
        assert!(matches!(
            build_neighborhood(&q, &idx, 2),
            Err(Error::ZeroDistance { position: 0 })
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let (q, idx) = circle_at_distances(&[0.2, 0.3]);
        assert!(build_neighborhood(&q, &idx, 1).is_err());
        assert!(matches!(
            build_neighborhood(&v(&[1.0, 0.0, 0.0]), &idx, 2),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(ambiguity_profile(&q, &idx, 2, &[0.4, 0.2]).is_err());
        assert!(ambiguity_profile(&q, &idx, 2, &[]).is_err());
    }

    #[test]
    fn one_neighbor_cloud() {
        let (q, idx) = circle_at_distances(&[0.2, 0.3]);
        let nb = build_neighborhood(&q, &idx, 2).unwrap();
        let cloud = nb.difference_cloud(&[0]).unwrap();
        assert_eq!(cloud.len(), 1);
        assert!((cloud[0].norm() - 1.0).abs() < 1e-12);
        assert!(nb.difference_cloud(&[]).is_err());
    }

    #[test]
    fn mirrored_neighbors_difference_angle() {
        let (s, c) = 0.3f64.sin_cos();
        let q = v(&[0.0, 0.0, 1.0]);
        let idx = VectorIndex::from_vectors(vec![v(&[s, 0.0, c]), v(&[-s, 0.0, c])]).unwrap();
        let nb = build_neighborhood(&q, &idx, 2).unwrap();
        let cloud = nb.difference_cloud(&[0, 1]).unwrap();
        let h = (c - 1.0) * (c - 1.0);
        assert!((cloud[0].dot(&cloud[1]) - (h - s * s) / (h + s * s)).abs() < 1e-12);
    }

    #[test]
    fn fifty_neighbor_cloud_is_on_sphere() {
        let corpus = unit_cloud(60, 32, 4);
        let q = unit_cloud(1, 32, 5).remove(0);
        let idx = VectorIndex::from_vectors(corpus).unwrap();
        let nb = build_neighborhood(&q, &idx, 50).unwrap();
        let ranks: Vec<usize> = (0..50).collect();
        let cloud = nb.difference_cloud(&ranks).unwrap();
        assert_eq!(cloud.len(), 50);
        assert!(cloud.iter().all(|c| (c.norm() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn single_point_corpus_is_degenerate() {
        let idx = VectorIndex::from_vectors(vec![v(&[0.0, 1.0])]).unwrap();
        let s = ambiguity_score(&v(&[1.0, 0.0]), &idx, 2, 0.4).unwrap();
        assert!(s.degenerate);
        assert_eq!((s.w1_h0, s.lt_max_h1, s.points_used), (0.0, 0.0, 1));
    }

    #[test]
    fn two_orthogonal_topic_neighbors() {
        // query (e1 + e2)/sqrt2 with neighbors e1 and e2: the unit differences
        // are a = (1 - r, -r)/n and b = (-r, 1 - r)/n with r = 1/sqrt2,
        // n^2 = 2 - sqrt2, so |a - b| = sqrt(2 / (2 - sqrt2))
        let s2 = 0.5f64.sqrt();
        let q = v(&[s2, s2, 0.0]);
        let idx = VectorIndex::from_vectors(vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]).unwrap();
        let s = ambiguity_score(&q, &idx, 2, 0.4).unwrap();
        assert_eq!(s.points_used, 2);
        let gap = (2.0 / (2.0 - 2f64.sqrt())).sqrt();
        assert!((s.w1_h0 - gap / 2.0).abs() < 1e-12, "{}", s.w1_h0);
        assert_eq!(s.lt_max_h1, 0.0);
    }

    #[test]
    fn score_matches_hand_composed_pipeline() {
        let corpus = unit_cloud(30, 16, 8);
        let q = unit_cloud(1, 16, 9).remove(0);
        let idx = VectorIndex::from_vectors(corpus.clone()).unwrap();
        let s = ambiguity_score(&q, &idx, 30, 0.3).unwrap();

        let mut d: Vec<(f64, usize)> = corpus.iter().enumerate().map(|(i, c)| (c.euclidean(&q), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let cloud: Vec<Vector<f64>> = d
            .iter()
            .filter(|(di, _)| di / d[0].0 - 1.0 <= 0.3)
            .map(|&(_, i)| corpus[i].sub(&q).unwrap().normalize().unwrap())
            .collect();
        let dm = pairwise_distances(&cloud).unwrap();
        let mst = h0_deaths_via_mst(&dm).unwrap();
        let expected_w1 = mst.iter().sum::<f64>() / 2.0 / mst.len() as f64;
        assert_eq!(s.points_used, cloud.len());
        assert!((s.w1_h0 - expected_w1).abs() < 1e-12);
        let diag = rips_persistence(&dm, 1).unwrap();
        assert_eq!(s.lt_max_h1, lt_max_h1(&diag));
    }

    #[test]
    fn profile_single_value_matches_score() {
        let corpus = unit_cloud(20, 8, 1);
        let q = unit_cloud(1, 8, 2).remove(0);
        let idx = VectorIndex::from_vectors(corpus).unwrap();
        let p = ambiguity_profile(&q, &idx, 20, &[0.4]).unwrap();
        assert_eq!(p, vec![ambiguity_score(&q, &idx, 20, 0.4).unwrap()]);
    }

    #[test]
    fn scores_csv_header() {
        let s = AmbiguityScore {
            epsilon: 0.4,
            w1_h0: 0.5,
            lt_max_h1: 0.25,
            points_used: 7,
            degenerate: false,
        };
        let mut buf = Vec::new();
        write_scores_csv(&mut buf, [("q1", &s)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "query_id,epsilon,w1_h0,lt_max_h1,points_used,degenerate_flag\nq1,0.4,0.5,0.25,7,false\n"
        );
    }

    #[test]
    fn parallel_scores_match_serial() {
        let corpus = unit_cloud(40, 12, 3);
        let queries = unit_cloud(6, 12, 4);
        let idx = VectorIndex::from_vectors(corpus).unwrap();
        let grid = [0.2, 0.6];
        let par = score_queries(&queries, &idx, 20, &grid);
        for (q, p) in queries.iter().zip(par) {
            assert_eq!(p.unwrap(), ambiguity_profile(q, &idx, 20, &grid).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn points_used_grows_with_epsilon(seed in 0u64..10_000) {
            let corpus = unit_cloud(25, 10, seed);
            let q = unit_cloud(1, 10, seed ^ 0xABCD).remove(0);
            let idx = VectorIndex::from_vectors(corpus).unwrap();
            let nb = build_neighborhood(&q, &idx, 25).unwrap();
            let grid: Vec<f64> = (0..12).map(|i| i as f64 * 0.1).collect();
            let p = nb.profile(&grid).unwrap();
            prop_assert!(p.windows(2).all(|w| w[0].points_used <= w[1].points_used));
            let eps_k = *nb.epsilons().last().unwrap();
            prop_assert_eq!(nb.score_at(eps_k).unwrap().points_used, 25);
            prop_assert!(nb.epsilons().windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn global_rescaling_leaves_scores_unchanged(seed in 0u64..10_000, s in 0.05f64..20.0) {
            let corpus = unit_cloud(20, 8, seed);
            let q = unit_cloud(1, 8, seed ^ 0x1234).remove(0);
            let grid = [0.1, 0.3, 1.0];
            let a = ambiguity_profile(&q, &VectorIndex::from_vectors(corpus.clone()).unwrap(), 20, &grid).unwrap();
            let scaled: Vec<_> = corpus.iter().map(|c| c.scale(s)).collect();
            let b = ambiguity_profile(&q.scale(s), &VectorIndex::from_vectors(scaled).unwrap(), 20, &grid).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(x.points_used, y.points_used);
                prop_assert!((x.w1_h0 - y.w1_h0).abs() < 1e-9);
                prop_assert!((x.lt_max_h1 - y.lt_max_h1).abs() < 1e-9);
            }
        }
    }
}
