//! Exact brute-force cosine index over unit-normalized vectors.

use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit<T> {
    /// Position of the vector in the index.
    pub position: usize,
    pub similarity: T,
}

/// Read-only store of unit vectors of a single dimension.
#[derive(Clone, Debug)]
pub struct VectorIndex<T> {
    dim: usize,
    vectors: Vec<Vector<T>>,
}

impl<T: Scalar> VectorIndex<T> {
    /// Normalizes and stores `vectors`. Rejects empty input, mixed
    /// dimensions and zero vectors.
    pub fn from_vectors(vectors: Vec<Vector<T>>) -> Result<Self> {
        let dim = vectors
            .first()
            .map(Vector::dim)
            .ok_or_else(|| Error::invalid("cannot index an empty set of vectors"))?;
        let vectors = vectors
            .into_iter()
            .map(|v| {
                v.check_dim(dim)?;
                v.normalize()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, position: usize) -> &Vector<T> {
        &self.vectors[position]
    }

    pub fn vectors(&self) -> &[Vector<T>] {
        &self.vectors
    }

    /// The `min(k, len)` most cosine-similar vectors, most similar first.
    /// Equal similarities are ordered by position.
    pub fn search(&self, query: &Vector<T>, k: usize) -> Result<Vec<Hit<T>>> {
        query.check_dim(self.dim)?;
        let q = query.normalize()?;
        let mut hits: Vec<Hit<T>> = self
            .vectors
            .iter()
            .enumerate()
            .map(|(position, v)| Hit {
                position,
                similarity: v.dot(&q),
            })
            .collect();
        let k = k.min(hits.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        let order = |a: &Hit<T>, b: &Hit<T>| {
            b.similarity
                .total_cmp_scalar(&a.similarity)
                .then(a.position.cmp(&b.position))
        };
        if k < hits.len() {
            hits.select_nth_unstable_by(k - 1, order);
            hits.truncate(k);
        }
        hits.sort_by(order);
        Ok(hits)
    }
}
