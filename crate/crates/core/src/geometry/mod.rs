//! Dense vector and matrix primitives.

mod projection;
mod qr;

pub use projection::{random_projection, RandomProjection};
pub use qr::{householder_qr, orthonormal_columns, OrthonormalBasis, QrDecomposition};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A finite vector with at least two components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>", bound = "T: Scalar")]
pub struct Vector<T> {
    components: Vec<T>,
}

impl<T: Scalar> TryFrom<Vec<T>> for Vector<T> {
    type Error = Error;

    fn try_from(components: Vec<T>) -> Result<Self> {
        Self::new(components)
    }
}

impl<T> From<Vector<T>> for Vec<T> {
    fn from(v: Vector<T>) -> Self {
        v.components
    }
}

impl<T: Scalar> Vector<T> {
    pub fn new(components: Vec<T>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::invalid(format!(
                "vectors need at least 2 components, got {}",
                components.len()
            )));
        }
        if let Some(i) = components.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite component at index {i}")));
        }
        Ok(Self { components })
    }

    pub fn from_slice(components: &[T]) -> Result<Self> {
        Self::new(components.to_vec())
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![T::zero(); dim])
    }

    /// Skips validation; callers guarantee finiteness and length.
    pub(crate) fn from_vec_unchecked(components: Vec<T>) -> Self {
        debug_assert!(components.len() >= 2);
        Self { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.components
    }

    pub fn into_inner(self) -> Vec<T> {
        self.components
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.components.iter()
    }

    pub fn dot(&self, other: &Self) -> T {
        dot(&self.components, &other.components)
    }

    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn euclidean(&self, other: &Self) -> T {
        euclidean(&self.components, &other.components)
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            })
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        other.check_dim(self.dim())?;
        Ok(Self::from_vec_unchecked(
            self.iter().zip(other.iter()).map(|(&a, &b)| a - b).collect(),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        other.check_dim(self.dim())?;
        Ok(Self::from_vec_unchecked(
            self.iter().zip(other.iter()).map(|(&a, &b)| a + b).collect(),
        ))
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_vec_unchecked(self.iter().map(|&a| a * s).collect())
    }

    /// Unit vector in the direction of `self`.
    pub fn normalize(&self) -> Result<Self> {
        let norm = self.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::Degenerate("cannot normalize a zero-length vector".into()));
        }
        Ok(self.scale(norm.recip()))
    }

    /// Cosine similarity. Zero vectors are rejected.
    pub fn cosine(&self, other: &Self) -> Result<T> {
        other.check_dim(self.dim())?;
        let denom = self.norm() * other.norm();
        if !(denom > T::zero()) {
            return Err(Error::Degenerate("cosine of a zero vector".into()));
        }
        Ok(self.dot(other) / denom)
    }

    pub fn cast<U: Scalar>(&self) -> Vector<U> {
        Vector::from_vec_unchecked(self.iter().map(|&c| U::lit(c.as_f64())).collect())
    }
}

impl<T> std::ops::Index<usize> for Vector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.components[i]
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| {
            let d = x - y;
            acc + d * d
        })
        .sqrt()
}

/// Normalizes a vector. See [`Vector::normalize`].
pub fn normalize<T: Scalar>(v: &Vector<T>) -> Result<Vector<T>> {
    v.normalize()
}

/// Symmetric matrix of pairwise distances with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix<T> {
    n: usize,
    entries: Vec<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    /// Validates a square matrix: symmetric, non-negative, finite, zero diagonal.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidDistanceMatrix("empty matrix".into()));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidDistanceMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        let tol_base = T::lit(1e-12).max(T::epsilon() * T::lit(8.0));
        for i in 0..n {
            if entries[i * n + i] != T::zero() {
                return Err(Error::InvalidDistanceMatrix(format!("non-zero diagonal entry at {i}")));
            }
            for j in 0..n {
                let a = entries[i * n + j];
                if !a.is_finite() {
                    return Err(Error::InvalidDistanceMatrix(format!("non-finite entry at ({i}, {j})")));
                }
                if a < T::zero() {
                    return Err(Error::InvalidDistanceMatrix(format!("negative entry at ({i}, {j})")));
                }
                if j > i {
                    let b = entries[j * n + i];
                    if (a - b).abs() > tol_base * T::one().max(a.abs()) {
                        return Err(Error::InvalidDistanceMatrix(format!(
                            "asymmetric entries at ({i}, {j}): {a} vs {b}"
                        )));
                    }
                }
            }
        }
        // canonicalize on the upper triangle so reads are exactly symmetric
        for i in 0..n {
            for j in (i + 1)..n {
                entries[j * n + i] = entries[i * n + j];
            }
        }
        Ok(Self { n, entries })
    }

    /// Euclidean distances between `points`.
    pub fn from_points(points: &[Vector<T>]) -> Result<Self> {
        pairwise_distances(points)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn max_distance(&self) -> T {
        self.entries.iter().copied().fold(T::zero(), T::max)
    }

    /// Smallest off-diagonal entry, `None` for a single point.
    pub fn min_off_diagonal(&self) -> Option<T> {
        (0..self.n)
            .flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .reduce(T::min)
    }

    pub fn scaled(&self, s: T) -> Result<Self> {
        if !(s > T::zero()) {
            return Err(Error::invalid("scale factor must be positive"));
        }
        Ok(Self {
            n: self.n,
            entries: self.entries.iter().map(|&e| e * s).collect(),
        })
    }

    /// Reorders points: entry `(i, j)` of the result is `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::invalid("permutation length differs from matrix size"));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::invalid("not a permutation"));
            }
        }
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for &pi in perm {
            for &pj in perm {
                entries.push(self.get(pi, pj));
            }
        }
        Ok(Self { n, entries })
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Euclidean distance matrix of a point cloud.
pub fn pairwise_distances<T: Scalar>(points: &[Vector<T>]) -> Result<DistanceMatrix<T>> {
    let first = points
        .first()
        .ok_or_else(|| Error::invalid("pairwise distances need at least one point"))?;
    let dim = first.dim();
    for p in points {
        p.check_dim(dim)?;
    }
    let n = points.len();
    let mut entries = vec![T::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = points[i].euclidean(&points[j]);
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, entries })
}
