//! Householder QR and random orthonormal bases.

use rand_distr::{Distribution, StandardNormal};

use super::{dot, Vector};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;

/// Thin QR factorization of a `rows x cols` matrix with `cols <= rows`.
#[derive(Clone, Debug)]
pub struct QrDecomposition<T> {
    pub rows: usize,
    /// Orthonormal columns of `Q`, each of length `rows`.
    pub q: Vec<Vec<T>>,
    /// Upper-triangular `R`, row-major `cols x cols`.
    pub r: Vec<T>,
}

/// Householder QR of the matrix given by its columns.
pub fn householder_qr<T: Scalar>(columns: &[Vec<T>]) -> Result<QrDecomposition<T>> {
    let cols = columns.len();
    let rows = columns
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::invalid("QR of an empty matrix"))?;
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::invalid("QR input columns have unequal lengths"));
    }
    if cols > rows {
        return Err(Error::invalid(format!(
            "thin QR needs cols <= rows, got {cols} > {rows}"
        )));
    }

    let mut a: Vec<Vec<T>> = columns.to_vec();
    let mut reflectors: Vec<Option<Vec<T>>> = Vec::with_capacity(cols);

    for j in 0..cols {
        let x = &a[j][j..];
        let norm_x = dot(x, x).sqrt();
        if norm_x == T::zero() {
            reflectors.push(None);
            continue;
        }
        let alpha = if x[0] >= T::zero() { -norm_x } else { norm_x };
        let mut v: Vec<T> = x.to_vec();
        v[0] = v[0] - alpha;
        let norm_v = dot(&v, &v).sqrt();
        if norm_v == T::zero() {
            reflectors.push(None);
            continue;
        }
        for e in v.iter_mut() {
            *e = *e / norm_v;
        }
        for col in a.iter_mut().skip(j) {
            apply_reflector(&v, &mut col[j..]);
        }
        reflectors.push(Some(v));
    }

    let mut r = vec![T::zero(); cols * cols];
    for (j, col) in a.iter().enumerate() {
        for i in 0..=j {
            r[i * cols + j] = col[i];
        }
    }

    // Q = H_0 H_1 ... H_{cols-1} applied to the first `cols` unit vectors
    let q = (0..cols)
        .map(|c| {
            let mut e = vec![T::zero(); rows];
            e[c] = T::one();
            for (j, h) in reflectors.iter().enumerate().rev() {
                if let Some(v) = h {
                    apply_reflector(v, &mut e[j..]);
                }
            }
            e
        })
        .collect();

    Ok(QrDecomposition { rows, q, r })
}

// x <- (I - 2 v v^T) x for unit v
fn apply_reflector<T: Scalar>(v: &[T], x: &mut [T]) {
    let s = T::lit(2.0) * dot(v, x);
    for (xi, &vi) in x.iter_mut().zip(v) {
        *xi = *xi - s * vi;
    }
}

/// `count` orthonormal vectors in `R^dimension`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalBasis<T> {
    dimension: usize,
    columns: Vec<Vector<T>>,
}

impl<T: Scalar> OrthonormalBasis<T> {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn count(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vector<T>] {
        &self.columns
    }

    pub fn into_columns(self) -> Vec<Vector<T>> {
        self.columns
    }

    /// Largest `|<q_i, q_j> - delta_ij|` over all column pairs.
    pub fn max_gram_deviation(&self) -> T {
        let mut worst = T::zero();
        for (i, a) in self.columns.iter().enumerate() {
            for (j, b) in self.columns.iter().enumerate().skip(i) {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((a.dot(b) - target).abs());
            }
        }
        worst
    }
}

/// Orthonormal columns from the Householder QR of a standard normal `D x N` matrix.
pub fn orthonormal_columns<T: Scalar>(dimension: usize, count: usize, seed: u64) -> Result<OrthonormalBasis<T>> {
    if count > dimension {
        return Err(Error::invalid(format!(
            "cannot build {count} orthonormal vectors in dimension {dimension}"
        )));
    }
    if count == 0 || dimension < 2 {
        return Err(Error::invalid("orthonormal basis needs count >= 1 and dimension >= 2"));
    }
    let mut rng = rng_from_seed(seed);
    let columns: Vec<Vec<T>> = (0..count)
        .map(|_| {
            (0..dimension)
                .map(|_| T::lit(StandardNormal.sample(&mut rng)))
                .collect()
        })
        .collect();
    let qr = householder_qr(&columns)?;
    Ok(OrthonormalBasis {
        dimension,
        columns: qr.q.into_iter().map(Vector::from_vec_unchecked).collect(),
    })
}
