//! Gaussian random projection.

use rand_distr::{Distribution, StandardNormal};

use super::{dot, Vector};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;

/// Linear map `R^input -> R^target` with i.i.d. `N(0, 1) / sqrt(target)` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomProjection<T> {
    input_dim: usize,
    target_dim: usize,
    // row-major target_dim x input_dim
    matrix: Vec<T>,
}

impl<T: Scalar> RandomProjection<T> {
    pub fn new(input_dim: usize, target_dim: usize, seed: u64) -> Result<Self> {
        if target_dim >= input_dim {
            return Err(Error::invalid(format!(
                "projection target {target_dim} must be below input dimension {input_dim}"
            )));
        }
        if target_dim < 2 {
            return Err(Error::invalid("projection target dimension must be >= 2"));
        }
        let scale = 1.0 / (target_dim as f64).sqrt();
        let mut rng = rng_from_seed(seed);
        let matrix = (0..target_dim * input_dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                T::lit(z * scale)
            })
            .collect();
        Ok(Self {
            input_dim,
            target_dim,
            matrix,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn project(&self, v: &Vector<T>) -> Result<Vector<T>> {
        v.check_dim(self.input_dim)?;
        let out = self
            .matrix
            .chunks_exact(self.input_dim)
            .map(|row| dot(row, v.as_slice()))
            .collect();
        Ok(Vector::from_vec_unchecked(out))
    }
}

/// Projects every point with one shared random matrix.
pub fn random_projection<T: Scalar>(points: &[Vector<T>], target_dim: usize, seed: u64) -> Result<Vec<Vector<T>>> {
    let dim = points
        .first()
        .map(Vector::dim)
        .ok_or_else(|| Error::invalid("nothing to project"))?;
    let projection = RandomProjection::new(dim, target_dim, seed)?;
    points.iter().map(|p| projection.project(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pairwise_distances;
    use crate::rng::rng_from_seed;

    fn gaussian_cloud(n: usize, dim: usize, seed: u64) -> Vec<Vector<f64>> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| Vector::new((0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap())
            .collect()
    }

    fn max_relative_distortion(a: &[Vector<f64>], b: &[Vector<f64>]) -> f64 {
        let da = pairwise_distances(a).unwrap();
        let db = pairwise_distances(b).unwrap();
        let mut worst = 0.0f64;
        for i in 0..a.len() {
            for j in (i + 1)..a.len() {
                worst = worst.max((db.get(i, j) / da.get(i, j) - 1.0).abs());
            }
        }
        worst
    }

    #[test]
    fn jl_distortion_at_64_dims() {
        let cloud = gaussian_cloud(50, 256, 11);
        let projected = random_projection(&cloud, 64, 5).unwrap();
        assert!(projected.iter().all(|p| p.dim() == 64));
        // per-pair relative error has std about 1/sqrt(2 * 64); 1225 pairs
        let worst = max_relative_distortion(&cloud, &projected);
        assert!(worst < 0.4, "distortion {worst}");
    }

    #[test]
    fn near_full_dimension_is_near_isometric() {
        let cloud = gaussian_cloud(30, 256, 12);
        let low = max_relative_distortion(&cloud, &random_projection(&cloud, 64, 6).unwrap());
        let high = max_relative_distortion(&cloud, &random_projection(&cloud, 255, 6).unwrap());
        assert!(high < low);
        assert!(high < 0.15, "distortion {high}");
    }

    #[test]
    fn identical_points_stay_identical() {
        let p = gaussian_cloud(1, 32, 3).remove(0);
        let out = random_projection(&[p.clone(), p], 8, 1).unwrap();
        assert_eq!(out[0], out[1]);
    }

    #[test]
    fn rejects_bad_targets() {
        let cloud = gaussian_cloud(2, 8, 1);
        assert!(random_projection(&cloud, 8, 0).is_err());
        assert!(random_projection(&cloud, 1, 0).is_err());
    }

    #[test]
    fn seeded_projection_is_deterministic() {
        let a = RandomProjection::<f64>::new(10, 4, 99).unwrap();
        let b = RandomProjection::<f64>::new(10, 4, 99).unwrap();
        assert_eq!(a, b);
    }
}
