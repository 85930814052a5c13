//! Betti numbers of a single Rips complex by Z/2 rank computation.
//!
//! Independent of the filtration code: the complex at a fixed radius is built
//! from scratch and the ranks of the boundary maps are found by Gaussian
//! elimination on bit rows.

use crate::error::{Error, Result};
use crate::geometry::DistanceMatrix;
use crate::scalar::Scalar;

pub const BETTI_ORACLE_MAX_POINTS: usize = 10;

/// `(b0, b1)` of the Rips complex at `radius` (simplices with diameter `<= radius`).
pub fn betti_oracle<T: Scalar>(d: &DistanceMatrix<T>, radius: T) -> Result<(usize, usize)> {
    let n = d.len();
    if n > BETTI_ORACLE_MAX_POINTS {
        return Err(Error::TooLarge {
            what: "points",
            size: n,
            limit: BETTI_ORACLE_MAX_POINTS,
        });
    }

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if d.get(i, j) <= radius {
                edges.push((i, j));
            }
        }
    }
    let edge_index = |a: usize, b: usize| edges.iter().position(|&e| e == (a, b));

    let mut triangles = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                if d.get(i, j) <= radius && d.get(i, k) <= radius && d.get(j, k) <= radius {
                    triangles.push((i, j, k));
                }
            }
        }
    }

    // boundary_1: one row per edge over vertex columns
    let boundary_1: Vec<Vec<u64>> = edges.iter().map(|&(a, b)| bit_row(n, &[a, b])).collect();
    // boundary_2: one row per triangle over edge columns
    let boundary_2: Vec<Vec<u64>> = triangles
        .iter()
        .map(|&(i, j, k)| {
            let cols = [
                edge_index(i, j).expect("edge of triangle present"),
                edge_index(i, k).expect("edge of triangle present"),
                edge_index(j, k).expect("edge of triangle present"),
            ];
            bit_row(edges.len(), &cols)
        })
        .collect();

    let rank_1 = gf2_rank(boundary_1);
    let rank_2 = gf2_rank(boundary_2);
    Ok((n - rank_1, edges.len() - rank_1 - rank_2))
}

fn bit_row(width: usize, ones: &[usize]) -> Vec<u64> {
    let mut row = vec![0u64; width.div_ceil(64).max(1)];
    for &c in ones {
        row[c / 64] ^= 1 << (c % 64);
    }
    row
}

fn gf2_rank(mut rows: Vec<Vec<u64>>) -> usize {
    let Some(words) = rows.first().map(Vec::len) else {
        return 0;
    };
    let mut rank = 0;
    for col in 0..words * 64 {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][w] & bit != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[w] & bit != 0 {
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
    }
    rank
}
