//! Rips filtration up to triangles, reduced over Z/2.
//!
//! Simplices enter in order of (filtration value, dimension, lexicographic
//! vertex tuple); the value of a simplex is its largest pairwise distance.
//! Degree 0 uses a union-find sweep over the sorted edges (equivalent to
//! reducing the vertex-edge boundary matrix under the elder rule). Degree 1
//! reduces the edge-triangle coboundary matrix with a pivot table. Pairs
//! with equal birth and death are dropped.

use std::cmp::Ordering;

use super::{Bar, PersistenceDiagram};
use crate::error::{Error, Result};
use crate::geometry::DistanceMatrix;
use crate::scalar::Scalar;
use crate::union_find::DisjointSet;

struct Edge<T> {
    value: T,
    a: u32,
    b: u32,
}

/// Persistence bars of the Rips filtration of `d` in degrees `0..=max_degree`.
pub fn rips_persistence<T: Scalar>(d: &DistanceMatrix<T>, max_degree: usize) -> Result<PersistenceDiagram<T>> {
    if max_degree > 1 {
        return Err(Error::invalid(format!(
            "homology degree {max_degree} is not supported (max 1)"
        )));
    }
    let n = d.len();
    if n == 0 {
        return Err(Error::invalid("empty distance matrix"));
    }
    if n > u32::MAX as usize {
        return Err(Error::TooLarge {
            what: "points",
            size: n,
            limit: u32::MAX as usize,
        });
    }

    let mut edges: Vec<Edge<T>> = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            edges.push(Edge {
                value: d.get(a, b),
                a: a as u32,
                b: b as u32,
            });
        }
    }
    edges.sort_by(|x, y| {
        x.value
            .total_cmp_scalar(&y.value)
            .then_with(|| (x.a, x.b).cmp(&(y.a, y.b)))
    });

    let mut bars = Vec::with_capacity(n + 8);
    let mut components = DisjointSet::new(n);
    let mut positive = vec![false; edges.len()];
    let mut positive_count = 0usize;
    for (pos, e) in edges.iter().enumerate() {
        if components.union(e.a as usize, e.b as usize) {
            if e.value > T::zero() {
                bars.push(Bar::finite(0, T::zero(), e.value));
            }
        } else {
            positive[pos] = true;
            positive_count += 1;
        }
    }
    bars.push(Bar::infinite(0, T::zero()));

    if max_degree >= 1 && positive_count > 0 {
        cohomology_h1(d, &edges, &positive, &mut bars);
    }

    PersistenceDiagram::from_bars(bars)
}

type Triangle<T> = (T, [u32; 3]);

fn triangle_cmp<T: Scalar>(x: &Triangle<T>, y: &Triangle<T>) -> Ordering {
    x.0.total_cmp_scalar(&y.0).then_with(|| x.1.cmp(&y.1))
}

// dense index of i < j < k
fn triangle_slot([i, j, k]: [u32; 3]) -> usize {
    let (i, j, k) = (i as usize, j as usize, k as usize);
    i + j * (j - 1) / 2 + k * (k - 1) * (k - 2) / 6
}

// cofacets of edge `e`, in filtration order
fn coboundary<T: Scalar>(d: &DistanceMatrix<T>, e: &Edge<T>, out: &mut Vec<Triangle<T>>) {
    out.clear();
    let (a, b) = (e.a as usize, e.b as usize);
    for v in 0..d.len() {
        if v != a && v != b {
            out.push(cofacet(d, e, v));
        }
    }
    out.sort_by(triangle_cmp);
}

fn cofacet<T: Scalar>(d: &DistanceMatrix<T>, e: &Edge<T>, v: usize) -> Triangle<T> {
    let value = e.value.max(d.get(e.a as usize, v)).max(d.get(e.b as usize, v));
    let mut t = [e.a, e.b, v as u32];
    t.sort_unstable();
    (value, t)
}

enum Column<T> {
    // the unreduced coboundary of the edge at this filtration position
    Coboundary(usize),
    Reduced(Vec<Triangle<T>>),
}

/// Degree-1 pairs from the coboundary matrix: positive edges in reverse
/// filtration order, each column the triangles containing the edge, pivot
/// the earliest triangle. The pairs coincide with those of the boundary
/// reduction; edges that kill components are skipped because they are
/// paired with vertices.
fn cohomology_h1<T: Scalar>(d: &DistanceMatrix<T>, edges: &[Edge<T>], positive: &[bool], bars: &mut Vec<Bar<T>>) {
    let n = d.len();
    let mut owner = vec![u32::MAX; n * (n - 1) * n.saturating_sub(2) / 6];
    let mut stored: Vec<Column<T>> = Vec::new();
    let mut column: Vec<Triangle<T>> = Vec::with_capacity(n);
    let mut other: Vec<Triangle<T>> = Vec::with_capacity(n);
    let mut scratch: Vec<Triangle<T>> = Vec::with_capacity(n);

    for (pos, e) in edges.iter().enumerate().rev() {
        if !positive[pos] {
            continue;
        }
        let pivot = (0..n)
            .filter(|&v| v != e.a as usize && v != e.b as usize)
            .map(|v| cofacet(d, e, v))
            .min_by(triangle_cmp);
        let Some(pivot) = pivot else { continue };
        let slot = triangle_slot(pivot.1);
        if owner[slot] == u32::MAX {
            // pivot is free: the column needs no reduction
            if pivot.0 > e.value {
                bars.push(Bar::finite(1, e.value, pivot.0));
            }
            owner[slot] = stored.len() as u32;
            stored.push(Column::Coboundary(pos));
            continue;
        }

        coboundary(d, e, &mut column);
        while let Some(&(_, t)) = column.first() {
            let idx = owner[triangle_slot(t)];
            if idx == u32::MAX {
                break;
            }
            let reducer = match &stored[idx as usize] {
                Column::Coboundary(p) => {
                    coboundary(d, &edges[*p], &mut other);
                    &other
                }
                Column::Reduced(c) => c,
            };
            symmetric_difference(&column, reducer, &mut scratch, triangle_cmp);
            std::mem::swap(&mut column, &mut scratch);
        }

        // an empty column is an essential class; the full 2-skeleton has none
        if let Some(&(death, t)) = column.first() {
            if death > e.value {
                bars.push(Bar::finite(1, e.value, death));
            }
            owner[triangle_slot(t)] = stored.len() as u32;
            stored.push(Column::Reduced(column.clone()));
        }
    }
}

fn symmetric_difference<X: Copy>(a: &[X], b: &[X], out: &mut Vec<X>, cmp: impl Fn(&X, &X) -> Ordering) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match cmp(&a[i], &b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Column reduction of the boundary matrix; an independent route to the
/// degree-1 pairs.
#[cfg(test)]
fn homology_h1<T: Scalar>(
    d: &DistanceMatrix<T>,
    edges: &[Edge<T>],
    positive: &[bool],
    positive_count: usize,
    bars: &mut Vec<Bar<T>>,
) {
    let n = d.len();
    // filtration position of edge (a, b), a < b
    let mut edge_pos = vec![u32::MAX; n * n];
    for (pos, e) in edges.iter().enumerate() {
        edge_pos[e.a as usize * n + e.b as usize] = pos as u32;
    }

    let mut triangles: Vec<(T, [u32; 3])> = Vec::with_capacity(n * (n - 1) * (n - 2) / 6);
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = d.get(i, j);
            for k in (j + 1)..n {
                let value = dij.max(d.get(i, k)).max(d.get(j, k));
                triangles.push((value, [i as u32, j as u32, k as u32]));
            }
        }
    }
    triangles.sort_by(|x, y| x.0.total_cmp_scalar(&y.0).then_with(|| x.1.cmp(&y.1)));

    // reduced column owning each pivot edge
    let mut owner: Vec<Option<Vec<u32>>> = vec![None; edges.len()];
    let mut paired = 0usize;
    let mut column: Vec<u32> = Vec::with_capacity(64);
    let mut scratch: Vec<u32> = Vec::with_capacity(64);

    for (value, [i, j, k]) in triangles {
        // every positive edge is eventually killed; later triangles only create H2
        if paired == positive_count {
            break;
        }
        let (i, j, k) = (i as usize, j as usize, k as usize);
        column.clear();
        column.extend([edge_pos[i * n + j], edge_pos[i * n + k], edge_pos[j * n + k]]);
        column.sort_unstable();

        while let Some(&pivot) = column.last() {
            match &owner[pivot as usize] {
                Some(other) => {
                    symmetric_difference(&column, other, &mut scratch, u32::cmp);
                    std::mem::swap(&mut column, &mut scratch);
                }
                None => break,
            }
        }

        if let Some(&pivot) = column.last() {
            debug_assert!(positive[pivot as usize]);
            let birth = edges[pivot as usize].value;
            if value > birth {
                bars.push(Bar::finite(1, birth, value));
            }
            owner[pivot as usize] = Some(column.clone());
            paired += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{pairwise_distances, Vector};

    fn points(xs: &[[f64; 2]]) -> DistanceMatrix<f64> {
        let pts: Vec<_> = xs.iter().map(|p| Vector::from_slice(p).unwrap()).collect();
        pairwise_distances(&pts).unwrap()
    }

    #[test]
    fn two_points() {
        let diag = rips_persistence(&points(&[[0.0, 0.0], [1.0, 0.0]]), 1).unwrap();
        assert_eq!(diag.h0(), &[Bar::finite(0, 0.0, 1.0), Bar::infinite(0, 0.0)]);
        assert!(diag.h1().is_empty());
    }

    #[test]
    fn single_point() {
        let diag = rips_persistence(&points(&[[3.0, 1.0]]), 1).unwrap();
        assert_eq!(diag.h0(), &[Bar::infinite(0, 0.0)]);
        assert!(diag.h1().is_empty());
    }

    #[test]
    fn unit_square_has_one_loop() {
        let diag = rips_persistence(&points(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), 1).unwrap();
        assert_eq!(diag.h1().len(), 1);
        let bar = diag.h1()[0];
        assert!((bar.birth - 1.0).abs() < 1e-12);
        assert!((bar.death.finite().unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(diag.finite_h0_deaths(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn equilateral_triangle_has_no_loop() {
        let d = DistanceMatrix::from_rows(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let diag = rips_persistence(&d, 1).unwrap();
        assert!(diag.h1().is_empty());
        assert_eq!(diag.finite_h0_deaths(), vec![1.0, 1.0]);
    }

    #[test]
    fn degree_zero_only() {
        let diag = rips_persistence(&points(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), 0).unwrap();
        assert!(diag.h1().is_empty());
        assert_eq!(diag.h0().len(), 4);
    }

    #[test]
    fn rejects_degree_two() {
        assert!(rips_persistence(&points(&[[0.0, 0.0]]), 2).is_err());
    }

    #[test]
    fn hexagon_loop() {
        // side 1: the 6-cycle is born at 1 and filled at sqrt(3), where the
        // clique complex is an octahedron
        let pts: Vec<[f64; 2]> = (0..6)
            .map(|i| {
                let t = std::f64::consts::PI / 3.0 * i as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        let diag = rips_persistence(&points(&pts), 1).unwrap();
        assert_eq!(diag.h1().len(), 1);
        let bar = diag.h1()[0];
        assert!((bar.birth - 1.0).abs() < 1e-12);
        assert!((bar.death.finite().unwrap() - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn duplicate_points_drop_zero_bars() {
        let diag = rips_persistence(&points(&[[0.0, 0.0], [0.0, 0.0], [2.0, 0.0]]), 1).unwrap();
        assert_eq!(diag.h0(), &[Bar::finite(0, 0.0, 2.0), Bar::infinite(0, 0.0)]);
    }

    fn sorted_h1(bars: &[Bar<f64>]) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = bars.iter().map(|b| (b.birth, b.death.finite().unwrap())).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        v
    }

    fn boundary_route(d: &DistanceMatrix<f64>) -> Vec<(f64, f64)> {
        let n = d.len();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                edges.push(Edge {
                    value: d.get(a, b),
                    a: a as u32,
                    b: b as u32,
                });
            }
        }
        edges.sort_by(|x, y| x.value.total_cmp(&y.value).then_with(|| (x.a, x.b).cmp(&(y.a, y.b))));
        let mut uf = DisjointSet::new(n);
        let positive: Vec<bool> = edges.iter().map(|e| !uf.union(e.a as usize, e.b as usize)).collect();
        let count = positive.iter().filter(|&&p| p).count();
        let mut bars = Vec::new();
        if count > 0 {
            homology_h1(d, &edges, &positive, count, &mut bars);
        }
        sorted_h1(&bars)
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn coboundary_and_boundary_routes_agree(
            pts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 2..24),
            grid in proptest::bool::ANY,
        ) {
            // snapping to a grid forces many equal filtration values
            let snap = |x: f64| if grid { (x * 3.0).round() / 3.0 } else { x };
            let cloud: Vec<Vector<f64>> = pts
                .iter()
                .map(|&(x, y, z)| Vector::from_slice(&[snap(x), snap(y), snap(z)]).unwrap())
                .collect();
            let d = pairwise_distances(&cloud).unwrap();
            let diag = rips_persistence(&d, 1).unwrap();
            proptest::prop_assert_eq!(sorted_h1(diag.h1()), boundary_route(&d));
        }
    }
}
