use crate::error::{Error, Result};
use crate::geometry::DistanceMatrix;
use crate::scalar::Scalar;

/// Edge weights of a minimum spanning tree of the complete graph on `d`, ascending.
///
/// Dense Prim, `O(n^2)`. These are the finite degree-0 deaths of the Rips
/// filtration, computed without the filtration machinery.
pub fn h0_deaths_via_mst<T: Scalar>(d: &DistanceMatrix<T>) -> Result<Vec<T>> {
    let n = d.len();
    if n == 0 {
        return Err(Error::invalid("empty distance matrix"));
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![T::infinity(); n];
    let mut weights = Vec::with_capacity(n - 1);
    in_tree[0] = true;
    for (j, b) in best.iter_mut().enumerate().skip(1) {
        *b = d.get(0, j);
    }
    for _ in 1..n {
        let (next, w) = (0..n)
            .filter(|&j| !in_tree[j])
            .map(|j| (j, best[j]))
            .min_by(|a, b| a.1.total_cmp_scalar(&b.1))
            .expect("vertices remain outside the tree");
        in_tree[next] = true;
        weights.push(w);
        for j in 0..n {
            if !in_tree[j] {
                best[j] = best[j].min(d.get(next, j));
            }
        }
    }
    weights.sort_by(T::total_cmp_scalar);
    Ok(weights)
}
