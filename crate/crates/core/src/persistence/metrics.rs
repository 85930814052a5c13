use super::PersistenceDiagram;
use crate::scalar::Scalar;

/// Distance from `(birth, death)` to its orthogonal projection on the
/// diagonal, measured along the death axis: `(death - birth) / 2`.
pub fn diagonal_distance<T: Scalar>(birth: T, death: T) -> T {
    (death - birth) / T::lit(2.0)
}

/// How the sum of diagonal distances of degree-0 deaths is normalized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum H0Normalization {
    /// Divide by `N - 1`, with `N` the number of degree-0 bars including the
    /// infinite one.
    #[default]
    FiniteBarMean,
    /// Plain sum.
    Unnormalized,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct H0Norm<T> {
    pub value: T,
    /// Fewer than two degree-0 bars; `value` is zero.
    pub degenerate: bool,
}

/// 1-Wasserstein norm of the degree-0 diagram against the empty diagram.
pub fn w1_h0<T: Scalar>(diagram: &PersistenceDiagram<T>) -> H0Norm<T> {
    w1_h0_with(diagram, H0Normalization::FiniteBarMean)
}

pub fn w1_h0_with<T: Scalar>(diagram: &PersistenceDiagram<T>, normalization: H0Normalization) -> H0Norm<T> {
    let n = diagram.h0().len();
    if n < 2 {
        return H0Norm {
            value: T::zero(),
            degenerate: true,
        };
    }
    let sum: T = diagram
        .h0()
        .iter()
        .filter_map(|b| b.death.finite().map(|d| diagonal_distance(b.birth, d)))
        .sum();
    let value = match normalization {
        H0Normalization::FiniteBarMean => sum / T::lit((n - 1) as f64),
        H0Normalization::Unnormalized => sum,
    };
    H0Norm {
        value,
        degenerate: false,
    }
}

/// Largest diagonal distance over degree-1 bars; zero if there are none.
pub fn lt_max_h1<T: Scalar>(diagram: &PersistenceDiagram<T>) -> T {
    diagram
        .h1()
        .iter()
        .filter_map(|b| b.death.finite().map(|d| diagonal_distance(b.birth, d)))
        .fold(T::zero(), T::max)
}
