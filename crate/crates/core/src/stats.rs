//! Summary statistics over score samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Sample standard deviation (n - 1 denominator); zero for a single value.
pub fn std_dev(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Quantile of an ascending slice by linear interpolation between order
/// statistics at position `q * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * t)
}

pub fn quantile(xs: &[f64], q: f64) -> Option<f64> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::invalid("cannot summarize an empty sample"));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("sample contains non-finite values"));
        }
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p| quantile_sorted(&sorted, p).expect("non-empty");
        Ok(Self {
            count: xs.len(),
            mean: mean(xs).expect("non-empty"),
            std_dev: std_dev(xs).expect("non-empty"),
            min: sorted[0],
            q25: q(0.25),
            median: q(0.5),
            q75: q(0.75),
            max: sorted[sorted.len() - 1],
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }

    /// True when the closed 25-75% intervals share no point.
    pub fn iqr_disjoint(&self, other: &Summary) -> bool {
        self.q75 < other.q25 || other.q75 < self.q25
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolated_quartiles() {
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.q25, 1.75);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q75, 3.25);
        assert_eq!((s.min, s.max), (1.0, 4.0));
    }

    #[test]
    fn single_value() {
        let s = Summary::of(&[0.3]).unwrap();
        assert_eq!((s.q25, s.median, s.q75, s.std_dev), (0.3, 0.3, 0.3, 0.0));
    }

    #[test]
    fn empty_and_nan_rejected() {
        assert!(Summary::of(&[]).is_err());
        assert!(Summary::of(&[1.0, f64::NAN]).is_err());
        assert_eq!(quantile(&[1.0], 1.5), None);
    }

    #[test]
    fn iqr_overlap() {
        let a = Summary::of(&[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Summary::of(&[3.5, 4.0, 5.0, 6.0, 7.0]).unwrap();
        let c = Summary::of(&[2.0, 3.0, 4.0]).unwrap();
        assert!(a.iqr_disjoint(&b));
        assert!(!a.iqr_disjoint(&c));
    }
}
