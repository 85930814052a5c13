//! Vietoris-Rips persistent homology in degrees 0 and 1 and the two diagram
//! summaries used as ambiguity scores.

mod metrics;
mod mst;
mod oracle;
mod rips;

pub use metrics::{diagonal_distance, lt_max_h1, w1_h0, w1_h0_with, H0Norm, H0Normalization};
pub use mst::h0_deaths_via_mst;
pub use oracle::{betti_oracle, BETTI_ORACLE_MAX_POINTS};
pub use rips::rips_persistence;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Death radius of a bar. Classes that never die carry `Infinite`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Death<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Death<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Death::Finite(d) => Some(d),
            Death::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Death::Infinite)
    }

    /// True if a class with this death is still alive at `radius`.
    pub fn after(self, radius: T) -> bool {
        match self {
            Death::Finite(d) => d > radius,
            Death::Infinite => true,
        }
    }
}

/// A persistence interval `[birth, death)` in homology degree 0 or 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "BarRecord<T>", try_from = "BarRecord<T>", bound = "T: Scalar")]
pub struct Bar<T> {
    pub degree: u8,
    pub birth: T,
    pub death: Death<T>,
}

impl<T: Scalar> Bar<T> {
    pub fn finite(degree: u8, birth: T, death: T) -> Self {
        Self {
            degree,
            birth,
            death: Death::Finite(death),
        }
    }

    pub fn infinite(degree: u8, birth: T) -> Self {
        Self {
            degree,
            birth,
            death: Death::Infinite,
        }
    }

    /// `death - birth`, `None` for infinite bars.
    pub fn lifetime(&self) -> Option<T> {
        self.death.finite().map(|d| d - self.birth)
    }

    pub fn alive_at(&self, radius: T) -> bool {
        self.birth <= radius && self.death.after(radius)
    }
}

/// JSON shape of a bar: `{degree, birth, death|null}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct BarRecord<T> {
    degree: u8,
    birth: T,
    death: Option<T>,
}

impl<T: Scalar> From<Bar<T>> for BarRecord<T> {
    fn from(b: Bar<T>) -> Self {
        Self {
            degree: b.degree,
            birth: b.birth,
            death: b.death.finite(),
        }
    }
}

impl<T: Scalar> TryFrom<BarRecord<T>> for Bar<T> {
    type Error = Error;

    fn try_from(r: BarRecord<T>) -> Result<Self> {
        if r.degree > 1 {
            return Err(Error::invalid(format!("unsupported degree {}", r.degree)));
        }
        if !r.birth.is_finite() {
            return Err(Error::invalid("bar birth must be finite"));
        }
        match r.death {
            Some(d) if !(d >= r.birth) || !d.is_finite() => {
                Err(Error::invalid(format!("bar death {d} precedes birth {}", r.birth)))
            }
            Some(d) => Ok(Bar::finite(r.degree, r.birth, d)),
            None => Ok(Bar::infinite(r.degree, r.birth)),
        }
    }
}

/// Bars grouped by degree.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PersistenceDiagram<T> {
    h0: Vec<Bar<T>>,
    h1: Vec<Bar<T>>,
}

impl<T: Scalar> PersistenceDiagram<T> {
    pub fn from_bars(bars: impl IntoIterator<Item = Bar<T>>) -> Result<Self> {
        let mut diagram = Self {
            h0: Vec::new(),
            h1: Vec::new(),
        };
        for bar in bars {
            match bar.degree {
                0 => diagram.h0.push(bar),
                1 => diagram.h1.push(bar),
                d => return Err(Error::invalid(format!("unsupported degree {d}"))),
            }
        }
        Ok(diagram)
    }

    pub fn h0(&self) -> &[Bar<T>] {
        &self.h0
    }

    pub fn h1(&self) -> &[Bar<T>] {
        &self.h1
    }

    pub fn bars(&self) -> impl Iterator<Item = &Bar<T>> {
        self.h0.iter().chain(self.h1.iter())
    }

    /// Finite degree-0 deaths in ascending order.
    pub fn finite_h0_deaths(&self) -> Vec<T> {
        let mut deaths: Vec<T> = self.h0.iter().filter_map(|b| b.death.finite()).collect();
        deaths.sort_by(T::total_cmp_scalar);
        deaths
    }

    /// `(b0, b1)` obtained by counting bars alive at `radius`.
    pub fn betti_at(&self, radius: T) -> (usize, usize) {
        let count = |bars: &[Bar<T>]| bars.iter().filter(|b| b.alive_at(radius)).count();
        (count(&self.h0), count(&self.h1))
    }

    /// Multiplies every bar endpoint by `s`.
    pub fn scaled(&self, s: T) -> Self {
        let scale = |b: &Bar<T>| Bar {
            degree: b.degree,
            birth: b.birth * s,
            death: match b.death {
                Death::Finite(d) => Death::Finite(d * s),
                Death::Infinite => Death::Infinite,
            },
        };
        Self {
            h0: self.h0.iter().map(scale).collect(),
            h1: self.h1.iter().map(scale).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.bars().collect::<Vec<_>>())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let bars: Vec<Bar<T>> = serde_json::from_str(s)?;
        Self::from_bars(bars)
    }
}
