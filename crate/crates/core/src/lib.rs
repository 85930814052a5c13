//! Topological ambiguity scores for semantic search.
//!
//! A query's k nearest neighbors are turned into a cloud of unit difference
//! vectors; the Vietoris-Rips persistence of that cloud is summarized by the
//! 1-Wasserstein norm of the degree-0 diagram and the longest degree-1
//! lifetime. The crate also ships the topic-vocabulary simulator used to
//! study these scores and a chunk/embed/index pipeline for real corpora.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix `f64`.

// `!(x > y)` is how NaN is rejected alongside out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod geometry;
pub mod index;
pub mod neighborhood;
pub mod persistence;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod simulation;
pub mod stats;
mod union_find;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Real = f64;

pub type Vector = geometry::Vector<f64>;
pub type DistanceMatrix = geometry::DistanceMatrix<f64>;
pub type OrthonormalBasis = geometry::OrthonormalBasis<f64>;
pub type Bar = persistence::Bar<f64>;
pub type PersistenceDiagram = persistence::PersistenceDiagram<f64>;
pub type VectorIndex = index::VectorIndex<f64>;
pub type QueryNeighborhood = neighborhood::QueryNeighborhood<f64>;
pub type AmbiguityScore = neighborhood::AmbiguityScore<f64>;

pub type Vector32 = geometry::Vector<f32>;
pub type DistanceMatrix32 = geometry::DistanceMatrix<f32>;
pub type PersistenceDiagram32 = persistence::PersistenceDiagram<f32>;
pub type VectorIndex32 = index::VectorIndex<f32>;
