//! Localization toolkit for hybrid underwater sensor networks.
//!
//! Nodes range each other over optical, magnetic-induction or acoustic links;
//! the measured single-hop ranges are completed into a full distance matrix by
//! shortest paths, embedded with classical multidimensional scaling and then
//! aligned to the anchors with a Procrustes similarity fit. A Cramér-Rao bound
//! and an energy-error trade-off metric score each run.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod completion;
pub mod config;
pub mod crlb;
pub mod error;
pub mod localization;
pub mod metrics;
pub mod network;
pub mod recipes;
pub mod special_fn;
pub mod sweep;

pub use error::{Error, Result};
pub use nalgebra::{DMatrix, Vector3};
