//! Coordinate-free decomposition of multichannel time series.
//!
//! A trajectory is binned in state space. Each occupied bin gets a local
//! frame built from second- and fourth-order velocity moments, and the
//! velocity expressed in that frame gives weight series that are invariant
//! under invertible transformations of the observed coordinates.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;

pub mod estimate;
pub mod experiment;
pub mod frames;
pub mod ingest;
pub mod linalg;
pub mod model;
pub mod plot;
pub mod reconstruct;
pub mod serial;
pub mod weights;

pub use error::{Error, Result};
