//! Fractal interpolation surfaces for countably infinite data on rectangular grids.
//!
//! Given a partition of `[a,b] x [c,d]` by strictly increasing knot sequences
//! accumulating at `b` and `d`, a vertical scale field with sup-norm below one,
//! and a germ function sampled at the knots, this crate assembles the countable
//! iterated function system whose attractor is the graph of a continuous
//! surface interpolating every knot sample. The surface is computed as the
//! fixed point of a contraction on corner-respecting continuous functions, and
//! the companion modules approximate the attractor by partial systems and
//! verify the quantitative bounds satisfied by the fractal operator.
//!
//! The crate is `no_std`-compatible (`alloc` required); enable the `libm`
//! feature when building without `std`.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("fracsurf-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod analysis;
pub mod attractor;
pub mod cifs;
pub mod error;
pub mod fif;
pub(crate) mod math;
pub mod partition;

pub use cifs::{Certificate, CifsSystem, GermAndMap, MatchingReport, ScaleField};
pub use error::Error;
pub use fif::{FifGrid, PointEvaluator, SolveSettings};
pub use partition::{AffineMap1D, Axis, CellIndex, Partition};

/// Crate-wide result type.
pub type Result<T> = core::result::Result<T, Error>;
