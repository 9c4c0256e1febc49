//! Error type shared by every module.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::partition::Axis;

/// Failure cases surfaced by construction, evaluation and solver routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Domain endpoints are not ordered (`b <= a` or `d <= c`).
    BadDomain { axis: Axis, lo: f64, hi: f64 },
    /// Geometric tail ratio outside the open interval (0, 1).
    RatioOutOfRange { axis: Axis, ratio: f64 },
    /// Truncation level below the minimum of 2.
    TruncationTooSmall { axis: Axis, truncation: u32 },
    /// User-supplied knot prefix stops increasing; carries the first bad index.
    NonMonotonePrefix { axis: Axis, index: usize },
    /// Prefix entry outside `[lo, hi)` or first entry not equal to `lo`.
    BadPrefixEntry { axis: Axis, index: usize, value: f64 },
    /// Map or cell index outside the realized range `1..=truncation`.
    IndexOutOfRange { axis: Axis, index: u32, realized: u32 },
    /// Point outside the rectangle `[a,b] x [c,d]`.
    OutsideDomain { x: f64, y: f64 },
    /// Vertical value outside the compact interval `K`.
    OutsideVerticalRange { z: f64, lo: f64, hi: f64 },
    /// Scale field fails the sup-norm admissibility requirement.
    ScaleSupTooLarge { sup: f64 },
    /// Parameter map disagrees with the germ at a domain corner.
    CornerMismatch { x: f64, y: f64, defect: f64 },
    /// Invalid descriptor contents (tables, coefficients, lambda, ...).
    InvalidDescriptor(String),
    /// Hyperbolicity certificate refused: the metric weight would be
    /// non-positive because `sup delta_ij >= 1/2`.
    CertificateRefused { delta_sup: f64 },
    /// Fixed-point iteration exhausted `max_iter`; carries the residual log.
    NoConvergence { residuals: Vec<f64> },
    /// A pulled-back point left the domain by more than the guard tolerance.
    PullbackInconsistency { x: f64, y: f64 },
    /// Operation needs a non-empty point cloud.
    EmptyCloud,
    /// Lattice or budget parameter too small to be meaningful.
    BadParameter(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::BadDomain { axis, lo, hi } => {
                write!(f, "{axis:?} domain endpoints not increasing: [{lo}, {hi}]")
            }
            Error::RatioOutOfRange { axis, ratio } => {
                write!(f, "{axis:?} tail ratio {ratio} outside (0, 1)")
            }
            Error::TruncationTooSmall { axis, truncation } => {
                write!(f, "{axis:?} truncation {truncation} below minimum of 2")
            }
            Error::NonMonotonePrefix { axis, index } => {
                write!(f, "{axis:?} prefix stops increasing at index {index}")
            }
            Error::BadPrefixEntry { axis, index, value } => {
                write!(f, "{axis:?} prefix entry {value} at index {index} invalid")
            }
            Error::IndexOutOfRange { axis, index, realized } => {
                write!(f, "{axis:?} index {index} outside realized range 1..={realized}")
            }
            Error::OutsideDomain { x, y } => write!(f, "point ({x}, {y}) outside domain"),
            Error::OutsideVerticalRange { z, lo, hi } => {
                write!(f, "value {z} outside vertical interval [{lo}, {hi}]")
            }
            Error::ScaleSupTooLarge { sup } => {
                write!(f, "scale field must satisfy sup < 1, got {sup}")
            }
            Error::CornerMismatch { x, y, defect } => {
                write!(f, "parameter map misses germ at corner ({x}, {y}) by {defect}")
            }
            Error::InvalidDescriptor(msg) => write!(f, "invalid descriptor: {msg}"),
            Error::CertificateRefused { delta_sup } => write!(
                f,
                "hyperbolicity certificate refused: sup delta_ij = {delta_sup} >= 1/2 \
                 makes the metric weight non-positive"
            ),
            Error::NoConvergence { residuals } => write!(
                f,
                "fixed-point iteration did not reach tolerance in {} iterations \
                 (last residual {:e})",
                residuals.len(),
                residuals.last().copied().unwrap_or(f64::NAN)
            ),
            Error::PullbackInconsistency { x, y } => {
                write!(f, "pulled-back point ({x}, {y}) left the domain")
            }
            Error::EmptyCloud => write!(f, "point cloud is empty"),
            Error::BadParameter(msg) => write!(f, "bad parameter: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
