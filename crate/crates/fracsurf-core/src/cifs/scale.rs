//! Vertical scale fields: the double family of contraction amplitudes.

use alloc::vec::Vec;

use crate::error::Error;
use crate::partition::Partition;
use crate::{math, Result};

/// Scale-field descriptor.
///
/// `Constant` and `Affine` are single global Lipschitz functions evaluated at
/// the image point, so edge-matching holds automatically. `CellTable` assigns
/// an independent constant per cell; cells beyond the table (or beyond the
/// truncation level) inherit the nearest edge entry, which keeps the sup and
/// Lipschitz bounds valid without infinite storage. A table whose constants
/// disagree across a shared edge deliberately violates the matching
/// conditions and is flagged by the matching sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleKind {
    Constant(f64),
    /// `c0 + cx*x + cy*y` evaluated at the image point.
    Affine { c0: f64, cx: f64, cy: f64 },
    /// Row-major `values[(i-1)*cols + (j-1)]` for cell `(i, j)`.
    CellTable { rows: u32, cols: u32, values: Vec<f64> },
}

/// A certified scale field: descriptor plus sup-norm and Lipschitz bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleField {
    kind: ScaleKind,
    sup_bound: f64,
    lip_bound: f64,
}

impl ScaleField {
    pub fn new(kind: ScaleKind, partition: &Partition) -> Result<Self> {
        let (sup, lip) = match &kind {
            ScaleKind::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::InvalidDescriptor("non-finite scale constant".into()));
                }
                (math::abs(*c), 0.0)
            }
            ScaleKind::Affine { c0, cx, cy } => {
                if !(c0.is_finite() && cx.is_finite() && cy.is_finite()) {
                    return Err(Error::InvalidDescriptor("non-finite affine scale coefficients".into()));
                }
                // An affine function on a rectangle attains its extremes at
                // the corners, so this sup is exact.
                let mut sup: f64 = 0.0;
                for x in [partition.a(), partition.b()] {
                    for y in [partition.c(), partition.d()] {
                        sup = sup.max(math::abs(c0 + cx * x + cy * y));
                    }
                }
                (sup, math::hypot(*cx, *cy))
            }
            ScaleKind::CellTable { rows, cols, values } => {
                if *rows == 0 || *cols == 0 || values.len() != (*rows as usize) * (*cols as usize) {
                    return Err(Error::InvalidDescriptor(
                        "cell table dimensions do not match value count".into(),
                    ));
                }
                let mut sup: f64 = 0.0;
                for v in values {
                    if !v.is_finite() {
                        return Err(Error::InvalidDescriptor("non-finite cell table entry".into()));
                    }
                    sup = sup.max(math::abs(*v));
                }
                (sup, 0.0)
            }
        };
        if !(sup < 1.0) {
            return Err(Error::ScaleSupTooLarge { sup });
        }
        Ok(Self { kind: kind.clone(), sup_bound: sup, lip_bound: lip })
    }

    /// `alpha_ij` at a point; for the tabulated kind only the cell matters.
    #[inline]
    pub fn eval(&self, i: u32, j: u32, x: f64, y: f64) -> f64 {
        match &self.kind {
            ScaleKind::Constant(c) => *c,
            ScaleKind::Affine { c0, cx, cy } => c0 + cx * x + cy * y,
            ScaleKind::CellTable { rows, cols, values } => {
                let r = i.clamp(1, *rows) - 1;
                let c = j.clamp(1, *cols) - 1;
                values[(r * cols + c) as usize]
            }
        }
    }

    pub fn kind(&self) -> &ScaleKind {
        &self.kind
    }

    /// Certified `sup_{i,j} ||alpha_ij||_inf`, strictly below one.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// Certified bound on the Lipschitz constants of every `alpha_ij`.
    pub fn lip_bound(&self) -> f64 {
        self.lip_bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn part() -> Partition {
        Partition::geometric((0.0, 1.0, 0.0, 1.0), 0.5, 0.5, 12, 12).unwrap()
    }

    #[test]
    fn sup_must_stay_below_one() {
        let err = ScaleField::new(ScaleKind::Constant(1.0), &part()).unwrap_err();
        assert_eq!(err, Error::ScaleSupTooLarge { sup: 1.0 });
        assert!(ScaleField::new(ScaleKind::Constant(-0.999), &part()).is_ok());
    }

    #[test]
    fn affine_sup_is_corner_max() {
        let f = ScaleField::new(ScaleKind::Affine { c0: 0.1, cx: 0.2, cy: -0.3 }, &part()).unwrap();
        assert!((f.sup_bound() - 0.3).abs() < 1e-15);
        assert!((f.lip_bound() - math::hypot(0.2, -0.3)).abs() < 1e-15);
    }

    #[test]
    fn cell_table_inherits_edge_entries() {
        let f = ScaleField::new(
            ScaleKind::CellTable { rows: 2, cols: 2, values: vec![0.1, 0.2, 0.3, 0.4] },
            &part(),
        )
        .unwrap();
        assert_eq!(f.eval(1, 1, 0.0, 0.0), 0.1);
        assert_eq!(f.eval(2, 2, 0.0, 0.0), 0.4);
        assert_eq!(f.eval(9, 1, 0.0, 0.0), 0.3);
        assert_eq!(f.eval(30, 30, 0.0, 0.0), 0.4);
        assert_eq!(f.sup_bound(), 0.4);
    }
}
