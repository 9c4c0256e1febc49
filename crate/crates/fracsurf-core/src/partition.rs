//! Countable partitions of a rectangle and the per-cell affine homeomorphisms.
//!
//! Each axis carries a strictly increasing knot sequence generated in closed
//! form (geometric tail, optionally preceded by a user prefix) and converging
//! to the upper endpoint. The sequence is never materialized: any knot,
//! subinterval or affine map is produced analytically from the generator, so
//! the countable structure stays exact. The truncation level only bounds the
//! indices that enumerating operations (matching sweeps, partial systems) are
//! allowed to touch.

use alloc::vec::Vec;

use crate::error::Error;
use crate::math;
use crate::Result;

/// Axis tag used in errors and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Result of locating a coordinate: an interior cell, or the accumulation
/// endpoint itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellIndex {
    /// Smallest `i >= 1` with `knot(i-1) <= v <= knot(i)`; knots resolve to
    /// the lower cell.
    Interior(u32),
    /// Exactly the upper endpoint (`b` or `d`).
    Limit,
}

/// The two endpoint tags indexing corner conditions (`0` and the limit).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Lower,
    Upper,
}

/// Binary sequence with 0 at odd places and 1 at even places.
#[inline]
pub fn s_parity(i: u32) -> u32 {
    debug_assert!(i >= 1);
    if i % 2 == 1 {
        0
    } else {
        1
    }
}

/// Knot-index transfer for corner conditions: an endpoint of the domain is
/// carried by the `i`-th map onto knot `tau(i, k)`.
#[inline]
pub fn tau(i: u32, k: Endpoint) -> u32 {
    match k {
        Endpoint::Lower => i - 1 + s_parity(i),
        Endpoint::Upper => i - s_parity(i),
    }
}

/// Knot sequence descriptor: closed-form generators only.
#[derive(Debug, Clone, PartialEq)]
pub enum KnotGenerator {
    /// `knot(i) = hi - (hi - lo) * ratio^i`.
    Geometric { ratio: f64 },
    /// Explicit leading knots starting at `lo`, then a geometric tail from
    /// the last prefix knot towards `hi`.
    PrefixGeometric { prefix: Vec<f64>, ratio: f64 },
}

/// One axis of the partition: endpoints, generator and truncation level.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisPartition {
    axis: Axis,
    lo: f64,
    hi: f64,
    generator: KnotGenerator,
    truncation: u32,
}

impl AxisPartition {
    pub fn new(axis: Axis, lo: f64, hi: f64, generator: KnotGenerator, truncation: u32) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::BadDomain { axis, lo, hi });
        }
        if truncation < 2 {
            return Err(Error::TruncationTooSmall { axis, truncation });
        }
        let ratio = match &generator {
            KnotGenerator::Geometric { ratio } => *ratio,
            KnotGenerator::PrefixGeometric { ratio, .. } => *ratio,
        };
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::RatioOutOfRange { axis, ratio });
        }
        if let KnotGenerator::PrefixGeometric { prefix, .. } = &generator {
            if prefix.is_empty() || prefix[0] != lo {
                return Err(Error::BadPrefixEntry {
                    axis,
                    index: 0,
                    value: prefix.first().copied().unwrap_or(f64::NAN),
                });
            }
            for (k, &v) in prefix.iter().enumerate().skip(1) {
                if !(v > prefix[k - 1]) {
                    return Err(Error::NonMonotonePrefix { axis, index: k });
                }
                if !(v < hi) {
                    return Err(Error::BadPrefixEntry { axis, index: k, value: v });
                }
            }
        }
        let ax = Self { axis, lo, hi, generator, truncation };
        // Every realized cell must have positive width in floating point,
        // otherwise the realized maps would degenerate.
        for i in 1..=truncation {
            if !(ax.tail(i - 1) > ax.tail(i)) && !matches!(&ax.generator, KnotGenerator::PrefixGeometric { prefix, .. } if (i as usize) < prefix.len())
            {
                return Err(Error::InvalidDescriptor(
                    "truncation exceeds the floating-point resolution of the knot sequence".into(),
                ));
            }
        }
        Ok(ax)
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }
    pub fn lo(&self) -> f64 {
        self.lo
    }
    pub fn hi(&self) -> f64 {
        self.hi
    }
    pub fn truncation(&self) -> u32 {
        self.truncation
    }
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
    pub fn generator(&self) -> &KnotGenerator {
        &self.generator
    }

    /// Same axis with a different truncation level.
    pub fn with_truncation(&self, truncation: u32) -> Result<Self> {
        Self::new(self.axis, self.lo, self.hi, self.generator.clone(), truncation)
    }

    /// `i`-th knot of the countable sequence, exact for any index.
    pub fn knot(&self, i: u32) -> f64 {
        match &self.generator {
            KnotGenerator::Geometric { ratio } => {
                if i == 0 {
                    self.lo
                } else {
                    self.hi - (self.hi - self.lo) * math::powi(*ratio, i)
                }
            }
            KnotGenerator::PrefixGeometric { prefix, ratio } => {
                let p = prefix.len();
                if (i as usize) < p {
                    prefix[i as usize]
                } else {
                    let last = prefix[p - 1];
                    self.hi - (self.hi - last) * math::powi(*ratio, i - (p as u32 - 1))
                }
            }
        }
    }

    /// Distance `hi - knot(i)` in closed form; no cancellation even for
    /// indices deep in the tail.
    pub fn tail(&self, i: u32) -> f64 {
        match &self.generator {
            KnotGenerator::Geometric { ratio } => (self.hi - self.lo) * math::powi(*ratio, i),
            KnotGenerator::PrefixGeometric { prefix, ratio } => {
                let p = prefix.len();
                if (i as usize) < p {
                    self.hi - prefix[i as usize]
                } else {
                    (self.hi - prefix[p - 1]) * math::powi(*ratio, i - (p as u32 - 1))
                }
            }
        }
    }

    /// Contraction factor `a_i` of the `i`-th map, from the knot spacing.
    pub fn contraction(&self, i: u32) -> f64 {
        debug_assert!(i >= 1);
        let seg = match &self.generator {
            // Prefix knots are user data; difference them directly.
            KnotGenerator::PrefixGeometric { prefix, .. } if (i as usize) < prefix.len() => {
                prefix[i as usize] - prefix[i as usize - 1]
            }
            _ => self.tail(i - 1) - self.tail(i),
        };
        seg / self.len()
    }

    /// Exact supremum of the contraction factors over the whole countable
    /// family (the tail is geometric, hence decreasing).
    pub fn sup_contraction(&self) -> f64 {
        let candidates = match &self.generator {
            KnotGenerator::Geometric { .. } => 1,
            KnotGenerator::PrefixGeometric { prefix, .. } => prefix.len() as u32,
        };
        let mut sup: f64 = 0.0;
        for i in 1..=candidates {
            sup = sup.max(self.contraction(i));
        }
        sup
    }

    /// Affine map of the `i`-th cell, orientation alternating with parity.
    /// Indices beyond the truncation level are generated analytically.
    pub fn map(&self, i: u32) -> AffineMap1D {
        debug_assert!(i >= 1);
        let (img_lo, img_hi) = if i % 2 == 1 {
            (self.knot(i - 1), self.knot(i))
        } else {
            (self.knot(i), self.knot(i - 1))
        };
        AffineMap1D { dom_lo: self.lo, dom_hi: self.hi, img_lo, img_hi }
    }

    /// Realized-range checked variant of [`AxisPartition::map`].
    pub fn map_realized(&self, i: u32) -> Result<AffineMap1D> {
        if i == 0 || i > self.truncation {
            return Err(Error::IndexOutOfRange {
                axis: self.axis,
                index: i,
                realized: self.truncation,
            });
        }
        Ok(self.map(i))
    }

    /// Cell containing `v`, or [`CellIndex::Limit`] at the upper endpoint.
    pub fn locate(&self, v: f64) -> Result<CellIndex> {
        if !(v >= self.lo && v <= self.hi) {
            return Err(match self.axis {
                Axis::X => Error::OutsideDomain { x: v, y: f64::NAN },
                Axis::Y => Error::OutsideDomain { x: f64::NAN, y: v },
            });
        }
        if v == self.hi {
            return Ok(CellIndex::Limit);
        }
        let (tail_start_idx, tail_start) = match &self.generator {
            KnotGenerator::Geometric { .. } => (0u32, self.lo),
            KnotGenerator::PrefixGeometric { prefix, .. } => {
                if v < prefix[prefix.len() - 1] {
                    // Linear scan of the short prefix.
                    let mut i = 1u32;
                    while prefix[i as usize] < v {
                        i += 1;
                    }
                    return Ok(CellIndex::Interior(i));
                }
                ((prefix.len() - 1) as u32, prefix[prefix.len() - 1])
            }
        };
        let ratio = match &self.generator {
            KnotGenerator::Geometric { ratio } => *ratio,
            KnotGenerator::PrefixGeometric { ratio, .. } => *ratio,
        };
        // Analytic guess from the geometric closed form, then exact fix-up
        // against the generator so ties resolve to the lower cell.
        let t = (self.hi - v) / (self.hi - tail_start);
        let guess = if t >= 1.0 {
            1i64
        } else {
            (math::ceil(math::ln(t) / math::ln(ratio)) as i64).max(1)
        };
        let mut i = (guess as u32).max(1) + tail_start_idx;
        if i <= tail_start_idx {
            i = tail_start_idx + 1;
        }
        while self.knot(i) < v {
            i += 1;
        }
        while i > tail_start_idx + 1 && self.knot(i - 1) >= v {
            i -= 1;
        }
        Ok(CellIndex::Interior(i))
    }

    /// Exact distance from `v` to the countable knot set plus its limit.
    pub fn knot_distance(&self, v: f64) -> Result<f64> {
        match self.locate(v)? {
            CellIndex::Limit => Ok(0.0),
            CellIndex::Interior(i) => {
                let gap = self.hi - v;
                let left = self.tail(i - 1) - gap;
                let right = gap - self.tail(i);
                Ok(left.min(right).max(0.0).min(gap))
            }
        }
    }
}

/// Affine homeomorphism of one axis onto a subinterval, stored in barycentric
/// form so endpoint images (and their inverses) are exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap1D {
    dom_lo: f64,
    dom_hi: f64,
    img_lo: f64,
    img_hi: f64,
}

impl AffineMap1D {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        let t = (x - self.dom_lo) / (self.dom_hi - self.dom_lo);
        self.img_lo * (1.0 - t) + self.img_hi * t
    }

    #[inline]
    pub fn invert(&self, z: f64) -> f64 {
        let t = (z - self.img_lo) / (self.img_hi - self.img_lo);
        self.dom_lo * (1.0 - t) + self.dom_hi * t
    }

    /// Signed contraction factor.
    pub fn scale(&self) -> f64 {
        (self.img_hi - self.img_lo) / (self.dom_hi - self.dom_lo)
    }

    /// +1 for increasing (odd index), -1 for decreasing (even index).
    pub fn orientation(&self) -> i8 {
        if self.img_hi >= self.img_lo {
            1
        } else {
            -1
        }
    }
}

/// The countable partition of `[a,b] x [c,d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    x: AxisPartition,
    y: AxisPartition,
}

impl Partition {
    pub fn new(x: AxisPartition, y: AxisPartition) -> Self {
        debug_assert_eq!(x.axis(), Axis::X);
        debug_assert_eq!(y.axis(), Axis::Y);
        Self { x, y }
    }

    /// Geometric-tail partition on both axes.
    pub fn geometric(
        (a, b, c, d): (f64, f64, f64, f64),
        ratio_x: f64,
        ratio_y: f64,
        m_trunc: u32,
        n_trunc: u32,
    ) -> Result<Self> {
        let x = AxisPartition::new(Axis::X, a, b, KnotGenerator::Geometric { ratio: ratio_x }, m_trunc)?;
        let y = AxisPartition::new(Axis::Y, c, d, KnotGenerator::Geometric { ratio: ratio_y }, n_trunc)?;
        Ok(Self::new(x, y))
    }

    pub fn x(&self) -> &AxisPartition {
        &self.x
    }
    pub fn y(&self) -> &AxisPartition {
        &self.y
    }
    pub fn a(&self) -> f64 {
        self.x.lo
    }
    pub fn b(&self) -> f64 {
        self.x.hi
    }
    pub fn c(&self) -> f64 {
        self.y.lo
    }
    pub fn d(&self) -> f64 {
        self.y.hi
    }
    pub fn m_trunc(&self) -> u32 {
        self.x.truncation
    }
    pub fn n_trunc(&self) -> u32 {
        self.y.truncation
    }

    pub fn x_knot(&self, i: u32) -> f64 {
        self.x.knot(i)
    }
    pub fn y_knot(&self, j: u32) -> f64 {
        self.y.knot(j)
    }

    /// Horizontal map `u_i`; realized-range checked.
    pub fn make_u(&self, i: u32) -> Result<AffineMap1D> {
        self.x.map_realized(i)
    }

    /// Vertical map `v_j`; realized-range checked.
    pub fn make_v(&self, j: u32) -> Result<AffineMap1D> {
        self.y.map_realized(j)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.a() && x <= self.b() && y >= self.c() && y <= self.d()
    }

    /// `sup max(a_i, b_j)` over the whole countable family, exact.
    pub fn delta_sup(&self) -> f64 {
        self.x.sup_contraction().max(self.y.sup_contraction())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn axis_half() -> AxisPartition {
        AxisPartition::new(Axis::X, 0.0, 1.0, KnotGenerator::Geometric { ratio: 0.5 }, 12).unwrap()
    }

    #[test]
    fn parity_and_tau() {
        assert_eq!(s_parity(1), 0);
        assert_eq!(s_parity(2), 1);
        assert_eq!(s_parity(7), 0);
        assert_eq!(tau(1, Endpoint::Lower), 0);
        assert_eq!(tau(1, Endpoint::Upper), 1);
        assert_eq!(tau(2, Endpoint::Lower), 2);
        assert_eq!(tau(2, Endpoint::Upper), 1);
        assert_eq!(tau(5, Endpoint::Lower), 4);
    }

    #[test]
    fn geometric_knots_closed_form() {
        let ax = axis_half();
        assert_eq!(ax.knot(0), 0.0);
        assert_eq!(ax.knot(1), 0.5);
        assert_eq!(ax.knot(2), 0.75);
        assert_eq!(ax.knot(3), 0.875);
        // b - x_i = 2^{-i}, strictly decreasing to 0.
        for i in 0..40u32 {
            assert_eq!(1.0 - ax.knot(i), math::powi(0.5, i));
            assert!(ax.knot(i + 1) > ax.knot(i));
        }
    }

    #[test]
    fn prefix_monotonicity_violation_reports_index() {
        let gen = KnotGenerator::PrefixGeometric { prefix: vec![0.0, 0.3, 0.2], ratio: 0.5 };
        let err = AxisPartition::new(Axis::X, 0.0, 1.0, gen, 8).unwrap_err();
        assert_eq!(err, Error::NonMonotonePrefix { axis: Axis::X, index: 2 });
    }

    #[test]
    fn ratio_rejected_outside_unit_interval() {
        for r in [0.0, 1.0, 1.5, -0.1] {
            let gen = KnotGenerator::Geometric { ratio: r };
            let err = AxisPartition::new(Axis::X, 0.0, 1.0, gen, 8).unwrap_err();
            assert_eq!(err, Error::RatioOutOfRange { axis: Axis::X, ratio: r });
        }
    }

    #[test]
    fn maps_hit_endpoint_images_exactly() {
        let ax = axis_half();
        let u1 = ax.map(1);
        assert_eq!(u1.apply(0.0), 0.0);
        assert_eq!(u1.apply(1.0), 0.5);
        assert_eq!(u1.scale(), 0.5);
        assert_eq!(u1.orientation(), 1);
        let u2 = ax.map(2);
        assert_eq!(u2.apply(0.0), 0.75);
        assert_eq!(u2.apply(1.0), 0.5);
        assert_eq!(u2.scale(), -0.25);
        assert_eq!(u2.orientation(), -1);
    }

    #[test]
    fn consecutive_inverse_consistency_is_exact() {
        let ax = axis_half();
        for i in 1..12u32 {
            let xi = ax.knot(i);
            let left = ax.map(i).invert(xi);
            let right = ax.map(i + 1).invert(xi);
            assert_eq!(left, right);
            let expect = if i % 2 == 1 { ax.hi() } else { ax.lo() };
            assert_eq!(left, expect);
        }
    }

    #[test]
    fn contraction_matches_closed_form() {
        let ax = AxisPartition::new(Axis::X, -1.0, 3.0, KnotGenerator::Geometric { ratio: 0.37 }, 20)
            .unwrap();
        for i in 1..=20u32 {
            let from_knots = ax.contraction(i);
            let closed = (1.0 - 0.37) * math::powi(0.37, i - 1);
            assert!((from_knots - closed).abs() <= 1e-12 * closed.abs());
        }
        assert!(ax.sup_contraction() < 1.0);
        assert_eq!(ax.sup_contraction(), ax.contraction(1));
    }

    #[test]
    fn locate_examples() {
        let ax = axis_half();
        assert_eq!(ax.locate(0.6).unwrap(), CellIndex::Interior(2));
        assert_eq!(ax.locate(1.0).unwrap(), CellIndex::Limit);
        assert_eq!(ax.locate(0.5).unwrap(), CellIndex::Interior(1));
        assert_eq!(ax.locate(0.0).unwrap(), CellIndex::Interior(1));
        assert!(ax.locate(1.5).is_err());
        // Analytic addressing continues past the truncation level.
        assert_eq!(ax.locate(1.0 - 1e-9).unwrap(), CellIndex::Interior(30));
    }

    #[test]
    fn locate_prefix_generator() {
        let gen = KnotGenerator::PrefixGeometric { prefix: vec![0.0, 0.4, 0.6], ratio: 0.5 };
        let ax = AxisPartition::new(Axis::X, 0.0, 1.0, gen, 8).unwrap();
        assert_eq!(ax.knot(2), 0.6);
        assert_eq!(ax.knot(3), 0.8);
        assert_eq!(ax.locate(0.3).unwrap(), CellIndex::Interior(1));
        assert_eq!(ax.locate(0.5).unwrap(), CellIndex::Interior(2));
        assert_eq!(ax.locate(0.7).unwrap(), CellIndex::Interior(3));
        assert_eq!(ax.locate(0.9).unwrap(), CellIndex::Interior(4));
    }

    #[test]
    fn realized_range_enforced_for_maps() {
        let p = Partition::geometric((0.0, 1.0, 0.0, 1.0), 0.5, 0.5, 12, 12).unwrap();
        assert!(p.make_u(12).is_ok());
        assert_eq!(
            p.make_u(13).unwrap_err(),
            Error::IndexOutOfRange { axis: Axis::X, index: 13, realized: 12 }
        );
        assert!(p.make_u(0).is_err());
    }

    #[test]
    fn knot_distance_exact_on_tail() {
        let ax = axis_half();
        assert_eq!(ax.knot_distance(0.5).unwrap(), 0.0);
        assert_eq!(ax.knot_distance(1.0).unwrap(), 0.0);
        let v = 0.99999;
        let d = ax.knot_distance(v).unwrap();
        // Between x_16 and x_17; nearest knot is a tail knot, not the limit.
        assert!(d > 0.0 && d < math::powi(0.5, 17));
    }
}
