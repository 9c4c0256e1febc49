//! Property tests for the structural invariants of the partition, the
//! assembled maps and the weighted-metric contraction.

use fracsurf_core::cifs::{CifsSystem, Germ, ParameterMap, ScaleKind};
use fracsurf_core::partition::{Axis, AxisPartition, CellIndex, KnotGenerator, Partition};
use proptest::prelude::*;

fn axis(lo: f64, hi: f64, r: f64, trunc: u32) -> AxisPartition {
    AxisPartition::new(Axis::X, lo, hi, KnotGenerator::Geometric { ratio: r }, trunc).unwrap()
}

proptest! {
    /// Endpoint images alternate orientation with the cell parity and always
    /// land on the bracketing knots.
    #[test]
    fn maps_alternate_orientation(
        r in 0.3f64..0.95,
        lo in -5.0f64..5.0,
        span in 0.1f64..10.0,
        i in 1u32..20,
    ) {
        let ax = axis(lo, lo + span, r, 20);
        let u = ax.map(i);
        let (k0, k1) = (ax.knot(i - 1), ax.knot(i));
        if i % 2 == 1 {
            prop_assert_eq!(u.apply(lo), k0);
            prop_assert_eq!(u.apply(lo + span), k1);
            prop_assert_eq!(u.orientation(), 1);
        } else {
            prop_assert_eq!(u.apply(lo), k1);
            prop_assert_eq!(u.apply(lo + span), k0);
            prop_assert_eq!(u.orientation(), -1);
        }
        prop_assert!(u.scale().abs() < 1.0);
    }

    /// The shared-knot inverse images of consecutive maps agree exactly.
    #[test]
    fn consecutive_inverses_coincide(
        r in 0.3f64..0.95,
        lo in -5.0f64..5.0,
        span in 0.1f64..10.0,
        i in 1u32..20,
    ) {
        let ax = axis(lo, lo + span, r, 24);
        let xi = ax.knot(i);
        let left = ax.map(i).invert(xi);
        let right = ax.map(i + 1).invert(xi);
        prop_assert_eq!(left, right);
        let expect = if i % 2 == 1 { lo + span } else { lo };
        prop_assert_eq!(left, expect);
    }

    /// Locating the image of an interior point recovers the cell index.
    #[test]
    fn locate_inverts_maps(
        r in 0.1f64..0.9,
        i in 1u32..16,
        t in 0.001f64..0.999,
    ) {
        let ax = axis(0.0, 1.0, r, 16);
        let x = ax.map(i).apply(t);
        prop_assert_eq!(ax.locate(x).unwrap(), CellIndex::Interior(i));
    }

    /// Knot-difference contraction factors match the geometric closed form.
    #[test]
    fn contraction_closed_form(r in 0.45f64..0.95, i in 1u32..40) {
        let ax = axis(-1.0, 3.0, r, 40);
        let closed = (1.0 - r) * r.powi(i as i32 - 1);
        let got = ax.contraction(i);
        prop_assert!((got - closed).abs() <= 1e-12 * closed.abs());
    }

    /// The supremum of the contraction factors upper-bounds every realized
    /// factor and stays below one.
    #[test]
    fn sup_contraction_dominates(r in 0.45f64..0.95) {
        let ax = axis(0.0, 1.0, r, 30);
        let sup = ax.sup_contraction();
        prop_assert!(sup < 1.0);
        for i in 1..=30 {
            prop_assert!(ax.contraction(i) <= sup + 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Vertical sections of every map contract by at most the certified
    /// sup bound.
    #[test]
    fn vertical_contraction(
        alpha in -0.95f64..0.95,
        i in 1u32..12,
        j in 1u32..12,
        x in 0.0f64..1.0,
        y in 0.0f64..1.0,
        z1 in -0.5f64..1.5,
        z2 in -0.5f64..1.5,
    ) {
        let p = Partition::geometric((0.0, 1.0, 0.0, 1.0), 0.5, 0.5, 12, 12).unwrap();
        let sys = CifsSystem::build(
            p,
            ScaleKind::Constant(alpha),
            Germ::sin_pi_product(),
            ParameterMap::CornerBilinear,
            32,
        )
        .unwrap();
        let d = (sys.f_map_unchecked(i, j, x, y, z1) - sys.f_map_unchecked(i, j, x, y, z2)).abs();
        prop_assert!(d <= sys.sup_alpha() * (z1 - z2).abs() + 1e-12);
    }

    /// Certified systems contract the weighted metric at the certified ratio.
    #[test]
    fn weighted_metric_contraction(
        ratio_r in 0.55f64..0.9,
        alpha in 0.0f64..0.9,
        i in 1u32..8,
        j in 1u32..8,
        p1 in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
        p2 in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
    ) {
        let part = Partition::geometric((0.0, 1.0, 0.0, 1.0), ratio_r, ratio_r, 8, 8).unwrap();
        let sys = CifsSystem::build(
            part,
            ScaleKind::Constant(alpha),
            Germ::sin_pi_product(),
            ParameterMap::CornerBilinear,
            32,
        )
        .unwrap();
        let cert = sys.hyperbolicity_certificate().unwrap();
        let span = sys.k_hi() - sys.k_lo();
        let a = [p1.0, p1.1, sys.k_lo() + span * p1.2];
        let b = [p2.0, p2.1, sys.k_lo() + span * p2.2];
        let before = fracsurf_core::cifs::d_delta(a, b, cert.delta_metric);
        prop_assume!(before > 0.0);
        let after = fracsurf_core::cifs::d_delta(
            sys.w_map_unchecked(i, j, a),
            sys.w_map_unchecked(i, j, b),
            cert.delta_metric,
        );
        prop_assert!(after <= (cert.contraction_ratio + 1e-9) * before);
    }
}
