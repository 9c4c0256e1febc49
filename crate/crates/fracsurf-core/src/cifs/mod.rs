//! Assembly of the countable iterated function system on `X = I x J x K`,
//! its hyperbolicity certificate in the weighted metric, and the matching
//! conditions that make the fixed-point operator well defined.

use alloc::vec::Vec;

use crate::error::Error;
use crate::partition::{Axis, Partition};
use crate::{math, Result};

mod germ;
mod scale;

pub use germ::{BilinearPatch, Germ, GermAndMap, ParameterMap};
pub use scale::{ScaleField, ScaleKind};

/// Default per-axis density of the range-estimation grid used to size `K`
/// and measure the construction norms.
pub const DEFAULT_K_LATTICE: u32 = 512;

/// Norms and ranges measured on the construction audit grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemNorms {
    pub f_min: f64,
    pub f_max: f64,
    pub lf_min: f64,
    pub lf_max: f64,
    pub sup_f: f64,
    pub sup_lf: f64,
    pub sup_f_minus_lf: f64,
}

/// The assembled system: partition, scale field, germ and parameter map,
/// the vertical interval `K`, and the derived contraction constants.
#[derive(Debug, Clone)]
pub struct CifsSystem {
    partition: Partition,
    scale: ScaleField,
    germ_map: GermAndMap,
    k_lo: f64,
    k_hi: f64,
    theta: f64,
    delta_sup: f64,
    norms: SystemNorms,
    k_lattice: u32,
}

impl CifsSystem {
    /// Builds the system and certifies the construction invariants.
    ///
    /// `K` is auto-sized: ranges of the germ and of `L(f)` are measured on a
    /// `k_lattice x k_lattice` grid and padded by
    /// `1.1 * ||f - L(f)||_inf / (1 - sup alpha)`, the margin that keeps every
    /// iterate of the fixed-point operator inside `K`.
    pub fn build(
        partition: Partition,
        scale_kind: ScaleKind,
        germ: Germ,
        map: ParameterMap,
        k_lattice: u32,
    ) -> Result<Self> {
        if k_lattice < 2 {
            return Err(Error::BadParameter("k_lattice must be at least 2".into()));
        }
        let scale = ScaleField::new(scale_kind, &partition)?;
        let rect = (partition.a(), partition.b(), partition.c(), partition.d());
        let germ_map = GermAndMap::new(germ, map, rect)?;

        let mut norms = SystemNorms {
            f_min: f64::INFINITY,
            f_max: f64::NEG_INFINITY,
            lf_min: f64::INFINITY,
            lf_max: f64::NEG_INFINITY,
            sup_f: 0.0,
            sup_lf: 0.0,
            sup_f_minus_lf: 0.0,
        };
        let n = k_lattice as usize;
        for jy in 0..n {
            let ty = jy as f64 / (n - 1) as f64;
            let y = partition.c() * (1.0 - ty) + partition.d() * ty;
            for ix in 0..n {
                let tx = ix as f64 / (n - 1) as f64;
                let x = partition.a() * (1.0 - tx) + partition.b() * tx;
                let fv = germ_map.eval_f(x, y);
                let lv = germ_map.eval_lf(x, y);
                if !fv.is_finite() || !lv.is_finite() {
                    return Err(Error::InvalidDescriptor("germ or parameter map not finite on domain".into()));
                }
                norms.f_min = norms.f_min.min(fv);
                norms.f_max = norms.f_max.max(fv);
                norms.lf_min = norms.lf_min.min(lv);
                norms.lf_max = norms.lf_max.max(lv);
                norms.sup_f = norms.sup_f.max(math::abs(fv));
                norms.sup_lf = norms.sup_lf.max(math::abs(lv));
                norms.sup_f_minus_lf = norms.sup_f_minus_lf.max(math::abs(fv - lv));
            }
        }

        let sup_alpha = scale.sup_bound();
        let margin = if norms.sup_f_minus_lf > 0.0 {
            1.1 * norms.sup_f_minus_lf / (1.0 - sup_alpha)
        } else {
            0.0
        };
        let k_lo = norms.f_min.min(norms.lf_min) - margin;
        let k_hi = norms.f_max.max(norms.lf_max) + margin;

        let delta_sup = partition.delta_sup();
        debug_assert!(delta_sup < 1.0);
        let k_abs = math::abs(k_lo).max(math::abs(k_hi));
        // Triangle-inequality Lipschitz constant of every F_ij in (x, y):
        // the scale and germ factors are evaluated at the image point (which
        // contracts plane distances by delta_ij) while L(f) is read at the
        // source point.
        let theta = scale.lip_bound() * delta_sup * (k_abs + norms.sup_lf)
            + germ_map.germ_lipschitz() * delta_sup
            + sup_alpha * germ_map.lf_lipschitz();

        Ok(Self { partition, scale, germ_map, k_lo, k_hi, theta, delta_sup, norms, k_lattice })
    }

    /// Rebuilds the system for a different germ, keeping partition, scale
    /// field and parameter-map kind fixed (`K` and the norms are recomputed).
    pub fn with_germ(&self, germ: Germ) -> Result<Self> {
        Self::build(
            self.partition.clone(),
            self.scale.kind().clone(),
            germ,
            self.germ_map.map(),
            self.k_lattice,
        )
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }
    pub fn scale(&self) -> &ScaleField {
        &self.scale
    }
    pub fn germ_map(&self) -> &GermAndMap {
        &self.germ_map
    }
    pub fn norms(&self) -> &SystemNorms {
        &self.norms
    }
    pub fn k_lo(&self) -> f64 {
        self.k_lo
    }
    pub fn k_hi(&self) -> f64 {
        self.k_hi
    }
    pub fn k_diam(&self) -> f64 {
        self.k_hi - self.k_lo
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn delta_sup(&self) -> f64 {
        self.delta_sup
    }
    pub fn sup_alpha(&self) -> f64 {
        self.scale.sup_bound()
    }
    pub fn k_lattice(&self) -> u32 {
        self.k_lattice
    }

    #[inline]
    pub fn germ_value(&self, x: f64, y: f64) -> f64 {
        self.germ_map.eval_f(x, y)
    }

    #[inline]
    pub fn lf_value(&self, x: f64, y: f64) -> f64 {
        self.germ_map.eval_lf(x, y)
    }

    fn z_tol(&self) -> f64 {
        1e-9 * math::abs(self.k_lo).max(math::abs(self.k_hi)).max(1.0)
    }

    fn check_realized(&self, i: u32, j: u32) -> Result<()> {
        if i == 0 || i > self.partition.m_trunc() {
            return Err(Error::IndexOutOfRange {
                axis: Axis::X,
                index: i,
                realized: self.partition.m_trunc(),
            });
        }
        if j == 0 || j > self.partition.n_trunc() {
            return Err(Error::IndexOutOfRange {
                axis: Axis::Y,
                index: j,
                realized: self.partition.n_trunc(),
            });
        }
        Ok(())
    }

    /// `F_ij(x, y, z)` with realized-range, domain and `z in K` checks.
    pub fn f_map(&self, i: u32, j: u32, x: f64, y: f64, z: f64) -> Result<f64> {
        self.check_realized(i, j)?;
        if !self.partition.contains(x, y) {
            return Err(Error::OutsideDomain { x, y });
        }
        let tol = self.z_tol();
        if z < self.k_lo - tol || z > self.k_hi + tol {
            return Err(Error::OutsideVerticalRange { z, lo: self.k_lo, hi: self.k_hi });
        }
        Ok(self.f_map_unchecked(i, j, x, y, z))
    }

    /// `F_ij` for analytic cell indices of any depth, no validation.
    #[inline]
    pub fn f_map_unchecked(&self, i: u32, j: u32, x: f64, y: f64, z: f64) -> f64 {
        let xi = self.partition.x().map(i).apply(x);
        let yj = self.partition.y().map(j).apply(y);
        let al = self.scale.eval(i, j, xi, yj);
        al * z + self.germ_map.eval_f(xi, yj) - al * self.germ_map.eval_lf(x, y)
    }

    /// `W_ij(x, y, z) = (u_i(x), v_j(y), F_ij(x, y, z))`, checked.
    pub fn w_map(&self, i: u32, j: u32, p: [f64; 3]) -> Result<[f64; 3]> {
        self.check_realized(i, j)?;
        if !self.partition.contains(p[0], p[1]) {
            return Err(Error::OutsideDomain { x: p[0], y: p[1] });
        }
        let tol = self.z_tol();
        if p[2] < self.k_lo - tol || p[2] > self.k_hi + tol {
            return Err(Error::OutsideVerticalRange { z: p[2], lo: self.k_lo, hi: self.k_hi });
        }
        Ok(self.w_map_unchecked(i, j, p))
    }

    #[inline]
    pub fn w_map_unchecked(&self, i: u32, j: u32, p: [f64; 3]) -> [f64; 3] {
        let xi = self.partition.x().map(i).apply(p[0]);
        let yj = self.partition.y().map(j).apply(p[1]);
        let al = self.scale.eval(i, j, xi, yj);
        let z = al * p[2] + self.germ_map.eval_f(xi, yj) - al * self.germ_map.eval_lf(p[0], p[1]);
        [xi, yj, z]
    }

    /// Sweeps every realized interior edge and reports the worst discrepancy
    /// between the two competing map values on the shared edge.
    ///
    /// The asserted pair is `F_ij = F_{i+1,j}` on vertical edges and
    /// `F_ij = F_{i,j+1}` on horizontal edges. The cross-index variant
    /// `F_ij(x, y*, z) = F_{i+1,j}(x, y*, z)` is measured as well and only
    /// reported, never asserted.
    pub fn verify_matching(&self, samples_per_edge: u32, tol: f64) -> Result<MatchingReport> {
        if samples_per_edge < 2 {
            return Err(Error::BadParameter("samples_per_edge must be at least 2".into()));
        }
        let sy = {
            let mut s = 1u32;
            while s * s < samples_per_edge {
                s += 1;
            }
            s
        };
        let sz = samples_per_edge.div_ceil(sy);
        let p = &self.partition;
        let m = p.m_trunc();
        let n = p.n_trunc();

        let mut x_edges = Vec::new();
        let mut max_disc: f64 = 0.0;
        for i in 1..m {
            let x_star = p.x().map(i).invert(p.x_knot(i));
            let mut worst: f64 = 0.0;
            for j in 1..=n {
                for ky in 0..sy {
                    let ty = ky as f64 / (sy - 1).max(1) as f64;
                    let y = p.c() * (1.0 - ty) + p.d() * ty;
                    for kz in 0..sz {
                        let tz = if sz > 1 { kz as f64 / (sz - 1) as f64 } else { 0.5 };
                        let z = self.k_lo * (1.0 - tz) + self.k_hi * tz;
                        let lhs = self.f_map_unchecked(i, j, x_star, y, z);
                        let rhs = self.f_map_unchecked(i + 1, j, x_star, y, z);
                        worst = worst.max(math::abs(lhs - rhs));
                    }
                }
            }
            max_disc = max_disc.max(worst);
            x_edges.push(EdgeCheck { axis: Axis::X, knot: i, max_discrepancy: worst });
        }

        let mut y_edges = Vec::new();
        let mut literal_f2: f64 = 0.0;
        for j in 1..n {
            let y_star = p.y().map(j).invert(p.y_knot(j));
            let mut worst: f64 = 0.0;
            for i in 1..=m {
                for kx in 0..sy {
                    let tx = kx as f64 / (sy - 1).max(1) as f64;
                    let x = p.a() * (1.0 - tx) + p.b() * tx;
                    for kz in 0..sz {
                        let tz = if sz > 1 { kz as f64 / (sz - 1) as f64 } else { 0.5 };
                        let z = self.k_lo * (1.0 - tz) + self.k_hi * tz;
                        let lhs = self.f_map_unchecked(i, j, x, y_star, z);
                        let rhs = self.f_map_unchecked(i, j + 1, x, y_star, z);
                        worst = worst.max(math::abs(lhs - rhs));
                        if i < m {
                            let cross = self.f_map_unchecked(i + 1, j, x, y_star, z);
                            literal_f2 = literal_f2.max(math::abs(lhs - cross));
                        }
                    }
                }
            }
            max_disc = max_disc.max(worst);
            y_edges.push(EdgeCheck { axis: Axis::Y, knot: j, max_discrepancy: worst });
        }

        Ok(MatchingReport {
            x_edges,
            y_edges,
            max_discrepancy: max_disc,
            literal_cross_discrepancy: literal_f2,
            samples_per_edge,
            tol,
            pass: max_disc <= tol,
        })
    }

    /// Certifies hyperbolicity of the system in the weighted metric.
    ///
    /// The metric weight is `inf_{i,j} (1 - 2 delta_ij) / (2 theta)`, which is
    /// positive only when `sup delta_ij < 1/2`; otherwise the certificate is
    /// refused. When `theta == 0` (constant maps in the plane variables) any
    /// weight works and `1` is used.
    pub fn hyperbolicity_certificate(&self) -> Result<Certificate> {
        if self.delta_sup >= 0.5 {
            return Err(Error::CertificateRefused { delta_sup: self.delta_sup });
        }
        let delta_metric = if self.theta > 0.0 {
            (1.0 - 2.0 * self.delta_sup) / (2.0 * self.theta)
        } else {
            1.0
        };
        let ratio = (self.delta_sup + delta_metric * self.theta).max(self.scale.sup_bound());
        Certificate::validate_ratio(ratio)?;
        Ok(Certificate {
            delta_metric,
            contraction_ratio: ratio,
            theta: self.theta,
            delta_sup: self.delta_sup,
            sup_alpha: self.scale.sup_bound(),
        })
    }
}

/// Worst discrepancy seen on one interior edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCheck {
    pub axis: Axis,
    pub knot: u32,
    pub max_discrepancy: f64,
}

/// Outcome of the matching sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingReport {
    pub x_edges: Vec<EdgeCheck>,
    pub y_edges: Vec<EdgeCheck>,
    pub max_discrepancy: f64,
    /// Diagnostic only: the cross-index variant on horizontal edges.
    pub literal_cross_discrepancy: f64,
    pub samples_per_edge: u32,
    pub tol: f64,
    pub pass: bool,
}

/// Contraction certificate for the weighted metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Weight of the vertical coordinate in the metric.
    pub delta_metric: f64,
    /// Every map contracts the weighted metric by at most this factor.
    pub contraction_ratio: f64,
    /// Plane-variable Lipschitz constant used in the weight.
    pub theta: f64,
    /// `sup_{i,j} max(a_i, b_j)`.
    pub delta_sup: f64,
    /// `sup_{i,j} ||alpha_ij||_inf`.
    pub sup_alpha: f64,
}

impl Certificate {
    fn validate_ratio(ratio: f64) -> Result<()> {
        if !(ratio < 1.0) {
            return Err(Error::BadParameter("certified contraction ratio not below one".into()));
        }
        Ok(())
    }
}

/// Weighted metric: Euclidean distance in the plane plus `delta` times the
/// vertical distance.
#[inline]
pub fn d_delta(p: [f64; 3], q: [f64; 3], delta: f64) -> f64 {
    math::hypot(p[0] - q[0], p[1] - q[1]) + delta * math::abs(p[2] - q[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{tau, Endpoint};
    use alloc::vec;
    use rand_core::{RngCore, SeedableRng};

    const RECT_LATTICE: u32 = 128;

    fn demo_system(alpha: f64) -> CifsSystem {
        let p = Partition::geometric((0.0, 1.0, 0.0, 1.0), 0.5, 0.5, 12, 12).unwrap();
        CifsSystem::build(
            p,
            ScaleKind::Constant(alpha),
            Germ::sin_pi_product(),
            ParameterMap::CornerBilinear,
            RECT_LATTICE,
        )
        .unwrap()
    }

    fn certified_system(alpha: f64) -> CifsSystem {
        let p = Partition::geometric((0.0, 1.0, 0.0, 1.0), 0.55, 0.55, 12, 12).unwrap();
        CifsSystem::build(
            p,
            ScaleKind::Constant(alpha),
            Germ::sin_pi_product(),
            ParameterMap::CornerBilinear,
            RECT_LATTICE,
        )
        .unwrap()
    }

    fn rand_unit(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[test]
    fn corner_condition_holds_on_realized_cells() {
        let sys = demo_system(0.3);
        let p = sys.partition();
        for i in 1..=p.m_trunc() {
            for j in 1..=p.n_trunc() {
                for (k, xk) in [(Endpoint::Lower, p.a()), (Endpoint::Upper, p.b())] {
                    for (l, yl) in [(Endpoint::Lower, p.c()), (Endpoint::Upper, p.d())] {
                        let zkl = sys.germ_value(xk, yl);
                        let got = sys.f_map(i, j, xk, yl, zkl).unwrap();
                        let want = sys.germ_value(p.x_knot(tau(i, k)), p.y_knot(tau(j, l)));
                        assert!(
                            (got - want).abs() <= 1e-12,
                            "corner mismatch at cell ({i},{j}): {got} vs {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn zero_scale_degenerates_to_germ_composition() {
        let sys = demo_system(0.0);
        let p = sys.partition();
        for &(x, y) in &[(0.2, 0.7), (0.9, 0.1)] {
            let base = sys.f_map(2, 3, x, y, 0.1).unwrap();
            for z in [-0.3, 0.0, 0.8] {
                let v = sys.f_map(2, 3, x, y, z).unwrap();
                assert_eq!(v, base);
            }
            let xi = p.x().map(2).apply(x);
            let yj = p.y().map(3).apply(y);
            assert!((base - sys.germ_value(xi, yj)).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_map_on_graph_points() {
        let p = Partition::geometric((0.0, 1.0, 0.0, 1.0), 0.5, 0.5, 12, 12).unwrap();
        let sys = CifsSystem::build(
            p,
            ScaleKind::Constant(0.4),
            Germ::sin_pi_product(),
            ParameterMap::Identity,
            RECT_LATTICE,
        )
        .unwrap();
        for &(x, y) in &[(0.31, 0.62), (0.05, 0.95)] {
            let z = sys.germ_value(x, y);
            let xi = sys.partition().x().map(3).apply(x);
            let yj = sys.partition().y().map(1).apply(y);
            let v = sys.f_map(3, 1, x, y, z).unwrap();
            assert!((v - sys.germ_value(xi, yj)).abs() < 1e-14);
        }
    }

    #[test]
    fn w_sends_domain_corners_to_knot_samples() {
        let sys = demo_system(0.3);
        let p = sys.partition();
        for i in [1u32, 2, 5] {
            for j in [1u32, 4] {
                for (k, xk) in [(Endpoint::Lower, p.a()), (Endpoint::Upper, p.b())] {
                    for (l, yl) in [(Endpoint::Lower, p.c()), (Endpoint::Upper, p.d())] {
                        let zkl = sys.germ_value(xk, yl);
                        let img = sys.w_map(i, j, [xk, yl, zkl]).unwrap();
                        let ti = tau(i, k);
                        let tj = tau(j, l);
                        assert!((img[0] - p.x_knot(ti)).abs() < 1e-15);
                        assert!((img[1] - p.y_knot(tj)).abs() < 1e-15);
                        assert!((img[2] - sys.germ_value(p.x_knot(ti), p.y_knot(tj))).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn w11_fixed_point_two_routes_agree() {
        let sys = demo_system(0.3);
        // Closed form: x* and y* are the fixed points of the axis maps, and
        // the z-component solves a scalar affine equation there.
        let u = sys.partition().x().map(1);
        let v = sys.partition().y().map(1);
        let xs = {
            // u(x) = x  =>  x = img_lo + scale*(x - lo)
            let s = u.scale();
            (u.apply(0.0) - s * 0.0) / (1.0 - s)
        };
        let ys = {
            let s = v.scale();
            (v.apply(0.0) - s * 0.0) / (1.0 - s)
        };
        let al = sys.scale().eval(1, 1, xs, ys);
        let zs = (sys.germ_value(xs, ys) - al * sys.lf_value(xs, ys)) / (1.0 - al);

        let mut p = [0.5, 0.5, sys.germ_value(0.5, 0.5)];
        for _ in 0..60 {
            p = sys.w_map(1, 1, p).unwrap();
        }
        assert!((p[0] - xs).abs() <= 1e-10);
        assert!((p[1] - ys).abs() <= 1e-10);
        assert!((p[2] - zs).abs() <= 1e-10, "{} vs {}", p[2], zs);
    }

    #[test]
    fn matching_exact_for_global_scale_fields() {
        for kind in [
            ScaleKind::Constant(0.3),
            ScaleKind::Affine { c0: 0.2, cx: 0.1, cy: -0.15 },
        ] {
            let p = Partition::geometric((0.0, 1.0, 0.0, 1.0), 0.5, 0.5, 8, 8).unwrap();
            let sys = CifsSystem::build(
                p,
                kind,
                Germ::sin_pi_product(),
                ParameterMap::CornerBilinear,
                RECT_LATTICE,
            )
            .unwrap();
            let rep = sys.verify_matching(16, 1e-12).unwrap();
            assert!(rep.pass, "max discrepancy {}", rep.max_discrepancy);
        }
    }

    #[test]
    fn matching_flags_mismatched_cell_constants() {
        let p = Partition::geometric((0.0, 1.0, 0.0, 1.0), 0.5, 0.5, 4, 4).unwrap();
        let mut values = vec![0.3; 16];
        values[0] = 0.1; // cell (1,1) disagrees with cell (2,1) across x_1
        let sys = CifsSystem::build(
            p,
            ScaleKind::CellTable { rows: 4, cols: 4, values },
            Germ::sin_pi_product(),
            ParameterMap::CornerBilinear,
            RECT_LATTICE,
        )
        .unwrap();
        let rep = sys.verify_matching(16, 1e-12).unwrap();
        assert!(!rep.pass);
        assert!(rep.max_discrepancy > 1e-3);
        assert!(rep.x_edges[0].max_discrepancy > 1e-3);
    }

    #[test]
    fn certificate_refused_at_half() {
        // Geometric ratio 1/2 gives a_1 = 1/2, so sup delta_ij = 1/2.
        let sys = demo_system(0.3);
        assert_eq!(
            sys.hyperbolicity_certificate().unwrap_err(),
            Error::CertificateRefused { delta_sup: 0.5 }
        );
    }

    #[test]
    fn certificate_accepts_and_bounds_empirical_contraction() {
        let sys = certified_system(0.3);
        let cert = sys.hyperbolicity_certificate().unwrap();
        assert!(cert.delta_metric > 0.0);
        assert!(cert.contraction_ratio < 1.0);
        // ratio = max(1/2, sup alpha) by the choice of the weight.
        assert!((cert.contraction_ratio - 0.5).abs() < 1e-12);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let (klo, khi) = (sys.k_lo(), sys.k_hi());
        for _ in 0..1000 {
            let i = (rng.next_u64() % 12 + 1) as u32;
            let j = (rng.next_u64() % 12 + 1) as u32;
            let p = [rand_unit(&mut rng), rand_unit(&mut rng), klo + (khi - klo) * rand_unit(&mut rng)];
            let q = [rand_unit(&mut rng), rand_unit(&mut rng), klo + (khi - klo) * rand_unit(&mut rng)];
            let dp = d_delta(p, q, cert.delta_metric);
            if dp == 0.0 {
                continue;
            }
            let di = d_delta(
                sys.w_map_unchecked(i, j, p),
                sys.w_map_unchecked(i, j, q),
                cert.delta_metric,
            );
            assert!(
                di <= (cert.contraction_ratio + 1e-9) * dp,
                "cell ({i},{j}): {di} > ratio * {dp}"
            );
        }
    }

    #[test]
    fn vertical_contraction_bounded_by_sup_alpha() {
        let sys = demo_system(0.37);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let m = sys.norms().sup_f_minus_lf / (1.0 - sys.sup_alpha());
        for _ in 0..500 {
            let i = (rng.next_u64() % 12 + 1) as u32;
            let j = (rng.next_u64() % 12 + 1) as u32;
            let x = rand_unit(&mut rng);
            let y = rand_unit(&mut rng);
            let base = sys.lf_value(x, y);
            let z1 = base + m * (2.0 * rand_unit(&mut rng) - 1.0);
            let z2 = base + m * (2.0 * rand_unit(&mut rng) - 1.0);
            let d = (sys.f_map_unchecked(i, j, x, y, z1) - sys.f_map_unchecked(i, j, x, y, z2)).abs();
            assert!(d <= sys.sup_alpha() * (z1 - z2).abs() + 1e-12);
        }
    }

    #[test]
    fn horizontal_difference_quotients_respect_theta() {
        let p = Partition::geometric((0.0, 1.0, 0.0, 1.0), 0.5, 0.5, 12, 12).unwrap();
        let sys = CifsSystem::build(
            p,
            ScaleKind::Affine { c0: 0.25, cx: 0.1, cy: 0.05 },
            Germ::sin_pi_product(),
            ParameterMap::CornerBilinear,
            RECT_LATTICE,
        )
        .unwrap();
        let theta = sys.theta();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let i = (rng.next_u64() % 12 + 1) as u32;
            let j = (rng.next_u64() % 12 + 1) as u32;
            let z = sys.lf_value(0.5, 0.5);
            let (x1, y1) = (rand_unit(&mut rng), rand_unit(&mut rng));
            let (x2, y2) = (rand_unit(&mut rng), rand_unit(&mut rng));
            let dist = math::hypot(x1 - x2, y1 - y2);
            if dist == 0.0 {
                continue;
            }
            let d = (sys.f_map_unchecked(i, j, x1, y1, z) - sys.f_map_unchecked(i, j, x2, y2, z)).abs();
            assert!(d <= theta * dist * (1.0 + 1e-9), "{} > {}", d / dist, theta);
        }
    }

    #[test]
    fn sampled_map_values_stay_in_k() {
        let sys = demo_system(0.45);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let m = sys.norms().sup_f_minus_lf / (1.0 - sys.sup_alpha());
        for _ in 0..500 {
            let i = (rng.next_u64() % 12 + 1) as u32;
            let j = (rng.next_u64() % 12 + 1) as u32;
            let x = rand_unit(&mut rng);
            let y = rand_unit(&mut rng);
            // z drawn from the iteration-reachable band around L(f).
            let z = sys.lf_value(x, y) + m * (2.0 * rand_unit(&mut rng) - 1.0);
            let v = sys.f_map_unchecked(i, j, x, y, z);
            assert!(v >= sys.k_lo() - 1e-12 && v <= sys.k_hi() + 1e-12);
        }
    }

    #[test]
    fn f_map_rejects_bad_inputs() {
        let sys = demo_system(0.3);
        assert!(matches!(
            sys.f_map(13, 1, 0.5, 0.5, 0.0),
            Err(Error::IndexOutOfRange { axis: Axis::X, .. })
        ));
        assert!(matches!(sys.f_map(1, 1, 1.5, 0.5, 0.0), Err(Error::OutsideDomain { .. })));
        let z_bad = sys.k_hi() + 1.0;
        assert!(matches!(
            sys.f_map(1, 1, 0.5, 0.5, z_bad),
            Err(Error::OutsideVerticalRange { .. })
        ));
    }
}
