//! Germ (seed) functions and the parameter map producing `L(f)`.

use alloc::vec::Vec;

use crate::error::Error;
use crate::partition::AxisPartition;
use crate::{math, Result};

/// Catalog of bivariate germ functions. Every variant evaluates anywhere on
/// its rectangle and carries a certified Lipschitz bound.
#[derive(Debug, Clone, PartialEq)]
pub enum Germ {
    Constant(f64),
    /// `amplitude * sin(fx*x + px) * sin(fy*y + py)`.
    SinProduct { amplitude: f64, fx: f64, fy: f64, px: f64, py: f64 },
    /// Sum of monomials `coeff * x^p * y^q`.
    Polynomial { terms: Vec<(u32, u32, f64)> },
    /// Samples on a uniform lattice over `rect`, completed bilinearly.
    Tabulated { rect: (f64, f64, f64, f64), nx: u32, ny: u32, values: Vec<f64> },
    /// `amplitude * dist(x, x-knots) * dist(y, y-knots)`: vanishes on every
    /// grid line of the countable partition and at the four corners.
    KnotVanishing { amplitude: f64, x_axis: AxisPartition, y_axis: AxisPartition },
    /// Linear combination of catalog germs.
    Combo { terms: Vec<(f64, Germ)> },
}

impl Germ {
    pub fn sin_pi_product() -> Self {
        Germ::SinProduct {
            amplitude: 1.0,
            fx: core::f64::consts::PI,
            fy: core::f64::consts::PI,
            px: 0.0,
            py: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Germ::Constant(v) => {
                if !v.is_finite() {
                    return Err(Error::InvalidDescriptor("non-finite constant germ".into()));
                }
            }
            Germ::SinProduct { amplitude, fx, fy, px, py } => {
                for v in [amplitude, fx, fy, px, py] {
                    if !v.is_finite() {
                        return Err(Error::InvalidDescriptor("non-finite sin-product parameter".into()));
                    }
                }
            }
            Germ::Polynomial { terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidDescriptor("polynomial germ needs at least one term".into()));
                }
                for (_, _, c) in terms {
                    if !c.is_finite() {
                        return Err(Error::InvalidDescriptor("non-finite polynomial coefficient".into()));
                    }
                }
            }
            Germ::Tabulated { rect, nx, ny, values } => {
                let (a, b, c, d) = *rect;
                if !(b > a && d > c) {
                    return Err(Error::InvalidDescriptor("tabulated germ rectangle degenerate".into()));
                }
                if *nx < 2 || *ny < 2 || values.len() != (*nx as usize) * (*ny as usize) {
                    return Err(Error::InvalidDescriptor(
                        "tabulated germ needs nx*ny values with nx, ny >= 2".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidDescriptor("non-finite tabulated germ value".into()));
                }
            }
            Germ::KnotVanishing { amplitude, .. } => {
                if !amplitude.is_finite() {
                    return Err(Error::InvalidDescriptor("non-finite knot-vanishing amplitude".into()));
                }
            }
            Germ::Combo { terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidDescriptor("empty germ combination".into()));
                }
                for (c, g) in terms {
                    if !c.is_finite() {
                        return Err(Error::InvalidDescriptor("non-finite combination weight".into()));
                    }
                    g.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Germ::Constant(v) => *v,
            Germ::SinProduct { amplitude, fx, fy, px, py } => {
                amplitude * math::sin(fx * x + px) * math::sin(fy * y + py)
            }
            Germ::Polynomial { terms } => {
                let mut acc = 0.0;
                for &(p, q, c) in terms {
                    acc += c * math::powi(x, p) * math::powi(y, q);
                }
                acc
            }
            Germ::Tabulated { rect, nx, ny, values } => {
                let (a, b, c, d) = *rect;
                bilinear_table(values, *nx, *ny, (x - a) / (b - a), (y - c) / (d - c))
            }
            Germ::KnotVanishing { amplitude, x_axis, y_axis } => {
                let xc = x.clamp(x_axis.lo(), x_axis.hi());
                let yc = y.clamp(y_axis.lo(), y_axis.hi());
                let dx = x_axis.knot_distance(xc).unwrap_or(0.0);
                let dy = y_axis.knot_distance(yc).unwrap_or(0.0);
                amplitude * dx * dy
            }
            Germ::Combo { terms } => terms.iter().map(|(c, g)| c * g.eval(x, y)).sum(),
        }
    }

    /// Lipschitz bound with respect to the Euclidean plane norm, valid on the
    /// given rectangle. Tabulated germs use their grid modulus.
    pub fn lipschitz(&self, rect: (f64, f64, f64, f64)) -> f64 {
        let (a, b, c, d) = rect;
        match self {
            Germ::Constant(_) => 0.0,
            Germ::SinProduct { amplitude, fx, fy, .. } => {
                math::abs(*amplitude) * math::hypot(*fx, *fy)
            }
            Germ::Polynomial { terms } => {
                let xm = math::abs(a).max(math::abs(b));
                let ym = math::abs(c).max(math::abs(d));
                let mut lx = 0.0;
                let mut ly = 0.0;
                for &(p, q, cf) in terms {
                    let cf = math::abs(cf);
                    if p > 0 {
                        lx += cf * p as f64 * math::powi(xm, p - 1) * math::powi(ym, q);
                    }
                    if q > 0 {
                        ly += cf * q as f64 * math::powi(xm, p) * math::powi(ym, q - 1);
                    }
                }
                math::hypot(lx, ly)
            }
            Germ::Tabulated { rect: (ta, tb, tc, td), nx, ny, values } => {
                let dx = (tb - ta) / (*nx as f64 - 1.0);
                let dy = (td - tc) / (*ny as f64 - 1.0);
                let mut qx: f64 = 0.0;
                let mut qy: f64 = 0.0;
                for j in 0..*ny as usize {
                    for i in 0..*nx as usize {
                        let v = values[j * *nx as usize + i];
                        if i + 1 < *nx as usize {
                            qx = qx.max(math::abs(values[j * *nx as usize + i + 1] - v) / dx);
                        }
                        if j + 1 < *ny as usize {
                            qy = qy.max(math::abs(values[(j + 1) * *nx as usize + i] - v) / dy);
                        }
                    }
                }
                math::hypot(qx, qy)
            }
            Germ::KnotVanishing { amplitude, x_axis, y_axis } => {
                // Distance factors are 1-Lipschitz and bounded by half the
                // largest gap, which is at most half the axis length.
                let wx = 0.5 * x_axis.len();
                let wy = 0.5 * y_axis.len();
                math::abs(*amplitude) * math::hypot(wy, wx)
            }
            Germ::Combo { terms } => {
                terms.iter().map(|(cf, g)| math::abs(*cf) * g.lipschitz(rect)).sum()
            }
        }
    }
}

#[inline]
fn bilinear_table(values: &[f64], nx: u32, ny: u32, tx: f64, ty: f64) -> f64 {
    let tx = tx.clamp(0.0, 1.0) * (nx as f64 - 1.0);
    let ty = ty.clamp(0.0, 1.0) * (ny as f64 - 1.0);
    let ix = (tx as usize).min(nx as usize - 2);
    let iy = (ty as usize).min(ny as usize - 2);
    let wx = tx - ix as f64;
    let wy = ty - iy as f64;
    let idx = |i: usize, j: usize| values[j * nx as usize + i];
    idx(ix, iy) * (1.0 - wx) * (1.0 - wy)
        + idx(ix + 1, iy) * wx * (1.0 - wy)
        + idx(ix, iy + 1) * (1.0 - wx) * wy
        + idx(ix + 1, iy + 1) * wx * wy
}

/// The unique bilinear function matching four corner values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearPatch {
    rect: (f64, f64, f64, f64),
    z00: f64,
    z10: f64,
    z01: f64,
    z11: f64,
}

impl BilinearPatch {
    pub fn from_corner_samples(rect: (f64, f64, f64, f64), f: &Germ) -> Self {
        let (a, b, c, d) = rect;
        Self {
            rect,
            z00: f.eval(a, c),
            z10: f.eval(b, c),
            z01: f.eval(a, d),
            z11: f.eval(b, d),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (a, b, c, d) = self.rect;
        let tx = (x - a) / (b - a);
        let ty = (y - c) / (d - c);
        self.z00 * (1.0 - tx) * (1.0 - ty)
            + self.z10 * tx * (1.0 - ty)
            + self.z01 * (1.0 - tx) * ty
            + self.z11 * tx * ty
    }

    pub fn lipschitz(&self) -> f64 {
        let (a, b, c, d) = self.rect;
        let lx = math::abs(self.z10 - self.z00).max(math::abs(self.z11 - self.z01)) / (b - a);
        let ly = math::abs(self.z01 - self.z00).max(math::abs(self.z11 - self.z10)) / (d - c);
        math::hypot(lx, ly)
    }
}

/// Parameter-map descriptor: how `L(f)` is derived from the germ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParameterMap {
    Identity,
    /// The corner-matching bilinear function.
    CornerBilinear,
    /// `lambda * f + (1 - lambda) * B`, `lambda` in `[0, 1]`.
    Blend { lambda: f64 },
}

/// Germ plus parameter map with certified Lipschitz estimates and verified
/// corner agreement `L(f)(corner) = f(corner)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GermAndMap {
    germ: Germ,
    map: ParameterMap,
    patch: BilinearPatch,
    rect: (f64, f64, f64, f64),
    germ_lip: f64,
    lf_lip: f64,
}

impl GermAndMap {
    pub fn new(germ: Germ, map: ParameterMap, rect: (f64, f64, f64, f64)) -> Result<Self> {
        germ.validate()?;
        if let ParameterMap::Blend { lambda } = map {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(Error::InvalidDescriptor("blend lambda outside [0, 1]".into()));
            }
        }
        let patch = BilinearPatch::from_corner_samples(rect, &germ);
        let germ_lip = germ.lipschitz(rect);
        let lf_lip = match map {
            ParameterMap::Identity => germ_lip,
            ParameterMap::CornerBilinear => patch.lipschitz(),
            ParameterMap::Blend { lambda } => lambda * germ_lip + (1.0 - lambda) * patch.lipschitz(),
        };
        let gm = Self { germ, map, patch, rect, germ_lip, lf_lip };
        let (a, b, c, d) = rect;
        for x in [a, b] {
            for y in [c, d] {
                let fv = gm.eval_f(x, y);
                let defect = math::abs(gm.eval_lf(x, y) - fv);
                if defect > 1e-12 * math::abs(fv).max(1.0) {
                    return Err(Error::CornerMismatch { x, y, defect });
                }
            }
        }
        Ok(gm)
    }

    #[inline]
    pub fn eval_f(&self, x: f64, y: f64) -> f64 {
        self.germ.eval(x, y)
    }

    #[inline]
    pub fn eval_lf(&self, x: f64, y: f64) -> f64 {
        match self.map {
            ParameterMap::Identity => self.germ.eval(x, y),
            ParameterMap::CornerBilinear => self.patch.eval(x, y),
            ParameterMap::Blend { lambda } => {
                lambda * self.germ.eval(x, y) + (1.0 - lambda) * self.patch.eval(x, y)
            }
        }
    }

    pub fn germ(&self) -> &Germ {
        &self.germ
    }
    pub fn map(&self) -> ParameterMap {
        self.map
    }
    pub fn germ_lipschitz(&self) -> f64 {
        self.germ_lip
    }
    pub fn lf_lipschitz(&self) -> f64 {
        self.lf_lip
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const RECT: (f64, f64, f64, f64) = (0.0, 1.0, 0.0, 1.0);

    #[test]
    fn corner_bilinear_of_plane_reproduces_it() {
        let plane = Germ::Polynomial { terms: vec![(1, 0, 1.0), (0, 1, 1.0)] };
        let gm = GermAndMap::new(plane, ParameterMap::CornerBilinear, RECT).unwrap();
        for &(x, y) in &[(0.25, 0.5), (0.7, 0.1), (1.0, 1.0), (0.0, 0.9)] {
            assert!((gm.eval_lf(x, y) - (x + y)).abs() < 1e-14);
        }
    }

    #[test]
    fn corner_agreement_holds_for_all_map_kinds() {
        for map in [ParameterMap::Identity, ParameterMap::CornerBilinear, ParameterMap::Blend { lambda: 0.4 }] {
            let gm = GermAndMap::new(Germ::sin_pi_product(), map, RECT).unwrap();
            for x in [0.0, 1.0] {
                for y in [0.0, 1.0] {
                    assert!((gm.eval_lf(x, y) - gm.eval_f(x, y)).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn sin_product_bilinear_patch_is_zero() {
        let gm = GermAndMap::new(Germ::sin_pi_product(), ParameterMap::CornerBilinear, RECT).unwrap();
        // sin(pi x) sin(pi y) vanishes at all four corners of the unit square.
        for &(x, y) in &[(0.3, 0.6), (0.5, 0.5)] {
            assert!(gm.eval_lf(x, y).abs() <= 1e-15);
        }
    }

    #[test]
    fn tabulated_round_trips_lattice_values() {
        let vals = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let g = Germ::Tabulated { rect: RECT, nx: 3, ny: 2, values: vals.clone() };
        g.validate().unwrap();
        assert_eq!(g.eval(0.0, 0.0), 0.0);
        assert_eq!(g.eval(0.5, 0.0), 1.0);
        assert_eq!(g.eval(1.0, 1.0), 5.0);
        // Midpoint of the right cell, both rows blended.
        assert!((g.eval(0.75, 0.5) - (1.0 + 2.0 + 4.0 + 5.0) / 4.0).abs() < 1e-14);
    }

    #[test]
    fn combo_is_pointwise_linear() {
        let f = Germ::sin_pi_product();
        let g = Germ::Polynomial { terms: vec![(1, 1, 2.0)] };
        let combo = Germ::Combo { terms: vec![(0.5, f.clone()), (-2.0, g.clone())] };
        let (x, y) = (0.37, 0.81);
        assert!((combo.eval(x, y) - (0.5 * f.eval(x, y) - 2.0 * g.eval(x, y))).abs() < 1e-15);
    }
}
