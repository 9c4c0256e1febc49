//! Fixed-point solution of the self-referential surface equation and the
//! fractal operator sending a germ to its interpolating surface.
//!
//! Two independent evaluation paths are provided. [`solve_fif`] iterates the
//! contraction on a rectangular lattice, reading both the iterate and the
//! sampled parameter-map surface through the same bilinear stencils (so the
//! identity parameter map reproduces the germ samples exactly). The
//! [`PointEvaluator`] instead unrolls the self-referential equation at a
//! single point to a chosen depth, with a certified error bound; the two
//! paths cross-check each other.

use alloc::vec;
use alloc::vec::Vec;

use crate::cifs::CifsSystem;
use crate::error::Error;
use crate::math;
use crate::partition::CellIndex;
use crate::Result;

/// Solver parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    /// Lattice points per axis (endpoints included).
    pub lattice: u32,
    /// Sup-norm residual target.
    pub tol: f64,
    /// Hard iteration cap.
    pub max_iter: u32,
    /// Cell indices realizing the limit rows `x = b` and `y = d`;
    /// defaults to the truncation levels.
    pub boundary_limit_index: Option<(u32, u32)>,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self { lattice: 257, tol: 1e-10, max_iter: 200, boundary_limit_index: None }
    }
}

/// How the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    /// Successive-iterate residual dropped below `tol`.
    Residual,
    /// The a-priori contraction bound certifies the error is below `tol`.
    AprioriBound,
}

/// Solve diagnostics attached to a solved grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveMeta {
    pub iterations: u32,
    pub final_residual: f64,
    /// Geometric mean of successive residual ratios.
    pub observed_ratio: f64,
    pub residuals: Vec<f64>,
    /// Iteration count certified sufficient by the Banach estimate.
    pub apriori_bound: u32,
    pub converged_by: Convergence,
}

/// A surface sampled on a uniform rectangular lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct FifGrid {
    nx: u32,
    ny: u32,
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Row-major by y: `values[jy * nx + ix]`.
    values: Vec<f64>,
    meta: Option<SolveMeta>,
}

impl FifGrid {
    /// Samples an arbitrary function on the lattice of the given size.
    pub fn sample(
        rect: (f64, f64, f64, f64),
        nx: u32,
        ny: u32,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::BadParameter("lattice needs at least 2 points per axis".into()));
        }
        let (a, b, c, d) = rect;
        let xs: Vec<f64> = (0..nx).map(|k| lerp(a, b, k as f64 / (nx - 1) as f64)).collect();
        let ys: Vec<f64> = (0..ny).map(|k| lerp(c, d, k as f64 / (ny - 1) as f64)).collect();
        let mut values = Vec::with_capacity(nx as usize * ny as usize);
        for &y in &ys {
            for &x in &xs {
                values.push(f(x, y));
            }
        }
        Ok(Self { nx, ny, xs, ys, values, meta: None })
    }

    pub fn nx(&self) -> u32 {
        self.nx
    }
    pub fn ny(&self) -> u32 {
        self.ny
    }
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }
    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn meta(&self) -> Option<&SolveMeta> {
        self.meta.as_ref()
    }

    #[inline]
    pub fn value(&self, ix: u32, jy: u32) -> f64 {
        self.values[(jy * self.nx + ix) as usize]
    }

    /// Bilinear read at an arbitrary point of the lattice rectangle.
    pub fn read(&self, x: f64, y: f64) -> f64 {
        let (a, b) = (self.xs[0], self.xs[self.nx as usize - 1]);
        let (c, d) = (self.ys[0], self.ys[self.ny as usize - 1]);
        let tx = ((x - a) / (b - a)).clamp(0.0, 1.0) * (self.nx - 1) as f64;
        let ty = ((y - c) / (d - c)).clamp(0.0, 1.0) * (self.ny - 1) as f64;
        let ix = (tx as usize).min(self.nx as usize - 2);
        let iy = (ty as usize).min(self.ny as usize - 2);
        let wx = tx - ix as f64;
        let wy = ty - iy as f64;
        let n = self.nx as usize;
        let v = &self.values;
        v[iy * n + ix] * (1.0 - wx) * (1.0 - wy)
            + v[iy * n + ix + 1] * wx * (1.0 - wy)
            + v[(iy + 1) * n + ix] * (1.0 - wx) * wy
            + v[(iy + 1) * n + ix + 1] * wx * wy
    }

    /// Lattice index whose x-coordinate coincides with `x` up to snapping
    /// tolerance, if any.
    pub fn x_index_at(&self, x: f64) -> Option<u32> {
        index_at(&self.xs, x)
    }
    pub fn y_index_at(&self, y: f64) -> Option<u32> {
        index_at(&self.ys, y)
    }

    pub fn max_abs_diff(&self, other: &FifGrid) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        let mut m: f64 = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            m = m.max(math::abs(a - b));
        }
        m
    }
}

fn index_at(coords: &[f64], v: f64) -> Option<u32> {
    let span = coords[coords.len() - 1] - coords[0];
    let snap = 1e-12 * span.max(1.0);
    let t = (v - coords[0]) / span * (coords.len() - 1) as f64;
    let k = math::round(t).max(0.0) as usize;
    if k < coords.len() && math::abs(coords[k] - v) <= snap {
        Some(k as u32)
    } else {
        None
    }
}

#[inline]
fn lerp(lo: f64, hi: f64, t: f64) -> f64 {
    lo * (1.0 - t) + hi * t
}

#[derive(Debug, Clone, Copy)]
struct Stencil {
    ix: u32,
    iy: u32,
    wx: f64,
    wy: f64,
}

/// The fixed-point operator discretized on a lattice.
///
/// Cell addressing, pullbacks, scale values and germ terms depend only on the
/// lattice geometry, so they are precomputed once; one application is then a
/// pure sweep. Interior points use their analytic cell (indices beyond the
/// truncation level are generated in closed form); the rows `x = b` and
/// `y = d` are realized by the limit-row branch at the configured deepest
/// cell, and `(b, d)` is pinned to the germ value there.
pub struct TOperator {
    nx: usize,
    ny: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    stencils: Vec<Stencil>,
    alphas: Vec<f64>,
    bases: Vec<f64>,
    lf_read: Vec<f64>,
    lf_lattice: Vec<f64>,
    corner_tol: f64,
    corner_values: [f64; 4],
}

impl TOperator {
    pub fn new(sys: &CifsSystem, settings: &SolveSettings) -> Result<Self> {
        if settings.lattice < 2 {
            return Err(Error::BadParameter("lattice needs at least 2 points per axis".into()));
        }
        if settings.max_iter == 0 {
            return Err(Error::BadParameter("max_iter must be at least 1".into()));
        }
        if !(settings.tol > 0.0) {
            return Err(Error::BadParameter("tol must be positive".into()));
        }
        let p = sys.partition();
        let (a, b, c, d) = (p.a(), p.b(), p.c(), p.d());
        let (ilim, jlim) = match settings.boundary_limit_index {
            Some((i, j)) => (i.clamp(1, p.m_trunc()), j.clamp(1, p.n_trunc())),
            None => (p.m_trunc(), p.n_trunc()),
        };
        let nx = settings.lattice as usize;
        let ny = settings.lattice as usize;
        let xs: Vec<f64> = (0..nx).map(|k| lerp(a, b, k as f64 / (nx - 1) as f64)).collect();
        let ys: Vec<f64> = (0..ny).map(|k| lerp(c, d, k as f64 / (ny - 1) as f64)).collect();

        let mut lf_lattice = Vec::with_capacity(nx * ny);
        for &y in &ys {
            for &x in &xs {
                lf_lattice.push(sys.lf_value(x, y));
            }
        }

        let guard_x = 1e-9 * (b - a);
        let guard_y = 1e-9 * (d - c);
        let mut stencils = Vec::with_capacity(nx * ny);
        let mut alphas = Vec::with_capacity(nx * ny);
        let mut bases = Vec::with_capacity(nx * ny);

        let interior = |cell: CellIndex| -> u32 {
            match cell {
                CellIndex::Interior(i) => i,
                CellIndex::Limit => unreachable!("limit handled by branch classification"),
            }
        };

        for &y in &ys {
            for &x in &xs {
                // Limit rows follow the self-referential equation: germ and
                // scale are evaluated at the boundary point itself (their
                // limits are computable), and only the bracketed limit is
                // realized through the deepest configured cell.
                let (alpha, base, px, py) = if x == b && y == d {
                    (0.0, sys.germ_value(b, d), a, c)
                } else if y == d {
                    let i = interior(p.x().locate(x)?);
                    let py = p.y().map(jlim).invert(p.y_knot(jlim));
                    let px = p.x().map(i).invert(x);
                    (sys.scale().eval(i, jlim, x, d), sys.germ_value(x, d), px, py)
                } else if x == b {
                    let j = interior(p.y().locate(y)?);
                    let px = p.x().map(ilim).invert(p.x_knot(ilim));
                    let py = p.y().map(j).invert(y);
                    (sys.scale().eval(ilim, j, b, y), sys.germ_value(b, y), px, py)
                } else {
                    let i = interior(p.x().locate(x)?);
                    let j = interior(p.y().locate(y)?);
                    let px = p.x().map(i).invert(x);
                    let py = p.y().map(j).invert(y);
                    (sys.scale().eval(i, j, x, y), sys.germ_value(x, y), px, py)
                };
                if px < a - guard_x || px > b + guard_x || py < c - guard_y || py > d + guard_y {
                    return Err(Error::PullbackInconsistency { x: px, y: py });
                }
                let px = px.clamp(a, b);
                let py = py.clamp(c, d);
                let tx = (px - a) / (b - a) * (nx - 1) as f64;
                let ty = (py - c) / (d - c) * (ny - 1) as f64;
                let ix = (tx as usize).min(nx - 2);
                let iy = (ty as usize).min(ny - 2);
                stencils.push(Stencil {
                    ix: ix as u32,
                    iy: iy as u32,
                    wx: tx - ix as f64,
                    wy: ty - iy as f64,
                });
                alphas.push(alpha);
                bases.push(base);
            }
        }

        let mut op = Self {
            nx,
            ny,
            xs,
            ys,
            stencils,
            alphas,
            bases,
            lf_read: Vec::new(),
            lf_lattice,
            corner_tol: 10.0 * settings.tol + 1e-12 * sys.k_diam().max(1.0),
            corner_values: [
                sys.germ_value(a, c),
                sys.germ_value(b, c),
                sys.germ_value(a, d),
                sys.germ_value(b, d),
            ],
        };
        op.lf_read =
            (0..op.stencils.len()).map(|k| op.bilerp(&op.lf_lattice, op.stencils[k])).collect();
        Ok(op)
    }

    #[inline]
    fn bilerp(&self, grid: &[f64], st: Stencil) -> f64 {
        let n = self.nx;
        let base = st.iy as usize * n + st.ix as usize;
        grid[base] * (1.0 - st.wx) * (1.0 - st.wy)
            + grid[base + 1] * st.wx * (1.0 - st.wy)
            + grid[base + n] * (1.0 - st.wx) * st.wy
            + grid[base + n + 1] * st.wx * st.wy
    }

    /// One application of the discretized operator.
    pub fn apply(&self, h: &[f64], out: &mut [f64]) {
        debug_assert_eq!(h.len(), self.nx * self.ny);
        debug_assert_eq!(out.len(), h.len());
        for k in 0..h.len() {
            out[k] =
                self.bases[k] + self.alphas[k] * (self.bilerp(h, self.stencils[k]) - self.lf_read[k]);
        }
    }

    /// Samples of `L(f)` on the operator lattice (the initial iterate).
    pub fn lf_lattice(&self) -> &[f64] {
        &self.lf_lattice
    }

    fn grid_from(&self, values: Vec<f64>, meta: Option<SolveMeta>) -> FifGrid {
        FifGrid {
            nx: self.nx as u32,
            ny: self.ny as u32,
            xs: self.xs.clone(),
            ys: self.ys.clone(),
            values,
            meta,
        }
    }

    fn check_corners(&self, h: &FifGrid) -> Result<()> {
        let n = self.nx;
        let corners = [
            h.values[0],
            h.values[n - 1],
            h.values[(self.ny - 1) * n],
            h.values[(self.ny - 1) * n + n - 1],
        ];
        for (got, want) in corners.iter().zip(&self.corner_values) {
            if math::abs(got - want) > self.corner_tol {
                return Err(Error::BadParameter(
                    "input grid violates the four-corner condition".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One application of the fixed-point operator to a sampled surface.
///
/// The input must satisfy the four-corner condition within solver tolerance.
pub fn apply_t(sys: &CifsSystem, h: &FifGrid, settings: &SolveSettings) -> Result<FifGrid> {
    if h.nx != h.ny {
        return Err(Error::BadParameter("operator lattice must be square".into()));
    }
    let mut s = *settings;
    s.lattice = h.nx;
    let op = TOperator::new(sys, &s)?;
    op.check_corners(h)?;
    let mut out = vec![0.0; h.values.len()];
    op.apply(&h.values, &mut out);
    Ok(op.grid_from(out, None))
}

/// Iteration count certified sufficient by the Banach a-priori estimate:
/// after `n` steps the true error is at most `r1 * s^n / (1 - s)`.
fn banach_bound(r1: f64, s: f64, tol: f64) -> u32 {
    if r1 <= tol || s <= 0.0 {
        return 1;
    }
    let raw = math::ln(tol * (1.0 - s) / r1) / math::ln(s);
    if !(raw > 1.0) {
        return 1;
    }
    if raw >= 1e7 {
        return u32::MAX;
    }
    math::ceil(raw) as u32
}

/// Solves the fixed-point equation on a lattice, starting from the sampled
/// parameter-map surface (which satisfies the corner condition by
/// construction).
///
/// Stops when the residual drops below `tol` or when the a-priori Banach
/// bound certifies the remaining error is below `tol`, whichever comes first.
pub fn solve_fif(sys: &CifsSystem, settings: &SolveSettings) -> Result<FifGrid> {
    let op = TOperator::new(sys, settings)?;
    let s = sys.sup_alpha();
    let mut h = op.lf_lattice.clone();
    let mut out = vec![0.0; h.len()];
    let mut residuals: Vec<f64> = Vec::new();
    let mut apriori = u32::MAX;
    let mut converged: Option<Convergence> = None;

    for n in 1..=settings.max_iter {
        op.apply(&h, &mut out);
        let mut r: f64 = 0.0;
        for (prev, next) in h.iter().zip(out.iter()) {
            r = r.max(math::abs(prev - next));
        }
        residuals.push(r);
        core::mem::swap(&mut h, &mut out);
        if n == 1 {
            apriori = banach_bound(r, s, settings.tol);
        }
        if r <= settings.tol {
            converged = Some(Convergence::Residual);
            break;
        }
        if n >= apriori {
            converged = Some(Convergence::AprioriBound);
            break;
        }
    }

    let converged_by = converged.ok_or(Error::NoConvergence { residuals: residuals.clone() })?;
    let mut log_sum = 0.0;
    let mut count = 0u32;
    for w in residuals.windows(2) {
        if w[0] > 0.0 && w[1] > 0.0 {
            log_sum += math::ln(w[1] / w[0]);
            count += 1;
        }
    }
    let observed_ratio = if count > 0 { exp_approx(log_sum / count as f64) } else { 0.0 };
    let meta = SolveMeta {
        iterations: residuals.len() as u32,
        final_residual: *residuals.last().unwrap(),
        observed_ratio,
        residuals: residuals.clone(),
        apriori_bound: apriori,
        converged_by,
    };
    Ok(op.grid_from(h, Some(meta)))
}

// e^x for the diagnostic ratio only: split off the power of two, short
// series on the remainder.
fn exp_approx(x: f64) -> f64 {
    let k = math::round(x / core::f64::consts::LN_2);
    let r = x - k * core::f64::consts::LN_2;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..20 {
        term *= r / n as f64;
        sum += term;
    }
    let two_k = if k >= 0.0 { math::powi(2.0, k as u32) } else { 1.0 / math::powi(2.0, (-k) as u32) };
    sum * two_k
}

/// Rebuilds the system for a new germ and solves; the operational form of
/// the fractal operator.
pub fn alpha_fractal_operator(
    template: &CifsSystem,
    germ: crate::cifs::Germ,
    settings: &SolveSettings,
) -> Result<(CifsSystem, FifGrid)> {
    let sys = template.with_germ(germ)?;
    let grid = solve_fif(&sys, settings)?;
    Ok((sys, grid))
}

/// Lattice-free evaluation by unrolling the self-referential equation.
pub struct PointEvaluator<'a> {
    sys: &'a CifsSystem,
    ilim: u32,
    jlim: u32,
}

impl<'a> PointEvaluator<'a> {
    pub fn new(sys: &'a CifsSystem, boundary_limit_index: Option<(u32, u32)>) -> Self {
        let p = sys.partition();
        let (ilim, jlim) = match boundary_limit_index {
            Some((i, j)) => (i.clamp(1, p.m_trunc()), j.clamp(1, p.n_trunc())),
            None => (p.m_trunc(), p.n_trunc()),
        };
        Self { sys, ilim, jlim }
    }

    /// Value plus certified absolute error bound `sup_alpha^depth * diam(K)`.
    ///
    /// The innermost value is seeded with `L(f)`, so at any knot the chain
    /// collapses through the corner condition and the value is exact.
    pub fn eval(&self, x: f64, y: f64, depth: u32) -> Result<(f64, f64)> {
        if depth == 0 {
            return Err(Error::BadParameter("depth must be at least 1".into()));
        }
        let p = self.sys.partition();
        if !p.contains(x, y) {
            return Err(Error::OutsideDomain { x, y });
        }
        let (a, b, c, d) = (p.a(), p.b(), p.c(), p.d());

        // Forward pass: multiplier, germ term and pullback per level.
        let mut chain: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(depth as usize);
        let (mut cx, mut cy) = (x, y);
        for _ in 0..depth {
            if cx == b && cy == d {
                chain.push((0.0, self.sys.germ_value(b, d), a, c));
                break;
            }
            let (alpha, base, px, py) = if cy == d {
                let i = match p.x().locate(cx)? {
                    CellIndex::Interior(i) => i,
                    CellIndex::Limit => unreachable!(),
                };
                (
                    self.sys.scale().eval(i, self.jlim, cx, d),
                    self.sys.germ_value(cx, d),
                    p.x().map(i).invert(cx),
                    p.y().map(self.jlim).invert(p.y_knot(self.jlim)),
                )
            } else if cx == b {
                let j = match p.y().locate(cy)? {
                    CellIndex::Interior(j) => j,
                    CellIndex::Limit => unreachable!(),
                };
                (
                    self.sys.scale().eval(self.ilim, j, b, cy),
                    self.sys.germ_value(b, cy),
                    p.x().map(self.ilim).invert(p.x_knot(self.ilim)),
                    p.y().map(j).invert(cy),
                )
            } else {
                let i = match p.x().locate(cx)? {
                    CellIndex::Interior(i) => i,
                    CellIndex::Limit => unreachable!(),
                };
                let j = match p.y().locate(cy)? {
                    CellIndex::Interior(j) => j,
                    CellIndex::Limit => unreachable!(),
                };
                (
                    self.sys.scale().eval(i, j, cx, cy),
                    self.sys.germ_value(cx, cy),
                    p.x().map(i).invert(cx),
                    p.y().map(j).invert(cy),
                )
            };
            let px = px.clamp(a, b);
            let py = py.clamp(c, d);
            chain.push((alpha, base, px, py));
            cx = px;
            cy = py;
        }

        // Backward pass seeded with L(f) at the deepest pullback.
        let (_, _, fx, fy) = *chain.last().unwrap();
        let mut val = self.sys.lf_value(fx, fy);
        for &(alpha, base, px, py) in chain.iter().rev() {
            val = base + alpha * (val - self.sys.lf_value(px, py));
        }
        let bound = math::powi(self.sys.sup_alpha(), depth) * self.sys.k_diam();
        Ok((val, bound))
    }
}

/// Empirical bilinear-read slack of a coarse grid: twice the worst
/// disagreement between coarse reads and a finer solve of the same system,
/// measured at the fine lattice nodes (a refine-and-extrapolate estimate).
pub fn grid_slack(coarse: &FifGrid, fine: &FifGrid) -> f64 {
    let nx = fine.nx() as usize;
    let mut worst: f64 = 0.0;
    for (k, &v) in fine.values().iter().enumerate() {
        let x = fine.xs()[k % nx];
        let y = fine.ys()[k / nx];
        worst = worst.max(math::abs(coarse.read(x, y) - v));
    }
    2.0 * worst
}

/// Effect of doubling both truncation levels on the solved grid; only the
/// limit rows can change because interior cell addressing is analytic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationStability {
    pub max_change: f64,
    /// Germ oscillation bound over the tail cells of the coarser system.
    pub tail_oscillation_bound: f64,
}

pub fn truncation_stability(sys: &CifsSystem, settings: &SolveSettings) -> Result<TruncationStability> {
    let p = sys.partition();
    let doubled = crate::partition::Partition::new(
        p.x().with_truncation(p.m_trunc() * 2)?,
        p.y().with_truncation(p.n_trunc() * 2)?,
    );
    let sys2 = CifsSystem::build(
        doubled,
        sys.scale().kind().clone(),
        sys.germ_map().germ().clone(),
        sys.germ_map().map(),
        sys.k_lattice(),
    )?;
    let g1 = solve_fif(sys, settings)?;
    let g2 = solve_fif(&sys2, settings)?;
    let lf = sys.germ_map().germ_lipschitz();
    let tail = lf * ((p.b() - p.x_knot(p.m_trunc())) + (p.d() - p.y_knot(p.n_trunc())));
    Ok(TruncationStability { max_change: g1.max_abs_diff(&g2), tail_oscillation_bound: tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cifs::{Germ, ParameterMap, ScaleKind};
    use crate::partition::Partition;
    use rand_core::{RngCore, SeedableRng};

    fn system(alpha: f64, map: ParameterMap) -> CifsSystem {
        let p = Partition::geometric((0.0, 1.0, 0.0, 1.0), 0.5, 0.5, 12, 12).unwrap();
        CifsSystem::build(p, ScaleKind::Constant(alpha), Germ::sin_pi_product(), map, 128).unwrap()
    }

    fn rand_unit(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn settings(lattice: u32) -> SolveSettings {
        SolveSettings { lattice, ..SolveSettings::default() }
    }

    /// Random grid satisfying the four-corner condition.
    fn corner_pinned_grid(sys: &CifsSystem, lattice: u32, seed: u64) -> FifGrid {
        let p = sys.partition();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (klo, khi) = (sys.k_lo(), sys.k_hi());
        let mut g = FifGrid::sample((p.a(), p.b(), p.c(), p.d()), lattice, lattice, |_, _| {
            klo + (khi - klo) * (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
        })
        .unwrap();
        let n = lattice as usize;
        g.values[0] = sys.germ_value(p.a(), p.c());
        g.values[n - 1] = sys.germ_value(p.b(), p.c());
        g.values[(n - 1) * n] = sys.germ_value(p.a(), p.d());
        g.values[n * n - 1] = sys.germ_value(p.b(), p.d());
        g
    }

    #[test]
    fn knot_values_independent_of_input() {
        let sys = system(0.3, ParameterMap::CornerBilinear);
        let out = apply_t(&sys, &corner_pinned_grid(&sys, 65, 5), &settings(65)).unwrap();
        // Dyadic knots x_i = 1 - 2^-i coincide with 65-point lattice nodes
        // for i <= 6.
        let p = sys.partition();
        for i in 1..=6u32 {
            for j in 1..=6u32 {
                let (xi, yj) = (p.x_knot(i), p.y_knot(j));
                let ix = out.x_index_at(xi).unwrap();
                let jy = out.y_index_at(yj).unwrap();
                let want = sys.germ_value(xi, yj);
                assert!(
                    (out.value(ix, jy) - want).abs() <= 1e-12,
                    "knot ({i},{j}): {} vs {want}",
                    out.value(ix, jy)
                );
            }
        }
    }

    #[test]
    fn zero_scale_returns_germ_samples_for_any_input() {
        let sys = system(0.0, ParameterMap::CornerBilinear);
        let out = apply_t(&sys, &corner_pinned_grid(&sys, 33, 9), &settings(33)).unwrap();
        for (k, &v) in out.values().iter().enumerate() {
            let x = out.xs()[k % 33];
            let y = out.ys()[k / 33];
            assert!((v - sys.germ_value(x, y)).abs() <= 1e-15, "at ({x},{y})");
        }
    }

    #[test]
    fn operator_contracts_at_sup_alpha() {
        let sys = system(0.42, ParameterMap::CornerBilinear);
        let h1 = corner_pinned_grid(&sys, 33, 1);
        let h2 = corner_pinned_grid(&sys, 33, 2);
        let t1 = apply_t(&sys, &h1, &settings(33)).unwrap();
        let t2 = apply_t(&sys, &h2, &settings(33)).unwrap();
        // Bilinear reads are convex combinations, so the discrete operator
        // inherits the exact vertical contraction factor.
        let lhs = t1.max_abs_diff(&t2);
        let rhs = 0.42 * h1.max_abs_diff(&h2);
        assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
    }

    #[test]
    fn solve_interpolates_and_contracts() {
        let sys = system(0.3, ParameterMap::CornerBilinear);
        let st = settings(129);
        let g = solve_fif(&sys, &st).unwrap();
        let meta = g.meta().unwrap().clone();
        assert!(meta.final_residual <= 1e-10 || meta.converged_by == Convergence::AprioriBound);
        assert!(meta.iterations <= meta.apriori_bound);
        for w in meta.residuals.windows(2) {
            if w[0] > 0.0 {
                assert!(w[1] / w[0] <= 0.3 + 0.02, "ratio {}", w[1] / w[0]);
            }
        }
        // Interpolation at lattice-coincident knots.
        let p = sys.partition();
        for i in 1..=7u32 {
            for j in 1..=7u32 {
                let (xi, yj) = (p.x_knot(i), p.y_knot(j));
                if let (Some(ix), Some(jy)) = (g.x_index_at(xi), g.y_index_at(yj)) {
                    assert!((g.value(ix, jy) - sys.germ_value(xi, yj)).abs() <= 1e-8);
                }
            }
        }
        // Fixed-point residual after convergence.
        let tg = apply_t(&sys, &g, &st).unwrap();
        assert!(tg.max_abs_diff(&g) <= 2.0 * 1e-10 + meta.final_residual);
    }

    #[test]
    fn identity_map_reproduces_germ_samples() {
        let sys = system(0.45, ParameterMap::Identity);
        let g = solve_fif(&sys, &settings(65)).unwrap();
        for (k, &v) in g.values().iter().enumerate() {
            let x = g.xs()[k % 65];
            let y = g.ys()[k / 65];
            assert!((v - sys.germ_value(x, y)).abs() <= 1e-12, "at ({x},{y})");
        }
        // The sampled germ is already the discrete fixed point.
        assert_eq!(g.meta().unwrap().iterations, 1);
    }

    #[test]
    fn nonconvergence_reports_residual_history() {
        let sys = system(0.9, ParameterMap::CornerBilinear);
        let st = SolveSettings { lattice: 33, tol: 1e-14, max_iter: 3, boundary_limit_index: None };
        match solve_fif(&sys, &st) {
            Err(Error::NoConvergence { residuals }) => assert_eq!(residuals.len(), 3),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn point_eval_exact_at_knots_and_zero_scale() {
        let sys = system(0.3, ParameterMap::CornerBilinear);
        let ev = PointEvaluator::new(&sys, None);
        let p = sys.partition();
        for i in [1u32, 3, 9] {
            for j in [2u32, 5, 12] {
                let (xi, yj) = (p.x_knot(i), p.y_knot(j));
                for depth in [1u32, 7, 40] {
                    let (v, _) = ev.eval(xi, yj, depth).unwrap();
                    assert!(
                        (v - sys.germ_value(xi, yj)).abs() <= 1e-13,
                        "knot ({i},{j}) depth {depth}"
                    );
                }
            }
        }
        let sys0 = system(0.0, ParameterMap::CornerBilinear);
        let ev0 = PointEvaluator::new(&sys0, None);
        let (v, bound) = ev0.eval(0.33, 0.77, 1).unwrap();
        assert_eq!(bound, 0.0);
        assert!((v - sys0.germ_value(0.33, 0.77)).abs() <= 1e-15);
    }

    #[test]
    fn point_eval_agrees_with_grid_solve() {
        let sys = system(0.3, ParameterMap::CornerBilinear);
        let coarse = solve_fif(&sys, &settings(129)).unwrap();
        let fine = solve_fif(&sys, &settings(257)).unwrap();
        let slack = grid_slack(&coarse, &fine);
        let ev = PointEvaluator::new(&sys, None);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let x = rand_unit(&mut rng);
            let y = rand_unit(&mut rng);
            let (v, bound) = ev.eval(x, y, 40).unwrap();
            let gap = (v - coarse.read(x, y)).abs();
            assert!(gap <= bound + slack + 1e-9, "gap {gap} > bound {bound} + slack {slack}");
        }
    }

    #[test]
    fn truncation_stability_only_moves_limit_rows() {
        let sys = system(0.3, ParameterMap::CornerBilinear);
        let rep = truncation_stability(&sys, &settings(65)).unwrap();
        // Reported, not asserted tightly: the change is bounded by the germ
        // oscillation over the tail cells plus solver noise.
        assert!(rep.max_change.is_finite());
        assert!(rep.max_change <= rep.tail_oscillation_bound + 1e-8);
    }
}
