//! Attractors of partial systems and their Hausdorff-metric convergence to
//! the full attractor, plus the graph-iteration view of the fixed-point
//! operator.
//!
//! The full attractor is never materialized: it is approached through the
//! partial systems `{W_ij : i <= m, j <= n}` (whose attractors increase to
//! it) and through the solved surface lattice. Finite stand-ins are point
//! clouds with a stated method resolution.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};

use crate::cifs::CifsSystem;
use crate::error::Error;
use crate::fif::FifGrid;
use crate::math;
use crate::Result;

/// How chaos-game map indices are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapWeighting {
    /// Every realized map equally likely.
    Uniform,
    /// Probability proportional to the cell area `a_i * b_j`; changes the
    /// sampling density, not the attractor.
    CellArea,
}

/// Approximation mode for a partial attractor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttractorMode {
    /// Random-iteration orbit; `budget` is the kept point count.
    Chaos { seed: u64, weighting: MapWeighting },
    /// Set-iteration on a voxelization of `X` until the voxel set is stable;
    /// `budget` is the voxel resolution per axis.
    Deterministic,
}

/// Where a cloud came from, with the data needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    ChaosGame { seed: u64, burn_in: u32, weighting: MapWeighting },
    Deterministic { voxel_diag: f64, iterations: u32, stable: bool },
    GraphLattice,
    MapImages { applications: u32 },
}

/// A finite multiset of points in `X = I x J x K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud3 {
    pub points: Vec<[f64; 3]>,
    pub provenance: Provenance,
}

impl PointCloud3 {
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

const BURN_IN: u32 = 100;

/// Approximates the attractor of the partial system `{W_ij : i<=m, j<=n}`.
///
/// Chaos mode requires the hyperbolicity certificate: without it the random
/// iteration is unjustified and the call is refused. Deterministic mode
/// iterates the partial set map from the voxelized graph of the sampled
/// parameter-map surface, which converges by the graph-iteration theorem
/// under the vertical contraction alone.
pub fn partial_attractor(
    sys: &CifsSystem,
    m: u32,
    n: u32,
    mode: AttractorMode,
    budget: u32,
) -> Result<PointCloud3> {
    let p = sys.partition();
    if m == 0 || m > p.m_trunc() {
        return Err(Error::IndexOutOfRange {
            axis: crate::partition::Axis::X,
            index: m,
            realized: p.m_trunc(),
        });
    }
    if n == 0 || n > p.n_trunc() {
        return Err(Error::IndexOutOfRange {
            axis: crate::partition::Axis::Y,
            index: n,
            realized: p.n_trunc(),
        });
    }
    if budget < 2 {
        return Err(Error::BadParameter("attractor budget must be at least 2".into()));
    }
    match mode {
        AttractorMode::Chaos { seed, weighting } => {
            sys.hyperbolicity_certificate()?;
            Ok(chaos_orbit(sys, m, n, budget, seed, weighting))
        }
        AttractorMode::Deterministic => deterministic_attractor(sys, m, n, budget),
    }
}

fn chaos_orbit(
    sys: &CifsSystem,
    m: u32,
    n: u32,
    budget: u32,
    seed: u64,
    weighting: MapWeighting,
) -> PointCloud3 {
    let p = sys.partition();
    let count = (m * n) as usize;
    let cdf: Option<Vec<f64>> = match weighting {
        MapWeighting::Uniform => None,
        MapWeighting::CellArea => {
            let mut acc = 0.0;
            let mut cdf = Vec::with_capacity(count);
            for i in 1..=m {
                for j in 1..=n {
                    acc += p.x().contraction(i) * p.y().contraction(j);
                    cdf.push(acc);
                }
            }
            let total = acc;
            for v in &mut cdf {
                *v /= total;
            }
            Some(cdf)
        }
    };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut draw = move || {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let k = match &cdf {
            None => ((u * count as f64) as usize).min(count - 1),
            Some(cdf) => cdf.partition_point(|&c| c < u).min(count - 1),
        };
        (k as u32 / n + 1, k as u32 % n + 1)
    };

    let mid_x = 0.5 * (p.a() + p.b());
    let mid_y = 0.5 * (p.c() + p.d());
    let mut point = [mid_x, mid_y, sys.germ_value(mid_x, mid_y)];
    for _ in 0..BURN_IN {
        let (i, j) = draw();
        point = sys.w_map_unchecked(i, j, point);
    }
    let mut points = Vec::with_capacity(budget as usize);
    for _ in 0..budget {
        let (i, j) = draw();
        point = sys.w_map_unchecked(i, j, point);
        points.push(point);
    }
    PointCloud3 {
        points,
        provenance: Provenance::ChaosGame { seed, burn_in: BURN_IN, weighting },
    }
}

#[derive(Clone, Copy)]
struct Voxelizer {
    origin: [f64; 3],
    size: [f64; 3],
    cells: i64,
}

impl Voxelizer {
    fn new(sys: &CifsSystem, res: u32) -> Self {
        let p = sys.partition();
        let k_span = if sys.k_diam() > 0.0 { sys.k_diam() } else { 1.0 };
        Self {
            origin: [p.a(), p.c(), sys.k_lo()],
            size: [
                (p.b() - p.a()) / res as f64,
                (p.d() - p.c()) / res as f64,
                k_span / res as f64,
            ],
            cells: res as i64,
        }
    }

    fn key(&self, q: [f64; 3]) -> (i64, i64, i64) {
        let k = |v: f64, o: f64, s: f64| -> i64 {
            (math::floor((v - o) / s) as i64).clamp(0, self.cells - 1)
        };
        (
            k(q[0], self.origin[0], self.size[0]),
            k(q[1], self.origin[1], self.size[1]),
            k(q[2], self.origin[2], self.size[2]),
        )
    }

    fn diag(&self) -> f64 {
        math::sqrt(
            self.size[0] * self.size[0] + self.size[1] * self.size[1] + self.size[2] * self.size[2],
        )
    }
}

const MAX_SET_ITERATIONS: u32 = 256;

fn deterministic_attractor(sys: &CifsSystem, m: u32, n: u32, res: u32) -> Result<PointCloud3> {
    let p = sys.partition();
    let vox = Voxelizer::new(sys, res);

    // Seed: voxelized graph of the sampled parameter-map surface.
    let mut current: BTreeMap<(i64, i64, i64), [f64; 3]> = BTreeMap::new();
    let seed_n = (res + 1).min(513);
    for jy in 0..seed_n {
        let ty = jy as f64 / (seed_n - 1) as f64;
        let y = p.c() * (1.0 - ty) + p.d() * ty;
        for ix in 0..seed_n {
            let tx = ix as f64 / (seed_n - 1) as f64;
            let x = p.a() * (1.0 - tx) + p.b() * tx;
            let q = [x, y, sys.lf_value(x, y)];
            current.entry(vox.key(q)).or_insert(q);
        }
    }

    let mut stable = false;
    let mut iterations = 0;
    while iterations < MAX_SET_ITERATIONS {
        iterations += 1;
        let mut next: BTreeMap<(i64, i64, i64), [f64; 3]> = BTreeMap::new();
        for q in current.values() {
            for i in 1..=m {
                for j in 1..=n {
                    let img = sys.w_map_unchecked(i, j, *q);
                    next.entry(vox.key(img)).or_insert(img);
                }
            }
        }
        let same = next.len() == current.len() && next.keys().eq(current.keys());
        current = next;
        if same {
            stable = true;
            break;
        }
    }

    Ok(PointCloud3 {
        points: current.into_values().collect(),
        provenance: Provenance::Deterministic { voxel_diag: vox.diag(), iterations, stable },
    })
}

/// Graph points of a solved (or sampled) surface lattice.
pub fn graph_cloud(grid: &FifGrid) -> PointCloud3 {
    let nx = grid.nx() as usize;
    let points = grid
        .values()
        .iter()
        .enumerate()
        .map(|(k, &z)| [grid.xs()[k % nx], grid.ys()[k / nx], z])
        .collect();
    PointCloud3 { points, provenance: Provenance::GraphLattice }
}

/// Exact image cloud under one application of the partial set map
/// (`m * n` images per input point, no deduplication).
pub fn hutchinson_images(sys: &CifsSystem, cloud: &PointCloud3, m: u32, n: u32) -> Result<PointCloud3> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut points = Vec::with_capacity(cloud.len() * (m * n) as usize);
    for q in &cloud.points {
        for i in 1..=m {
            for j in 1..=n {
                points.push(sys.w_map_unchecked(i, j, *q));
            }
        }
    }
    let applications = match cloud.provenance {
        Provenance::MapImages { applications } => applications + 1,
        _ => 1,
    };
    Ok(PointCloud3 { points, provenance: Provenance::MapImages { applications } })
}

/// One application of the partial set map with voxel deduplication at the
/// given per-axis resolution; keeps cloud growth bounded.
pub fn hutchinson_step_dedup(
    sys: &CifsSystem,
    cloud: &PointCloud3,
    m: u32,
    n: u32,
    res: u32,
) -> Result<PointCloud3> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let vox = Voxelizer::new(sys, res);
    let mut next: BTreeMap<(i64, i64, i64), [f64; 3]> = BTreeMap::new();
    for q in &cloud.points {
        for i in 1..=m {
            for j in 1..=n {
                let img = sys.w_map_unchecked(i, j, *q);
                next.entry(vox.key(img)).or_insert(img);
            }
        }
    }
    let applications = match cloud.provenance {
        Provenance::MapImages { applications } => applications + 1,
        _ => 1,
    };
    Ok(PointCloud3 { points: next.into_values().collect(), provenance: Provenance::MapImages { applications } })
}

// ---------------------------------------------------------------------------
// Hausdorff distances
// ---------------------------------------------------------------------------

#[inline]
fn dist2(p: [f64; 3], q: [f64; 3]) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    let dz = p[2] - q[2];
    dx * dx + dy * dy + dz * dz
}

/// Uniform-cell spatial index over a point set.
struct SpatialIndex<'a> {
    points: &'a [[f64; 3]],
    cells: BTreeMap<(i64, i64, i64), Vec<u32>>,
    origin: [f64; 3],
    cell: f64,
}

impl<'a> SpatialIndex<'a> {
    fn new(points: &'a [[f64; 3]]) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let diag = math::sqrt(
            (hi[0] - lo[0]) * (hi[0] - lo[0])
                + (hi[1] - lo[1]) * (hi[1] - lo[1])
                + (hi[2] - lo[2]) * (hi[2] - lo[2]),
        );
        // Target a modest number of occupied cells per axis; clouds here are
        // surface-like, so n^(1/2) keeps buckets small without blowing up
        // the ring search.
        let target = {
            let mut t = 1u32;
            while (t as usize) * (t as usize) < points.len() && t < 512 {
                t += 1;
            }
            t.clamp(4, 512)
        };
        let cell = if diag > 0.0 { diag / target as f64 } else { 1.0 };
        let mut cells: BTreeMap<(i64, i64, i64), Vec<u32>> = BTreeMap::new();
        for (idx, p) in points.iter().enumerate() {
            let key = (
                math::floor((p[0] - lo[0]) / cell) as i64,
                math::floor((p[1] - lo[1]) / cell) as i64,
                math::floor((p[2] - lo[2]) / cell) as i64,
            );
            cells.entry(key).or_default().push(idx as u32);
        }
        Self { points, cells, origin: lo, cell }
    }

    /// Exact squared distance to the nearest indexed point, optionally
    /// excluding one index.
    fn nearest2(&self, q: [f64; 3], exclude: Option<u32>) -> f64 {
        let key = (
            math::floor((q[0] - self.origin[0]) / self.cell) as i64,
            math::floor((q[1] - self.origin[1]) / self.cell) as i64,
            math::floor((q[2] - self.origin[2]) / self.cell) as i64,
        );
        let mut best = f64::INFINITY;
        let mut ring: i64 = 0;
        loop {
            let mut scanned_any = false;
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(bucket) = self.cells.get(&(key.0 + dx, key.1 + dy, key.2 + dz)) {
                            scanned_any = true;
                            for &idx in bucket {
                                if Some(idx) == exclude {
                                    continue;
                                }
                                best = best.min(dist2(q, self.points[idx as usize]));
                            }
                        }
                    }
                }
            }
            // Any point in ring L+1 or beyond is at least L*cell away.
            if best.is_finite() && best <= (ring as f64 * self.cell) * (ring as f64 * self.cell) {
                return best;
            }
            // Past the whole occupied grid with something found: done.
            if ring > 2 && !scanned_any && best.is_finite() {
                let span = self.span_rings();
                if ring > span {
                    return best;
                }
            }
            ring += 1;
        }
    }

    fn span_rings(&self) -> i64 {
        let mut lo = (i64::MAX, i64::MAX, i64::MAX);
        let mut hi = (i64::MIN, i64::MIN, i64::MIN);
        for k in self.cells.keys() {
            lo = (lo.0.min(k.0), lo.1.min(k.1), lo.2.min(k.2));
            hi = (hi.0.max(k.0), hi.1.max(k.1), hi.2.max(k.2));
        }
        (hi.0 - lo.0).max(hi.1 - lo.1).max(hi.2 - lo.2) + 2
    }
}

/// Directed Hausdorff distance `h(A -> B)`, exact via the spatial index.
pub fn directed_hausdorff(a: &PointCloud3, b: &PointCloud3) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let index = SpatialIndex::new(&b.points);
    let mut worst: f64 = 0.0;
    for p in &a.points {
        worst = worst.max(index.nearest2(*p, None));
    }
    Ok(math::sqrt(worst))
}

/// Symmetric Hausdorff distance under the Euclidean metric; exact for the
/// given finite clouds.
pub fn hausdorff_distance(a: &PointCloud3, b: &PointCloud3) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// Brute-force reference implementation.
pub fn hausdorff_distance_brute(a: &PointCloud3, b: &PointCloud3) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let directed = |from: &[[f64; 3]], to: &[[f64; 3]]| -> f64 {
        let mut worst: f64 = 0.0;
        for p in from {
            let mut best = f64::INFINITY;
            for q in to {
                best = best.min(dist2(*p, *q));
            }
            worst = worst.max(best);
        }
        worst
    };
    Ok(math::sqrt(directed(&a.points, &b.points).max(directed(&b.points, &a.points))))
}

/// Empirical sampling resolution of a cloud: the largest nearest-neighbor
/// distance (coverage radius proxy). For voxel clouds the voxel diagonal is
/// used when larger.
pub fn cloud_resolution(cloud: &PointCloud3) -> Result<f64> {
    if cloud.len() < 2 {
        return Err(Error::EmptyCloud);
    }
    let index = SpatialIndex::new(&cloud.points);
    let mut worst: f64 = 0.0;
    for (k, p) in cloud.points.iter().enumerate() {
        worst = worst.max(index.nearest2(*p, Some(k as u32)));
    }
    let nn = math::sqrt(worst);
    Ok(match cloud.provenance {
        Provenance::Deterministic { voxel_diag, .. } => nn.max(voxel_diag),
        _ => nn,
    })
}

/// One row of the schedule table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleStep {
    pub m: u32,
    pub n: u32,
    pub cloud_size: usize,
    /// Method resolution of this cloud.
    pub resolution: f64,
    /// Directed distance into the next scheduled cloud (inclusion proxy).
    pub forward_inclusion: Option<f64>,
    /// Symmetric distance to the next scheduled cloud.
    pub pair_hausdorff: Option<f64>,
    /// Symmetric distance to the surface graph lattice.
    pub dist_to_graph: f64,
}

/// Partial-attractor schedule versus the solved surface graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub steps: Vec<ScheduleStep>,
    /// Graph distances never increase by more than the local resolution.
    pub monotone_within_resolution: bool,
    /// Every forward inclusion distance is within the pair resolution.
    pub inclusion_within_resolution: bool,
    pub terminal_distance: f64,
    pub terminal_resolution: f64,
}

/// Generates the partial-attractor clouds of a nondecreasing schedule.
pub fn schedule_clouds(
    sys: &CifsSystem,
    schedule: &[(u32, u32)],
    mode: AttractorMode,
    budget: u32,
) -> Result<Vec<PointCloud3>> {
    if schedule.is_empty() {
        return Err(Error::BadParameter("empty attractor schedule".into()));
    }
    for w in schedule.windows(2) {
        if w[1].0 < w[0].0 || w[1].1 < w[0].1 {
            return Err(Error::BadParameter("schedule must be nondecreasing in both indices".into()));
        }
    }
    schedule.iter().map(|&(m, n)| partial_attractor(sys, m, n, mode, budget)).collect()
}

/// Runs the schedule and compares consecutive partial attractors and the
/// surface graph in the Hausdorff metric.
pub fn convergence_report(
    sys: &CifsSystem,
    schedule: &[(u32, u32)],
    mode: AttractorMode,
    budget: u32,
    surface: &FifGrid,
) -> Result<ConvergenceReport> {
    let clouds = schedule_clouds(sys, schedule, mode, budget)?;
    report_from_clouds(schedule, &clouds, surface)
}

/// Builds the report from precomputed schedule clouds.
pub fn report_from_clouds(
    schedule: &[(u32, u32)],
    clouds: &[PointCloud3],
    surface: &FifGrid,
) -> Result<ConvergenceReport> {
    if clouds.len() != schedule.len() || clouds.is_empty() {
        return Err(Error::BadParameter("schedule and cloud counts differ".into()));
    }
    let graph = graph_cloud(surface);

    let mut steps = Vec::with_capacity(clouds.len());
    for (k, cloud) in clouds.iter().enumerate() {
        let resolution = cloud_resolution(cloud)?;
        let (forward, pair) = if k + 1 < clouds.len() {
            (
                Some(directed_hausdorff(cloud, &clouds[k + 1])?),
                Some(hausdorff_distance(cloud, &clouds[k + 1])?),
            )
        } else {
            (None, None)
        };
        steps.push(ScheduleStep {
            m: schedule[k].0,
            n: schedule[k].1,
            cloud_size: cloud.len(),
            resolution,
            forward_inclusion: forward,
            pair_hausdorff: pair,
            dist_to_graph: hausdorff_distance(cloud, &graph)?,
        });
    }

    let mut monotone = true;
    let mut inclusion = true;
    for w in steps.windows(2) {
        let eps = w[0].resolution.max(w[1].resolution);
        if w[1].dist_to_graph > w[0].dist_to_graph + eps {
            monotone = false;
        }
        if let Some(f) = w[0].forward_inclusion {
            if f > eps {
                inclusion = false;
            }
        }
    }
    let last = steps.last().unwrap();
    Ok(ConvergenceReport {
        monotone_within_resolution: monotone,
        inclusion_within_resolution: inclusion,
        terminal_distance: last.dist_to_graph,
        terminal_resolution: last.resolution,
        steps,
    })
}
