//! File exports: surface CSV/PGM, cloud CSV, solve log and report texts.
//! All floating-point text is written with 17 significant digits and LF
//! line endings, so identical runs produce byte-identical files.

use std::fmt::Write as _;

use fracsurf_core::analysis::{BoundReport, SweepTable};
use fracsurf_core::attractor::{ConvergenceReport, PointCloud3};
use fracsurf_core::cifs::MatchingReport;
use fracsurf_core::fif::{FifGrid, SolveMeta};

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `x,y,z` rows, row-major by y then x.
pub fn surface_csv(grid: &FifGrid) -> String {
    let nx = grid.nx() as usize;
    let mut out = String::with_capacity(grid.values().len() * 64);
    out.push_str("x,y,z\n");
    for (k, &z) in grid.values().iter().enumerate() {
        let x = grid.xs()[k % nx];
        let y = grid.ys()[k / nx];
        let _ = writeln!(out, "{},{},{}", num(x), num(y), num(z));
    }
    out
}

/// ASCII 16-bit heightmap; values affinely mapped from `[k_lo, k_hi]`.
/// Rows run from y = d (top) down to y = c.
pub fn surface_pgm(grid: &FifGrid, k_lo: f64, k_hi: f64) -> String {
    let nx = grid.nx() as usize;
    let ny = grid.ny() as usize;
    let span = k_hi - k_lo;
    let mut out = String::with_capacity(nx * ny * 6 + 32);
    let _ = writeln!(out, "P2\n{nx} {ny}\n65535");
    for row in (0..ny).rev() {
        let mut line = String::with_capacity(nx * 6);
        for ix in 0..nx {
            let z = grid.value(ix as u32, row as u32);
            let v = if span > 0.0 {
                (((z - k_lo) / span * 65535.0).round() as i64).clamp(0, 65535)
            } else {
                0
            };
            if ix > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{v}");
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn cloud_csv(cloud: &PointCloud3) -> String {
    let mut out = String::with_capacity(cloud.len() * 64);
    out.push_str("x,y,z\n");
    for p in &cloud.points {
        let _ = writeln!(out, "{},{},{}", num(p[0]), num(p[1]), num(p[2]));
    }
    out
}

pub fn solve_log(meta: &SolveMeta, lattice: u32, tol: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# fixed-point solve log");
    let _ = writeln!(out, "lattice={lattice}");
    let _ = writeln!(out, "tol={}", num(tol));
    let _ = writeln!(out, "# iter residual ratio");
    let mut prev: Option<f64> = None;
    for (k, &r) in meta.residuals.iter().enumerate() {
        let ratio = match prev {
            Some(p) if p > 0.0 => num(r / p),
            _ => "-".to_string(),
        };
        let _ = writeln!(out, "{} {} {}", k + 1, num(r), ratio);
        prev = Some(r);
    }
    let _ = writeln!(out, "iterations={}", meta.iterations);
    let _ = writeln!(out, "final_residual={}", num(meta.final_residual));
    let _ = writeln!(out, "observed_ratio={}", num(meta.observed_ratio));
    let _ = writeln!(out, "apriori_bound={}", meta.apriori_bound);
    let _ = writeln!(
        out,
        "converged_by={}",
        match meta.converged_by {
            fracsurf_core::fif::Convergence::Residual => "residual",
            fracsurf_core::fif::Convergence::AprioriBound => "apriori_bound",
        }
    );
    out
}

fn report_line(out: &mut String, r: &BoundReport) {
    let status = if r.pass { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "{} {} {} {} {}", r.name, status, num(r.lhs), num(r.rhs), num(r.slack));
}

/// Line-oriented verification report: `check_name status lhs rhs slack`
/// followed by a summary block.
pub fn bound_report_text(title: &str, reports: &[BoundReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {title}");
    for r in reports {
        report_line(&mut out, r);
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    let _ = writeln!(out, "# summary");
    let _ = writeln!(out, "checks={}", reports.len());
    let _ = writeln!(out, "passed={passed}");
    let _ = writeln!(out, "failed={}", reports.len() - passed);
    out
}

pub fn sweep_table_text(title: &str, table: &SweepTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {title}");
    for row in &table.rows {
        let status = if row.pass { "PASS" } else { "FAIL" };
        let name = format!("{title}[n={}]", row.n);
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            name,
            status,
            num(row.error),
            num(row.envelope),
            num(row.envelope - row.error)
        );
    }
    let _ = writeln!(out, "envelope_decreasing={}", table.envelope_decreasing);
    let _ = writeln!(out, "all_pass={}", table.all_pass);
    out
}

pub fn matching_report_text(rep: &MatchingReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# matching conditions");
    for e in rep.x_edges.iter().chain(rep.y_edges.iter()) {
        let axis = match e.axis {
            fracsurf_core::partition::Axis::X => "x",
            fracsurf_core::partition::Axis::Y => "y",
        };
        let _ = writeln!(out, "edge_{axis}[{}] max_discrepancy={}", e.knot, num(e.max_discrepancy));
    }
    let _ = writeln!(out, "samples_per_edge={}", rep.samples_per_edge);
    let _ = writeln!(out, "max_discrepancy={}", num(rep.max_discrepancy));
    let _ = writeln!(out, "literal_cross_discrepancy={}", num(rep.literal_cross_discrepancy));
    let _ = writeln!(out, "tol={}", num(rep.tol));
    let _ = writeln!(out, "pass={}", rep.pass);
    out
}

/// One `metric=value` line per quantity and verdict.
pub fn convergence_report_text(rep: &ConvergenceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# partial-attractor convergence");
    for (k, s) in rep.steps.iter().enumerate() {
        let _ = writeln!(out, "step[{k}].m={}", s.m);
        let _ = writeln!(out, "step[{k}].n={}", s.n);
        let _ = writeln!(out, "step[{k}].cloud_size={}", s.cloud_size);
        let _ = writeln!(out, "step[{k}].resolution={}", num(s.resolution));
        if let Some(f) = s.forward_inclusion {
            let _ = writeln!(out, "step[{k}].forward_inclusion={}", num(f));
        }
        if let Some(p) = s.pair_hausdorff {
            let _ = writeln!(out, "step[{k}].pair_hausdorff={}", num(p));
        }
        let _ = writeln!(out, "step[{k}].dist_to_graph={}", num(s.dist_to_graph));
    }
    let _ = writeln!(out, "monotone_within_resolution={}", rep.monotone_within_resolution);
    let _ = writeln!(out, "inclusion_within_resolution={}", rep.inclusion_within_resolution);
    let _ = writeln!(out, "terminal_distance={}", num(rep.terminal_distance));
    let _ = writeln!(out, "terminal_resolution={}", num(rep.terminal_resolution));
    out
}
