//! Subcommand orchestration: builds systems from the configuration, runs
//! the requested stage and writes its artifacts.
//!
//! Exit classes: 0 all assertions pass, 2 configuration error, 3 solver or
//! certificate refusal, 4 failed verification.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use fracsurf_core::analysis::{
    convergence_suite, default_probe_corpus, envelope_tightness_probe, invariant_subspace_check,
    operator_property_probe, verify_perturbation_bounds, AuditSettings, BoundReport, SweepMode,
};
use fracsurf_core::attractor::{
    report_from_clouds, schedule_clouds, AttractorMode, MapWeighting,
};
use fracsurf_core::cifs::CifsSystem;
use fracsurf_core::fif::{grid_slack, solve_fif, FifGrid, SolveSettings};
use fracsurf_core::Error as CoreError;

use crate::config::{
    load_config, AttractorModeSpec, ConfigError, ToolkitConfig, WeightingSpec,
};
use crate::export;

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Io(String),
    Solver(String),
    Verification(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 2,
            RunError::Solver(_) => 3,
            RunError::Verification(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Config(m) | RunError::Io(m) | RunError::Solver(m) | RunError::Verification(m) => m,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::CertificateRefused { .. } | CoreError::NoConvergence { .. } => {
                RunError::Solver(e.to_string())
            }
            other => RunError::Config(other.to_string()),
        }
    }
}

pub type RunResult<T> = Result<T, RunError>;

/// Loaded configuration plus the prepared output directory.
pub struct Workspace {
    pub cfg: ToolkitConfig,
    pub echo: Value,
    pub out_dir: PathBuf,
}

pub fn prepare(config_path: &Path, overrides: &[String]) -> RunResult<Workspace> {
    let (cfg, echo) = load_config(config_path, overrides)?;
    let out_dir = cfg.output.directory.clone();
    fs::create_dir_all(&out_dir)
        .map_err(|e| RunError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let ws = Workspace { cfg, echo, out_dir };
    ws.write_text("effective_config.json", &format!("{:#}\n", ws.echo))?;
    Ok(ws)
}

impl Workspace {
    pub fn write_text(&self, name: &str, contents: &str) -> RunResult<PathBuf> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| RunError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn build_system(&self) -> RunResult<CifsSystem> {
        let partition = self.cfg.build_partition()?;
        let germ = self.cfg.germ(&partition);
        Ok(CifsSystem::build(
            partition,
            self.cfg.scale_kind(),
            germ,
            self.cfg.parameter_map(),
            self.cfg.audit.k_lattice,
        )?)
    }

    pub fn solve_settings(&self) -> SolveSettings {
        SolveSettings {
            lattice: self.cfg.solve.lattice,
            tol: self.cfg.solve.tol,
            max_iter: self.cfg.solve.max_iter,
            boundary_limit_index: self.cfg.solve.boundary_limit_index,
        }
    }

    pub fn attractor_mode(&self) -> AttractorMode {
        match self.cfg.attractor.mode {
            AttractorModeSpec::Chaos => AttractorMode::Chaos {
                seed: self.cfg.attractor.seed,
                weighting: match self.cfg.attractor.weighting {
                    WeightingSpec::Uniform => MapWeighting::Uniform,
                    WeightingSpec::CellArea => MapWeighting::CellArea,
                },
            },
            AttractorModeSpec::Deterministic => AttractorMode::Deterministic,
        }
    }

    fn solve(&self, sys: &CifsSystem) -> RunResult<FifGrid> {
        solve_fif(sys, &self.solve_settings()).map_err(RunError::from)
    }

    fn audit_settings(&self, grid_slack_est: f64) -> AuditSettings {
        AuditSettings {
            lattice: self.cfg.audit.lattice,
            solver_tol: self.cfg.solve.tol,
            grid_slack: grid_slack_est,
        }
    }
}

fn fail_count(reports: &[BoundReport]) -> usize {
    reports.iter().filter(|r| !r.pass).count()
}

/// Solve the surface, export it and the solve log.
pub fn cmd_build(ws: &Workspace) -> RunResult<()> {
    let sys = ws.build_system()?;
    let grid = ws.solve(&sys)?;
    let meta = grid.meta().expect("solved grid carries meta");

    if ws.cfg.output.formats.iter().any(|f| f == "csv") {
        ws.write_text("surface.csv", &export::surface_csv(&grid))?;
    }
    if ws.cfg.output.formats.iter().any(|f| f == "pgm") {
        ws.write_text("surface.pgm", &export::surface_pgm(&grid, sys.k_lo(), sys.k_hi()))?;
    }
    ws.write_text("solve_log.txt", &export::solve_log(meta, ws.cfg.solve.lattice, ws.cfg.solve.tol))?;

    println!(
        "build: lattice {}x{}, {} iterations, final residual {:.3e}, observed ratio {:.4}",
        grid.nx(),
        grid.ny(),
        meta.iterations,
        meta.final_residual,
        meta.observed_ratio
    );
    Ok(())
}

/// Schedule clouds, their exports and the convergence report.
pub fn cmd_attractor(ws: &Workspace, jobs: usize) -> RunResult<()> {
    let sys = ws.build_system()?;
    let grid = ws.solve(&sys)?;
    let mode = ws.attractor_mode();
    let schedule = ws.cfg.attractor.schedule.clone();

    let clouds = if jobs > 1 {
        // Entries are independent; merge by index keeps outputs deterministic.
        let mut out: Vec<_> = std::thread::scope(|scope| {
            let sys = &sys;
            let handles: Vec<_> = schedule
                .chunks((schedule.len() + jobs - 1) / jobs)
                .map(|chunk| {
                    scope.spawn(move || {
                        chunk
                            .iter()
                            .map(|&(m, n)| {
                                fracsurf_core::attractor::partial_attractor(
                                    sys,
                                    m,
                                    n,
                                    mode,
                                    ws.cfg.attractor.budget,
                                )
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut clouds = Vec::with_capacity(out.len());
        for c in out.drain(..) {
            clouds.push(c?);
        }
        clouds
    } else {
        schedule_clouds(&sys, &schedule, mode, ws.cfg.attractor.budget)?
    };

    for (&(m, n), cloud) in schedule.iter().zip(&clouds) {
        ws.write_text(&format!("cloud_m{m:02}_n{n:02}.csv"), &export::cloud_csv(cloud))?;
    }
    let report = report_from_clouds(&schedule, &clouds, &grid)?;
    ws.write_text("convergence_report.txt", &export::convergence_report_text(&report))?;

    println!(
        "attractor: {} schedule entries, terminal distance {:.3e} at resolution {:.3e}",
        report.steps.len(),
        report.terminal_distance,
        report.terminal_resolution
    );
    if !(report.monotone_within_resolution && report.inclusion_within_resolution) {
        return Err(RunError::Verification(
            "attractor convergence verdicts failed (see convergence_report.txt)".into(),
        ));
    }
    Ok(())
}

/// Matching sweep, perturbation bounds, convergence sweeps and
/// invariant-subspace verdicts.
pub fn cmd_verify(ws: &Workspace) -> RunResult<()> {
    let sys = ws.build_system()?;
    let grid = ws.solve(&sys)?;

    // Refine-by-two slack estimate for the audit tolerance.
    let fine = solve_fif(
        &sys,
        &SolveSettings { lattice: ws.cfg.solve.lattice * 2 - 1, ..ws.solve_settings() },
    )?;
    let slack = grid_slack(&grid, &fine);
    let audit = ws.audit_settings(slack);

    let matching = sys.verify_matching(64, 1e-12)?;
    let bounds = verify_perturbation_bounds(&sys, &grid, &audit)?;
    let s0 = if sys.sup_alpha() > 0.0 { sys.sup_alpha() } else { 0.5 };
    let scale_sweep = convergence_suite(&sys, SweepMode::ScaleOverN { s: s0 }, 5, &audit)?;
    let blend_sweep = convergence_suite(&sys, SweepMode::BlendToIdentity, 5, &audit)?;
    let invariant = invariant_subspace_check(&sys, &audit)?;

    let mut text = String::new();
    text.push_str(&export::matching_report_text(&matching));
    text.push_str(&export::bound_report_text("perturbation bounds", &bounds));
    text.push_str(&export::sweep_table_text("scale_sweep", &scale_sweep));
    text.push_str(&export::sweep_table_text("blend_sweep", &blend_sweep));
    text.push_str(&export::bound_report_text("invariant subspaces", &invariant));
    ws.write_text("verification_report.txt", &text)?;

    let failures = fail_count(&bounds)
        + fail_count(&invariant)
        + usize::from(!matching.pass)
        + usize::from(!scale_sweep.all_pass)
        + usize::from(!blend_sweep.all_pass)
        + usize::from(!scale_sweep.envelope_decreasing);
    println!(
        "verify: matching max discrepancy {:.3e}; {} bound checks, {} failures",
        matching.max_discrepancy,
        bounds.len() + invariant.len() + scale_sweep.rows.len() + blend_sweep.rows.len() + 1,
        failures
    );
    if failures > 0 {
        return Err(RunError::Verification(format!(
            "{failures} verification checks failed (see verification_report.txt)"
        )));
    }
    Ok(())
}

/// Operator probes over the catalog corpus.
pub fn cmd_operator(ws: &Workspace) -> RunResult<()> {
    let sys = ws.build_system()?;
    let audit = ws.audit_settings(0.0);
    let corpus = default_probe_corpus(sys.partition());
    let probes = operator_property_probe(&sys, &corpus, &audit, ws.cfg.attractor.seed)?;
    let tightness = envelope_tightness_probe(
        &sys,
        &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
        audit.lattice.min(129),
    )?;

    let mut text = export::bound_report_text("operator probes", &probes);
    text.push_str("# envelope tightness (diagnostic, no assertion)\n");
    for (alpha, ratio) in &tightness {
        text.push_str(&format!("tightness[alpha={alpha:.2}]={ratio:.6}\n"));
    }
    ws.write_text("operator_report.txt", &text)?;

    let failures = fail_count(&probes);
    println!("operator: {} probes, {} failures", probes.len(), failures);
    if failures > 0 {
        return Err(RunError::Verification(format!(
            "{failures} operator probes failed (see operator_report.txt)"
        )));
    }
    Ok(())
}

/// Everything, in order; verification failures are collected, harder
/// failures abort.
pub fn cmd_all(ws: &Workspace, jobs: usize) -> RunResult<()> {
    cmd_build(ws)?;
    let mut verification_failure: Option<RunError> = None;
    for result in [cmd_attractor(ws, jobs), cmd_verify(ws), cmd_operator(ws)] {
        match result {
            Ok(()) => {}
            Err(e @ RunError::Verification(_)) => verification_failure = Some(e),
            Err(hard) => return Err(hard),
        }
    }
    match verification_failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
