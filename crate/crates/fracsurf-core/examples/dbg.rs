use fracsurf_core::cifs::{CifsSystem, Germ, ParameterMap, ScaleKind};
use fracsurf_core::fif::{solve_fif, SolveSettings};
use fracsurf_core::partition::Partition;

fn main() {
    let p = Partition::geometric((0.0, 1.0, 0.0, 1.0), 0.5, 0.5, 12, 12).unwrap();
    let sys = CifsSystem::build(p, ScaleKind::Constant(0.3), Germ::sin_pi_product(),
        ParameterMap::CornerBilinear, 512).unwrap();
    let g = solve_fif(&sys, &SolveSettings::default()).unwrap();
    let m = g.meta().unwrap();
    println!("iters={} final={:e} ratio={} apriori={}", m.iterations, m.final_residual, m.observed_ratio, m.apriori_bound);
    for (k, r) in m.residuals.iter().enumerate() { println!("  r[{}] = {:e}", k+1, r); }
}
