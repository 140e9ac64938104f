//! Relaxed V-optimal weights, the greedy rounding and the four baselines,
//! compared on the design criteria.
//!
//!     cargo run --release --example experimental_design

use std::time::Instant;

use wcl::design::{solve_relaxation, DesignOptions, Method};
use wcl::pipeline::{select, Problem, RunConfig};
use wcl::procedural::Benchmark;

fn main() -> wcl::Result<()> {
    let config = RunConfig::default();
    let problem = Problem::from_benchmark(Benchmark::desk_plate()?, &config)?;
    let options = DesignOptions::default();

    for n_fl in [25, 50] {
        let start = Instant::now();
        let rel = solve_relaxation(problem.x(), n_fl, &options)?;
        let support = rel.weights.iter().filter(|&&w| w > 1e-6).count();
        println!(
            "n_FL = {n_fl}: relaxed Phi_V = {:.5e} after {} iterations (converged {}), {} weights > 0, {:.2?}",
            rel.phi_v,
            rel.iterations,
            rel.converged,
            support,
            start.elapsed()
        );
        for method in Method::ALL {
            let sel = select(&problem, method, n_fl, 7, &options, Some(&rel))?;
            println!(
                "  {:<9} Phi_V = {:.5e} ({:5.2}x relaxed)  Phi_G = {:.4e}",
                method.name(),
                sel.phi_v,
                sel.phi_v / rel.phi_v,
                sel.phi_g
            );
        }
    }
    Ok(())
}
