//! Full pipeline on the desk-scale plate: brute-force ground truth, then every
//! design method at n_FL = 25 with the top-40 refinement.
//!
//!     cargo run --release --example worst_case_search

use std::time::Instant;

use wcl::design::Method;
use wcl::pipeline::{brute_force_sweep, evaluate_grid, run_method, GridSpec, Problem, RunConfig, RunParams};
use wcl::procedural::Benchmark;

fn main() -> wcl::Result<()> {
    let config = RunConfig {
        n_fl_list: vec![25],
        ..RunConfig::default()
    };
    let start = Instant::now();
    let problem = Problem::from_benchmark(Benchmark::desk_plate()?, &config)?;
    println!(
        "{}: {} volume nodes, {} contact nodes, p = {} ({:.2?})",
        problem.name,
        problem.volume.node_count(),
        problem.n_f(),
        problem.x().ncols(),
        start.elapsed()
    );

    let truth = brute_force_sweep(&problem, None)?;
    println!(
        "ground truth: sigma* = {:.4e} at contact {} after {} solves ({:.2?})",
        truth.sigma_star,
        truth.argmax_f,
        truth.new_solves,
        start.elapsed()
    );

    for method in Method::ALL {
        let run = run_method(
            &problem,
            &RunParams {
                method,
                ..RunParams::from_config(&config)
            },
        )?;
        let found = run.sigma_tilde.unwrap_or(f64::NAN);
        println!(
            "{:<9} sigma~ = {:.4e} ({:.2}% of sigma*), candidate {:?}, FEAs {}",
            method.name(),
            found,
            100.0 * found / truth.sigma_star,
            run.argmax_candidate,
            run.total_feas
        );
    }

    let report = evaluate_grid(&problem, &truth, &GridSpec::from_config(&config))?;
    println!("\n{}", report.to_table());
    println!("total time {:.2?}", start.elapsed());
    Ok(())
}
