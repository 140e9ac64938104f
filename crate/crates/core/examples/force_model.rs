//! Footprint force matrix and the projected design matrix for a few contact
//! radii on the desk plate.
//!
//!     cargo run --release --example force_model

use wcl::force::{design_matrix, force_vector, numerical_rank, ForceMatrix};
use wcl::procedural::Benchmark;
use wcl::spectral::{laplacian_basis_with, BasisOptions};

fn main() -> wcl::Result<()> {
    let bench = Benchmark::desk_plate()?;
    let region = &bench.region;
    let basis = laplacian_basis_with(
        region,
        15,
        BasisOptions {
            exclude_constant: true,
            ..BasisOptions::default()
        },
    )?;
    let diag = bench.surface.bbox_diagonal();

    println!("{:>8} {:>10} {:>10} {:>6}", "radius", "mean supp", "max supp", "rank");
    for rel in [0.02, 0.05, 0.1, 0.2] {
        let forces = ForceMatrix::build(region, rel * diag)?;
        let supports: Vec<usize> = (0..forces.len()).map(|f| forces.row(f).len()).collect();
        let mean = supports.iter().sum::<usize>() as f64 / supports.len() as f64;
        let x = design_matrix(&forces, &basis)?;
        println!(
            "{:>8.4} {:>10.2} {:>10} {:>6}",
            forces.radius(),
            mean,
            supports.iter().max().unwrap_or(&0),
            numerical_rank(x.matrix())
        );
    }

    let forces = ForceMatrix::build(region, 0.1 * diag)?;
    let f = region.len() / 2;
    let load = force_vector(&bench.surface, &bench.volume, region, &forces, f, 1.0)?;
    let mut total = [0.0; 3];
    for (i, v) in load.iter().enumerate() {
        total[i % 3] += v;
    }
    println!("resultant of contact {f} at r = {:.4}: {total:.6?}", forces.radius());
    Ok(())
}
