//! Spectrum of the contact-region graph Laplacian on the desk plate, with and
//! without the constant eigenvector.
//!
//!     cargo run --release --example laplacian_basis

use wcl::procedural::Benchmark;
use wcl::spectral::{graph_laplacian, laplacian_basis, laplacian_basis_with, BasisOptions};

fn main() -> wcl::Result<()> {
    let bench = Benchmark::desk_plate()?;
    let region = &bench.region;
    let l = graph_laplacian(region);
    println!("L is {0} x {0}, trace {1} (= 2 x {2} edges)", l.nrows(), l.trace(), region.edges().len());

    let plain = laplacian_basis(region, 8)?;
    println!("smallest eigenvalues:            {:.5?}", plain.eigenvalues());
    let col = plain.vectors().column(0);
    println!("first vector spread {:.2e} (constant up to sign)", col.max() - col.min());

    let options = BasisOptions {
        exclude_constant: true,
        ..BasisOptions::default()
    };
    let nonconst = laplacian_basis_with(region, 8, options)?;
    println!("excluding the constant vector:   {:.5?}", nonconst.eigenvalues());

    let v = nonconst.vectors();
    let gram = v.transpose() * v;
    let off = (gram - nalgebra::DMatrix::identity(8, 8)).abs().max();
    println!("max |V^T V - I| = {off:.2e}");
    Ok(())
}
