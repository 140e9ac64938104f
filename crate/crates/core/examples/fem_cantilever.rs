//! Mesh-refinement study of a clamped bar against elementary beam and bar
//! theory: axial tip displacement vs. FL/(EA), root bending stress vs. Mc/I.
//!
//!     cargo run --release --example fem_cantilever

use std::time::Instant;

use wcl::fem::{FemModel, Material};
use wcl::mesh::{SurfaceMesh, Vec3, VolumeMesh};
use wcl::procedural::BoxGrid;

const LENGTH: f64 = 10.0;
const SIDE: f64 = 1.0;
const LOAD: f64 = 1000.0;

/// Uniform traction on the free end face `x = LENGTH`, lumped as one third
/// of each end triangle's area per vertex.
fn end_load(surface: &SurfaceMesh, volume: &VolumeMesh, direction: Vec3) -> Vec<f64> {
    let mut load = vec![0.0; 3 * volume.node_count()];
    let area = SIDE * SIDE;
    for t in surface.triangles() {
        let p = t.map(|v| surface.vertices()[v]);
        if p.iter().all(|q| q.x == LENGTH) {
            let a = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
            for &v in t {
                let w = volume.surface_map()[v];
                for k in 0..3 {
                    load[3 * w + k] += LOAD * direction[k] * a / (3.0 * area);
                }
            }
        }
    }
    load
}

fn main() -> wcl::Result<()> {
    let material = Material::new(1e9, 0.3)?;
    let area = SIDE * SIDE;
    let inertia = SIDE.powi(4) / 12.0;
    let axial = LOAD * LENGTH / (material.young_modulus * area);
    let root = LOAD * LENGTH * (SIDE / 2.0) / inertia;
    println!("bar theory tip displacement {axial:.4e}, beam theory root stress {root:.4e}");
    println!("{:>12} {:>8} {:>12} {:>8} {:>12} {:>8} {:>9}", "cells", "nodes", "u_tip", "err", "sigma_root", "err", "time");
    for n in [4usize, 8, 12] {
        let start = Instant::now();
        let grid = BoxGrid::new([LENGTH, SIDE, SIDE], [10 * n, n, n]);
        let (surface, volume) = grid.meshes(|p| p.x == 0.0)?;
        let nodes = volume.nodes().to_vec();
        let model = FemModel::new(volume, material)?;

        let u = model.solve(&end_load(&surface, model.volume(), Vec3::x()))?;
        let tip: Vec<usize> = (0..nodes.len()).filter(|&w| nodes[w].x == LENGTH).collect();
        let u_tip = tip.iter().map(|&w| u[3 * w]).sum::<f64>() / tip.len() as f64;

        let u = model.solve(&end_load(&surface, model.volume(), -Vec3::z()))?;
        let vm = model.von_mises(&u);
        let sigma_root = (0..nodes.len())
            .filter(|&w| nodes[w].x == 0.0)
            .map(|w| vm[w])
            .fold(0.0, f64::max);
        println!(
            "{:>12} {:>8} {:>12.4e} {:>7.2}% {:>12.4e} {:>7.2}% {:>9.2?}",
            format!("{}x{}x{}", 10 * n, n, n),
            nodes.len(),
            u_tip,
            100.0 * (u_tip - axial) / axial,
            sigma_root,
            100.0 * (sigma_root - root) / root,
            start.elapsed()
        );
    }
    Ok(())
}
