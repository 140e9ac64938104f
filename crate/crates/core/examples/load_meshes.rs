//! Writes the cantilever bar to disk in OFF / TetGen form, reads it back and
//! prints what the loaders recovered.
//!
//!     cargo run --example load_meshes [DIR]

use std::path::PathBuf;

use wcl::mesh::{ContactRegion, SurfaceMesh, VolumeMesh};
use wcl::procedural::Benchmark;

fn main() -> wcl::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("wcl-load-meshes"));
    let files = Benchmark::cantilever_bar(10.0, 1.0, [20, 2, 2])?.write(&dir)?;

    let surface = SurfaceMesh::load(&files.surface)?;
    let volume = VolumeMesh::load(&surface, &files.node, &files.ele, &files.fixed)?;
    let region = ContactRegion::load(&surface, &files.region)?;

    println!("surface {}: {} vertices, {} triangles, bbox diagonal {:.4}",
        files.surface.display(), surface.vertex_count(), surface.triangles().len(), surface.bbox_diagonal());
    println!("volume: {} nodes, {} tets ({} re-oriented), {} fixed",
        volume.node_count(), volume.tets().len(), volume.repaired_tets(), volume.fixed_nodes().len());
    let total: f64 = (0..volume.tets().len()).map(|e| volume.tet_volume(e)).sum();
    println!("total tet volume {total:.6} (box is 10)");

    println!("contact region: {} nodes, {} edges, {} component(s)",
        region.len(), region.edges().len(), region.component_count());
    let far = region.geodesic_distances(0);
    let (argmax, dist) = far
        .iter()
        .enumerate()
        .fold((0, 0.0), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
    println!("farthest contact node from 0 along the region graph: {argmax} at {dist:.4}");

    let s = region.nodes()[0];
    println!("contact 0 = surface vertex {s} = volume node {}, normal {:?}",
        volume.surface_map()[s], surface.normals()[s].as_slice());
    Ok(())
}
