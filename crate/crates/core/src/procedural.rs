//! Procedurally generated anchored box benchmarks.
//!
//! A box is split into `nx * ny * nz` cells, each cut into six tets along its
//! main diagonal (Kuhn triangulation, conforming across cells). The boundary
//! triangles become the surface mesh, written with its own vertex numbering so
//! that loading exercises the nearest-position surface matching.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::mesh::{format_index_list, write_file, ContactRegion, SurfaceMesh, Vec3, VolumeMesh};

/// Axis-aligned box `[0, size]` with a regular cell grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxGrid {
    pub size: [f64; 3],
    pub divisions: [usize; 3],
}

/// The six axis orderings; each walks the cell diagonal through one tet.
const KUHN_PATHS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

impl BoxGrid {
    pub fn new(size: [f64; 3], divisions: [usize; 3]) -> Self {
        assert!(divisions.iter().all(|&d| d > 0), "every axis needs at least one cell");
        Self { size, divisions }
    }

    fn coord(&self, axis: usize, k: usize) -> f64 {
        let n = self.divisions[axis];
        if k == n {
            self.size[axis]
        } else {
            self.size[axis] * k as f64 / n as f64
        }
    }

    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.divisions;
        i + (nx + 1) * (j + (ny + 1) * k)
    }

    pub fn nodes(&self) -> Vec<Vec3> {
        let [nx, ny, nz] = self.divisions;
        let mut out = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
        for k in 0..=nz {
            for j in 0..=ny {
                for i in 0..=nx {
                    out.push(Vec3::new(self.coord(0, i), self.coord(1, j), self.coord(2, k)));
                }
            }
        }
        out
    }

    /// Positively oriented tets, six per cell.
    pub fn tets(&self) -> Vec<[usize; 4]> {
        let [nx, ny, nz] = self.divisions;
        let mut out = Vec::with_capacity(6 * nx * ny * nz);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    for path in KUHN_PATHS {
                        let mut c = [i, j, k];
                        let mut tet = [self.node_index(c[0], c[1], c[2]); 4];
                        for (step, &axis) in path.iter().enumerate() {
                            c[axis] += 1;
                            tet[step + 1] = self.node_index(c[0], c[1], c[2]);
                        }
                        out.push(tet);
                    }
                }
            }
        }
        let nodes = self.nodes();
        for tet in &mut out {
            let a = nodes[tet[0]];
            let vol = (nodes[tet[1]] - a).cross(&(nodes[tet[2]] - a)).dot(&(nodes[tet[3]] - a));
            if vol < 0.0 {
                tet.swap(2, 3);
            }
        }
        out
    }

    /// Surface mesh of the box boundary and the tet mesh, anchored at the
    /// nodes selected by `fixed`.
    pub fn meshes(&self, fixed: impl Fn(&Vec3) -> bool) -> Result<(SurfaceMesh, VolumeMesh)> {
        let nodes = self.nodes();
        let tets = self.tets();
        let (surface_nodes, faces) = boundary_faces(nodes.len(), &tets);
        let local: HashMap<usize, usize> = surface_nodes.iter().enumerate().map(|(s, &v)| (v, s)).collect();
        let surface = SurfaceMesh::new(
            surface_nodes.iter().map(|&v| nodes[v]).collect(),
            faces.iter().map(|f| f.map(|v| local[&v])).collect(),
        )?;
        let fixed_nodes: Vec<usize> = (0..nodes.len()).filter(|&v| fixed(&nodes[v])).collect();
        let volume = VolumeMesh::new(&surface, nodes, tets, fixed_nodes)?;
        Ok((surface, volume))
    }
}

/// Boundary triangles (outward wound) and the sorted list of nodes they use.
fn boundary_faces(node_count: usize, tets: &[[usize; 4]]) -> (Vec<usize>, Vec<[usize; 3]>) {
    let mut count: HashMap<[usize; 3], (usize, [usize; 3])> = HashMap::new();
    for t in tets {
        let faces = [[t[0], t[2], t[1]], [t[0], t[1], t[3]], [t[0], t[3], t[2]], [t[1], t[2], t[3]]];
        for f in faces {
            let mut key = f;
            key.sort_unstable();
            count.entry(key).or_insert((0, f)).0 += 1;
        }
    }
    let mut faces: Vec<([usize; 3], [usize; 3])> = count
        .into_iter()
        .filter(|(_, (c, _))| *c == 1)
        .map(|(k, (_, f))| (k, f))
        .collect();
    faces.sort_unstable_by_key(|(k, _)| *k);
    let mut used = vec![false; node_count];
    for (_, f) in &faces {
        for &v in f {
            used[v] = true;
        }
    }
    let nodes = (0..node_count).filter(|&v| used[v]).collect();
    (nodes, faces.into_iter().map(|(_, f)| f).collect())
}

/// A self-contained worst-case load problem.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: String,
    pub surface: SurfaceMesh,
    pub volume: VolumeMesh,
    pub region: ContactRegion,
}

/// Paths written by [`Benchmark::write`].
#[derive(Debug, Clone)]
pub struct BenchmarkFiles {
    pub surface: PathBuf,
    pub node: PathBuf,
    pub ele: PathBuf,
    pub fixed: PathBuf,
    pub region: PathBuf,
}

impl Benchmark {
    /// Cantilever plate clamped along `x = 0`; contact region is the whole top face.
    pub fn cantilever_plate(size: [f64; 3], divisions: [usize; 3]) -> Result<Self> {
        let grid = BoxGrid::new(size, divisions);
        let (surface, volume) = grid.meshes(|p| p.x == 0.0)?;
        let top: Vec<usize> = (0..surface.vertex_count())
            .filter(|&v| surface.vertices()[v].z == size[2])
            .collect();
        let region = ContactRegion::new(&surface, top)?;
        Ok(Self {
            name: "plate".into(),
            surface,
            volume,
            region,
        })
    }

    /// The default desk-scale plate: 4 x 2 x 0.25 with 24 x 12 x 3 cells,
    /// 1300 volume nodes and 325 contact nodes.
    pub fn desk_plate() -> Result<Self> {
        Self::cantilever_plate([4.0, 2.0, 0.25], [24, 12, 3])
    }

    /// Slender bar clamped at `x = 0`; contact region is the top face.
    pub fn cantilever_bar(length: f64, side: f64, divisions: [usize; 3]) -> Result<Self> {
        let mut b = Self::cantilever_plate([length, side, side], divisions)?;
        b.name = "bar".into();
        Ok(b)
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<BenchmarkFiles> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
        let files = BenchmarkFiles {
            surface: dir.join(format!("{}.off", self.name)),
            node: dir.join(format!("{}.node", self.name)),
            ele: dir.join(format!("{}.ele", self.name)),
            fixed: dir.join(format!("{}.fixed", self.name)),
            region: dir.join(format!("{}.region", self.name)),
        };
        self.surface.save(&files.surface)?;
        self.volume.save(&files.node, &files.ele, &files.fixed)?;
        write_file(&files.region, &format_index_list(self.region.nodes()))?;
        Ok(files)
    }
}
