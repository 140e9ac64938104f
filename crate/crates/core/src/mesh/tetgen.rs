use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::{bbox_diagonal, read_file, read_index_list, strip_comment, write_file, SurfaceMesh, Vec3};
use crate::error::{Error, Result};

/// Tetrahedral body with its link to the boundary surface and the anchored nodes.
#[derive(Debug, Clone)]
pub struct VolumeMesh {
    nodes: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    surface_map: Vec<usize>,
    fixed_nodes: Vec<usize>,
    repaired_tets: usize,
}

impl VolumeMesh {
    /// Builds the mesh, flips inverted tets, matches every surface vertex to
    /// the nearest volume node and validates the anchoring.
    ///
    /// `fixed_nodes` are 0-based volume node indices.
    pub fn new(
        surface: &SurfaceMesh,
        nodes: Vec<Vec3>,
        mut tets: Vec<[usize; 4]>,
        fixed_nodes: Vec<usize>,
    ) -> Result<Self> {
        let n = nodes.len();
        let diag = bbox_diagonal(&nodes);
        let vol_tol = 1e-14 * diag.powi(3);
        let mut repaired = 0;
        let mut used = vec![false; n];
        for (e, tet) in tets.iter_mut().enumerate() {
            if let Some(&bad) = tet.iter().find(|&&v| v >= n) {
                return Err(Error::Validation(format!(
                    "tet {e} references node {bad} but the mesh has {n} nodes"
                )));
            }
            let vol = signed_volume(&nodes, tet);
            if vol.abs() <= vol_tol {
                return Err(Error::Validation(format!("tet {e} is degenerate (zero volume)")));
            }
            if vol < 0.0 {
                tet.swap(2, 3);
                repaired += 1;
            }
            for &v in tet.iter() {
                used[v] = true;
            }
        }

        let surface_map = match_surface(surface, &nodes, 1e-8 * diag)?;
        for (s, &v) in surface_map.iter().enumerate() {
            if !used[v] {
                return Err(Error::Validation(format!(
                    "surface vertex {s} maps to volume node {v}, which belongs to no tet"
                )));
            }
        }

        let fixed: BTreeSet<usize> = fixed_nodes.into_iter().collect();
        if let Some(&bad) = fixed.iter().find(|&&v| v >= n) {
            return Err(Error::Validation(format!("fixed node {bad} out of range ({n} nodes)")));
        }
        let fixed: Vec<usize> = fixed.into_iter().collect();
        check_anchoring(&nodes, &fixed, diag)?;

        Ok(Self {
            nodes,
            tets,
            surface_map,
            fixed_nodes: fixed,
            repaired_tets: repaired,
        })
    }

    /// Loads TetGen `.node`/`.ele` files and a fixed-node list.
    ///
    /// Fixed indices use the same numbering base as the `.node` file.
    pub fn load(
        surface: &SurfaceMesh,
        node_path: impl AsRef<Path>,
        ele_path: impl AsRef<Path>,
        fixed_path: impl AsRef<Path>,
    ) -> Result<Self> {
        let node_path = node_path.as_ref();
        let ele_path = ele_path.as_ref();
        let (nodes, base) = parse_node(&read_file(node_path)?, &node_path.display().to_string())?;
        let tets = parse_ele(&read_file(ele_path)?, base, &ele_path.display().to_string())?;
        let fixed = read_index_list(fixed_path.as_ref())?
            .into_iter()
            .map(|i| {
                i.checked_sub(base)
                    .ok_or_else(|| Error::Validation(format!("fixed node {i} below numbering base {base}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(surface, nodes, tets, fixed)
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    /// Volume node index for each surface vertex.
    pub fn surface_map(&self) -> &[usize] {
        &self.surface_map
    }

    /// Sorted, de-duplicated anchored node indices.
    pub fn fixed_nodes(&self) -> &[usize] {
        &self.fixed_nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of tets whose orientation was flipped while loading.
    pub fn repaired_tets(&self) -> usize {
        self.repaired_tets
    }

    pub fn tet_volume(&self, e: usize) -> f64 {
        signed_volume(&self.nodes, &self.tets[e])
    }

    pub fn to_node_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} 3 0 0", self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {} {}", p.x, p.y, p.z);
        }
        s
    }

    pub fn to_ele_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} 4 0", self.tets.len());
        for (i, t) in self.tets.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {} {} {}", t[0], t[1], t[2], t[3]);
        }
        s
    }

    /// Writes 0-based `.node`, `.ele` and fixed-node files.
    pub fn save(
        &self,
        node_path: impl AsRef<Path>,
        ele_path: impl AsRef<Path>,
        fixed_path: impl AsRef<Path>,
    ) -> Result<()> {
        write_file(node_path.as_ref(), &self.to_node_string())?;
        write_file(ele_path.as_ref(), &self.to_ele_string())?;
        write_file(fixed_path.as_ref(), &super::format_index_list(&self.fixed_nodes))
    }
}

pub(crate) fn signed_volume(nodes: &[Vec3], tet: &[usize; 4]) -> f64 {
    let a = nodes[tet[0]];
    (nodes[tet[1]] - a).cross(&(nodes[tet[2]] - a)).dot(&(nodes[tet[3]] - a)) / 6.0
}

fn check_anchoring(nodes: &[Vec3], fixed: &[usize], diag: f64) -> Result<()> {
    if fixed.len() < 3 {
        return Err(Error::Validation(format!(
            "at least three non-collinear fixed nodes are required, got {}",
            fixed.len()
        )));
    }
    let p0 = nodes[fixed[0]];
    let p1 = fixed
        .iter()
        .map(|&i| nodes[i])
        .max_by(|a, b| (a - p0).norm().total_cmp(&(b - p0).norm()))
        .unwrap();
    let axis = p1 - p0;
    let tol = 1e-9 * diag;
    let spread = if axis.norm() <= tol {
        0.0
    } else {
        let dir = axis.normalize();
        fixed
            .iter()
            .map(|&i| (nodes[i] - p0).cross(&dir).norm())
            .fold(0.0, f64::max)
    };
    if spread <= tol {
        return Err(Error::Validation("fixed nodes are collinear".into()));
    }
    Ok(())
}

/// Nearest-position matching of surface vertices to volume nodes using a hash
/// grid whose cell size equals the matching tolerance.
fn match_surface(surface: &SurfaceMesh, nodes: &[Vec3], tol: f64) -> Result<Vec<usize>> {
    let cell = if tol > 0.0 { tol } else { f64::MIN_POSITIVE };
    let key = |p: &Vec3| {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in nodes.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let mut map = Vec::with_capacity(surface.vertex_count());
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for (s, p) in surface.vertices().iter().enumerate() {
        let (kx, ky, kz) = key(p);
        let mut best: Option<(f64, usize)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&(kx + dx, ky + dy, kz + dz)) else {
                        continue;
                    };
                    for &i in bucket {
                        let d = (nodes[i] - p).norm();
                        if d <= tol {
                            let better = match best {
                                None => true,
                                Some((bd, bi)) => d < bd || (d == bd && i < bi),
                            };
                            if better {
                                best = Some((d, i));
                            }
                        }
                    }
                }
            }
        }
        let Some((_, v)) = best else {
            return Err(Error::Validation(format!(
                "surface vertex {s} at ({}, {}, {}) has no volume node within {tol:e}",
                p.x, p.y, p.z
            )));
        };
        if let Some(prev) = owner.insert(v, s) {
            return Err(Error::Validation(format!(
                "surface vertices {prev} and {s} both map to volume node {v}"
            )));
        }
        map.push(v);
    }
    Ok(map)
}

/// Parses a TetGen `.node` file. Returns the positions and the numbering base
/// (0 or 1) detected from the first node index.
pub fn parse_node(text: &str, context: &str) -> Result<(Vec<Vec3>, usize)> {
    let mut lines = data_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| Error::parse(context, 1, "empty file"))?;
    let h: Vec<usize> = parse_all(&header, context, ln)?;
    if h.len() < 2 {
        return Err(Error::parse(context, ln, "header needs node count and dimension"));
    }
    if h[1] != 3 {
        return Err(Error::parse(context, ln, format!("expected dimension 3, got {}", h[1])));
    }
    let count = h[0];
    let mut nodes = Vec::with_capacity(count);
    let mut base = 0;
    for k in 0..count {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| Error::parse(context, ln, format!("expected {count} nodes, found {k}")))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() < 4 {
            return Err(Error::parse(context, ln, "node line needs index and three coordinates"));
        }
        let idx: usize = toks[0]
            .parse()
            .map_err(|e| Error::parse(context, ln, format!("bad node index: {e}")))?;
        if k == 0 {
            if idx > 1 {
                return Err(Error::parse(context, ln, "first node index must be 0 or 1"));
            }
            base = idx;
        }
        if idx != k + base {
            return Err(Error::parse(context, ln, format!("node index {idx} out of sequence")));
        }
        let mut xyz = [0.0; 3];
        for (c, slot) in xyz.iter_mut().enumerate() {
            *slot = toks[c + 1]
                .parse()
                .map_err(|e| Error::parse(context, ln, format!("bad coordinate: {e}")))?;
        }
        nodes.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
    }
    Ok((nodes, base))
}

/// Parses a TetGen `.ele` file with linear tets. Node references are shifted
/// by `node_base` to 0-based indices.
pub fn parse_ele(text: &str, node_base: usize, context: &str) -> Result<Vec<[usize; 4]>> {
    let mut lines = data_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| Error::parse(context, 1, "empty file"))?;
    let h: Vec<usize> = parse_all(&header, context, ln)?;
    if h.len() < 2 || h[1] != 4 {
        return Err(Error::parse(context, ln, "header must be `count 4 [attrs]`"));
    }
    let count = h[0];
    let mut tets = Vec::with_capacity(count);
    let mut elem_base = 0;
    for k in 0..count {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| Error::parse(context, ln, format!("expected {count} tets, found {k}")))?;
        let vals: Vec<&str> = l.split_whitespace().collect();
        if vals.len() < 5 {
            return Err(Error::parse(context, ln, "ele line needs index and four node indices"));
        }
        let parse = |t: &str| {
            t.parse::<usize>()
                .map_err(|e| Error::parse(context, ln, format!("bad index {t:?}: {e}")))
        };
        let idx = parse(vals[0])?;
        if k == 0 {
            if idx > 1 {
                return Err(Error::parse(context, ln, "first element index must be 0 or 1"));
            }
            elem_base = idx;
        }
        if idx != k + elem_base {
            return Err(Error::parse(context, ln, format!("element index {idx} out of sequence")));
        }
        let mut tet = [0usize; 4];
        for (c, slot) in tet.iter_mut().enumerate() {
            let v = parse(vals[c + 1])?;
            *slot = v
                .checked_sub(node_base)
                .ok_or_else(|| Error::parse(context, ln, format!("node {v} below numbering base")))?;
        }
        tets.push(tet);
    }
    Ok(tets)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, String)> + '_ {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l).to_string()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_all(line: &str, context: &str, ln: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|e| Error::parse(context, ln, format!("bad integer {t:?}: {e}")))
        })
        .collect()
}
