use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use super::{bbox_diagonal, read_file, strip_comment, write_file, Vec3};
use crate::error::{Error, Result};

/// Triangulated boundary surface with outward, area-weighted vertex normals.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    normals: Vec<Vec3>,
}

impl SurfaceMesh {
    /// Validates the connectivity and computes vertex normals.
    ///
    /// Triangles are expected to be wound counter-clockwise seen from outside.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        let diag = bbox_diagonal(&vertices);
        let area_tol = 1e-14 * diag * diag;
        let mut sums = vec![Vec3::zeros(); n];
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= n) {
                return Err(Error::Validation(format!(
                    "triangle {t} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            // |cross| is twice the area, so summing cross products weights by area.
            let cross = (b - a).cross(&(c - a));
            if 0.5 * cross.norm() <= area_tol {
                return Err(Error::Validation(format!("triangle {t} is degenerate (zero area)")));
            }
            for &v in tri {
                sums[v] += cross;
            }
        }
        let mut normals = Vec::with_capacity(n);
        for (v, s) in sums.into_iter().enumerate() {
            let len = s.norm();
            if len == 0.0 || !len.is_finite() {
                return Err(Error::Validation(format!(
                    "vertex {v} has no well-defined normal (isolated or cancelling faces)"
                )));
            }
            normals.push(s / len);
        }
        Ok(Self {
            vertices,
            triangles,
            normals,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_off_str(&read_file(path)?, &path.display().to_string())
    }

    /// Parses ASCII OFF: `OFF`, a counts line, vertex lines and `3 i j k` faces.
    pub fn from_off_str(text: &str, context: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, strip_comment(l)))
            .filter(|(_, l)| !l.is_empty());

        let (lineno, header) = lines
            .next()
            .ok_or_else(|| Error::parse(context, 1, "empty file"))?;
        let mut header_tokens = header.split_whitespace();
        if header_tokens.next() != Some("OFF") {
            return Err(Error::parse(context, lineno, "missing OFF header"));
        }
        // Counts may share the header line.
        let rest: Vec<&str> = header_tokens.collect();
        let (count_line, counts) = if rest.is_empty() {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| Error::parse(context, lineno, "missing counts line"))?;
            (ln, l.split_whitespace().collect::<Vec<_>>())
        } else {
            (lineno, rest)
        };
        if counts.len() < 2 {
            return Err(Error::parse(context, count_line, "counts line needs vertex and face counts"));
        }
        let nv: usize = parse_token(counts[0], context, count_line)?;
        let nf: usize = parse_token(counts[1], context, count_line)?;

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| Error::parse(context, count_line, "unexpected end of file in vertex block"))?;
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() < 3 {
                return Err(Error::parse(context, ln, "vertex line needs three coordinates"));
            }
            let x: f64 = parse_token(toks[0], context, ln)?;
            let y: f64 = parse_token(toks[1], context, ln)?;
            let z: f64 = parse_token(toks[2], context, ln)?;
            vertices.push(Vec3::new(x, y, z));
        }

        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| Error::parse(context, count_line, "unexpected end of file in face block"))?;
            let toks: Vec<&str> = l.split_whitespace().collect();
            let arity: usize = parse_token(toks[0], context, ln)?;
            if arity != 3 {
                return Err(Error::parse(context, ln, format!("only triangles are supported, got a {arity}-gon")));
            }
            if toks.len() < 4 {
                return Err(Error::parse(context, ln, "face line needs three indices"));
            }
            let mut tri = [0usize; 3];
            for (k, slot) in tri.iter_mut().enumerate() {
                *slot = parse_token(toks[k + 1], context, ln)?;
            }
            triangles.push(tri);
        }
        Self::new(vertices, triangles)
    }

    pub fn to_off_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "OFF");
        let _ = writeln!(s, "{} {} 0", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_off_string())
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.vertices)
    }

    /// Undirected edges as `(min, max)` vertex pairs, sorted.
    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        let mut edges = BTreeSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges
    }
}

fn parse_token<T: std::str::FromStr>(tok: &str, context: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    tok.parse::<T>()
        .map_err(|e| Error::parse(context, line, format!("bad token {tok:?}: {e}")))
}


#[cfg(test)]
pub(crate) use tests::CUBE_OFF;
