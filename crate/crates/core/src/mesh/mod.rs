//! Surface and volume meshes, fixed boundaries and contact regions.
//!
//! Surfaces are read from ASCII OFF files, volumes from TetGen `.node`/`.ele`
//! pairs, and fixed-node and contact-region lists from plain text files with
//! one integer per line.

mod off;
mod region;
mod tetgen;

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

pub use off::SurfaceMesh;
#[cfg(test)]
pub(crate) use off::CUBE_OFF;
#[cfg(test)]
pub(crate) use region::jittered_grid;
pub use region::ContactRegion;
pub use tetgen::{parse_ele, parse_node, VolumeMesh};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Parses a list of non-negative integers, one per line. Blank lines and
/// anything after `#` are ignored.
pub fn parse_index_list(text: &str, context: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let value = line
            .parse::<usize>()
            .map_err(|e| Error::parse(context, lineno + 1, format!("expected index, got {line:?}: {e}")))?;
        out.push(value);
    }
    Ok(out)
}

pub fn format_index_list(indices: &[usize]) -> String {
    let mut s = String::with_capacity(indices.len() * 6);
    for i in indices {
        let _ = writeln!(s, "{i}");
    }
    s
}

pub fn read_index_list(path: &Path) -> Result<Vec<usize>> {
    let text = read_file(path)?;
    parse_index_list(&text, &path.display().to_string())
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

/// Length of the diagonal of the axis-aligned bounding box of `points`.
pub fn bbox_diagonal(points: &[Vec3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}
