use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::path::Path;

use super::{read_index_list, SurfaceMesh};
use crate::error::{Error, Result};

/// Ordered set of surface vertices where a contact force may act, together
/// with the edge graph the surface induces on them.
#[derive(Debug, Clone)]
pub struct ContactRegion {
    nodes: Vec<usize>,
    index_of: HashMap<usize, usize>,
    /// Per region node: `(neighbour region index, Euclidean edge length)`, sorted by neighbour.
    adjacency: Vec<Vec<(usize, f64)>>,
    component: Vec<usize>,
    component_count: usize,
}

impl ContactRegion {
    /// `nodes` are surface vertex indices; their order defines region indices.
    pub fn new(surface: &SurfaceMesh, nodes: Vec<usize>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Validation("contact region is empty".into()));
        }
        let mut index_of = HashMap::with_capacity(nodes.len());
        for (i, &v) in nodes.iter().enumerate() {
            if v >= surface.vertex_count() {
                return Err(Error::Validation(format!(
                    "contact node {v} is not a surface vertex ({} vertices)",
                    surface.vertex_count()
                )));
            }
            if index_of.insert(v, i).is_some() {
                return Err(Error::Validation(format!("contact node {v} listed twice")));
            }
        }

        // Edge -> number of incident triangles, restricted to the region.
        let mut edge_faces: HashMap<(usize, usize), usize> = HashMap::new();
        for t in surface.triangles() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if index_of.contains_key(&a) && index_of.contains_key(&b) {
                    *edge_faces.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (&(a, b), &faces) in &edge_faces {
            if faces > 2 {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) in the contact region borders {faces} triangles"
                )));
            }
            let len = (surface.vertices()[a] - surface.vertices()[b]).norm();
            let (ia, ib) = (index_of[&a], index_of[&b]);
            adjacency[ia].push((ib, len));
            adjacency[ib].push((ia, len));
        }
        for nbrs in &mut adjacency {
            nbrs.sort_by_key(|&(j, _)| j);
        }

        let (component, component_count) = label_components(&adjacency);
        Ok(Self {
            nodes,
            index_of,
            adjacency,
            component,
            component_count,
        })
    }

    pub fn load(surface: &SurfaceMesh, path: impl AsRef<Path>) -> Result<Self> {
        Self::new(surface, read_index_list(path.as_ref())?)
    }

    /// Surface vertex indices in region order.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, surface_vertex: usize) -> Option<usize> {
        self.index_of.get(&surface_vertex).copied()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Undirected edges `(i, j)` with `i < j` in region indices, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            out.extend(nbrs.iter().filter(|&&(j, _)| j > i).map(|&(j, _)| (i, j)));
        }
        out
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    /// Component label of each region node, numbered by first appearance.
    pub fn components(&self) -> &[usize] {
        &self.component
    }

    pub fn is_connected(&self) -> bool {
        self.component_count == 1
    }

    /// Shortest-path distances over the region's edge graph from `source`.
    /// Unreachable nodes get `f64::INFINITY`.
    pub fn geodesic_distances(&self, source: usize) -> Vec<f64> {
        let n = self.nodes.len();
        assert!(source < n, "source {source} out of range for region of {n} nodes");
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Reverse(HeapEntry(0.0, source)));
        while let Some(Reverse(HeapEntry(d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adjacency[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse(HeapEntry(nd, v)));
                }
            }
        }
        dist
    }

    /// All-pairs geodesic distances, row `i` = distances from region node `i`.
    pub fn all_geodesics(&self) -> Vec<Vec<f64>> {
        use rayon::prelude::*;
        (0..self.len()).into_par_iter().map(|s| self.geodesic_distances(s)).collect()
    }
}

#[derive(PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

fn label_components(adjacency: &[Vec<(usize, f64)>]) -> (Vec<usize>, usize) {
    let n = adjacency.len();
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        stack.push(start);
        while let Some(u) = stack.pop() {
            for &(v, _) in &adjacency[u] {
                if label[v] == usize::MAX {
                    label[v] = count;
                    stack.push(v);
                }
            }
        }
        count += 1;
    }
    (label, count)
}


#[cfg(test)]
pub(crate) use tests::jittered_grid;
