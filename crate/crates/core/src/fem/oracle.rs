use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use once_cell::sync::OnceCell;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{FemModel, Material};
use crate::error::{Error, Result};
use crate::force::{force_vector, ForceMatrix};
use crate::mesh::{ContactRegion, SurfaceMesh, VolumeMesh};

/// Peak von Mises stress of one contact location and the volume node attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressEntry {
    pub sigma_star: f64,
    pub argmax_node: usize,
}

/// Snapshot of the oracle cache. `None` marks an unevaluated location.
#[derive(Debug, Clone, PartialEq)]
pub struct StressSweep {
    pub hash: String,
    pub entries: Vec<Option<StressEntry>>,
}

impl StressSweep {
    pub fn evaluated(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }

    /// Values of a complete sweep, or `None` if any location is missing.
    pub fn values(&self) -> Option<Vec<f64>> {
        self.entries.iter().map(|e| e.map(|e| e.sigma_star)).collect()
    }

    /// Largest evaluated σ* and its region index (lowest index on ties).
    pub fn max(&self) -> Option<(usize, StressEntry)> {
        let mut best: Option<(usize, StressEntry)> = None;
        for (f, e) in self.entries.iter().enumerate() {
            if let Some(e) = e {
                if best.is_none_or(|(_, b)| e.sigma_star > b.sigma_star) {
                    best = Some((f, *e));
                }
            }
        }
        best
    }

    /// CSV with header `f_index,sigma_star,argmax_node`, evaluated rows only.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("f_index,sigma_star,argmax_node\n");
        for (f, e) in self.entries.iter().enumerate() {
            if let Some(e) = e {
                // {:e} on f64 round-trips exactly.
                let _ = writeln!(out, "{f},{:e},{}", e.sigma_star, e.argmax_node);
            }
        }
        out
    }

    pub fn from_csv(text: &str, len: usize, hash: &str, context: &str) -> Result<Self> {
        let mut entries = vec![None; len];
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (ln == 0 && line.starts_with("f_index")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::parse(context, ln + 1, "expected 3 columns"));
            }
            let bad = |what: &str| Error::parse(context, ln + 1, format!("invalid {what}"));
            let f: usize = fields[0].parse().map_err(|_| bad("f_index"))?;
            let sigma_star: f64 = fields[1].parse().map_err(|_| bad("sigma_star"))?;
            let argmax_node: usize = fields[2].parse().map_err(|_| bad("argmax_node"))?;
            if f >= len {
                return Err(Error::parse(context, ln + 1, format!("f_index {f} out of range")));
            }
            if !(sigma_star >= 0.0) || !sigma_star.is_finite() {
                return Err(bad("sigma_star"));
            }
            entries[f] = Some(StressEntry {
                sigma_star,
                argmax_node,
            });
        }
        Ok(Self {
            hash: hash.to_string(),
            entries,
        })
    }
}

/// σ*(f) for every contact location, memoized. Each location is solved at
/// most once even under concurrent queries.
#[derive(Debug)]
pub struct StressOracle {
    model: FemModel,
    loads: Vec<Vec<(usize, f64)>>,
    slots: Vec<OnceCell<StressEntry>>,
    solves: AtomicUsize,
    magnitude: f64,
    hash: String,
}

impl StressOracle {
    pub fn new(
        surface: &SurfaceMesh,
        volume: &VolumeMesh,
        region: &ContactRegion,
        forces: &ForceMatrix,
        material: Material,
        magnitude: f64,
    ) -> Result<Self> {
        let model = FemModel::new(volume.clone(), material)?;
        Self::with_model(model, surface, region, forces, magnitude)
    }

    /// Reuses an existing factorization.
    pub fn with_model(
        model: FemModel,
        surface: &SurfaceMesh,
        region: &ContactRegion,
        forces: &ForceMatrix,
        magnitude: f64,
    ) -> Result<Self> {
        if !magnitude.is_finite() || magnitude <= 0.0 {
            return Err(Error::Validation(format!("force magnitude must be positive, got {magnitude}")));
        }
        if forces.len() != region.len() {
            return Err(Error::Validation(format!(
                "force matrix has {} rows but the region has {} nodes",
                forces.len(),
                region.len()
            )));
        }
        let loads = (0..region.len())
            .map(|f| {
                let dense = force_vector(surface, model.volume(), region, forces, f, magnitude)?;
                Ok(dense
                    .into_iter()
                    .enumerate()
                    .filter(|&(_, v)| v != 0.0)
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let hash = content_hash(&model, &loads);
        Ok(Self {
            slots: (0..loads.len()).map(|_| OnceCell::new()).collect(),
            model,
            loads,
            solves: AtomicUsize::new(0),
            magnitude,
            hash,
        })
    }

    pub fn len(&self) -> usize {
        self.loads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loads.is_empty()
    }

    pub fn model(&self) -> &FemModel {
        &self.model
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    /// Hex SHA-256 of mesh, material and all load vectors.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Number of linear solves performed so far.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::SeqCst)
    }

    pub fn load_vector(&self, f: usize) -> Result<Vec<f64>> {
        let sparse = self.loads.get(f).ok_or_else(|| self.out_of_range(f))?;
        let mut load = vec![0.0; 3 * self.model.volume().node_count()];
        for &(i, v) in sparse {
            load[i] = v;
        }
        Ok(load)
    }

    pub fn displacement(&self, f: usize) -> Result<Vec<f64>> {
        let load = self.load_vector(f)?;
        self.solves.fetch_add(1, Ordering::SeqCst);
        self.model.solve(&load)
    }

    /// Nodal von Mises field for contact at `f` (uncached).
    pub fn stress_field(&self, f: usize) -> Result<Vec<f64>> {
        Ok(self.model.von_mises(&self.displacement(f)?))
    }

    /// Cached σ*(f).
    pub fn max_stress(&self, f: usize) -> Result<StressEntry> {
        let slot = self.slots.get(f).ok_or_else(|| self.out_of_range(f))?;
        slot.get_or_try_init(|| {
            let field = self.stress_field(f)?;
            let (argmax_node, sigma_star) = field
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (w, s)| if s > best.1 { (w, s) } else { best });
            Ok(StressEntry {
                sigma_star,
                argmax_node,
            })
        })
        .copied()
    }

    pub fn cached(&self, f: usize) -> Option<StressEntry> {
        self.slots.get(f).and_then(|s| s.get().copied())
    }

    /// Evaluates every location in parallel (the brute-force ground truth).
    pub fn sweep_all(&self) -> Result<StressSweep> {
        (0..self.len()).into_par_iter().try_for_each(|f| self.max_stress(f).map(|_| ()))?;
        Ok(self.snapshot())
    }

    pub fn snapshot(&self) -> StressSweep {
        StressSweep {
            hash: self.hash.clone(),
            entries: self.slots.iter().map(|s| s.get().copied()).collect(),
        }
    }

    pub fn cache_path(&self, dir: impl AsRef<Path>) -> PathBuf {
        dir.as_ref().join(format!("{}.csv", self.hash))
    }

    /// Seeds empty slots from `<dir>/<hash>.csv`; returns the number adopted.
    /// A missing file is not an error.
    pub fn load_cache(&self, dir: impl AsRef<Path>) -> Result<usize> {
        let path = self.cache_path(dir);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let sweep = StressSweep::from_csv(&text, self.len(), &self.hash, &path.display().to_string())?;
        let mut adopted = 0;
        for (slot, entry) in self.slots.iter().zip(sweep.entries) {
            if let Some(e) = entry {
                if slot.set(e).is_ok() {
                    adopted += 1;
                }
            }
        }
        Ok(adopted)
    }

    /// Writes all evaluated entries to `<dir>/<hash>.csv`.
    pub fn save_cache(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = self.cache_path(dir);
        crate::mesh::write_file(&path, &self.snapshot().to_csv())?;
        Ok(path)
    }

    fn out_of_range(&self, f: usize) -> Error {
        Error::Validation(format!("contact index {f} out of range (region has {} nodes)", self.len()))
    }
}

fn content_hash(model: &FemModel, loads: &[Vec<(usize, f64)>]) -> String {
    let mut h = Sha256::new();
    let v = model.volume();
    h.update((v.node_count() as u64).to_le_bytes());
    for p in v.nodes() {
        for c in p.iter() {
            h.update(c.to_bits().to_le_bytes());
        }
    }
    for t in v.tets() {
        for &i in t {
            h.update((i as u64).to_le_bytes());
        }
    }
    h.update(b"fixed");
    for &i in v.fixed_nodes() {
        h.update((i as u64).to_le_bytes());
    }
    let m = model.material();
    h.update(m.young_modulus.to_bits().to_le_bytes());
    h.update(m.poisson_ratio.to_bits().to_le_bytes());
    for row in loads {
        h.update(b"row");
        for &(i, x) in row {
            h.update((i as u64).to_le_bytes());
            h.update(x.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}
