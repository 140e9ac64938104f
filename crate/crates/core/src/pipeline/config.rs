use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::design::{DesignOptions, Method};
use crate::error::{Error, Result};
use crate::fem::Material;
use crate::spectral::{BasisOptions, BasisOrder};

/// Environment variable that overrides `cache_dir`.
pub const CACHE_DIR_ENV: &str = "WCL_CACHE_DIR";

/// Every knob of a run. Read from a TOML file with flat top-level keys;
/// relative paths are taken relative to the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub surface: PathBuf,
    pub node: PathBuf,
    pub ele: PathBuf,
    pub fixed: PathBuf,
    pub region: PathBuf,

    pub young_modulus: f64,
    pub poisson_ratio: f64,
    pub force_magnitude: f64,
    /// Footprint radius as a fraction of the surface bounding-box diagonal.
    pub footprint_radius_rel: f64,
    /// Absolute footprint radius; takes precedence when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub footprint_radius: Option<f64>,

    pub p: usize,
    pub basis_order: BasisOrder,
    pub exclude_constant: bool,
    pub intercept: bool,

    pub method: Method,
    pub n_fl: usize,
    pub top_k: usize,
    pub seed: u64,

    pub methods: Vec<Method>,
    pub n_fl_list: Vec<usize>,
    pub deltas: Vec<f64>,
    pub trials: usize,

    pub armijo_alpha: f64,
    pub armijo_beta: f64,
    pub max_backtracks: usize,
    pub tolerance: f64,
    pub window: usize,
    pub max_iterations: usize,
    pub potential_alpha: f64,

    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = Material::default();
        let d = DesignOptions::default();
        Self {
            name: "structure".into(),
            surface: PathBuf::new(),
            node: PathBuf::new(),
            ele: PathBuf::new(),
            fixed: PathBuf::new(),
            region: PathBuf::new(),
            young_modulus: m.young_modulus,
            poisson_ratio: m.poisson_ratio,
            force_magnitude: 1.0,
            footprint_radius_rel: 0.02,
            footprint_radius: None,
            p: 15,
            basis_order: BasisOrder::Smallest,
            exclude_constant: true,
            intercept: false,
            method: Method::Greedy,
            n_fl: 25,
            top_k: 40,
            seed: 0,
            methods: Method::ALL.to_vec(),
            n_fl_list: vec![25, 50, 100],
            deltas: vec![0.0, 0.01, 0.05, 0.1],
            trials: 10,
            armijo_alpha: d.armijo_alpha,
            armijo_beta: d.armijo_beta,
            max_backtracks: d.max_backtracks,
            tolerance: d.tolerance,
            window: d.window,
            max_iterations: d.max_iterations,
            potential_alpha: d.potential_alpha,
            cache_dir: PathBuf::from(".wcl-cache"),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads, resolves paths against the file's directory, applies
    /// `WCL_CACHE_DIR` and validates.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.apply_env();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.surface,
            &mut self.node,
            &mut self.ele,
            &mut self.fixed,
            &mut self.region,
            &mut self.cache_dir,
            &mut self.output_dir,
        ] {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(CACHE_DIR_ENV).filter(|d| !d.is_empty()) {
            self.cache_dir = PathBuf::from(dir);
        }
    }

    pub fn material(&self) -> Result<Material> {
        Material::new(self.young_modulus, self.poisson_ratio)
    }

    pub fn basis_options(&self) -> BasisOptions {
        BasisOptions {
            order: self.basis_order,
            exclude_constant: self.exclude_constant,
        }
    }

    pub fn design_options(&self) -> DesignOptions {
        DesignOptions {
            armijo_alpha: self.armijo_alpha,
            armijo_beta: self.armijo_beta,
            max_backtracks: self.max_backtracks,
            tolerance: self.tolerance,
            window: self.window,
            max_iterations: self.max_iterations,
            potential_alpha: self.potential_alpha,
        }
    }

    /// Checks everything that does not need the meshes loaded. Sizes that
    /// depend on `n_F` are checked when the problem is built.
    pub fn validate(&self) -> Result<()> {
        for (key, p) in [
            ("surface", &self.surface),
            ("node", &self.node),
            ("ele", &self.ele),
            ("fixed", &self.fixed),
            ("region", &self.region),
        ] {
            if p.as_os_str().is_empty() {
                return Err(Error::Config(format!("missing key '{key}'")));
            }
            if !p.is_file() {
                return Err(Error::Config(format!("{key} file {} does not exist", p.display())));
            }
        }
        self.validate_parameters()
    }

    /// Checks the numeric parameters only.
    pub fn validate_parameters(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.material().map_err(|e| Error::Config(e.to_string()))?;
        self.design_options().validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.force_magnitude > 0.0) || !self.force_magnitude.is_finite() {
            return bad(format!("force_magnitude must be positive, got {}", self.force_magnitude));
        }
        if !(self.footprint_radius_rel >= 0.0) {
            return bad(format!("footprint_radius_rel must be non-negative, got {}", self.footprint_radius_rel));
        }
        if let Some(r) = self.footprint_radius {
            if !(r >= 0.0) {
                return bad(format!("footprint_radius must be non-negative, got {r}"));
            }
        }
        if self.p == 0 {
            return bad("p must be positive".into());
        }
        if self.n_fl == 0 || self.top_k == 0 || self.trials == 0 {
            return bad("n_fl, top_k and trials must be positive".into());
        }
        if self.n_fl_list.contains(&0) {
            return bad("n_fl_list entries must be positive".into());
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
            return bad(format!("deltas must be non-negative, got {d}"));
        }
        Ok(())
    }
}
