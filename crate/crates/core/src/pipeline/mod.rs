//! End-to-end orchestration: problem setup, brute-force ground truth, single
//! method runs and the method × budget × tolerance evaluation grid.

mod config;
mod report;

use std::path::Path;

use nalgebra::DMatrix;
use once_cell::sync::OnceCell;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{RunConfig, CACHE_DIR_ENV};
pub use report::{lower_median, Report, ReportRow, RunReport, Structure, NodeLabel, Role};

use crate::design::{
    greedy_round, phi_g_subset, phi_v_subset, sample_kmeans, sample_levscore, sample_probability, sample_uniform,
    solve_relaxation, DesignOptions, DesignSet, Method, Relaxation,
};
use crate::error::{Error, Result};
use crate::fem::{StressOracle, StressSweep};
use crate::force::{design_matrix, DesignMatrix, ForceMatrix};
use crate::mesh::{ContactRegion, SurfaceMesh, VolumeMesh};
use crate::procedural::Benchmark;
use crate::spectral::{laplacian_basis_with, LaplacianBasis};
use crate::surrogate::{evaluate_k, fit_on, predict, rank_and_refine, ranking};

/// Meshes, force model, basis, design matrix and the stress oracle of one
/// structure.
#[derive(Debug)]
pub struct Problem {
    pub name: String,
    pub surface: SurfaceMesh,
    pub volume: VolumeMesh,
    pub region: ContactRegion,
    pub forces: ForceMatrix,
    pub basis: LaplacianBasis,
    pub design: DesignMatrix,
    pub oracle: StressOracle,
    geodesics: OnceCell<Vec<Vec<f64>>>,
}

impl Problem {
    /// Loads the mesh files named in the configuration.
    pub fn load(config: &RunConfig) -> Result<Self> {
        let surface = SurfaceMesh::load(&config.surface)?;
        let volume = VolumeMesh::load(&surface, &config.node, &config.ele, &config.fixed)?;
        let region = ContactRegion::load(&surface, &config.region)?;
        Self::new(config.name.clone(), surface, volume, region, config)
    }

    pub fn from_benchmark(benchmark: Benchmark, config: &RunConfig) -> Result<Self> {
        Self::new(benchmark.name, benchmark.surface, benchmark.volume, benchmark.region, config)
    }

    pub fn new(
        name: String,
        surface: SurfaceMesh,
        volume: VolumeMesh,
        region: ContactRegion,
        config: &RunConfig,
    ) -> Result<Self> {
        config.validate_parameters()?;
        let n_f = region.len();
        if config.n_fl > n_f || config.n_fl_list.iter().any(|&n| n > n_f) {
            return Err(Error::Config(format!("training budgets must not exceed n_F = {n_f}")));
        }
        if config.top_k > n_f {
            return Err(Error::Config(format!("top_k = {} exceeds n_F = {n_f}", config.top_k)));
        }
        let radius = config
            .footprint_radius
            .unwrap_or(config.footprint_radius_rel * surface.bbox_diagonal());
        let forces = ForceMatrix::build(&region, radius)?;
        let basis = laplacian_basis_with(&region, config.p, config.basis_options())?;
        let design = design_matrix(&forces, &basis)?;
        let oracle = StressOracle::new(
            &surface,
            &volume,
            &region,
            &forces,
            config.material()?,
            config.force_magnitude,
        )?;
        Ok(Self {
            name,
            surface,
            volume,
            region,
            forces,
            basis,
            design,
            oracle,
            geodesics: OnceCell::new(),
        })
    }

    pub fn n_f(&self) -> usize {
        self.region.len()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        self.design.matrix()
    }

    /// All-pairs geodesic distances on the contact region, computed once.
    pub fn geodesics(&self) -> &[Vec<f64>] {
        self.geodesics.get_or_init(|| self.region.all_geodesics())
    }

    pub fn structure(&self, truth: Option<&GroundTruth>) -> Structure {
        Structure {
            name: self.name.clone(),
            n_w: self.volume.node_count(),
            n_s: self.surface.vertex_count(),
            n_f: self.n_f(),
            sigma_star: truth.map(|t| t.sigma_star),
            argmax_f: truth.map(|t| t.argmax_f),
            argmax_node: truth.map(|t| t.argmax_node),
        }
    }
}

/// σ*(f) for every contact location and the overall worst case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub sigma: Vec<f64>,
    pub argmax_nodes: Vec<usize>,
    pub sigma_star: f64,
    pub argmax_f: usize,
    pub argmax_node: usize,
    /// Solves performed by this sweep (zero on a warm cache).
    pub new_solves: usize,
}

impl GroundTruth {
    pub fn from_sweep(sweep: &StressSweep, new_solves: usize) -> Result<Self> {
        let entries: Vec<_> = sweep
            .entries
            .iter()
            .enumerate()
            .map(|(f, e)| e.ok_or_else(|| Error::Validation(format!("sweep is missing contact index {f}"))))
            .collect::<Result<_>>()?;
        let (argmax_f, best) = sweep.max().ok_or_else(|| Error::Validation("empty sweep".into()))?;
        Ok(Self {
            sigma: entries.iter().map(|e| e.sigma_star).collect(),
            argmax_nodes: entries.iter().map(|e| e.argmax_node).collect(),
            sigma_star: best.sigma_star,
            argmax_f,
            argmax_node: best.argmax_node,
            new_solves,
        })
    }
}

/// Evaluates every contact location, reusing and refreshing the on-disk cache.
pub fn brute_force_sweep(problem: &Problem, cache_dir: Option<&Path>) -> Result<GroundTruth> {
    if let Some(dir) = cache_dir {
        problem.oracle.load_cache(dir)?;
    }
    let before = problem.oracle.solve_count();
    let result = problem.oracle.sweep_all();
    if let Some(dir) = cache_dir {
        // Flush whatever was computed, also on failure.
        problem.oracle.save_cache(dir)?;
    }
    let sweep = result?;
    GroundTruth::from_sweep(&sweep, problem.oracle.solve_count() - before)
}

/// A training set together with its design-quality diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub set: DesignSet,
    pub phi_v: f64,
    pub phi_g: f64,
}

/// Picks `n_fl` training locations. `relaxation` may carry a precomputed
/// solution for this budget (used by greedy and sampling).
pub fn select(
    problem: &Problem,
    method: Method,
    n_fl: usize,
    seed: u64,
    options: &DesignOptions,
    relaxation: Option<&Relaxation>,
) -> Result<Selection> {
    let x = problem.x();
    let relaxed = |rel: Option<&Relaxation>| -> Result<Relaxation> {
        match rel {
            Some(r) => Ok(r.clone()),
            None => solve_relaxation(x, n_fl, options),
        }
    };
    let set = match method {
        Method::Greedy => greedy_round(x, &relaxed(relaxation)?.weights, n_fl, options.potential_alpha)?,
        Method::Sampling => sample_probability(&relaxed(relaxation)?.weights, n_fl, seed)?,
        Method::Uniform => sample_uniform(problem.n_f(), n_fl, seed)?,
        Method::Levscore => sample_levscore(x, n_fl, seed)?,
        Method::Kmeans => sample_kmeans(problem.geodesics(), n_fl)?,
    };
    Ok(Selection {
        phi_v: phi_v_subset(x, &set.indices)?,
        phi_g: phi_g_subset(x, &set.indices)?,
        set,
    })
}

/// Parameters of a single pass of the method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams {
    pub method: Method,
    pub n_fl: usize,
    pub top_k: usize,
    pub seed: u64,
    pub intercept: bool,
    pub options: DesignOptions,
}

impl RunParams {
    pub fn from_config(config: &RunConfig) -> Self {
        Self {
            method: config.method,
            n_fl: config.n_fl,
            top_k: config.top_k,
            seed: config.seed,
            intercept: config.intercept,
            options: config.design_options(),
        }
    }
}

/// Design → FEA on the training set → fit → predict → rank and refine.
pub fn run_method(problem: &Problem, params: &RunParams) -> Result<RunReport> {
    let selection = select(problem, params.method, params.n_fl, params.seed, &params.options, None)?;
    let training = &selection.set.indices;
    let sigma_l = training
        .par_iter()
        .map(|&f| problem.oracle.max_stress(f).map(|e| e.sigma_star))
        .collect::<Result<Vec<_>>>()?;
    let model = fit_on(problem.x(), training, &sigma_l, params.intercept)?;
    let sigma_hat = predict(problem.x(), &model)?;
    let ranked = rank_and_refine(&sigma_hat, params.top_k, &problem.oracle)?;
    Ok(RunReport::assemble(problem, params, &selection, &sigma_l, &model, &ranked))
}

/// Grid of methods, budgets and tolerances evaluated against a ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub methods: Vec<Method>,
    pub n_fl_list: Vec<usize>,
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub top_k: usize,
    pub intercept: bool,
    pub options: DesignOptions,
}

impl GridSpec {
    pub fn from_config(config: &RunConfig) -> Self {
        Self {
            methods: config.methods.clone(),
            n_fl_list: config.n_fl_list.clone(),
            deltas: config.deltas.clone(),
            trials: config.trials,
            seed: config.seed,
            top_k: config.top_k,
            intercept: config.intercept,
            options: config.design_options(),
        }
    }
}

/// Outcome of one (method, n_FL, trial) cell before aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub method: Method,
    pub n_fl: usize,
    pub seed: Option<u64>,
    pub training: Vec<usize>,
    pub ranking: Vec<usize>,
    /// Smallest k per tolerance, in `GridSpec::deltas` order.
    pub smallest_k: Vec<usize>,
    /// Best true value among the top-k of the grid's `top_k`.
    pub sigma_tilde: f64,
}

/// Runs every cell of the grid. Randomized methods use seeds
/// `seed, seed+1, …, seed+trials−1`; deterministic methods run once.
pub fn evaluate_trials(problem: &Problem, truth: &GroundTruth, grid: &GridSpec) -> Result<Vec<TrialResult>> {
    if grid.trials == 0 || grid.top_k == 0 || grid.top_k > problem.n_f() {
        return Err(Error::Validation("grid needs trials ≥ 1 and 1 ≤ top_k ≤ n_F".into()));
    }
    if truth.sigma.len() != problem.n_f() {
        return Err(Error::Validation("ground truth does not match the problem".into()));
    }
    let needs_relaxation = grid.methods.iter().any(|m| matches!(m, Method::Greedy | Method::Sampling));
    let relaxations: Vec<Option<Relaxation>> = grid
        .n_fl_list
        .par_iter()
        .map(|&n_fl| {
            needs_relaxation
                .then(|| solve_relaxation(problem.x(), n_fl, &grid.options))
                .transpose()
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for &method in &grid.methods {
        for (b, &n_fl) in grid.n_fl_list.iter().enumerate() {
            let runs = if method.is_randomized() { grid.trials } else { 1 };
            for t in 0..runs {
                cells.push((method, b, n_fl, grid.seed.wrapping_add(t as u64)));
            }
        }
    }
    cells
        .par_iter()
        .map(|&(method, b, n_fl, seed)| {
            let sel = select(problem, method, n_fl, seed, &grid.options, relaxations[b].as_ref())?;
            let training = sel.set.indices;
            let sigma_l: Vec<f64> = training.iter().map(|&f| truth.sigma[f]).collect();
            let model = fit_on(problem.x(), &training, &sigma_l, grid.intercept)?;
            let order = ranking(&predict(problem.x(), &model)?);
            let smallest_k = grid
                .deltas
                .iter()
                .map(|&d| evaluate_k(&order, &truth.sigma, d))
                .collect::<Result<Vec<_>>>()?;
            let sigma_tilde = order[..grid.top_k]
                .iter()
                .map(|&f| truth.sigma[f])
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(TrialResult {
                method,
                n_fl,
                seed: sel.set.seed,
                training,
                ranking: order,
                smallest_k,
                sigma_tilde,
            })
        })
        .collect()
}

/// The full table: per (method, n_FL, δ) the median smallest k over trials.
pub fn evaluate_grid(problem: &Problem, truth: &GroundTruth, grid: &GridSpec) -> Result<Report> {
    let trials = evaluate_trials(problem, truth, grid)?;
    Ok(Report::from_trials(problem.structure(Some(truth)), grid, &trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> RunConfig {
        RunConfig {
            p: 6,
            n_fl: 8,
            top_k: 10,
            n_fl_list: vec![8, 12],
            trials: 3,
            footprint_radius: Some(0.3),
            ..RunConfig::default()
        }
    }

    fn small_problem() -> Problem {
        let b = Benchmark::cantilever_plate([2.0, 1.0, 0.25], [8, 4, 1]).unwrap();
        Problem::from_benchmark(b, &small_config()).unwrap()
    }

    #[test]
    fn singleton_region_sweep() {
        let b = Benchmark::cantilever_plate([2.0, 1.0, 0.25], [4, 2, 1]).unwrap();
        let region = ContactRegion::new(&b.surface, vec![b.region.nodes()[3]]).unwrap();
        let cfg = RunConfig {
            p: 1,
            exclude_constant: false,
            n_fl: 1,
            top_k: 1,
            n_fl_list: vec![1],
            ..RunConfig::default()
        };
        // One node: centering leaves nothing, so the design matrix is rank 0.
        let err = Problem::new("one".into(), b.surface.clone(), b.volume.clone(), region.clone(), &cfg).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. } | Error::Validation(_)));
        let oracle = StressOracle::new(
            &b.surface,
            &b.volume,
            &region,
            &ForceMatrix::build(&region, 0.0).unwrap(),
            cfg.material().unwrap(),
            1.0,
        )
        .unwrap();
        let sweep = oracle.sweep_all().unwrap();
        let truth = GroundTruth::from_sweep(&sweep, 1).unwrap();
        assert_eq!(truth.sigma_star, oracle.max_stress(0).unwrap().sigma_star);
    }

    #[test]
    fn warm_cache_needs_no_solves() {
        let dir = tempfile::tempdir().unwrap();
        let cold = small_problem();
        let t1 = brute_force_sweep(&cold, Some(dir.path())).unwrap();
        assert_eq!(t1.new_solves, cold.n_f());
        let warm = small_problem();
        let t2 = brute_force_sweep(&warm, Some(dir.path())).unwrap();
        assert_eq!(t2.new_solves, 0);
        assert_eq!(t1.sigma, t2.sigma);
        assert_eq!(t1.sigma_star, t1.sigma.iter().cloned().fold(f64::MIN, f64::max));
    }

    #[test]
    fn run_accounting() {
        let p = small_problem();
        for method in Method::ALL {
            let params = RunParams {
                method,
                ..RunParams::from_config(&small_config())
            };
            let r = run_method(&p, &params).unwrap();
            assert_eq!(r.total_feas, r.n_fl + r.k);
            assert_eq!(r.k, 10);
            assert_eq!(r.distinct_feas, r.n_fl + r.k - r.feas_avoided);
            let truth_max = (0..p.n_f()).map(|f| p.oracle.max_stress(f).unwrap().sigma_star).fold(f64::MIN, f64::max);
            assert!(r.sigma_tilde.unwrap() <= truth_max);
        }
    }

    #[test]
    fn grid_rows_are_consistent() {
        let p = small_problem();
        let truth = brute_force_sweep(&p, None).unwrap();
        let grid = GridSpec::from_config(&small_config());
        let report = evaluate_grid(&p, &truth, &grid).unwrap();
        assert_eq!(report.rows.len(), 5 * 2 * 4);
        for row in &report.rows {
            assert_eq!(row.total_feas, row.n_fl + row.smallest_k);
            assert!(row.smallest_k <= p.n_f());
            let expected = if row.method.is_randomized() { 3 } else { 1 };
            assert_eq!(row.trial_ks.len(), expected);
            assert_eq!(row.smallest_k, lower_median(&row.trial_ks));
        }
        let again = evaluate_grid(&p, &truth, &grid).unwrap();
        assert_eq!(report.to_json().unwrap(), again.to_json().unwrap());
        assert_eq!(report.to_csv(), again.to_csv());
    }

    #[test]
    fn exact_surrogate_needs_k_one() {
        // Ground truth that is exactly linear in the design matrix columns.
        let p = small_problem();
        let x = p.x();
        let sigma: Vec<f64> = (0..p.n_f()).map(|f| 10.0 + x[(f, 0)] - 0.5 * x[(f, 1)]).collect();
        let argmax_f = crate::surrogate::ranking(&sigma)[0];
        let truth = GroundTruth {
            sigma_star: sigma[argmax_f],
            argmax_f,
            argmax_node: 0,
            argmax_nodes: vec![0; sigma.len()],
            sigma,
            new_solves: 0,
        };
        let grid = GridSpec {
            methods: vec![Method::Greedy],
            n_fl_list: vec![8],
            deltas: vec![0.0],
            intercept: true,
            ..GridSpec::from_config(&small_config())
        };
        let rows = evaluate_trials(&p, &truth, &grid).unwrap();
        assert_eq!(rows[0].smallest_k, vec![1]);
    }
}
