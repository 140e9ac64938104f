use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{GridSpec, Problem, RunParams, Selection, TrialResult};
use crate::design::Method;
use crate::error::{Error, Result};
use crate::surrogate::{RankedPrediction, SurrogateModel};

/// Lower median (the smaller middle element for even counts).
pub fn lower_median(values: &[usize]) -> usize {
    assert!(!values.is_empty(), "median of an empty list");
    let mut v = values.to_vec();
    v.sort_unstable();
    v[(v.len() - 1) / 2]
}

/// Size statistics of a structure and, once known, its worst case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Structure {
    pub name: String,
    pub n_w: usize,
    pub n_s: usize,
    pub n_f: usize,
    pub sigma_star: Option<f64>,
    pub argmax_f: Option<usize>,
    pub argmax_node: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub n_fl: usize,
    pub delta: f64,
    /// Median over trials of the smallest sufficient k.
    pub smallest_k: usize,
    pub total_feas: usize,
    pub trial_ks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub structure: Structure,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn from_trials(structure: Structure, grid: &GridSpec, trials: &[TrialResult]) -> Self {
        let mut rows = Vec::new();
        for &method in &grid.methods {
            for &n_fl in &grid.n_fl_list {
                let cell: Vec<&TrialResult> = trials.iter().filter(|t| t.method == method && t.n_fl == n_fl).collect();
                if cell.is_empty() {
                    continue;
                }
                for (d, &delta) in grid.deltas.iter().enumerate() {
                    let trial_ks: Vec<usize> = cell.iter().map(|t| t.smallest_k[d]).collect();
                    let smallest_k = lower_median(&trial_ks);
                    rows.push(ReportRow {
                        method,
                        n_fl,
                        delta,
                        smallest_k,
                        total_feas: n_fl + smallest_k,
                        trial_ks,
                    });
                }
            }
        }
        Self {
            structure,
            trials: grid.trials,
            seed: grid.seed,
            rows,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Validation(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("report", e.line(), e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,n_fl,delta,smallest_k,total_feas,trial_ks\n");
        for r in &self.rows {
            let ks: Vec<String> = r.trial_ks.iter().map(usize::to_string).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.method,
                r.n_fl,
                r.delta,
                r.smallest_k,
                r.total_feas,
                ks.join(" ")
            );
        }
        out
    }

    /// Plain-text tables, one per tolerance: methods down, budgets across,
    /// smallest k in the cells.
    pub fn to_table(&self) -> String {
        let s = &self.structure;
        let mut out = String::new();
        let _ = writeln!(out, "structure {}: n_W = {}, n_S = {}, n_F = {}", s.name, s.n_w, s.n_s, s.n_f);
        if let (Some(sig), Some(f), Some(w)) = (s.sigma_star, s.argmax_f, s.argmax_node) {
            let _ = writeln!(out, "sigma* = {sig:.6e} at contact {f} (volume node {w})");
        }
        let mut deltas: Vec<f64> = Vec::new();
        let mut budgets: Vec<usize> = Vec::new();
        let mut methods: Vec<Method> = Vec::new();
        for r in &self.rows {
            if !deltas.contains(&r.delta) {
                deltas.push(r.delta);
            }
            if !budgets.contains(&r.n_fl) {
                budgets.push(r.n_fl);
            }
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
        }
        for &delta in &deltas {
            let _ = writeln!(out, "\ndelta = {delta}  (smallest k; total FEAs = n_FL + k)");
            let _ = write!(out, "{:<10}", "method");
            for b in &budgets {
                let _ = write!(out, "{:>10}", format!("n_FL={b}"));
            }
            out.push('\n');
            for &m in &methods {
                let _ = write!(out, "{:<10}", m.name());
                for &b in &budgets {
                    match self.rows.iter().find(|r| r.method == m && r.n_fl == b && r.delta == delta) {
                        Some(r) => {
                            let _ = write!(out, "{:>10}", r.smallest_k);
                        }
                        None => {
                            let _ = write!(out, "{:>10}", "-");
                        }
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Sample,
    TopK,
    Argmax,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Sample => "sample",
            Role::TopK => "top-k",
            Role::Argmax => "argmax",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLabel {
    pub f_index: usize,
    pub surface_vertex: usize,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub f_index: usize,
    pub surface_vertex: usize,
    pub sigma_hat: f64,
    /// Known true value (training or refined), if any.
    pub sigma_star: Option<f64>,
    /// Position in the predicted ranking, 1-based.
    pub rank: usize,
}

/// Output of a single run of the method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub structure: Structure,
    pub method: Method,
    pub n_fl: usize,
    pub k: usize,
    pub seed: Option<u64>,
    pub phi_v: f64,
    pub phi_g: f64,
    pub sigma_tilde: Option<f64>,
    pub argmax_candidate: Option<usize>,
    /// n_FL + k, as if training and refinement sets were disjoint.
    pub total_feas: usize,
    /// Locations actually simulated: |F_L ∪ top-k|.
    pub distinct_feas: usize,
    /// Top-k locations already simulated for training.
    pub feas_avoided: usize,
    pub warnings: Vec<String>,
    pub training: Vec<usize>,
    pub top_k: Vec<usize>,
    pub beta: Vec<f64>,
    pub nodes: Vec<NodeRow>,
}

impl RunReport {
    pub(super) fn assemble(
        problem: &Problem,
        params: &RunParams,
        selection: &Selection,
        sigma_l: &[f64],
        model: &SurrogateModel,
        ranked: &RankedPrediction,
    ) -> Self {
        let training = selection.set.indices.clone();
        let top_k: Vec<usize> = ranked.refined.iter().map(|r| r.index).collect();
        let overlap = top_k.iter().filter(|f| training.contains(f)).count();
        let mut known: Vec<Option<f64>> = vec![None; problem.n_f()];
        for (&f, &s) in training.iter().zip(sigma_l) {
            known[f] = Some(s);
        }
        for r in &ranked.refined {
            if r.sigma_star.is_some() {
                known[r.index] = r.sigma_star;
            }
        }
        let mut rank = vec![0; problem.n_f()];
        for (pos, &f) in ranked.ranking.iter().enumerate() {
            rank[f] = pos + 1;
        }
        let nodes = (0..problem.n_f())
            .map(|f| NodeRow {
                f_index: f,
                surface_vertex: problem.region.nodes()[f],
                sigma_hat: ranked.sigma_hat[f],
                sigma_star: known[f],
                rank: rank[f],
            })
            .collect();

        let mut warnings = Vec::new();
        let p = problem.x().ncols();
        if params.n_fl < p {
            warnings.push(format!("n_FL = {} is below p = {p}; the fit is underdetermined", params.n_fl));
        }
        if model.is_rank_deficient() {
            warnings.push(format!(
                "training matrix has rank {} < {}; minimum-norm coefficients used",
                model.rank, model.unknowns
            ));
        }
        for (f, e) in &ranked.failures {
            warnings.push(format!("oracle failed at contact {f}: {e}"));
        }
        Self {
            structure: problem.structure(None),
            method: params.method,
            n_fl: params.n_fl,
            k: ranked.k(),
            seed: selection.set.seed,
            phi_v: selection.phi_v,
            phi_g: selection.phi_g,
            sigma_tilde: ranked.sigma_tilde,
            argmax_candidate: ranked.argmax_candidate,
            total_feas: params.n_fl + ranked.k(),
            distinct_feas: params.n_fl + ranked.k() - overlap,
            feas_avoided: overlap,
            warnings,
            training,
            top_k,
            beta: model.beta.clone(),
            nodes,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Validation(e.to_string()))
    }

    /// One entry per (location, role); a location can carry several roles.
    pub fn labels(&self) -> Vec<NodeLabel> {
        let vertex = |f: usize| self.nodes[f].surface_vertex;
        let mut out: Vec<NodeLabel> = Vec::new();
        let mut push = |f: usize, role| {
            out.push(NodeLabel {
                f_index: f,
                surface_vertex: vertex(f),
                role,
            })
        };
        for &f in &self.training {
            push(f, Role::Sample);
        }
        for &f in &self.top_k {
            push(f, Role::TopK);
        }
        if let Some(f) = self.argmax_candidate {
            push(f, Role::Argmax);
        }
        out
    }

    pub fn labels_csv(&self) -> String {
        let mut out = String::from("f_index,surface_vertex,role\n");
        for l in self.labels() {
            let _ = writeln!(out, "{},{},{}", l.f_index, l.surface_vertex, l.role.name());
        }
        out
    }
}
