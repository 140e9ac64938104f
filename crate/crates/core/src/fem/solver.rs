use super::element::{
    element_stiffness, elasticity_matrix, shape_gradients, strain_displacement, von_mises, Matrix6, Matrix6x12, Voigt,
};
use super::sparse::{reverse_cuthill_mckee, CsrMatrix, SkylineCholesky};
use super::Material;
use crate::error::{Error, Result};
use crate::mesh::{Vec3, VolumeMesh};

/// Global stiffness matrix (`3 n_W` square, unconstrained).
pub fn assemble_stiffness(volume: &VolumeMesh, material: &Material) -> Result<CsrMatrix> {
    material.validate()?;
    let d = elasticity_matrix(material);
    let mut triplets = Vec::with_capacity(volume.tets().len() * 144);
    for (e, tet) in volume.tets().iter().enumerate() {
        let (b, vol) = element_b(volume, e)?;
        let ke = element_stiffness(&b, &d, vol);
        for a in 0..4 {
            for c in 0..4 {
                for i in 0..3 {
                    for j in 0..3 {
                        triplets.push((3 * tet[a] + i, 3 * tet[c] + j, ke[(3 * a + i, 3 * c + j)]));
                    }
                }
            }
        }
    }
    let k = CsrMatrix::from_triplets(3 * volume.node_count(), triplets);
    // Enforce exact symmetry against summation-order rounding.
    Ok(symmetrize(&k))
}

fn symmetrize(k: &CsrMatrix) -> CsrMatrix {
    let mut t = Vec::with_capacity(k.nnz());
    for i in 0..k.dim() {
        for (j, v) in k.row(i) {
            let avg = if i == j { v } else { 0.5 * (v + k.get(j, i)) };
            t.push((i, j, avg));
        }
    }
    CsrMatrix::from_triplets(k.dim(), t)
}

fn element_b(volume: &VolumeMesh, e: usize) -> Result<(Matrix6x12, f64)> {
    let tet = volume.tets()[e];
    let x: [Vec3; 4] = tet.map(|v| volume.nodes()[v]);
    let (grads, vol) = shape_gradients(&x).ok_or_else(|| Error::Validation(format!("tet {e} is degenerate")))?;
    Ok((strain_displacement(&grads), vol))
}

/// Per-node von Mises stress: volume-weighted average of the constant element
/// values over the tets incident to each node.
pub fn von_mises_field(volume: &VolumeMesh, material: &Material, u: &[f64]) -> Result<Vec<f64>> {
    let d = elasticity_matrix(material);
    let mut acc = vec![0.0; volume.node_count()];
    let mut weight = vec![0.0; volume.node_count()];
    for (e, tet) in volume.tets().iter().enumerate() {
        let (b, vol) = element_b(volume, e)?;
        let vm = von_mises(&element_stress(&b, &d, tet, u));
        for &v in tet {
            acc[v] += vol * vm;
            weight[v] += vol;
        }
    }
    Ok(acc
        .into_iter()
        .zip(weight)
        .map(|(a, w)| if w > 0.0 { a / w } else { 0.0 })
        .collect())
}

fn element_stress(b: &Matrix6x12, d: &Matrix6, tet: &[usize; 4], u: &[f64]) -> Voigt {
    let mut ue = nalgebra::SVector::<f64, 12>::zeros();
    for (a, &v) in tet.iter().enumerate() {
        for i in 0..3 {
            ue[3 * a + i] = u[3 * v + i];
        }
    }
    d * (b * ue)
}

/// Assembled, constrained and factorized linear-elastic model. The
/// factorization is reused for every right-hand side.
#[derive(Debug, Clone)]
pub struct FemModel {
    volume: VolumeMesh,
    material: Material,
    stiffness: CsrMatrix,
    /// Global DOF -> position in the factorized (permuted, reduced) system.
    reduced: Vec<Option<usize>>,
    /// Reduced position -> global DOF.
    free_dofs: Vec<usize>,
    factor: SkylineCholesky,
    b_matrices: Vec<(Matrix6x12, f64)>,
    d: Matrix6,
}

impl FemModel {
    /// Assembles `K`, removes the fixed DOFs and factorizes the rest.
    pub fn new(volume: VolumeMesh, material: Material) -> Result<Self> {
        let stiffness = assemble_stiffness(&volume, &material)?;
        let n = volume.node_count();
        let mut is_fixed = vec![false; n];
        for &v in volume.fixed_nodes() {
            is_fixed[v] = true;
        }

        // Node graph of free nodes for the bandwidth-reducing ordering.
        let free_nodes: Vec<usize> = (0..n).filter(|&v| !is_fixed[v]).collect();
        let mut local = vec![usize::MAX; n];
        for (k, &v) in free_nodes.iter().enumerate() {
            local[v] = k;
        }
        let mut adjacency = vec![Vec::new(); free_nodes.len()];
        for tet in volume.tets() {
            for &a in tet {
                for &b in tet {
                    if a != b && !is_fixed[a] && !is_fixed[b] {
                        adjacency[local[a]].push(local[b]);
                    }
                }
            }
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        let order = reverse_cuthill_mckee(&adjacency);

        let mut reduced = vec![None; 3 * n];
        let mut free_dofs = Vec::with_capacity(3 * free_nodes.len());
        for &k in &order {
            let v = free_nodes[k];
            for i in 0..3 {
                reduced[3 * v + i] = Some(free_dofs.len());
                free_dofs.push(3 * v + i);
            }
        }

        let factor = SkylineCholesky::factor(free_dofs.len(), |r| {
            let g = free_dofs[r];
            stiffness
                .row(g)
                .filter_map(|(j, v)| reduced[j].filter(|&c| c <= r).map(|c| (c, v)))
                .collect::<Vec<_>>()
        })
        .map_err(|e| match e {
            Error::Singular(msg) => Error::Solver(format!("constrained stiffness is singular: {msg}")),
            other => other,
        })?;

        let b_matrices = (0..volume.tets().len())
            .map(|e| element_b(&volume, e))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            d: elasticity_matrix(&material),
            volume,
            material,
            stiffness,
            reduced,
            free_dofs,
            factor,
            b_matrices,
        })
    }

    pub fn volume(&self) -> &VolumeMesh {
        &self.volume
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    /// Unconstrained global stiffness.
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn free_dof_count(&self) -> usize {
        self.free_dofs.len()
    }

    /// Displacements for a nodal load vector (length `3 n_W`), zero at fixed DOFs.
    pub fn solve(&self, load: &[f64]) -> Result<Vec<f64>> {
        self.solve_with_prescribed(load, |_| Vec3::zeros())
    }

    /// Displacements with fixed nodes moved to `prescribed(node)`.
    pub fn solve_with_prescribed(&self, load: &[f64], prescribed: impl Fn(usize) -> Vec3) -> Result<Vec<f64>> {
        let n = 3 * self.volume.node_count();
        if load.len() != n {
            return Err(Error::Validation(format!("load has {} entries, expected {n}", load.len())));
        }
        if load.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("load vector is not finite".into()));
        }
        let mut u = vec![0.0; n];
        for &v in self.volume.fixed_nodes() {
            let p = prescribed(v);
            u[3 * v..3 * v + 3].copy_from_slice(p.as_slice());
        }
        let has_prescribed = u.iter().any(|&x| x != 0.0);
        let mut rhs: Vec<f64> = self.free_dofs.iter().map(|&g| load[g]).collect();
        if has_prescribed {
            for (r, &g) in self.free_dofs.iter().enumerate() {
                let coupling: f64 = self
                    .stiffness
                    .row(g)
                    .filter(|&(j, _)| self.reduced[j].is_none())
                    .map(|(j, k)| k * u[j])
                    .sum();
                rhs[r] -= coupling;
            }
        }
        self.factor.solve_in_place(&mut rhs);
        if rhs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Solver("non-finite displacement".into()));
        }
        for (r, &g) in self.free_dofs.iter().enumerate() {
            u[g] = rhs[r];
        }
        Ok(u)
    }

    /// Constant stress of each element.
    pub fn element_stresses(&self, u: &[f64]) -> Vec<Voigt> {
        self.volume
            .tets()
            .iter()
            .zip(&self.b_matrices)
            .map(|(tet, (b, _))| element_stress(b, &self.d, tet, u))
            .collect()
    }

    /// Nodal von Mises stress (same recovery as [`von_mises_field`]).
    pub fn von_mises(&self, u: &[f64]) -> Vec<f64> {
        let n = self.volume.node_count();
        let mut acc = vec![0.0; n];
        let mut weight = vec![0.0; n];
        for (tet, (b, vol)) in self.volume.tets().iter().zip(&self.b_matrices) {
            let vm = von_mises(&element_stress(b, &self.d, tet, u));
            for &v in tet {
                acc[v] += vol * vm;
                weight[v] += vol;
            }
        }
        acc.into_iter()
            .zip(weight)
            .map(|(a, w)| if w > 0.0 { a / w } else { 0.0 })
            .collect()
    }

    /// Relative residual of the constrained system `K_ff u_f = load_f - K_fc u_c`.
    pub fn residual(&self, load: &[f64], u: &[f64]) -> f64 {
        let ku = self.stiffness.mul_vec(u);
        let mut num = 0.0;
        let mut den = 0.0;
        for &g in &self.free_dofs {
            num += (ku[g] - load[g]).powi(2);
            den += load[g].powi(2);
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}
