//! Graph Laplacian of a contact region and its low-frequency eigenbasis.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::ContactRegion;

/// Iteration budget handed to the dense symmetric eigensolver.
pub const EIGEN_MAX_ITERATIONS: usize = 10_000;

/// Which end of the spectrum the basis is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisOrder {
    /// Smoothest eigenvectors (smallest eigenvalues).
    #[default]
    Smallest,
    Largest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BasisOptions {
    pub order: BasisOrder,
    /// Leave out the globally constant vector, which mean-centering of the
    /// force matrix maps to zero anyway.
    pub exclude_constant: bool,
}

/// `p` Laplacian eigenvectors as the columns of an `n_F x p` matrix.
#[derive(Debug, Clone)]
pub struct LaplacianBasis {
    vectors: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl LaplacianBasis {
    /// `n_F x p`, orthonormal columns.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Eigenvalues matching the columns, ascending for [`BasisOrder::Smallest`].
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Combinatorial Laplacian `D - A` with unit edge weights.
pub fn graph_laplacian(region: &ContactRegion) -> DMatrix<f64> {
    let n = region.len();
    let mut lap = DMatrix::zeros(n, n);
    for (i, j) in region.edges() {
        lap[(i, j)] -= 1.0;
        lap[(j, i)] -= 1.0;
        lap[(i, i)] += 1.0;
        lap[(j, j)] += 1.0;
    }
    lap
}

/// The `p` eigenpairs of smallest eigenvalue, constant vector included.
pub fn laplacian_basis(region: &ContactRegion, p: usize) -> Result<LaplacianBasis> {
    laplacian_basis_with(region, p, BasisOptions::default())
}

pub fn laplacian_basis_with(region: &ContactRegion, p: usize, options: BasisOptions) -> Result<LaplacianBasis> {
    let n = region.len();
    let available = if options.exclude_constant { n.saturating_sub(1) } else { n };
    if p == 0 || p > available {
        return Err(Error::Validation(format!(
            "basis size p = {p} must be in 1..={available} for a region of {n} nodes"
        )));
    }
    let mut lap = graph_laplacian(region);
    if options.exclude_constant {
        // Move the constant direction to the far end of the spectrum.
        // Gershgorin: every eigenvalue of D - A lies in [0, 2 * max degree].
        let max_degree = (0..n).map(|i| region.degree(i)).max().unwrap_or(0) as f64;
        let shift = match options.order {
            BasisOrder::Smallest => 2.0 * max_degree + 1.0,
            BasisOrder::Largest => -1.0,
        };
        lap.add_scalar_mut(shift / n as f64);
    }

    let eig = nalgebra::SymmetricEigen::try_new(lap, f64::EPSILON, EIGEN_MAX_ITERATIONS).ok_or(
        Error::EigenNonConvergence {
            max_iterations: EIGEN_MAX_ITERATIONS,
        },
    )?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    if options.order == BasisOrder::Largest {
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    }

    let mut vectors = DMatrix::zeros(n, p);
    let mut eigenvalues = Vec::with_capacity(p);
    for (col, &k) in order.iter().take(p).enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(k).into_owned();
        fix_sign(&mut v);
        vectors.set_column(col, &v);
        // The shift only moved the constant direction; other eigenvalues are exact.
        eigenvalues.push(eig.eigenvalues[k].max(0.0));
    }
    Ok(LaplacianBasis { vectors, eigenvalues })
}

/// Makes the entry of largest magnitude positive (lowest index on ties).
fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{jittered_grid, SurfaceMesh, Vec3};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Region whose induced edge graph is a path 0-1-...-(n-1).
    pub(crate) fn path_region(n: usize) -> (SurfaceMesh, ContactRegion) {
        let mut v: Vec<Vec3> = (0..n).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let mut t = Vec::new();
        for i in 0..n - 1 {
            v.push(Vec3::new(i as f64 + 0.5, 1.0, 0.0));
            t.push([i, i + 1, n + i]);
        }
        let s = SurfaceMesh::new(v, t).unwrap();
        let r = ContactRegion::new(&s, (0..n).collect()).unwrap();
        (s, r)
    }

    /// Region whose induced edge graph is an n-cycle (a fan around a hub not in the region).
    pub(crate) fn cycle_region(n: usize) -> (SurfaceMesh, ContactRegion) {
        use std::f64::consts::TAU;
        let mut v: Vec<Vec3> = (0..n)
            .map(|i| {
                let a = TAU * i as f64 / n as f64;
                Vec3::new(a.cos(), a.sin(), 0.0)
            })
            .collect();
        v.push(Vec3::new(0.0, 0.0, 0.0));
        let t = (0..n).map(|i| [i, (i + 1) % n, n]).collect();
        let s = SurfaceMesh::new(v, t).unwrap();
        let r = ContactRegion::new(&s, (0..n).collect()).unwrap();
        (s, r)
    }

    #[test]
    fn path_laplacian() {
        let (_, r) = path_region(3);
        let lap = graph_laplacian(&r);
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        assert_eq!(lap, expected);
    }

    #[test]
    fn single_node_laplacian() {
        let (s, _) = path_region(3);
        let r = ContactRegion::new(&s, vec![1]).unwrap();
        assert_eq!(graph_laplacian(&r), DMatrix::zeros(1, 1));
    }

    #[test]
    fn four_cycle_laplacian() {
        let (_, r) = cycle_region(4);
        let lap = graph_laplacian(&r);
        for i in 0..4 {
            assert_eq!(lap[(i, i)], 2.0);
            assert_eq!(lap[(i, (i + 1) % 4)], -1.0);
            assert_eq!(lap[(i, (i + 2) % 4)], 0.0);
        }
    }

    #[test]
    fn path_spectrum() {
        let (_, r) = path_region(3);
        let b = laplacian_basis(&r, 3).unwrap();
        assert_relative_eq!(b.eigenvalues()[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(b.eigenvalues()[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(b.eigenvalues()[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn first_vector_is_constant() {
        let s = jittered_grid(4, 3, &[0.1, -0.2, 0.3]);
        let r = ContactRegion::new(&s, (0..12).collect()).unwrap();
        let b = laplacian_basis(&r, 1).unwrap();
        for i in 0..12 {
            assert_relative_eq!(b.vectors()[(i, 0)], 1.0 / 12f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn six_cycle_spectrum_matches_closed_form() {
        let (_, r) = cycle_region(6);
        let b = laplacian_basis(&r, 6).unwrap();
        let mut expected: Vec<f64> = (0..6)
            .map(|k| 2.0 - 2.0 * (std::f64::consts::TAU * k as f64 / 6.0).cos())
            .collect();
        expected.sort_by(f64::total_cmp);
        for (got, want) in b.eigenvalues().iter().zip(&expected) {
            assert_relative_eq!(*got, *want, epsilon = 1e-10);
        }
        assert_eq!(expected.iter().map(|x| x.round() as i64).collect::<Vec<_>>(), vec![0, 1, 1, 3, 3, 4]);
    }

    #[test]
    fn basis_invariants_on_grid() {
        let s = jittered_grid(6, 5, &[0.4, -0.1, 0.25, 0.7, -0.6]);
        let r = ContactRegion::new(&s, (0..30).collect()).unwrap();
        let lap = graph_laplacian(&r);
        let b = laplacian_basis(&r, 8).unwrap();
        let l = b.vectors();
        let gram = l.transpose() * l;
        assert!((gram - DMatrix::identity(8, 8)).amax() < 1e-8);
        assert!(b.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        assert!(b.eigenvalues()[0].abs() < 1e-8);
        for j in 0..8 {
            let col = l.column(j);
            let resid = &lap * col - col * b.eigenvalues()[j];
            assert!(resid.norm() <= 1e-6 * col.norm());
            // sign convention
            let (imax, _) = col.iter().enumerate().fold((0, 0.0), |acc, (i, v)| {
                if v.abs() > acc.1 { (i, v.abs()) } else { acc }
            });
            assert!(col[imax] > 0.0);
        }
    }

    #[test]
    fn excluding_constant_shifts_the_window() {
        let s = jittered_grid(5, 4, &[0.2, -0.3]);
        let r = ContactRegion::new(&s, (0..20).collect()).unwrap();
        let full = laplacian_basis(&r, 6).unwrap();
        let opts = BasisOptions { exclude_constant: true, ..Default::default() };
        let reduced = laplacian_basis_with(&r, 5, opts).unwrap();
        for k in 0..5 {
            assert_relative_eq!(reduced.eigenvalues()[k], full.eigenvalues()[k + 1], epsilon = 1e-9);
        }
        let ones = DVector::from_element(20, 1.0);
        assert!((reduced.vectors().transpose() * ones).amax() < 1e-9);
    }

    #[test]
    fn zero_eigenvalues_count_components() {
        let (s, _) = path_region(6);
        // Drop node 2 -> components {0,1} and {3,4,5}.
        let r = ContactRegion::new(&s, vec![0, 1, 3, 4, 5]).unwrap();
        assert_eq!(r.component_count(), 2);
        let b = laplacian_basis(&r, 5).unwrap();
        let zeros = b.eigenvalues().iter().filter(|&&l| l <= 1e-8).count();
        assert_eq!(zeros, 2);
    }

    #[test]
    fn basis_is_reproducible() {
        let s = jittered_grid(5, 5, &[0.3, 0.1, -0.4]);
        let r = ContactRegion::new(&s, (0..25).collect()).unwrap();
        let a = laplacian_basis(&r, 10).unwrap();
        let b = laplacian_basis(&r, 10).unwrap();
        assert_eq!(a.vectors().as_slice(), b.vectors().as_slice());
    }

    #[test]
    fn oversized_basis_is_rejected() {
        let (_, r) = path_region(3);
        assert!(laplacian_basis(&r, 4).is_err());
        assert!(laplacian_basis(&r, 0).is_err());
    }

    proptest! {
        #[test]
        fn quadratic_form_identity(x in proptest::collection::vec(-5.0f64..5.0, 12)) {
            let s = jittered_grid(4, 3, &[0.1, 0.2, -0.3]);
            let r = ContactRegion::new(&s, (0..12).collect()).unwrap();
            let lap = graph_laplacian(&r);
            let xv = DVector::from_vec(x.clone());
            let q = (xv.transpose() * &lap * &xv)[(0, 0)];
            let direct: f64 = r.edges().iter().map(|&(u, v)| (x[u] - x[v]).powi(2)).sum();
            prop_assert!((q - direct).abs() <= 1e-10 * direct.abs().max(1.0));
            prop_assert!((0..12).all(|i| lap.row(i).sum().abs() < 1e-15));
        }
    }
}

#[cfg(test)]
pub(crate) use tests::path_region;
