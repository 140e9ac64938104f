//! Constant-strain (4-node) tetrahedron.
//!
//! Voigt order throughout: `[xx, yy, zz, yz, xz, xy]`, engineering shear strains.

use nalgebra::{Matrix3, SMatrix, SVector};

use super::Material;
use crate::mesh::Vec3;

pub type Matrix6 = SMatrix<f64, 6, 6>;
pub type Matrix6x12 = SMatrix<f64, 6, 12>;
pub type Matrix12 = SMatrix<f64, 12, 12>;
pub type Voigt = SVector<f64, 6>;

/// Isotropic elasticity matrix.
pub fn elasticity_matrix(material: &Material) -> Matrix6 {
    let (e, nu) = (material.young_modulus, material.poisson_ratio);
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    let mut d = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            d[(i, j)] = lambda;
        }
        d[(i, i)] += 2.0 * mu;
        d[(i + 3, i + 3)] = mu;
    }
    d
}

/// Shape-function gradients of the four nodes and the element volume.
///
/// Returns `None` for a degenerate tet.
pub fn shape_gradients(x: &[Vec3; 4]) -> Option<([Vec3; 4], f64)> {
    let j = Matrix3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]);
    let det = j.determinant();
    let jinv = j.try_inverse()?;
    let g1 = jinv.row(0).transpose();
    let g2 = jinv.row(1).transpose();
    let g3 = jinv.row(2).transpose();
    Some(([-(g1 + g2 + g3), g1, g2, g3], det.abs() / 6.0))
}

pub fn strain_displacement(grads: &[Vec3; 4]) -> Matrix6x12 {
    let mut b = Matrix6x12::zeros();
    for (a, g) in grads.iter().enumerate() {
        let c = 3 * a;
        b[(0, c)] = g.x;
        b[(1, c + 1)] = g.y;
        b[(2, c + 2)] = g.z;
        b[(3, c + 1)] = g.z;
        b[(3, c + 2)] = g.y;
        b[(4, c)] = g.z;
        b[(4, c + 2)] = g.x;
        b[(5, c)] = g.y;
        b[(5, c + 1)] = g.x;
    }
    b
}

pub fn element_stiffness(b: &Matrix6x12, d: &Matrix6, volume: f64) -> Matrix12 {
    b.transpose() * d * b * volume
}

pub fn von_mises(s: &Voigt) -> f64 {
    let (xx, yy, zz) = (s[0], s[1], s[2]);
    let normal = 0.5 * ((xx - yy).powi(2) + (yy - zz).powi(2) + (zz - xx).powi(2));
    let shear = 3.0 * (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]);
    (normal + shear).sqrt()
}
