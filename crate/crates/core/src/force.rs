//! Contact footprints, the centered design matrix and nodal load vectors.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{ContactRegion, SurfaceMesh, VolumeMesh};
use crate::spectral::LaplacianBasis;

/// Row-stochastic `n_F x n_F` footprint matrix. Row `f` spreads a unit force
/// applied at region node `f` uniformly over the geodesic disc around it.
#[derive(Debug, Clone)]
pub struct ForceMatrix {
    rows: Vec<Vec<(usize, f64)>>,
    radius: f64,
}

impl ForceMatrix {
    /// Uniform weights over `{f' : d(f, f') <= radius}`.
    pub fn build(region: &ContactRegion, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::Validation(format!("footprint radius must be finite and >= 0, got {radius}")));
        }
        use rayon::prelude::*;
        let rows = (0..region.len())
            .into_par_iter()
            .map(|f| {
                let d = region.geodesic_distances(f);
                let support: Vec<usize> = (0..d.len()).filter(|&j| d[j] <= radius).collect();
                let w = 1.0 / support.len() as f64;
                support.into_iter().map(|j| (j, w)).collect()
            })
            .collect();
        Ok(Self { rows, radius })
    }

    /// Wraps explicit rows; each must be a probability vector with a positive diagonal.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, radius: f64) -> Result<Self> {
        let n = rows.len();
        for (f, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().map(|&(_, w)| w).sum();
            if row.iter().any(|&(j, w)| j >= n || w < 0.0) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(format!("force row {f} is not a probability vector")));
            }
            if !row.iter().any(|&(j, w)| j == f && w > 0.0) {
                return Err(Error::Validation(format!("force row {f} has no weight on its own node")));
            }
        }
        Ok(Self { rows, radius })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Non-zero `(column, weight)` pairs of row `f`, ascending by column.
    pub fn row(&self, f: usize) -> &[(usize, f64)] {
        &self.rows[f]
    }

    pub fn get(&self, f: usize, g: usize) -> f64 {
        self.rows[f]
            .binary_search_by_key(&g, |&(j, _)| j)
            .map(|k| self.rows[f][k].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for (f, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[(f, j)] = w;
            }
        }
        m
    }
}

/// `X = F_bar L`, the candidate design points (one row per contact node).
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    x: DMatrix<f64>,
    column_means: Vec<f64>,
}

impl DesignMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// Means of the columns of `F L` that centering removed.
    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Sub-matrix of the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> DMatrix<f64> {
        self.x.select_rows(indices)
    }
}

/// `(F - 1 mean(F)^T) L` without any rank check, plus the subtracted means.
pub fn center_and_project(forces: &ForceMatrix, basis: &LaplacianBasis) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let l = basis.vectors();
    let n = forces.len();
    if l.nrows() != n {
        return Err(Error::Validation(format!(
            "force matrix has {n} rows but the basis has {} rows",
            l.nrows()
        )));
    }
    let p = l.ncols();
    let mut fl = DMatrix::zeros(n, p);
    for f in 0..n {
        for &(j, w) in forces.row(f) {
            for c in 0..p {
                fl[(f, c)] += w * l[(j, c)];
            }
        }
    }
    let means: Vec<f64> = (0..p).map(|c| fl.column(c).sum() / n as f64).collect();
    for c in 0..p {
        for f in 0..n {
            fl[(f, c)] -= means[c];
        }
    }
    Ok((fl, means))
}

/// Builds the design matrix and requires it to have full column rank.
pub fn design_matrix(forces: &ForceMatrix, basis: &LaplacianBasis) -> Result<DesignMatrix> {
    let (x, column_means) = center_and_project(forces, basis)?;
    let rank = numerical_rank(&x);
    if rank < x.ncols() {
        return Err(Error::RankDeficient {
            rank,
            expected: x.ncols(),
        });
    }
    Ok(DesignMatrix { x, column_means })
}

/// Rank with singular values below `1e-10 * max(sigma)` treated as zero.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-10 * smax).count()
}

/// Nodal load vector (length `3 n_W`) for a unit contact at region node `f`:
/// each footprint node receives `-magnitude * F(f, f') * n(f')`.
pub fn force_vector(
    surface: &SurfaceMesh,
    volume: &VolumeMesh,
    region: &ContactRegion,
    forces: &ForceMatrix,
    f: usize,
    magnitude: f64,
) -> Result<Vec<f64>> {
    let mut load = vec![0.0; 3 * volume.node_count()];
    for &(g, w) in forces.row(f) {
        let s = region.nodes()[g];
        let v = *volume.surface_map().get(s).ok_or_else(|| {
            Error::Validation(format!("footprint node {g} (surface vertex {s}) is not on the volume surface map"))
        })?;
        let n = surface.normals()[s];
        for k in 0..3 {
            load[3 * v + k] -= magnitude * w * n[k];
        }
    }
    Ok(load)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{jittered_grid, Vec3};
    use crate::spectral::{laplacian_basis, path_region};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_radius_is_identity() {
        let s = jittered_grid(4, 3, &[0.2, -0.1]);
        let r = ContactRegion::new(&s, (0..12).collect()).unwrap();
        let f = ForceMatrix::build(&r, 0.0).unwrap();
        assert_eq!(f.to_dense(), DMatrix::identity(12, 12));
    }

    #[test]
    fn unit_disc_on_path() {
        let (_, r) = path_region(3);
        let f = ForceMatrix::build(&r, 1.0).unwrap();
        assert_eq!(f.row(1), &[(0, 1.0 / 3.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0)]);
        assert_eq!(f.row(0), &[(0, 0.5), (1, 0.5)]);
    }

    #[test]
    fn negative_radius_is_rejected() {
        let (_, r) = path_region(3);
        assert!(ForceMatrix::build(&r, -1.0).is_err());
    }

    fn floyd_warshall(r: &ContactRegion) -> Vec<Vec<f64>> {
        let n = r.len();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for i in 0..n {
            d[i][i] = 0.0;
            for &(j, w) in r.neighbors(i) {
                d[i][j] = w;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
                }
            }
        }
        d
    }

    proptest! {
        #[test]
        fn disc_support_matches_brute_force(
            jitter in proptest::collection::vec(-1.0f64..1.0, 40),
            radius in 0.0f64..3.0,
        ) {
            let s = jittered_grid(5, 4, &jitter);
            let r = ContactRegion::new(&s, (0..20).collect()).unwrap();
            let f = ForceMatrix::build(&r, radius).unwrap();
            let d = floyd_warshall(&r);
            for row in 0..20 {
                let support: Vec<usize> = f.row(row).iter().map(|&(j, _)| j).collect();
                let oracle: Vec<usize> = (0..20).filter(|&j| d[row][j] <= radius).collect();
                prop_assert_eq!(&support, &oracle);
                let sum: f64 = f.row(row).iter().map(|&(_, w)| w).sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(f.get(row, row) > 0.0);
                for &j in &support {
                    prop_assert!(f.get(j, row) > 0.0, "support not symmetric");
                }
            }
        }

        #[test]
        fn design_matrix_is_linear_in_forces(alpha in 0.0f64..1.0, r1 in 0.0f64..1.5, r2 in 0.0f64..1.5) {
            let s = jittered_grid(5, 4, &[0.3, -0.2, 0.1]);
            let r = ContactRegion::new(&s, (0..20).collect()).unwrap();
            let basis = laplacian_basis(&r, 5).unwrap();
            let f1 = ForceMatrix::build(&r, r1).unwrap();
            let f2 = ForceMatrix::build(&r, r2).unwrap();
            let rows = (0..20)
                .map(|i| {
                    (0..20)
                        .map(|j| (j, alpha * f1.get(i, j) + (1.0 - alpha) * f2.get(i, j)))
                        .filter(|&(_, w)| w > 0.0)
                        .collect()
                })
                .collect();
            let mix = ForceMatrix { rows, radius: f64::NAN };
            let (x1, _) = center_and_project(&f1, &basis).unwrap();
            let (x2, _) = center_and_project(&f2, &basis).unwrap();
            let (xm, _) = center_and_project(&mix, &basis).unwrap();
            let combo = x1 * alpha + x2 * (1.0 - alpha);
            prop_assert!((xm - combo).amax() < 1e-12);
        }
    }

    #[test]
    fn centering_annihilates_constant_vector() {
        let s = jittered_grid(4, 4, &[0.1, 0.3]);
        let r = ContactRegion::new(&s, (0..16).collect()).unwrap();
        let basis = laplacian_basis(&r, 4).unwrap();
        let f = ForceMatrix::build(&r, 0.0).unwrap();
        let (x, _) = center_and_project(&f, &basis).unwrap();
        assert!(x.column(0).amax() < 1e-12);
        // Keeping the constant vector makes the design rank deficient.
        assert!(matches!(design_matrix(&f, &basis), Err(Error::RankDeficient { rank: 3, expected: 4 })));
    }

    #[test]
    fn path_design_matrix_by_hand() {
        let (_, r) = path_region(3);
        let basis = laplacian_basis(&r, 3).unwrap();
        let f = ForceMatrix::build(&r, 0.0).unwrap();
        let (x, means) = center_and_project(&f, &basis).unwrap();
        // F = I, so F_bar = I - J/3 and X = L - (1/3) 1 1^T L.
        let l = basis.vectors();
        for i in 0..3 {
            for c in 0..3 {
                let colsum: f64 = (0..3).map(|k| l[(k, c)]).sum();
                assert_relative_eq!(x[(i, c)], l[(i, c)] - colsum / 3.0, epsilon = 1e-14);
            }
        }
        assert_relative_eq!(means[0], 1.0 / 3f64.sqrt(), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn centered_columns_sum_to_zero(radius in 0.0f64..2.5) {
            let s = jittered_grid(5, 3, &[0.25, -0.15, 0.05]);
            let r = ContactRegion::new(&s, (0..15).collect()).unwrap();
            let basis = laplacian_basis(&r, 6).unwrap();
            let f = ForceMatrix::build(&r, radius).unwrap();
            let (x, _) = center_and_project(&f, &basis).unwrap();
            for c in 0..6 {
                prop_assert!(x.column(c).sum().abs() < 1e-9);
            }
        }
    }

    fn flat_patch() -> (SurfaceMesh, VolumeMesh, ContactRegion) {
        // Top face of a single layer of tets over a 3x3 grid of unit squares.
        let grid = crate::procedural::BoxGrid::new([3.0, 3.0, 1.0], [3, 3, 1]);
        let (surface, volume) = grid.meshes(|p| p.x == 0.0).unwrap();
        let top: Vec<usize> = (0..surface.vertex_count())
            .filter(|&v| surface.vertices()[v].z == 1.0 && surface.normals()[v].z > 0.999_999)
            .collect();
        let region = ContactRegion::new(&surface, top).unwrap();
        (surface, volume, region)
    }

    #[test]
    fn point_load_is_negative_normal() {
        let (s, v, r) = flat_patch();
        let f = ForceMatrix::build(&r, 0.0).unwrap();
        let load = force_vector(&s, &v, &r, &f, 0, 1.0).unwrap();
        let node = v.surface_map()[r.nodes()[0]];
        let n = s.normals()[r.nodes()[0]];
        let got = Vec3::new(load[3 * node], load[3 * node + 1], load[3 * node + 2]);
        assert_relative_eq!(got, -n, epsilon = 1e-15);
        let nonzero = load.iter().filter(|x| **x != 0.0).count();
        assert!(nonzero <= 3);
    }

    #[test]
    fn flat_region_total_force() {
        let (s, v, r) = flat_patch();
        let f = ForceMatrix::build(&r, 1.5).unwrap();
        for node in 0..r.len() {
            let load = force_vector(&s, &v, &r, &f, node, 2.5).unwrap();
            let mut total = Vec3::zeros();
            for k in 0..v.node_count() {
                total += Vec3::new(load[3 * k], load[3 * k + 1], load[3 * k + 2]);
            }
            assert_relative_eq!(total, Vec3::new(0.0, 0.0, -2.5), epsilon = 1e-12);
        }
    }

    #[test]
    fn curved_disc_matches_naive_sum() {
        let grid = crate::procedural::BoxGrid::new([2.0, 2.0, 2.0], [2, 2, 2]);
        let (s, v) = grid.meshes(|p| p.z == 0.0).unwrap();
        // Ten surface vertices around a corner so the normals vary.
        let mut nodes: Vec<usize> = (0..s.vertex_count()).collect();
        nodes.sort_by(|&a, &b| {
            let c = Vec3::new(2.0, 2.0, 2.0);
            (s.vertices()[a] - c).norm().total_cmp(&(s.vertices()[b] - c).norm()).then(a.cmp(&b))
        });
        nodes.truncate(10);
        let r = ContactRegion::new(&s, nodes).unwrap();
        let f = ForceMatrix::build(&r, 1.2).unwrap();
        for src in 0..r.len() {
            let load = force_vector(&s, &v, &r, &f, src, 1.0).unwrap();
            let mut naive = vec![0.0; load.len()];
            for g in 0..r.len() {
                let w = f.get(src, g);
                let sv = r.nodes()[g];
                let vn = v.surface_map()[sv];
                for k in 0..3 {
                    naive[3 * vn + k] += -w * s.normals()[sv][k];
                }
            }
            for (a, b) in load.iter().zip(&naive) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }
}
