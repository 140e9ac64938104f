use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `Σ π_i x_i x_iᵀ`.
pub(crate) fn information(x: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let w = DVector::from_column_slice(weights);
    let mut xw = x.clone();
    for (mut row, &wi) in xw.row_iter_mut().zip(w.iter()) {
        row *= wi;
    }
    x.transpose() * xw
}

/// Inverse of a symmetric positive definite matrix, `None` if it is not.
pub(crate) fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let scale = a.diagonal().amax();
    if !(scale > 0.0) {
        return None;
    }
    let chol = a.clone().cholesky()?;
    let l = chol.l();
    let pivot_floor = 1e-13 * scale.sqrt();
    if l.diagonal().iter().any(|&d| !(d > pivot_floor)) {
        return None;
    }
    Some(chol.inverse())
}

/// Adds `1e-10 tr(Σ)/p` to the diagonal; used only inside the relaxation.
pub(crate) fn jittered(mut sigma: DMatrix<f64>) -> DMatrix<f64> {
    let p = sigma.nrows();
    let ridge = 1e-10 * sigma.trace() / p as f64;
    for i in 0..p {
        sigma[(i, i)] += ridge;
    }
    sigma
}

fn check_weights(x: &DMatrix<f64>, weights: &[f64]) -> Result<()> {
    if weights.len() != x.nrows() {
        return Err(Error::Validation(format!(
            "{} weights for {} design points",
            weights.len(),
            x.nrows()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Validation("design weights must be finite and non-negative".into()));
    }
    Ok(())
}

pub(crate) fn phi_v_from_sigma(gram: &DMatrix<f64>, n: usize, sigma: &DMatrix<f64>) -> f64 {
    match spd_inverse(sigma) {
        Some(inv) => (inv.component_mul(gram)).sum() / n as f64,
        None => f64::INFINITY,
    }
}

/// V-optimality `(1/n) tr(A⁻¹ XᵀX)` with `A = Σ π_i x_i x_iᵀ`; `+∞` when `A`
/// is singular.
pub fn phi_v(x: &DMatrix<f64>, weights: &[f64]) -> Result<f64> {
    check_weights(x, weights)?;
    let gram = x.transpose() * x;
    Ok(phi_v_from_sigma(&gram, x.nrows(), &information(x, weights)))
}

/// G-optimality `max_i x_iᵀ A⁻¹ x_i`; `+∞` when `A` is singular.
pub fn phi_g(x: &DMatrix<f64>, weights: &[f64]) -> Result<f64> {
    check_weights(x, weights)?;
    let Some(inv) = spd_inverse(&information(x, weights)) else {
        return Ok(f64::INFINITY);
    };
    let xa = x * &inv;
    Ok(xa
        .row_iter()
        .zip(x.row_iter())
        .map(|(a, b)| a.dot(&b))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// 0/1 weights of a subset.
pub fn subset_weights(n: usize, indices: &[usize]) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for &i in indices {
        w[i] = 1.0;
    }
    w
}

pub fn phi_v_subset(x: &DMatrix<f64>, indices: &[usize]) -> Result<f64> {
    check_indices(x.nrows(), indices)?;
    phi_v(x, &subset_weights(x.nrows(), indices))
}

pub fn phi_g_subset(x: &DMatrix<f64>, indices: &[usize]) -> Result<f64> {
    check_indices(x.nrows(), indices)?;
    phi_g(x, &subset_weights(x.nrows(), indices))
}

fn check_indices(n: usize, indices: &[usize]) -> Result<()> {
    if let Some(&i) = indices.iter().find(|&&i| i >= n) {
        return Err(Error::Validation(format!("design index {i} out of range (n = {n})")));
    }
    Ok(())
}

pub(crate) fn gradient_from_sigma(
    x: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
) -> Option<Vec<f64>> {
    let inv = spd_inverse(sigma)?;
    let w = &inv * gram * &inv;
    let n = x.nrows() as f64;
    let xw = x * w;
    Some(
        xw.row_iter()
            .zip(x.row_iter())
            .map(|(a, b)| -a.dot(&b) / n)
            .collect(),
    )
}

/// `∂Φ_V/∂π_i = −(1/n) x_iᵀ Σ⁻¹ XᵀX Σ⁻¹ x_i`.
pub fn phi_v_gradient(x: &DMatrix<f64>, weights: &[f64]) -> Result<Vec<f64>> {
    check_weights(x, weights)?;
    let gram = x.transpose() * x;
    gradient_from_sigma(x, &gram, &information(x, weights))
        .ok_or_else(|| Error::Singular("information matrix of the design weights".into()))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Straight-line evaluation: explicit sums, Gauss-Jordan inverse.
    fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let p = a.len();
        let mut m: Vec<Vec<f64>> = a
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = r.clone();
                row.extend((0..p).map(|j| if i == j { 1.0 } else { 0.0 }));
                row
            })
            .collect();
        for c in 0..p {
            let piv = (c..p).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
            m.swap(c, piv);
            let d = m[c][c];
            for v in m[c].iter_mut() {
                *v /= d;
            }
            for r in 0..p {
                if r != c {
                    let f = m[r][c];
                    let pivot_row = m[c].clone();
                    for (v, pv) in m[r].iter_mut().zip(pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        m.into_iter().map(|r| r[p..].to_vec()).collect()
    }

    fn direct(x: &DMatrix<f64>, w: &[f64]) -> (f64, f64) {
        let (n, p) = x.shape();
        let mut a = vec![vec![0.0; p]; p];
        for i in 0..n {
            for r in 0..p {
                for c in 0..p {
                    a[r][c] += w[i] * x[(i, r)] * x[(i, c)];
                }
            }
        }
        let inv = dense_inverse(&a);
        let quad: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 0.0;
                for r in 0..p {
                    for c in 0..p {
                        s += x[(i, r)] * inv[r][c] * x[(i, c)];
                    }
                }
                s
            })
            .collect();
        (quad.iter().sum::<f64>() / n as f64, quad.iter().cloned().fold(f64::MIN, f64::max))
    }

    #[test]
    fn identity_design() {
        let x = DMatrix::<f64>::identity(4, 4);
        let w = vec![1.0; 4];
        assert!((phi_v(&x, &w).unwrap() - 1.0).abs() < 1e-14);
        assert!((phi_g(&x, &w).unwrap() - 1.0).abs() < 1e-14);
        for g in phi_v_gradient(&x, &w).unwrap() {
            assert!((g + 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_design_is_infinite() {
        let x = DMatrix::<f64>::identity(3, 3);
        assert_eq!(phi_v(&x, &[1.0, 1.0, 0.0]).unwrap(), f64::INFINITY);
        assert_eq!(phi_g_subset(&x, &[0, 2]).unwrap(), f64::INFINITY);
        assert!(matches!(phi_v_gradient(&x, &[1.0, 0.0, 0.0]), Err(Error::Singular(_))));
    }

    #[test]
    fn weights_are_validated() {
        let x = DMatrix::<f64>::identity(2, 2);
        assert!(phi_v(&x, &[1.0]).is_err());
        assert!(phi_v(&x, &[1.0, -1.0]).is_err());
        assert!(phi_v_subset(&x, &[0, 2]).is_err());
    }

    #[test]
    fn matches_direct_evaluation() {
        for seed in 0..10 {
            let x = random_matrix(6, 2, seed);
            let w = vec![0.5; 6];
            let (v, g) = direct(&x, &w);
            assert!((phi_v(&x, &w).unwrap() - v).abs() <= 1e-12 * v);
            assert!((phi_g(&x, &w).unwrap() - g).abs() <= 1e-12 * g);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-6;
        for seed in 0..25 {
            let (n, p) = (8 + (seed as usize % 5), 2 + (seed as usize % 3));
            let x = random_matrix(n, p, 100 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
            let g = phi_v_gradient(&x, &w).unwrap();
            for i in 0..n {
                let mut up = w.clone();
                let mut dn = w.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (phi_v(&x, &up).unwrap() - phi_v(&x, &dn).unwrap()) / (2.0 * h);
                assert!(g[i] <= 0.0);
                assert!((fd - g[i]).abs() <= 1e-4 * g[i].abs().max(1e-8), "seed {seed} i {i}: {fd} vs {}", g[i]);
            }
        }
    }

    proptest! {
        #[test]
        fn homogeneous_of_degree_minus_one(seed in 0u64..1000, scale in 0.1f64..10.0) {
            let x = random_matrix(7, 3, seed);
            let w: Vec<f64> = (0..7).map(|i| 0.3 + 0.1 * i as f64).collect();
            let w2: Vec<f64> = w.iter().map(|v| scale * v).collect();
            let a = phi_v(&x, &w).unwrap();
            let b = phi_v(&x, &w2).unwrap();
            prop_assert!((a / scale - b).abs() <= 1e-10 * a);
        }

        #[test]
        fn g_dominates_v(seed in 0u64..1000) {
            let x = random_matrix(9, 3, seed);
            let w: Vec<f64> = (0..9).map(|i| ((i * 7 + seed as usize) % 5) as f64 * 0.25 + 0.1).collect();
            prop_assert!(phi_g(&x, &w).unwrap() >= phi_v(&x, &w).unwrap() * (1.0 - 1e-12));
        }

        #[test]
        fn gradient_is_permutation_equivariant(seed in 0u64..1000, shift in 1usize..7) {
            let n = 7;
            let x = random_matrix(n, 2, seed);
            let w: Vec<f64> = (0..n).map(|i| 0.2 + 0.1 * i as f64).collect();
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            let xp = DMatrix::from_fn(n, 2, |i, j| x[(perm[i], j)]);
            let wp: Vec<f64> = perm.iter().map(|&i| w[i]).collect();
            let g = phi_v_gradient(&x, &w).unwrap();
            let gp = phi_v_gradient(&xp, &wp).unwrap();
            for i in 0..n {
                prop_assert!((gp[i] - g[perm[i]]).abs() <= 1e-12 * g[perm[i]].abs().max(1.0));
            }
        }
    }
}
