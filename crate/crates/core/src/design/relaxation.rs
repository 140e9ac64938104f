use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::criteria::{gradient_from_sigma, information, jittered, phi_v_from_sigma};
use super::{check_budget, DesignOptions};
use crate::error::{Error, Result};
use crate::force::numerical_rank;

/// Euclidean projection onto `{0 ≤ π ≤ 1, Σπ ≤ budget}`.
///
/// The sum constraint, when active, shifts every coordinate by the same `τ`
/// before clipping; `τ` is found exactly on the piecewise-linear
/// `h(τ) = Σ clip(v_i − τ, 0, 1)` from its sorted breakpoints.
pub fn project_capped_simplex(v: &[f64], budget: usize) -> Vec<f64> {
    let k = budget as f64;
    let clip = |t: f64| -> Vec<f64> { v.iter().map(|&x| (x - t).clamp(0.0, 1.0)).collect() };
    let h = |t: f64| -> f64 { v.iter().map(|&x| (x - t).clamp(0.0, 1.0)).sum() };
    if h(0.0) <= k {
        return clip(0.0);
    }
    if budget == 0 {
        return vec![0.0; v.len()];
    }
    let mut breaks: Vec<f64> = std::iter::once(0.0)
        .chain(v.iter().flat_map(|&x| [x, x - 1.0]))
        .filter(|&t| t >= 0.0)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut tau = *breaks.last().unwrap();
    let mut prev = (0.0, h(0.0));
    for &t in &breaks[1..] {
        let ht = h(t);
        if ht <= k {
            let (ta, ha) = prev;
            tau = if ha == ht { t } else { ta + (ha - k) / (ha - ht) * (t - ta) };
            break;
        }
        prev = (t, ht);
    }
    clip(tau)
}

/// Result of the continuous V-optimal relaxation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relaxation {
    pub weights: Vec<f64>,
    pub phi_v: f64,
    pub iterations: usize,
    /// True when the stopping rule fired rather than the iteration cap.
    pub converged: bool,
    /// Φ_V after every accepted step, starting with the initial point.
    pub history: Vec<f64>,
}

/// Minimizes Φ_V over the capped simplex by projected gradient descent with
/// Armijo backtracking, starting from `π = n_FL / n_F`.
pub fn solve_relaxation(x: &DMatrix<f64>, n_fl: usize, options: &DesignOptions) -> Result<Relaxation> {
    options.validate()?;
    let (n, p) = x.shape();
    check_budget(n, n_fl)?;
    let rank = numerical_rank(x);
    if rank < p {
        return Err(Error::RankDeficient { rank, expected: p });
    }
    let gram = x.transpose() * x;
    let eval = |pi: &[f64]| phi_v_from_sigma(&gram, n, &jittered(information(x, pi)));

    let mut pi = vec![n_fl as f64 / n as f64; n];
    let mut phi = eval(&pi);
    let mut history = vec![phi];
    let mut converged = false;
    let mut iterations = 0;

    'outer: while iterations < options.max_iterations {
        let g = gradient_from_sigma(x, &gram, &jittered(information(x, &pi)))
            .ok_or_else(|| Error::Singular("information matrix during relaxation".into()))?;
        let mut step = 1.0;
        let mut accepted = None;
        let mut last = phi;
        for _ in 0..options.max_backtracks {
            let trial: Vec<f64> = pi.iter().zip(&g).map(|(p, g)| p - step * g).collect();
            let cand = project_capped_simplex(&trial, n_fl);
            let decrease: f64 = g.iter().zip(cand.iter().zip(&pi)).map(|(g, (c, p))| g * (c - p)).sum();
            if cand == pi || decrease.abs() <= 1e-15 * phi {
                // Projected gradient vanishes: stationary point.
                converged = true;
                break 'outer;
            }
            last = eval(&cand);
            if last - phi <= options.armijo_alpha * decrease {
                accepted = Some((cand, last));
                break;
            }
            step *= options.armijo_beta;
        }
        let Some((cand, value)) = accepted else {
            return Err(Error::LineSearch {
                trials: options.max_backtracks,
                last_value: last,
            });
        };
        pi = cand;
        phi = value;
        history.push(phi);
        iterations += 1;
        if history.len() > options.window {
            let old = history[history.len() - 1 - options.window];
            if old - phi <= options.tolerance * old.abs() {
                converged = true;
                break;
            }
        }
    }
    Ok(Relaxation {
        weights: pi,
        phi_v: phi,
        iterations,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::super::criteria::tests::random_matrix;
    use super::super::phi_v;
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Enumerates which coordinates sit at 0, at 1 or strictly inside, and
    /// whether the sum constraint is active; keeps the KKT point.
    fn projection_oracle(v: &[f64], k: f64) -> Vec<f64> {
        let n = v.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for code in 0..3usize.pow(n as u32) {
            let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
            for active in [false, true] {
                let uppers = state.iter().filter(|&&s| s == 1).count() as f64;
                let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
                let tau = if active {
                    if free.is_empty() {
                        continue;
                    }
                    (free.iter().map(|&i| v[i]).sum::<f64>() + uppers - k) / free.len() as f64
                } else {
                    0.0
                };
                let z: Vec<f64> = (0..n)
                    .map(|i| match state[i] {
                        0 => 0.0,
                        1 => 1.0,
                        _ => v[i] - tau,
                    })
                    .collect();
                let eps = 1e-12;
                let kkt = tau >= -eps
                    && z.iter().all(|&x| (-eps..=1.0 + eps).contains(&x))
                    && z.iter().sum::<f64>() <= k + eps
                    && (0..n).all(|i| match state[i] {
                        0 => v[i] - tau <= eps,
                        1 => v[i] - tau >= 1.0 - eps,
                        _ => true,
                    });
                if kkt {
                    let d: f64 = z.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
                    if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                        best = Some((d, z));
                    }
                }
            }
        }
        best.unwrap().1
    }

    #[test]
    fn feasible_point_is_unchanged() {
        assert_eq!(project_capped_simplex(&[0.2, 0.3], 2), vec![0.2, 0.3]);
    }

    #[test]
    fn symmetric_overflow_splits_evenly() {
        assert_eq!(project_capped_simplex(&[2.0, 2.0], 1), vec![0.5, 0.5]);
    }

    #[test]
    fn projection_matches_active_set_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let v: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..2.5)).collect();
            let k = rng.random_range(1..=4);
            let z = project_capped_simplex(&v, k);
            let o = projection_oracle(&v, k as f64);
            for (a, b) in z.iter().zip(&o) {
                assert!((a - b).abs() <= 1e-6, "{v:?} k={k}: {z:?} vs {o:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_idempotent(
            v in proptest::collection::vec(-3.0f64..3.0, 1..20),
            k in 1usize..10,
        ) {
            let z = project_capped_simplex(&v, k);
            prop_assert!(z.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!(z.iter().sum::<f64>() <= k as f64 + 1e-9);
            let zz = project_capped_simplex(&z, k);
            for (a, b) in z.iter().zip(&zz) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn saturated_orthonormal_design() {
        let x = DMatrix::<f64>::identity(4, 4);
        let r = solve_relaxation(&x, 4, &DesignOptions::default()).unwrap();
        assert_eq!(r.weights, vec![1.0; 4]);
        assert!(r.converged);
    }

    #[test]
    fn descent_and_feasibility() {
        for seed in 0..8 {
            let x = random_matrix(30, 4, seed);
            let r = solve_relaxation(&x, 8, &DesignOptions::default()).unwrap();
            assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
            assert!(r.phi_v <= r.history[0]);
            assert!(r.weights.iter().all(|&w| (0.0..=1.0).contains(&w)));
            assert!(r.weights.iter().sum::<f64>() <= 8.0 + 1e-9);
            let exact = phi_v(&x, &r.weights).unwrap();
            assert!((exact - r.phi_v).abs() <= 1e-8 * exact);
        }
    }

    /// Φ_V for 2 columns with a closed-form 2x2 inverse.
    fn phi2(x: &DMatrix<f64>, w: &[f64]) -> f64 {
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        let (mut ga, mut gb, mut gc) = (0.0, 0.0, 0.0);
        for i in 0..x.nrows() {
            let (u, v) = (x[(i, 0)], x[(i, 1)]);
            a += w[i] * u * u;
            b += w[i] * u * v;
            c += w[i] * v * v;
            ga += u * u;
            gb += u * v;
            gc += v * v;
        }
        let det = a * c - b * b;
        if det <= 0.0 {
            return f64::INFINITY;
        }
        (c * ga - 2.0 * b * gb + a * gc) / det / x.nrows() as f64
    }

    /// Zooming grid search on the face `Σπ = 3` (Φ_V decreases in every weight,
    /// so the optimum lies there).
    fn grid_minimum(x: &DMatrix<f64>) -> f64 {
        let mut center = [0.5; 5];
        let mut best = f64::INFINITY;
        for (step, half) in [(0.1, 5i32), (0.01, 10), (0.001, 10), (0.0001, 10)] {
            let mut best_at = center;
            let axis = |c: f64, k: i32| c + k as f64 * step;
            for a in -half..=half {
                for b in -half..=half {
                    for c in -half..=half {
                        for d in -half..=half {
                            for e in -half..=half {
                                let w5 = [
                                    axis(center[0], a),
                                    axis(center[1], b),
                                    axis(center[2], c),
                                    axis(center[3], d),
                                    axis(center[4], e),
                                ];
                                if w5.iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
                                    continue;
                                }
                                let last = 3.0 - w5.iter().sum::<f64>();
                                if !(-1e-12..=1.0 + 1e-12).contains(&last) {
                                    continue;
                                }
                                let w = [w5[0], w5[1], w5[2], w5[3], w5[4], last];
                                let f = phi2(x, &w);
                                if f < best {
                                    best = f;
                                    best_at = w5;
                                }
                            }
                        }
                    }
                }
            }
            center = best_at;
        }
        best
    }

    #[test]
    fn tiny_instance_matches_grid_search() {
        for seed in [3, 11] {
            let x = random_matrix(6, 2, seed);
            let r = solve_relaxation(&x, 3, &DesignOptions::default()).unwrap();
            let g = grid_minimum(&x);
            assert!((r.phi_v - g).abs() <= 1e-4 * g, "seed {seed}: {} vs {g}", r.phi_v);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = random_matrix(5, 2, 1);
        assert!(solve_relaxation(&x, 0, &DesignOptions::default()).is_err());
        assert!(solve_relaxation(&x, 6, &DesignOptions::default()).is_err());
        let mut r = x.clone();
        r.set_column(1, &x.column(0).clone_owned());
        assert!(matches!(
            solve_relaxation(&r, 3, &DesignOptions::default()),
            Err(Error::RankDeficient { rank: 1, expected: 2 })
        ));
    }
}
