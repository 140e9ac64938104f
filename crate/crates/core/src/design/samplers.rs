use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::criteria::spd_inverse;
use super::{check_budget, DesignSet, Method};
use crate::error::{Error, Result};

/// Sequential weighted sampling without replacement: draw proportionally to
/// the remaining weights, remove, renormalize. Once only zero-weight items
/// remain the draw becomes uniform over them.
pub fn weighted_without_replacement<R: Rng>(weights: &[f64], k: usize, rng: &mut R) -> Result<Vec<usize>> {
    check_budget(weights.len(), k)?;
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Validation("sampling weights must be finite and non-negative".into()));
    }
    let mut remaining: Vec<usize> = (0..weights.len()).collect();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = remaining.iter().map(|&i| weights[i]).sum();
        let pos = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (pos, &i) in remaining.iter().enumerate() {
                if weights[i] > 0.0 {
                    acc += weights[i];
                    pick = Some(pos);
                    if target < acc {
                        break;
                    }
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            rng.random_range(0..remaining.len())
        };
        out.push(remaining.remove(pos));
    }
    Ok(out)
}

pub fn sample_uniform(n: usize, n_fl: usize, seed: u64) -> Result<DesignSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(DesignSet {
        indices: weighted_without_replacement(&vec![1.0; n], n_fl, &mut rng)?,
        method: Method::Uniform,
        seed: Some(seed),
    })
}

/// `x_iᵀ (XᵀX)⁻¹ x_i` for every row.
pub fn leverage_scores(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let inv = spd_inverse(&(x.transpose() * x)).ok_or_else(|| Error::Singular("XᵀX for leverage scores".into()))?;
    let xa = x * inv;
    Ok(xa.row_iter().zip(x.row_iter()).map(|(a, b)| a.dot(&b).max(0.0)).collect())
}

pub fn sample_levscore(x: &DMatrix<f64>, n_fl: usize, seed: u64) -> Result<DesignSet> {
    let scores = leverage_scores(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(DesignSet {
        indices: weighted_without_replacement(&scores, n_fl, &mut rng)?,
        method: Method::Levscore,
        seed: Some(seed),
    })
}

/// Sampling with the relaxed V-optimal weights.
pub fn sample_probability(weights: &[f64], n_fl: usize, seed: u64) -> Result<DesignSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(DesignSet {
        indices: weighted_without_replacement(weights, n_fl, &mut rng)?,
        method: Method::Sampling,
        seed: Some(seed),
    })
}

const KMEDOIDS_MAX_ITERATIONS: usize = 100;

/// k-medoids on a geodesic distance matrix. Farthest-point seeding from the
/// node with the largest total distance, then alternating assignment and
/// medoid updates until the medoids stop moving. Ties go to the lowest index.
pub fn sample_kmeans(distances: &[Vec<f64>], n_fl: usize) -> Result<DesignSet> {
    let n = distances.len();
    check_budget(n, n_fl)?;
    if distances.iter().any(|row| row.len() != n) {
        return Err(Error::Validation("distance matrix must be square".into()));
    }
    let argmax = |vals: &mut dyn Iterator<Item = (usize, f64)>| {
        vals.fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if v <= b => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
        .unwrap()
    };
    let totals = (0..n).map(|i| (i, distances[i].iter().sum::<f64>()));
    let mut medoids = vec![argmax(&mut totals.into_iter())];
    let mut nearest: Vec<f64> = distances[medoids[0]].clone();
    let mut chosen = vec![false; n];
    chosen[medoids[0]] = true;
    while medoids.len() < n_fl {
        let next = argmax(&mut (0..n).filter(|&i| !chosen[i]).map(|i| (i, nearest[i])));
        chosen[next] = true;
        medoids.push(next);
        for i in 0..n {
            nearest[i] = nearest[i].min(distances[next][i]);
        }
    }

    for _ in 0..KMEDOIDS_MAX_ITERATIONS {
        let mut clusters = vec![Vec::new(); medoids.len()];
        for i in 0..n {
            let mut best = 0;
            for (c, &m) in medoids.iter().enumerate() {
                let (d, bd) = (distances[m][i], distances[medoids[best]][i]);
                if d < bd || (d == bd && m < medoids[best]) {
                    best = c;
                }
            }
            clusters[best].push(i);
        }
        let updated: Vec<usize> = clusters
            .iter()
            .map(|members| {
                let cost = |c: usize| members.iter().map(|&i| distances[c][i]).sum::<f64>();
                let mut best = members[0];
                let mut best_cost = cost(best);
                for &c in &members[1..] {
                    let v = cost(c);
                    if v < best_cost {
                        best = c;
                        best_cost = v;
                    }
                }
                best
            })
            .collect();
        if updated == medoids {
            break;
        }
        medoids = updated;
    }
    Ok(DesignSet {
        indices: medoids,
        method: Method::Kmeans,
        seed: None,
    })
}
