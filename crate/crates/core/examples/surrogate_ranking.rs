//! Fits the spectral surrogate on a greedy training set, then shows how the
//! refined maximum approaches the true worst case as k grows.
//!
//!     cargo run --release --example surrogate_ranking

use wcl::design::{DesignOptions, Method};
use wcl::pipeline::{brute_force_sweep, select, Problem, RunConfig};
use wcl::procedural::Benchmark;
use wcl::surrogate::{evaluate_k, fit_on, predict, rank_and_refine};

fn main() -> wcl::Result<()> {
    let config = RunConfig::default();
    let problem = Problem::from_benchmark(Benchmark::desk_plate()?, &config)?;
    let truth = brute_force_sweep(&problem, None)?;

    let sel = select(&problem, Method::Greedy, 25, 0, &DesignOptions::default(), None)?;
    let training = &sel.set.indices;
    let sigma_l: Vec<f64> = training.iter().map(|&f| truth.sigma[f]).collect();
    let model = fit_on(problem.x(), training, &sigma_l, false)?;
    let sigma_hat = predict(problem.x(), &model)?;
    println!("fit: rank {} of {}, training residual {:.3e}", model.rank, model.unknowns, model.residual_norm);

    let corr = correlation(&sigma_hat, &truth.sigma);
    println!("correlation of predicted and true sigma* over all {} contacts: {corr:.4}", problem.n_f());

    let ranked = rank_and_refine(&sigma_hat, 40, truth.sigma.as_slice())?;
    let curve = ranked.sigma_tilde_curve();
    for k in [0, 4, 9, 19, 39] {
        let Some(s) = curve[k] else { continue };
        println!("k = {:>2}: sigma~ = {:.4e} ({:.2}% of sigma*)", k + 1, s, 100.0 * s / truth.sigma_star);
    }
    for delta in [0.0, 0.01, 0.05, 0.1] {
        println!("smallest k within {:>4.0}%: {:?}", 100.0 * delta, evaluate_k(&ranked.ranking, &truth.sigma, delta)?);
    }
    Ok(())
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
