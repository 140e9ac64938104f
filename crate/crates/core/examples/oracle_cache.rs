//! The stress oracle's in-memory and on-disk caches: a second oracle over the
//! same problem adopts the first one's sweep without solving.
//!
//!     cargo run --release --example oracle_cache

use std::time::Instant;

use wcl::pipeline::{Problem, RunConfig};
use wcl::procedural::Benchmark;

fn main() -> wcl::Result<()> {
    let dir = std::env::temp_dir().join("wcl-oracle-cache");
    let config = RunConfig::default();
    let first = Problem::from_benchmark(Benchmark::desk_plate()?, &config)?;
    println!("content hash {}", first.oracle.hash());

    let start = Instant::now();
    let entry = first.oracle.max_stress(10)?;
    println!("contact 10: sigma* = {:.4e} at volume node {} ({:.2?})", entry.sigma_star, entry.argmax_node, start.elapsed());
    first.oracle.max_stress(10)?;
    println!("asked twice, solved {} time(s)", first.oracle.solve_count());

    let start = Instant::now();
    let sweep = first.oracle.sweep_all()?;
    println!("full sweep: {} solves in {:.2?}", first.oracle.solve_count(), start.elapsed());
    let path = first.oracle.save_cache(&dir)?;
    println!("wrote {}", path.display());

    let second = Problem::from_benchmark(Benchmark::desk_plate()?, &config)?;
    let adopted = second.oracle.load_cache(&dir)?;
    let again = second.oracle.sweep_all()?;
    println!("second oracle adopted {adopted} entries, solved {}; identical: {}", second.oracle.solve_count(), again == sweep);

    let stiffer = RunConfig {
        young_modulus: 2.0 * config.young_modulus,
        ..config
    };
    let third = Problem::from_benchmark(Benchmark::desk_plate()?, &stiffer)?;
    println!("doubling E changes the hash: {}; adopted {}", third.oracle.hash() != first.oracle.hash(), third.oracle.load_cache(&dir)?);
    Ok(())
}
