use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wcl::design::Method;
use wcl::mesh::write_file;
use wcl::pipeline::{brute_force_sweep, evaluate_grid, run_method, select, GridSpec, Problem, Report, RunConfig, RunParams};
use wcl::procedural::Benchmark;
use wcl::{Error, Result};

/// Worst-case contact load search.
#[derive(Parser)]
#[command(name = "wcl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a procedural benchmark (meshes, region, config).
    Generate {
        #[arg(long, value_enum, default_value_t = Kind::Plate)]
        kind: Kind,
        #[arg(long, default_value = "bench")]
        out: PathBuf,
    },
    /// Brute-force sweep over every contact location.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination (default: <output_dir>/sweep.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Select a training set.
    Design {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        n_fl: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Index file destination; a `.json` sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One pass of design, fit, rank and refine.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        n_fl: Option<usize>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Ground truth plus the full method x n_FL x delta grid.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the tables of a saved evaluation report.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Plate,
    Bar,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate { kind, out } => generate(kind, &out),
        Command::Sweep { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let problem = Problem::load(&cfg)?;
            let truth = brute_force_sweep(&problem, Some(&cfg.cache_dir))?;
            let path = out.unwrap_or_else(|| cfg.output_dir.join("sweep.csv"));
            write_output(&path, &problem.oracle.snapshot().to_csv())?;
            println!(
                "sigma* = {:e} at contact {} (volume node {}); {} new solves; wrote {}",
                truth.sigma_star,
                truth.argmax_f,
                truth.argmax_node,
                truth.new_solves,
                path.display()
            );
            Ok(())
        }
        Command::Design {
            config,
            method,
            n_fl,
            seed,
            out,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.method = method.unwrap_or(cfg.method);
            cfg.n_fl = n_fl.unwrap_or(cfg.n_fl);
            cfg.seed = seed.unwrap_or(cfg.seed);
            let problem = Problem::load(&cfg)?;
            let sel = select(&problem, cfg.method, cfg.n_fl, cfg.seed, &cfg.design_options(), None)?;
            let path = out.unwrap_or_else(|| cfg.output_dir.join(format!("design_{}.txt", cfg.method)));
            write_output(&path, &wcl::mesh::format_index_list(&sel.set.indices))?;
            let sidecar = serde_json::json!({
                "method": sel.set.method,
                "seed": sel.set.seed,
                "n_fl": sel.set.len(),
                "phi_v": sel.phi_v,
                "phi_g": sel.phi_g,
            });
            write_output(&path.with_extension("json"), &format!("{sidecar:#}\n"))?;
            println!(
                "{} picked {} locations, Phi_V = {:e}, Phi_G = {:e}; wrote {}",
                cfg.method,
                sel.set.len(),
                sel.phi_v,
                sel.phi_g,
                path.display()
            );
            Ok(())
        }
        Command::Run {
            config,
            method,
            n_fl,
            top_k,
            seed,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.method = method.unwrap_or(cfg.method);
            cfg.n_fl = n_fl.unwrap_or(cfg.n_fl);
            cfg.top_k = top_k.unwrap_or(cfg.top_k);
            cfg.seed = seed.unwrap_or(cfg.seed);
            let problem = Problem::load(&cfg)?;
            problem.oracle.load_cache(&cfg.cache_dir)?;
            let result = run_method(&problem, &RunParams::from_config(&cfg));
            problem.oracle.save_cache(&cfg.cache_dir)?;
            let run = result?;
            let json = cfg.output_dir.join(format!("run_{}.json", cfg.method));
            write_output(&json, &run.to_json()?)?;
            write_output(&cfg.output_dir.join(format!("labels_{}.csv", cfg.method)), &run.labels_csv())?;
            for w in &run.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}: sigma~ = {:e} at contact {:?}; total FEAs {} ({} distinct); wrote {}",
                run.method,
                run.sigma_tilde.unwrap_or(f64::NAN),
                run.argmax_candidate,
                run.total_feas,
                run.distinct_feas,
                json.display()
            );
            Ok(())
        }
        Command::Evaluate { config } => {
            let cfg = RunConfig::load(&config)?;
            let problem = Problem::load(&cfg)?;
            let truth = brute_force_sweep(&problem, Some(&cfg.cache_dir))?;
            let report = evaluate_grid(&problem, &truth, &GridSpec::from_config(&cfg))?;
            write_output(&cfg.output_dir.join("report.json"), &report.to_json()?)?;
            write_output(&cfg.output_dir.join("report.csv"), &report.to_csv())?;
            print!("{}", report.to_table());
            Ok(())
        }
        Command::Report { input, csv } => {
            let text = std::fs::read_to_string(&input).map_err(|e| Error::Io {
                path: input.clone(),
                source: e,
            })?;
            let report = Report::from_json(&text)?;
            if let Some(path) = csv {
                write_output(&path, &report.to_csv())?;
            }
            print!("{}", report.to_table());
            Ok(())
        }
    }
}

fn generate(kind: Kind, out: &Path) -> Result<()> {
    let bench = match kind {
        Kind::Plate => Benchmark::desk_plate()?,
        Kind::Bar => Benchmark::cantilever_bar(10.0, 1.0, [40, 4, 4])?,
    };
    let files = bench.write(out)?;
    let name = |p: &Path| PathBuf::from(p.file_name().expect("benchmark files have names"));
    let cfg = RunConfig {
        name: bench.name.clone(),
        surface: name(&files.surface),
        node: name(&files.node),
        ele: name(&files.ele),
        fixed: name(&files.fixed),
        region: name(&files.region),
        ..RunConfig::default()
    };
    let path = out.join("wcl.toml");
    write_file(&path, &cfg.to_toml()?)?;
    println!(
        "{}: {} volume nodes, {} contact nodes; config {}",
        bench.name,
        bench.volume.node_count(),
        bench.region.len(),
        path.display()
    );
    Ok(())
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    write_file(path, contents)
}
