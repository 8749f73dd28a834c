//! `handover-sim`: runs configured experiments and compares their summaries.

mod compare;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use handover_core::runner::{self, Instance, RunConfig, RunOptions, Summary};
use handover_core::scenario;
use handover_core::Error;

#[derive(Parser)]
#[command(name = "handover-sim", version, about = "Joint THO/CHO handover experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every policy of a config for every seed and write ledgers and summaries.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seeds; overrides the config's `seeds`.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Worker threads (seeds are distributed across them).
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Also write per-slot learner internals for CONTRA policies.
        #[arg(long)]
        dump_learner: bool,
    },
    /// Tabulate summary files as CSV, best total objective first.
    Compare {
        #[arg(required = true, num_args = 2..)]
        summaries: Vec<PathBuf>,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a synthetic measurement trace CSV.
    GenTrace {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        cells: usize,
        /// Side of the square area, metres.
        #[arg(long, default_value_t = 2000.0)]
        side_m: f64,
        /// Grid points per side.
        #[arg(long, default_value_t = 40)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

fn config_failure(e: Error) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_failure(e: Error) -> Failure {
    match e {
        Error::Config(_) => Failure::Config(e.to_string()),
        other => Failure::Runtime(other.to_string()),
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    RunConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Failure::Config(format!("cannot read {}: {io}", path.display())),
        other => config_failure(other),
    })
}

struct SeedOutput {
    seed: u64,
    lines: Vec<String>,
}

fn run_seed(cfg: &RunConfig, seed: u64, out: &Path, options: RunOptions) -> Result<SeedOutput, Failure> {
    let mut instance = Instance::new(&cfg.network, &cfg.scenario, seed).map_err(runtime_failure)?;
    let mut lines = Vec::new();
    for spec in &cfg.policies {
        let run = runner::run_policy(&mut instance, spec, options).map_err(|e| match runtime_failure(e) {
            Failure::Runtime(m) => Failure::Runtime(format!("{} seed {seed}: {m}", spec.label())),
            other => other,
        })?;
        let paths = runner::write_artifacts(&run, out).map_err(runtime_failure)?;
        let t = run.ledger.totals();
        lines.push(format!(
            "{} seed {}: objective {:.4}, switches {}/{}, avg regret {:.4} -> {}",
            run.label,
            seed,
            t.objective,
            t.association_changes,
            t.preparation_changes,
            t.final_avg_regret_discrete,
            paths[0].display()
        ));
    }
    Ok(SeedOutput { seed, lines })
}

fn run(
    config: &Path,
    out: Option<PathBuf>,
    seeds: Option<Vec<u64>>,
    parallel: usize,
    dump_learner: bool,
) -> Result<(), Failure> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    cfg.validate().map_err(config_failure)?;
    let out = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", out.display())))?;
    let options = RunOptions { dump_learner, ..RunOptions::default() };

    let workers = parallel.clamp(1, cfg.seeds.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Result<SeedOutput, Failure>>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&seed) = cfg.seeds.get(k) else { break };
                let r = run_seed(&cfg, seed, &out, options);
                let failed = r.is_err();
                results.lock().expect("result lock").push(r);
                if failed {
                    // stop handing out further seeds
                    next.store(cfg.seeds.len(), Ordering::Relaxed);
                }
            });
        }
    });
    let done = results.into_inner().expect("result lock");
    let mut outputs = done.into_iter().collect::<Result<Vec<SeedOutput>, Failure>>()?;
    let order = |seed: u64| cfg.seeds.iter().position(|&s| s == seed);
    outputs.sort_by_key(|o| order(o.seed));
    for o in outputs {
        for line in o.lines {
            println!("{line}");
        }
    }
    Ok(())
}

fn validate(config: &Path) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    println!(
        "{}: ok ({} policies, {} seeds, horizon {})",
        config.display(),
        cfg.policies.len(),
        cfg.seeds.len(),
        cfg.network.horizon
    );
    for &seed in &cfg.seeds {
        println!("seed {seed}: scenario hash {}", runner::scenario_hash(&cfg.network, &cfg.scenario, seed));
    }
    Ok(())
}

fn gen_trace(out: &Path, cells: usize, side_m: f64, points: usize, seed: u64) -> Result<(), Failure> {
    let mut rng = scenario::seeded_rng(seed, scenario::STREAM_SINR);
    let trace = scenario::synthetic_trace(cells, side_m, points, &mut rng).map_err(config_failure)?;
    scenario::save_trace(&trace, out).map_err(runtime_failure)?;
    println!("{}: {} points, {} cells", out.display(), trace.records.len(), cells);
    Ok(())
}

fn read_summary(path: &Path) -> Result<Summary, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seeds, parallel, dump_learner } => run(&config, out, seeds, parallel, dump_learner),
        Command::Compare { summaries } => summaries
            .iter()
            .map(|p| read_summary(p))
            .collect::<Result<Vec<_>, _>>()
            .and_then(|s| compare::table(&s).map_err(Failure::Config))
            .map(|csv| print!("{csv}")),
        Command::Validate { config } => validate(&config),
        Command::GenTrace { out, cells, side_m, points, seed } => gen_trace(&out, cells, side_m, points, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
