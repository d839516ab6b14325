//! `lsvlab` — experiment runner for the quenched LSV laboratory.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 one or more tolerance
//! checks failed (the summary JSON holds the machine-readable record).

mod config;
mod experiments;

use clap::{Parser, Subcommand};
use config::Config;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lsvlab", about = "Quenched LSV map laboratory", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a JSON config file.
    Run {
        /// Path to the experiment config (JSON).
        config: PathBuf,
        /// Output directory (overrides config and LSVLAB_OUT; default "out").
        #[arg(long)]
        out: Option<PathBuf>,
        /// Root seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker thread count override.
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { config, out, seed, workers } => run(config, out, seed, workers),
    }
}

fn run(
    config_path: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    workers: Option<usize>,
) -> ExitCode {
    let raw = match std::fs::read_to_string(&config_path) {
        Ok(raw) => raw,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(1);
        }
    };
    let mut cfg: Config = match serde_json::from_str(&raw) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: config parse failure: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(workers) = workers {
        cfg.workers = Some(workers);
    }

    // validate the distribution early so bad parameters exit 1, not 2
    let dist_cfg = cfg.distribution;
    if let Some(d) = &dist_cfg {
        if let Err(e) = d.build() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }

    let n_workers = cfg.workers.unwrap_or_else(num_threads_default);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n_workers).build_global() {
        eprintln!("error: worker pool: {e}");
        return ExitCode::from(1);
    }

    let outdir = out
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os("LSVLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let mut runner = match experiments::Runner::new(&cfg, outdir.clone()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match experiments::dispatch(&mut runner) {
        Ok(()) => {}
        Err(e) => {
            // config-shaped problems (unknown experiment, bad grids) exit 1
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    }

    let summary = runner.summary(n_workers, dist_cfg);
    let file = outdir.join(format!(
        "{}__summary.json",
        cfg.output.prefix.clone().unwrap_or_else(|| cfg.experiment.clone())
    ));
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    if let Err(e) = std::fs::write(&file, json) {
        eprintln!("error: cannot write {}: {e}", file.display());
        return ExitCode::from(1);
    }

    for c in &summary.checks {
        println!(
            "check {:<36} {}  value {:.6e}  ({})",
            c.name,
            if c.pass { "pass" } else { "FAIL" },
            c.value,
            c.detail
        );
    }
    println!("summary: {}", file.display());
    if summary.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn num_threads_default() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
