//! `trustsim` command-line entry point.
//!
//! Exit codes: 0 success, 1 invalid configuration or arguments, 2 I/O or
//! parse failure.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use trustsim_core::{
    emit_plots, run_simulation, validate_config, write_run, ScenarioConfig, SimError, WriteOptions,
};

#[derive(Parser, Debug)]
#[command(
    name = "trustsim",
    version,
    about = "Seeded simulation of rational trust dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Record wall-clock time in the manifest (breaks byte-identical reruns).
        #[arg(long)]
        timestamps: bool,
        /// Also render SVG figures into <out>/plots.
        #[arg(long)]
        plot: bool,
    },
    /// Run one scenario per seed into <out>/seed_<s>/ and write a summary.
    Batch {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds and ranges, e.g. `1,2,10..20,30..=35`.
        #[arg(long)]
        seeds: String,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a config file and print every violation.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render SVG figures for an existing run directory.
    Plot {
        #[arg(long)]
        run: PathBuf,
    },
}

type SeedOutcome = (u64, Result<(f64, f64), SimError>);

const EXIT_INVALID: u8 = 1;
const EXIT_IO: u8 = 2;

fn exit_code_for(err: &SimError) -> u8 {
    match err {
        SimError::InvalidConfig(_) | SimError::Topology(_) => EXIT_INVALID,
        _ => EXIT_IO,
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, ExitCode> {
    ScenarioConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_IO)
    })
}

/// Parses `1,2,5..8,10..=12` into a list, rejecting duplicates.
fn parse_seeds(list: &str) -> Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let num = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| format!("bad seed {s:?}"))
        };
        if let Some((a, b)) = item.split_once("..=") {
            seeds.extend(num(a)?..=num(b)?);
        } else if let Some((a, b)) = item.split_once("..") {
            seeds.extend(num(a)?..num(b)?);
        } else {
            seeds.push(num(item)?);
        }
    }
    if seeds.is_empty() {
        return Err("at least one seed is required".into());
    }
    let mut seen = BTreeSet::new();
    for &s in &seeds {
        if !seen.insert(s) {
            return Err(format!("duplicate seed {s}"));
        }
    }
    Ok(seeds)
}

fn cmd_run(config: &Path, seed: Option<u64>, out: &Path, timestamps: bool, plot: bool) -> ExitCode {
    let mut cfg = match load(config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let violations = validate_config(&cfg);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{v}");
        }
        return ExitCode::from(EXIT_INVALID);
    }
    let result = run_simulation(&cfg)
        .and_then(|run| write_run(&run, out, WriteOptions { timestamps }))
        .and_then(|mut files| {
            if plot {
                files.extend(emit_plots(out)?);
            }
            Ok(files)
        });
    match result {
        Ok(files) => {
            println!(
                "seed {}: wrote {} files to {}",
                cfg.seed,
                files.len(),
                out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn cmd_batch(config: &Path, seeds: &str, parallelism: usize, out: &Path) -> ExitCode {
    let seeds = match parse_seeds(seeds) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let base = match load(config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let violations = validate_config(&base);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{v}");
        }
        return ExitCode::from(EXIT_INVALID);
    }
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("error: {}: {e}", out.display());
        return ExitCode::from(EXIT_IO);
    }

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    let results: Vec<SeedOutcome> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let cfg = ScenarioConfig {
                    seed,
                    ..base.clone()
                };
                let dir = out.join(format!("seed_{seed}"));
                let r = run_simulation(&cfg).and_then(|run| {
                    write_run(&run, &dir, WriteOptions::default())?;
                    let last = run.log.rows.last().expect("log has the initial row");
                    Ok((last.avg_opinion, last.avg_trust))
                });
                (seed, r)
            })
            .collect()
    });

    let mut summary = String::from("seed,final_avg_opinion,final_avg_trust\n");
    let mut worst = 0u8;
    for (seed, r) in &results {
        match r {
            Ok((o, t)) => {
                writeln!(summary, "{seed},{o:.9},{t:.9}").unwrap();
            }
            Err(e) => {
                eprintln!("seed {seed}: error: {e}");
                worst = worst.max(exit_code_for(e));
            }
        }
    }
    let path = out.join("summary.csv");
    if let Err(e) = std::fs::write(&path, summary) {
        eprintln!("error: {}: {e}", path.display());
        return ExitCode::from(EXIT_IO);
    }
    let ok = results.iter().filter(|(_, r)| r.is_ok()).count();
    println!(
        "{ok}/{} runs succeeded; summary at {}",
        results.len(),
        path.display()
    );
    if worst == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(worst)
    }
}

fn cmd_validate(config: &Path) -> ExitCode {
    let cfg = match load(config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let violations = validate_config(&cfg);
    for v in &violations {
        println!("{v}");
    }
    if violations.is_empty() {
        println!("ok");
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVALID)
    }
}

fn cmd_plot(run: &Path) -> ExitCode {
    match emit_plots(run) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            timestamps,
            plot,
        } => cmd_run(&config, seed, &out, timestamps, plot),
        Command::Batch {
            config,
            seeds,
            parallelism,
            out,
        } => cmd_batch(&config, &seeds, parallelism, &out),
        Command::Validate { config } => cmd_validate(&config),
        Command::Plot { run } => cmd_plot(&run),
    }
}
