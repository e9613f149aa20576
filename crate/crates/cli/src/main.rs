//! `simcache` command-line front end.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 on runtime errors.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use simcache::config::ConfigBuilder;
use simcache::experiment::{emit_csv, run_experiment, ExperimentName, ExperimentOptions};
use simcache::model::{run_single, Simulation};
use simcache::workload::{write_trace, InstructionStream};
use simcache::{SimConfig, SimError};

#[derive(Debug, Parser)]
#[command(
    name = "simcache",
    version,
    about = "Multithreaded processor and cache hierarchy simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration for one seed and print its summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "SIMCACHE_SEED")]
        seed: Option<u64>,
        /// Replace every jittered hold by its mean.
        #[arg(long)]
        deterministic: bool,
    },
    /// Run a canned experiment over a seed ensemble and emit CSV.
    Experiment {
        #[arg(long, value_parser = parse_name)]
        name: ExperimentName,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base configuration file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "SIMCACHE_SEED")]
        seed: Option<u64>,
        /// Override a config or experiment key.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Write the generated workload of a configuration as a trace file.
    Trace {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "SIMCACHE_SEED")]
        seed: Option<u64>,
    },
}

fn parse_name(s: &str) -> Result<ExperimentName, String> {
    s.parse().map_err(|e: SimError| e.to_string())
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(msg) => Failure::Config(msg),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn read_config(
    path: Option<&Path>,
    overrides: &[String],
    opts: Option<&mut ExperimentOptions>,
) -> Result<SimConfig, Failure> {
    let mut builder = ConfigBuilder::new();
    if let Some(path) = path {
        let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        builder
            .apply_text(&text)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    }
    let mut opts = opts;
    for pair in overrides {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("--set {pair}: expected KEY=VALUE")))?;
        if let Some(o) = opts.as_deref_mut() {
            if o.apply(key.trim(), value).map_err(Failure::Config)? {
                continue;
            }
        }
        builder
            .set(key.trim(), value, None)
            .map_err(|e| Failure::Config(format!("--set {e}")))?;
    }
    builder.build().map_err(|e| Failure::Config(e.to_string()))
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_failure(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            seed,
            deterministic,
        } => {
            let mut cfg = read_config(Some(&config), &[], None)?;
            if deterministic {
                cfg.deterministic_latencies = true;
            }
            let seed = seed.unwrap_or(cfg.seed);
            let s = run_single(&cfg, seed)?;
            println!("seed={}", s.seed);
            println!("config_fingerprint={:016x}", s.config_fingerprint);
            println!("retired={}", s.retired);
            println!("memory_instructions={}", s.memory_instructions);
            println!("accesses={}", s.accesses);
            println!("l1_misses={}", s.l1_misses);
            println!("l2_misses={}", s.l2_misses);
            println!("l3_misses={}", s.l3_misses);
            println!("prefetches={}", s.prefetches);
            println!("l1_miss_rate_per_instruction={}", s.miss_rate_per_instruction());
            println!("l1_miss_rate_per_access={}", s.miss_rate_per_access());
            println!("max_window_occupancy={}", s.max_window_occupancy);
            println!("sim_time={}", s.sim_time);
        }
        Command::Experiment {
            name,
            seeds,
            out,
            config,
            seed,
            overrides,
        } => {
            let mut opts = ExperimentOptions::default();
            let mut cfg = read_config(config.as_deref(), &overrides, Some(&mut opts))?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let seeds = seeds.unwrap_or(cfg.seeds);
            let table = run_experiment(name, &cfg, &opts, seeds)?;
            let mut sink = open_out(out.as_deref())?;
            emit_csv(&table, &mut sink).map_err(|e| Failure::Runtime(e.to_string()))?;
        }
        Command::Trace { config, out, seed } => {
            let cfg = read_config(Some(&config), &[], None)?;
            let seed = seed.unwrap_or(cfg.seed);
            let sim = Simulation::new(&cfg, seed)?;
            let all: Vec<_> = sim.streams().flat_map(|s| s.instructions().iter().copied()).collect();
            let file = File::create(&out).map_err(|e| io_failure(&out, e))?;
            write_trace(&InstructionStream::new(all), BufWriter::new(file)).map_err(|e| io_failure(&out, e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
