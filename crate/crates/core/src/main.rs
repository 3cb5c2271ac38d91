use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use erwlab::experiment::{self, parse_config, ExperimentKind, ModelConfig, RawConfig};
use erwlab::schedule::ScheduleKind;
use erwlab::OracleCaps;

#[derive(Parser)]
#[command(name = "erwlab", version, about = "Elephant random walks with gradually increasing memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Master seed (overrides seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exact law of a row sum T_n by dynamic programming.
    Exact(ExactArgs),
    /// Print the JSON schema of the config file.
    Schema,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    s: f64,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    m: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = OracleCaps::default().max_n_walk)]
    max_n_walk: u64,
    #[arg(long, default_value_t = OracleCaps::default().max_n_stops)]
    max_n_stops: u64,
}

fn exact_config(a: ExactArgs) -> RawConfig {
    RawConfig {
        model: ModelConfig {
            s: a.s,
            p: a.p,
            q: a.q,
            r: a.r,
            alpha: a.alpha,
            beta: a.beta,
        },
        schedule: ScheduleKind::Proportional { gamma: 1.0 },
        experiment: ExperimentKind::Exact,
        n: Some(a.n),
        m: Some(a.m),
        grid: None,
        replications: None,
        seed: 0,
        method: Default::default(),
        output: experiment::OutputConfig {
            dir: a.out,
            samples: false,
        },
        caps: OracleCaps {
            max_n_walk: a.max_n_walk,
            max_n_stops: a.max_n_stops,
        },
        limit_horizon: None,
        slln_from: 1 << 14,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (config, threads) = match cli.command {
        Command::Schema => {
            println!("{}", experiment::CONFIG_SCHEMA.trim_end());
            return ExitCode::SUCCESS;
        }
        Command::Run {
            config,
            out,
            threads,
            seed,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(1);
                }
            };
            let mut cfg = match parse_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Some(seed) = seed {
                cfg.set_seed(seed);
            }
            if let Some(dir) = out {
                cfg.set_output_dir(dir);
            }
            (cfg, threads)
        }
        Command::Exact(args) => match experiment::validate(exact_config(args)) {
            Ok(c) => (c, None),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        },
    };

    if let Some(k) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot start {k} threads: {e}");
            return ExitCode::from(1);
        }
    }

    let output = match experiment::run_experiment(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(dir) = &config.raw.output.dir {
        if let Err(e) = output.write(dir) {
            eprintln!("error: writing outputs to {}: {e}", dir.display());
            return ExitCode::from(1);
        }
    }
    match output.report.to_json() {
        Ok(json) => {
            let mut out = std::io::stdout().lock();
            if let Err(e) = writeln!(out, "{json}") {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    for row in output.report.failures() {
        eprintln!("FAIL {}: value {} target {:?} tolerance {:?}", row.name, row.value, row.target, row.tolerance);
    }
    if output.report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
