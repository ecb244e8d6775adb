use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lincbwk::harness::{self, AlgoSpec, Axis, Baseline, ExperimentConfig};
use lincbwk::par::{self, Parallelism};
use lincbwk::{Error, Result};

/// Linear contextual bandits with knapsacks: experiment runner.
#[derive(Parser)]
#[command(name = "lincbwk", version)]
struct Cli {
    /// Run repeats one after another instead of on the thread pool.
    #[arg(long, global = true)]
    serial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write CSV logs and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the experiment once per axis value and write sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// T, B or m.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the benchmark OPT of the configured environment.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a comparison policy on the configured environment.
    Baseline {
        /// oracle-static, unconstrained-linucb or uniform-random.
        #[arg(long)]
        name: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(path: &PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if out.is_some() {
        cfg.out = out;
    }
    if cfg.out.is_none() {
        cfg.out = Some(PathBuf::from("out"));
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn print_summary(s: &harness::ExperimentSummary) {
    println!("algorithm {}", s.algorithm);
    println!("opt {}", harness::sig9(s.opt));
    println!(
        "reward median {} q1 {} q3 {}",
        harness::sig9(s.total_reward.median),
        harness::sig9(s.total_reward.q1),
        harness::sig9(s.total_reward.q3)
    );
    println!(
        "regret median {} q1 {} q3 {}",
        harness::sig9(s.regret.median),
        harness::sig9(s.regret.q1),
        harness::sig9(s.regret.q3)
    );
}

fn execute(cli: Cli) -> Result<()> {
    let mode = if cli.serial { Parallelism::Serial } else { Parallelism::Parallel };
    match cli.command {
        Command::Run { config, out, seed } => {
            let cfg = load(&config, out, seed)?;
            print_summary(&harness::run(&cfg, mode)?);
        }
        Command::Sweep { config, axis, values, out, seed } => {
            let cfg = load(&config, out, seed)?;
            let axis: Axis = axis.parse()?;
            for p in harness::sweep(&cfg, axis, &values, mode)? {
                println!(
                    "{}={} opt {} regret median {} ratio {}",
                    axis.name(),
                    harness::sig9(p.value),
                    harness::sig9(p.summary.opt),
                    harness::sig9(p.summary.regret.median),
                    p.ratio.map(harness::sig9).unwrap_or_else(|| "-".into())
                );
            }
        }
        Command::Oracle { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            println!("{}", harness::sig9(harness::oracle(&cfg, mode)?));
        }
        Command::Baseline { name, config, out, seed } => {
            let baseline: Baseline = name.parse()?;
            let mut cfg = load(&config, out, seed)?;
            cfg.algo = AlgoSpec::Baseline(baseline);
            print_summary(&harness::run(&cfg, mode)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = harness::thread_cap_from_env();
    match par::with_thread_cap(threads, || execute(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::LpNumerics { dump, .. } = &e {
                eprintln!("instance:\n{dump}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
