use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use orlicz_embed::harness::{parse_config, resolve_master_seed, run_suite, ConfigError, RunMode, RunOptions, SuiteConfig, SEED_ENV};

#[derive(Parser)]
#[command(name = "orlicz", version, about = "Verify permutation-average embeddings of Orlicz sequence spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config file and write reports.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run a small built-in suite.
    Demo {
        #[command(flatten)]
        flags: Flags,
    },
    /// Parse and validate a config file without running it.
    Check { config: PathBuf },
}

#[derive(Copy, Clone, ValueEnum)]
enum ModeArg {
    Exact,
    Mc,
}

#[derive(Args)]
struct Flags {
    /// Master seed; overrides the config and the environment.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value = "reports")]
    out_dir: PathBuf,
    /// Tolerance for every experiment.
    #[arg(long)]
    tol: Option<f64>,
}

const DEMO: &str = r#"{
  "seed": 2024,
  "experiments": [
    {"name": "theorem1_small", "kind": "theorem1", "n": [2, 3, 4, 5], "weights": ["sqrt_prefix", "random_decreasing"], "trials": 20},
    {"name": "theorem2_power", "kind": "theorem2", "n": [2, 4, 8], "orlicz": {"power_normalized": 1.3333333333333333}, "trials": 10},
    {"name": "lemma4_small", "kind": "lemma4", "n": [2, 3, 4], "trials": 50},
    {"name": "lemma5_small", "kind": "lemma5", "n": [2, 3], "trials": 20},
    {"name": "lemma6_small", "kind": "lemma6", "n": [2, 3], "s": 6, "trials": 30},
    {"name": "lemma7_sqrt", "kind": "lemma7", "profile": "power", "alpha": 0.5, "grid": 16}
  ]
}"#;

fn load(path: &PathBuf) -> Result<SuiteConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn execute(cfg: SuiteConfig, flags: Flags) -> ExitCode {
    if flags.samples == 0 {
        eprintln!("error: --samples must be at least 1");
        return ExitCode::from(2);
    }
    let env = std::env::var(SEED_ENV).ok();
    let seed = match resolve_master_seed(flags.seed, env.as_deref(), cfg.seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        out_dir: Some(flags.out_dir.clone()),
        seed: Some(seed),
        mode: flags.mode.map(|m| match m {
            ModeArg::Exact => RunMode::Exact,
            ModeArg::Mc => RunMode::Mc { samples: flags.samples },
        }),
        tolerance: flags.tol,
    };
    let suite = match run_suite(&cfg, &opts) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: writing reports to {}: {e}", flags.out_dir.display());
            return ExitCode::from(1);
        }
    };
    for e in &suite.experiments {
        let status = if e.pass { "PASS" } else { "FAIL" };
        match &e.error {
            Some(err) => println!("{status} {} ({}): {err}", e.experiment, e.kind),
            None => println!("{status} {} ({}), {} rows, seed {}", e.experiment, e.kind, e.rows.len(), e.seed),
        }
    }
    println!("{} experiments, master seed {}, reports in {}", suite.experiments.len(), suite.master_seed, flags.out_dir.display());
    if suite.pass { ExitCode::SUCCESS } else { ExitCode::from(1) }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, flags } => match load(&config) {
            Ok(cfg) => execute(cfg, flags),
            Err(e) => {
                eprintln!("config error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Demo { flags } => execute(parse_config(DEMO).expect("built-in demo config is valid"), flags),
        Command::Check { config } => match load(&config) {
            Ok(cfg) => {
                println!("ok: {} experiments", cfg.experiments.len());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("config error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
