use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rnsa_cli::commands::{self, Outcome, RunOptions};
use rnsa_cli::output::{csv_to_columns, report_json};
use rnsa_cli::verify::{run_verify, VerifyOptions};
use rnsa_cli::{exit, parse_config, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "rnsa", version, about = "Rotating Navier-Stokes-alpha solver and attractor diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML, or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent trajectories.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory; writes trajectory.csv, final.ckpt, absorbing.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Continue from a checkpoint up to `run.t_final`.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run a perturbed pair and check the contraction chain.
    Pair {
        #[command(flatten)]
        common: Common,
    },
    /// Squeezing harness over an ensemble of pairs.
    Squeeze {
        #[command(flatten)]
        common: Common,
    },
    /// Frechet remainder order and tail contraction of the tangent flow.
    Tangent {
        #[command(flatten)]
        common: Common,
    },
    /// Attractor constants from the closed-form bounds.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// Built-in oracle suite on small lattices.
    Verify {
        /// Also write verify.json here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, hide = true)]
        fault_flip_bilinear: bool,
    },
    /// Convert a CSV output to whitespace-separated columns for gnuplot.
    Columns {
        input: PathBuf,
        output: PathBuf,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Usage(format!("{}: {e}", common.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn threads(n: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    type Cmd = fn(ExperimentConfig, &RunOptions) -> Result<Outcome, CliError>;
    let (common, resume, cmd): (Common, Option<PathBuf>, Cmd) = match cli.command {
        Command::Simulate { common, resume } => (common, resume, commands::cmd_simulate),
        Command::Pair { common } => (common, None, commands::cmd_pair),
        Command::Squeeze { common } => (common, None, commands::cmd_squeeze),
        Command::Tangent { common } => (common, None, commands::cmd_tangent),
        Command::Bounds { common } => (common, None, commands::cmd_bounds),
        Command::Verify {
            out,
            threads: n,
            fault_flip_bilinear,
        } => {
            threads(n)?;
            let report = run_verify(VerifyOptions {
                flip_bilinear: fault_flip_bilinear,
            });
            let text = report_json("verify", "builtin", &report)?;
            print!("{text}");
            let mut files = Vec::new();
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| rnsa_cli::output::io_error(&dir, e))?;
                let path = dir.join("verify.json");
                std::fs::write(&path, &text).map_err(|e| rnsa_cli::output::io_error(&path, e))?;
                files.push(path);
            }
            let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            return Ok(Outcome {
                files,
                passed: report.passed,
                summary: if failed.is_empty() {
                    "all checks passed".into()
                } else {
                    format!("failed: {}", failed.join(", "))
                },
            });
        }
        Command::Columns { input, output } => {
            csv_to_columns(&input, &output)?;
            return Ok(Outcome {
                files: vec![output],
                passed: true,
                summary: String::new(),
            });
        }
    };
    threads(common.threads)?;
    let cfg = load(&common)?;
    cmd(cfg, &RunOptions { out: common.out, resume })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            if !outcome.summary.is_empty() {
                eprintln!("{}", outcome.summary);
            }
            if outcome.passed {
                ExitCode::from(exit::OK as u8)
            } else {
                eprintln!("check failed");
                ExitCode::from(exit::CHECK_FAILED as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
