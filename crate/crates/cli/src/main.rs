use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use nlpv::run::{mark_failed, output_dir};
use nlpv::{parse_config, run, Command, Overrides, Status};

/// Numerical verification of regularity estimates for nonlocal parabolic equations.
///
/// Exit status: 0 when every requested check passes, 2 when a check fails,
/// 1 on configuration or runtime errors.
#[derive(Parser)]
#[command(name = "nlpv", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true, value_name = "K")]
    jobs: Option<usize>,

    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed, overriding the configuration.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Double N and halve dt (verify and estimate also report refinement ratios).
    #[arg(long, global = true)]
    refine: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Solve one problem and write the field.
    Solve,
    /// Solve and evaluate the tail query of the [tail] section.
    Tail,
    /// Check the configured estimates on one solution.
    Verify,
    /// Empirical constants over a seeded ensemble.
    Estimate,
    /// Compare against the Poisson kernel (s = 1/2).
    Oracle,
    /// Algebraic, Poincaré, Sobolev and comparison-function checks.
    LemmaCheck,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Tail => Command::Tail,
            Cmd::Verify => Command::Verify,
            Cmd::Estimate => Command::Estimate,
            Cmd::Oracle => Command::Oracle,
            Cmd::LemmaCheck => Command::LemmaCheck,
        }
    }
}

fn execute(cli: &Cli) -> Result<Status> {
    let path = cli.config.as_ref().context("--config PATH is required")?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = parse_config(&text).with_context(|| format!("invalid configuration {}", path.display()))?;
    let ov = Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        refine: cli.refine,
        jobs: cli.jobs,
    };
    let go = || {
        let r = run(&cfg, cli.command.into(), &ov);
        if let Err(e) = &r {
            mark_failed(&output_dir(&cfg, &ov), e);
        }
        r
    };
    match cli.jobs {
        Some(0) => anyhow::bail!("--jobs must be at least 1"),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .context("building the worker pool")?
            .install(go),
        None => go(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(status) => {
            if status == Status::VerificationFailed {
                eprintln!("verification failed; see results in the output directory");
            }
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
