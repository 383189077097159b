use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use nisoac_core::config::RunConfig;
use nisoac_core::run::{self, RunError, SWEEP_SUMMARY_FILE};
use nisoac_core::verify::{self, VerifyOptions};

const EXIT_USAGE: u8 = 1;
const EXIT_STEP_FAILURE: u8 = 2;
const EXIT_VERIFY_FAILURE: u8 = 3;

const DEFAULT_OUT: &str = "out";

/// Non-isothermal Allen-Cahn / heat phase-field simulator.
#[derive(Parser)]
#[command(name = "nisoac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration to t_end, writing diagnostics and snapshots
    Run(ConfigArgs),
    /// Run one simulation per value of a numeric key
    Sweep(SweepArgs),
    /// Check analytic constants, operator convergence and the linear solver
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file (`key = value` lines)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset to start from: quasi1d, circle, ellipse, triangle, circle_inv_eps
    #[arg(long)]
    preset: Option<String>,
    /// Override a configuration key; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (default: out_dir from the config, else ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only print the final summary
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    base: ConfigArgs,
    /// Numeric key to vary
    #[arg(long)]
    key: String,
    /// Comma-separated values
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Vec<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Corrupt the Laplacian to exercise the failure path
    #[arg(long, hide = true)]
    broken_stencil: bool,
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            RunConfig::parse_with_preset(&text, args.preset.as_deref())
                .map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => match &args.preset {
            Some(p) => RunConfig::preset(p).ok_or_else(|| format!("unknown preset `{p}`"))?,
            None => RunConfig::default(),
        },
    };
    for o in &args.overrides {
        cfg.apply_override(o).map_err(|e| format!("--set {o}: {e}"))?;
    }
    Ok(cfg)
}

fn out_dir(args: &ConfigArgs, cfg: &RunConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn run_error(e: RunError) -> ExitCode {
    match e {
        RunError::Config(_) | RunError::Usage(_) => usage(e),
        _ => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_STEP_FAILURE)
        }
    }
}

fn cmd_run(args: &ConfigArgs) -> ExitCode {
    let cfg = match load_config(args) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let dir = out_dir(args, &cfg);
    if !args.quiet {
        println!(
            "running {} for {} steps (dt={}) into {}",
            cfg.preset.as_deref().unwrap_or("custom configuration"),
            cfg.n_steps(),
            cfg.controls.dt,
            dir.display()
        );
    }
    match run::run_to_dir(&cfg, &dir) {
        Ok(outcome) => {
            println!("{}", outcome.summary.line());
            if outcome.summary.failure.is_some() {
                eprintln!("last good state written to {}", dir.join(run::LAST_GOOD_FILE).display());
                ExitCode::from(EXIT_STEP_FAILURE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => run_error(e),
    }
}

fn cmd_sweep(args: &SweepArgs) -> ExitCode {
    let cfg = match load_config(&args.base) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let dir = out_dir(&args.base, &cfg);
    if !args.base.quiet {
        println!(
            "sweeping {} over [{}] into {}",
            args.key,
            args.values.join(", "),
            dir.display()
        );
    }
    let entries = match run::sweep(&cfg, &args.key, &args.values, &dir) {
        Ok(e) => e,
        Err(e) => return run_error(e),
    };
    let mut all_ok = true;
    for e in &entries {
        match &e.result {
            Ok(s) => println!("{}={}: {}", args.key, e.value, s.line()),
            Err(err) => println!("{}={}: error: {err}", args.key, e.value),
        }
        all_ok &= e.succeeded();
    }
    if !args.base.quiet {
        println!(
            "summary written to {}",
            Path::new(&dir).join(SWEEP_SUMMARY_FILE).display()
        );
    }
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_STEP_FAILURE)
    }
}

fn cmd_verify(args: &VerifyArgs) -> ExitCode {
    let checks = verify::run_checks(VerifyOptions {
        broken_stencil: args.broken_stencil,
    });
    for c in &checks {
        println!(
            "{:<4} {:<17} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
    }
}
