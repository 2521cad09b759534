use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use repelsim_cli::{cmd_bench, cmd_simulate, cmd_verify, CliError, Invocation, Suite, EXIT_CONFIG};

/// Simulate and statistically verify the self-repelling diffusion.
///
/// Any `--section.key=value` argument overrides that key of the config file.
#[derive(Parser)]
#[command(name = "repelsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; also read from REPELSIM_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory and write it as CSV.
    Simulate(Common),
    /// Run a verification suite and write report.json.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Time the three steppers at several horizons.
    Bench(Common),
}

/// Pulls `--a.b=value` overrides out of the argument list.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        match arg.strip_prefix("--").and_then(|s| s.split_once('=')) {
            Some((k, v)) if k.contains('.') => overrides.push((k.to_string(), v.to_string())),
            _ => rest.push(arg),
        }
    }
    (rest, overrides)
}

fn invocation(c: Common, overrides: Vec<(String, String)>) -> Invocation {
    Invocation {
        config: c.config,
        seed: c.seed,
        out: c.out,
        workers: c.workers,
        overrides,
    }
}

fn main() -> ExitCode {
    let (args, overrides) = split_overrides(std::env::args().collect());
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let result: Result<i32, CliError> = match cli.command {
        Command::Simulate(c) => cmd_simulate(&invocation(c, overrides)),
        Command::Verify { common, suite } => cmd_verify(&invocation(common, overrides), suite).map(|(code, out)| {
            for r in &out.report.reports {
                println!("{:<32} {}", r.test, if r.passed() { "pass" } else { "FAIL" });
            }
            code
        }),
        Command::Bench(c) => cmd_bench(&invocation(c, overrides)).map(|(code, report)| {
            for e in &report.entries {
                println!("{:<12} horizon {:>6}  {:>10.1} ns/step", e.representation.name(), e.horizon, e.per_step_ns);
            }
            code
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
