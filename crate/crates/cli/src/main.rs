use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use bwalk_cli::{parse_config, run_experiment, Kind, RunOptions};

/// Experiments on branching random walks with heavy-tailed jumps.
///
/// Exit status: 0 when every check passes, 1 on a failed check, 2 on a
/// configuration error, 3 on a numerical guard violation or I/O failure.
/// `BWALK_THREADS` sets the worker thread count.
#[derive(Debug, Parser)]
#[command(name = "bwalk", version)]
struct Cli {
    /// Experiment kind; must match `experiment.kind` in the config.
    #[arg(value_parser = parse_kind)]
    kind: Kind,
    #[arg(long)]
    config: PathBuf,
    /// Reject unknown keys and escalate the aliasing guard to an error.
    #[arg(long)]
    strict: bool,
    /// Output directory; overrides `experiment.output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse()
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("BWALK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("BWALK_THREADS must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        return Err("BWALK_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let parsed = match parse_config(&text, cli.strict) {
        Ok(p) => p,
        Err(e) => {
            for w in &e.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    if parsed.config.experiment.kind != cli.kind {
        eprintln!(
            "error: subcommand {} does not match experiment.kind = {}",
            cli.kind, parsed.config.experiment.kind
        );
        return ExitCode::from(2);
    }
    let options = RunOptions {
        strict: cli.strict,
        out: cli.out,
    };
    match run_experiment(&parsed.config, &parsed.warnings, &options) {
        Ok(outcome) => {
            for c in &outcome.checks {
                let mark = if c.pass { "PASS" } else { "FAIL" };
                println!("{mark} {}: {:.6e} (limit {:.6e})", c.name, c.value, c.limit);
            }
            println!("artifacts in {}", outcome.out_dir.display());
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
