use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ce_cli::config::{Format, Overrides, RunConfig};
use ce_cli::{execute, Command};

/// Builds the stage-K construction and checks its identities and bounds.
#[derive(Parser, Debug)]
#[command(name = "cecheck", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Largest stage K.
    #[arg(long, global = true, value_name = "K")]
    stages: Option<usize>,

    /// Quadrature tolerance.
    #[arg(long, global = true, value_name = "T")]
    tol: Option<f64>,

    /// all | stage | residual | flow | octa | AC1..AC9
    #[arg(long, global = true, value_name = "NAME")]
    suite: Option<String>,

    /// Write outputs into this directory instead of stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// json | csv
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,

    /// Seed for sampled points.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// key=value file; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Stage construction as a document.
    Construct,
    /// Preimage counts, monotone runs and L1 mass per stage.
    Levels,
    /// Weak-form residuals of the graph solution.
    Residual,
    /// Continuous flow checks and the non-uniqueness witness.
    Flow,
    /// Octahedron checks, flux tables and plot data.
    Octa,
    /// Acceptance report, one row per criterion.
    Report,
    /// Graph polyline of f_K.
    Graph,
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("cecheck: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(p) => match RunConfig::from_file(p) {
            Ok(c) => c,
            Err(e) => return usage(&e),
        },
        None => RunConfig::default(),
    };
    config.apply(&Overrides {
        stages: cli.stages,
        tol: cli.tol,
        suite: cli.suite.clone(),
        out: cli.out.clone(),
        format: cli.format,
        seed: cli.seed,
    });
    if let Err(e) = config.validate() {
        return usage(&e);
    }
    if let Err(e) = ce_cli::suites::select(&config.suite) {
        return usage(&e);
    }
    let cmd = match cli.cmd {
        Cmd::Construct => Command::Construct,
        Cmd::Levels => Command::Levels,
        Cmd::Residual => Command::Residual,
        Cmd::Flow => Command::Flow,
        Cmd::Octa => Command::Octa,
        Cmd::Report => Command::Report,
        Cmd::Graph => Command::Graph,
    };
    let outcome = match execute(cmd, &config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("cecheck: {e}");
            return ExitCode::from(1);
        }
    };
    match &config.out {
        Some(dir) => {
            if let Err(e) = std::fs::create_dir_all(dir) {
                eprintln!("cecheck: {}: {e}", dir.display());
                return ExitCode::from(1);
            }
            for (name, body) in std::iter::once(&outcome.main).chain(&outcome.extra) {
                let path = dir.join(name);
                if let Err(e) = std::fs::write(&path, body) {
                    eprintln!("cecheck: {}: {e}", path.display());
                    return ExitCode::from(1);
                }
                println!("wrote {}", path.display());
            }
        }
        None => print!("{}", outcome.main.1),
    }
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
