use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kirchhoff_core::harness::{self, ExperimentKind, OutputFormat, ScenarioConfig};

/// Life-span experiments for spectral truncations of the Kirchhoff equation.
#[derive(Parser)]
#[command(name = "kirchhoff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Continuous dependence along a decreasing epsilon grid.
    Lsc(Common),
    /// Guaranteed times and life-span lower bounds.
    Age(Common),
    /// Growth of the weighted energy against its envelope.
    Growth(Common),
    /// Randomized property suites; `--config` is optional.
    Verify(Common),
    /// Integrate one trajectory and export it.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    /// JSON scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Solver tolerance (overrides the config).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn load(kind: ExperimentKind, c: &Common) -> kirchhoff_core::Result<ScenarioConfig> {
    let mut cfg = match &c.config {
        Some(p) => ScenarioConfig::load(p)?,
        None if kind == ExperimentKind::Verify => ScenarioConfig::from_json(r#"{"experiment": "verify"}"#)?,
        None => return Err(kirchhoff_core::Error::MissingField("--config")),
    };
    if cfg.experiment != kind {
        return Err(kirchhoff_core::Error::Config(format!(
            "config is tagged '{}' but the '{}' subcommand was used",
            cfg.experiment.name(),
            kind.name()
        )));
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.tol {
        cfg.solver.tol = t;
    }
    if let Some(o) = &c.out {
        cfg.output.dir = o.display().to_string();
    }
    if let Some(f) = c.format {
        cfg.output.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match &cli.command {
        Command::Lsc(c) => (ExperimentKind::Lsc, c),
        Command::Age(c) => (ExperimentKind::Age, c),
        Command::Growth(c) => (ExperimentKind::Growth, c),
        Command::Verify(c) => (ExperimentKind::Verify, c),
        Command::Simulate(c) => (ExperimentKind::Simulate, c),
    };
    let outcome = load(kind, common).and_then(|cfg| {
        let res = harness::run(&cfg)?;
        let files = res.write(cfg.output.dir.as_ref(), cfg.output.format)?;
        Ok((res, files))
    });
    match outcome {
        Ok((res, files)) => {
            print!("{}", res.ledger());
            for (k, v) in &res.summary {
                println!("{k:<34} {v:>14.6e}");
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            let pass = res.pass();
            println!("{}", if pass { "PASS" } else { "FAIL" });
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
