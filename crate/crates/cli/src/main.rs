use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use allab::config::RunConfig;
use allab::run::{run, write_outputs, Command};

#[derive(Parser)]
#[command(name = "allab", version, about = "Anosov-Liouville pairs and pre-Lagrangian tori")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the standard pair of the model.
    CheckPair(RunArgs),
    /// Windings, compact leaves, Reeb annuli and rotation numbers.
    Foliation(RunArgs),
    /// Obstruction test and certificate construction.
    PreLagrangian(RunArgs),
    /// SVG pictures of the two foliations.
    Render(RunArgs),
    /// Every stage the configuration supports.
    All(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `[output] dir` or the current directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Side of the 3-D check grid.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long = "scale-C")]
    scale_c: Option<f64>,
    /// Closedness tolerance of the solver and the certificate.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let (cmd, args) = match cli.command {
        Cmd::CheckPair(a) => (Command::CheckPair, a),
        Cmd::Foliation(a) => (Command::Foliation, a),
        Cmd::PreLagrangian(a) => (Command::PreLagrangian, a),
        Cmd::Render(a) => (Command::Render, a),
        Cmd::All(a) => (Command::All, a),
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let mut cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!("error: invalid configuration {}", args.config.display());
            eprintln!("{errors}");
            return ExitCode::from(1);
        }
    };
    if let Some(n) = args.grid {
        if n < 2 {
            eprintln!("error: --grid must be at least 2");
            return ExitCode::from(1);
        }
        cfg.grids.al = n;
    }
    for (name, v) in [("--scale-C", args.scale_c), ("--tolerance", args.tolerance)] {
        if v.is_some_and(|x| !(x > 0.0 && x.is_finite())) {
            eprintln!("error: {name} must be a positive number");
            return ExitCode::from(1);
        }
    }
    if let Some(c) = args.scale_c {
        cfg.certificate.scale_c = c;
    }
    if let Some(t) = args.tolerance {
        cfg.certificate.tolerance = t;
        cfg.solver.tolerance = t;
    }
    let outcome = match run(cmd, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let dir = args.out.or(cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = write_outputs(&outcome, &dir, &cfg.report_name) {
        eprintln!("error: writing outputs to {}: {e}", dir.display());
        return ExitCode::from(1);
    }
    for line in &outcome.summary {
        println!("{line}");
    }
    ExitCode::from(outcome.exit_code as u8)
}
