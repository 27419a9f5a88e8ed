use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use staticgeo::cli::{self, Command, Overrides};
use staticgeo::manifest::load_manifest;

/// Curvature, Killing-field and energy-condition checks for standard static
/// space-times described by a manifest.
#[derive(Parser)]
#[command(name = "staticgeo", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Cross-check the warped-product curvature formulas against the product chart
    Curvature(Common),
    /// Test the manifest's Killing candidates
    KillingCheck(Common),
    /// Classify the Killing candidate by case, and on compact fibers list generators
    KillingClassify(Common),
    /// Energy conditions and hyperbolicity
    Energy(Common),
    /// Hyperbolicity and the timelike diameter bound
    Classify(Common),
    /// Integrate the manifest's geodesic and search for conjugate points
    Geodesic(Common),
    /// Every check above in one report
    FullReport(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    manifest: PathBuf,
    /// Write the report here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
}

impl Cmd {
    fn split(self) -> (Command, Common) {
        match self {
            Cmd::Curvature(c) => (Command::Curvature, c),
            Cmd::KillingCheck(c) => (Command::KillingCheck, c),
            Cmd::KillingClassify(c) => (Command::KillingClassify, c),
            Cmd::Energy(c) => (Command::Energy, c),
            Cmd::Classify(c) => (Command::Classify, c),
            Cmd::Geodesic(c) => (Command::Geodesic, c),
            Cmd::FullReport(c) => (Command::FullReport, c),
        }
    }
}

fn execute(command: Command, args: Common) -> anyhow::Result<i32> {
    let start = Instant::now();
    let m = load_manifest(&args.manifest)?;
    let overrides = Overrides {
        samples: args.samples,
        seed: args.seed,
        tol: args.tol,
        step: args.step,
    };
    let mut report = cli::run(command, &m, &args.manifest.display().to_string(), &overrides)?;
    report.wall_clock_ms = start.elapsed().as_millis() as u64;
    let json = report.to_json();
    match &args.out {
        Some(path) => std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(json.as_bytes()).context("writing report")?,
    }
    Ok(report.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let (command, args) = cli.command.split();
    match execute(command, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
