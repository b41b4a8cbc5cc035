use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use convexhodge_cli::{run, Command, JobSpec};

#[derive(Parser)]
#[command(name = "convexhodge", version, about = "Mixed-volume and Hodge-Riemann verification jobs")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Mixed volume of n bodies with an oracle cross-check.
    Mixvol(Opts),
    /// Lorentzian signature of mixed-volume Gram matrices.
    Af(Opts),
    /// Hodge-Riemann certificate for tuples of bodies.
    Hr(Opts),
    /// Randomized linear-algebra Hodge-Riemann suite.
    Timorin(Opts),
    /// Closed-form spectral table or sweep.
    Spectral(Opts),
    /// E- and F-norms between two bodies.
    Norms(Opts),
    /// Quick battery over every module.
    Selftest(Opts),
}

#[derive(Args)]
struct Opts {
    /// Job file (JSON). Optional for commands whose inputs all have defaults.
    #[arg(long)]
    job: Option<PathBuf>,
    /// Report destination; defaults to the job's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid resolution override.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_oracle: Option<f64>,
    #[arg(long)]
    tol_primitivity: Option<f64>,
    #[arg(long)]
    tol_sign: Option<f64>,
    #[arg(long)]
    tol_signature: Option<f64>,
    #[arg(long)]
    tol_zero: Option<f64>,
    #[arg(long)]
    tol_null: Option<f64>,
    #[arg(long)]
    tol_margin: Option<f64>,
    #[arg(long)]
    tol_equality: Option<f64>,
    #[arg(long)]
    tol_norms: Option<f64>,
    #[arg(long)]
    tol_spectral: Option<f64>,
}

impl Sub {
    fn split(self) -> (Command, Opts) {
        match self {
            Sub::Mixvol(o) => (Command::Mixvol, o),
            Sub::Af(o) => (Command::Af, o),
            Sub::Hr(o) => (Command::Hr, o),
            Sub::Timorin(o) => (Command::Timorin, o),
            Sub::Spectral(o) => (Command::Spectral, o),
            Sub::Norms(o) => (Command::Norms, o),
            Sub::Selftest(o) => (Command::Selftest, o),
        }
    }
}

fn load_job(command: Command, opts: &Opts) -> Result<JobSpec, String> {
    let mut job = match &opts.job {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            JobSpec::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => JobSpec::new(command),
    };
    match job.command {
        Some(c) if c != command => {
            return Err(format!(
                "job command `{}` does not match subcommand `{}`",
                c.name(),
                command.name()
            ))
        }
        _ => job.command = Some(command),
    }
    if opts.grid.is_some() {
        job.grid = opts.grid;
    }
    if let Some(seed) = opts.seed {
        job.seed = seed;
    }
    let t = &mut job.tolerances;
    for (slot, value) in [
        (&mut t.oracle, opts.tol_oracle),
        (&mut t.primitivity, opts.tol_primitivity),
        (&mut t.sign, opts.tol_sign),
        (&mut t.signature, opts.tol_signature),
        (&mut t.zero, opts.tol_zero),
        (&mut t.null, opts.tol_null),
        (&mut t.margin, opts.tol_margin),
        (&mut t.equality, opts.tol_equality),
        (&mut t.norms, opts.tol_norms),
        (&mut t.spectral, opts.tol_spectral),
    ] {
        if value.is_some() {
            *slot = value;
        }
    }
    Ok(job)
}

fn main() -> ExitCode {
    let (command, opts) = Cli::parse().command.split();
    let job = match load_job(command, &opts) {
        Ok(job) => job,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run(&job) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let text = report.to_json();
    let out = opts.out.clone().or_else(|| job.output.clone().map(PathBuf::from));
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text + "\n") {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => println!("{text}"),
    }
    for c in report.verdict.failures() {
        eprintln!("FAIL {}: {:e} {:?} {:e}", c.name, c.value, c.relation, c.threshold);
    }
    eprintln!(
        "{} {} ({} checks, {:.2} s)",
        if report.verdict.pass { "PASS" } else { "FAIL" },
        command.name(),
        report.verdict.checks.len(),
        report.wall_clock_seconds
    );
    ExitCode::from(report.exit_code() as u8)
}
