//! Command-line front end: matrix files in, reports out.
//!
//! Every subcommand prints a structured text report to stdout and, with
//! `--json <path>`, writes the same report as JSON. Exit codes: 0 when all
//! checks pass, 1 when a check fails, 2 for usage problems, 3 when a
//! numerical routine breaks down (branch cut, non-convergence).

mod commands;
mod io;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::report::Report;

#[derive(Parser)]
#[command(
    name = "tenfold",
    version,
    about = "Symmetry classes of free-fermion systems: classification, \
             suspension maps, and weak-interaction decomposition"
)]
struct Cli {
    /// Write the machine-readable report to this path.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Override the tolerance of every check.
    #[arg(long, global = true, value_name = "TOL")]
    tol: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Determine the symmetry class of a set of tagged symmetry blocks.
    Classify {
        /// Symmetry matrix files; each needs a metadata.kind tag.
        #[arg(long = "sym", required = true, num_args = 1..)]
        sym: Vec<PathBuf>,
    },
    /// Rotate symmetries into the convenient basis and write them out.
    Normalize {
        #[arg(long = "sym", required = true, num_args = 1..)]
        sym: Vec<PathBuf>,
        /// Output directory for the rotated blocks and the basis itself.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a Hamiltonian against the structure of a class.
    CheckHamiltonian {
        /// Class label, e.g. AII.
        #[arg(long)]
        class: String,
        #[arg(long)]
        n: usize,
        /// Chiral block size; defaults to N/2 where the class carries one.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Draw a random equivariant Hamiltonian of a class.
    Sample {
        #[arg(long)]
        class: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: Option<usize>,
        /// Defaults to TENFOLD_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the sampled matrix to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a suspension map to an equivariant Hamiltonian.
    Suspend {
        #[arg(long, value_enum)]
        spectrum: SpectrumArg,
        #[arg(long)]
        level: usize,
        /// Circle parameter in [0, 1].
        #[arg(long)]
        theta: f64,
        #[arg(long = "in")]
        input: PathBuf,
        /// Chiral block size of the source class, where it carries one.
        #[arg(long)]
        m: Option<usize>,
        /// Also write the suspended evolution to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split an even unitary into a free part and an interaction generator.
    Decompose {
        /// Mode count; the input file must be 2^N x 2^N.
        #[arg(long)]
        n: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        restarts: Option<usize>,
        /// Defaults to TENFOLD_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in property suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 4)]
        n_max: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SpectrumArg {
    Ku,
    Ko,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Car,
    Tables,
    Spectra,
    Weak,
}

/// Failure band of a command, mapped onto the process exit code.
#[derive(Debug)]
pub enum CmdError {
    /// Bad arguments or malformed input files; exit 2.
    Usage(String),
    /// A well-posed input failed a mathematical check; exit 1.
    Check(String),
    /// A numerical routine broke down; exit 3.
    Numeric(String),
}

impl CmdError {
    pub fn code(&self) -> i32 {
        match self {
            CmdError::Check(_) => 1,
            CmdError::Usage(_) => 2,
            CmdError::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Usage(m) | CmdError::Check(m) | CmdError::Numeric(m) => m,
        }
    }
}

/// Sort library errors into the exit-code bands: validation gates that an
/// input can legitimately fail are check failures, shape and convention
/// problems are usage errors, the rest are numerical breakdowns.
pub fn lift(e: tenfold::Error) -> CmdError {
    use tenfold::Error as E;
    let msg = e.to_string();
    match e {
        E::Dimension(_)
        | E::Signature(_)
        | E::Convention(_)
        | E::Profile(_)
        | E::NonFinite(..) => CmdError::Usage(msg),
        E::Structure { .. }
        | E::Parity(_)
        | E::NotEquivariant { .. }
        | E::NotInClass { .. }
        | E::NotInvolutionCompatible { .. } => CmdError::Check(msg),
        E::BranchCut { .. } | E::Singular { .. } | E::Convergence(_) | E::Internal(_) => {
            CmdError::Numeric(msg)
        }
    }
}

fn seed_from_env() -> Result<Option<u64>, CmdError> {
    match std::env::var("TENFOLD_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CmdError::Usage(format!("TENFOLD_SEED must be a u64, got {text:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(std::env::VarError::NotUnicode(_)) => {
            Err(CmdError::Usage("TENFOLD_SEED is not valid UTF-8".into()))
        }
    }
}

fn dispatch(cmd: &Cmd, ctx: &commands::Ctx, report: &mut Report) -> Result<(), CmdError> {
    match cmd {
        Cmd::Classify { sym } => commands::classify(sym, ctx, report),
        Cmd::Normalize { sym, out } => commands::normalize(sym, out, ctx, report),
        Cmd::CheckHamiltonian { class, n, m, input } => {
            commands::check_hamiltonian(class, *n, *m, input, ctx, report)
        }
        Cmd::Sample {
            class,
            n,
            m,
            seed,
            out,
        } => commands::sample(class, *n, *m, *seed, out.as_deref(), ctx, report),
        Cmd::Suspend {
            spectrum,
            level,
            theta,
            input,
            m,
            out,
        } => commands::suspend_cmd(
            *spectrum,
            *level,
            *theta,
            input,
            *m,
            out.as_deref(),
            ctx,
            report,
        ),
        Cmd::Decompose {
            n,
            input,
            restarts,
            seed,
        } => commands::decompose(*n, input, *restarts, *seed, ctx, report),
        Cmd::Verify { suite, n_max } => commands::verify(*suite, *n_max, ctx, report),
    }
}

fn run() -> i32 {
    let start = Instant::now();
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let mut report = Report::new(format!("tenfold {}", argv.join(" ")));

    let outcome = validate_tol(cli.tol)
        .and_then(|()| seed_from_env())
        .and_then(|seed_env| {
            let ctx = commands::Ctx {
                tol: cli.tol,
                seed_env,
            };
            dispatch(&cli.cmd, &ctx, &mut report)
        });
    let code = match outcome {
        Ok(()) => i32::from(!report.all_pass()),
        Err(e) => {
            eprintln!("error: {}", e.message());
            report.set_error(e.message().to_owned());
            e.code()
        }
    };

    report.set_timing_ms(start.elapsed().as_millis() as u64);
    print!("{}", report.render_text());
    if let Some(path) = &cli.json {
        if let Err(e) = report.write_json(path) {
            eprintln!("error: cannot write report to {}: {e}", path.display());
            return if code == 0 { 2 } else { code };
        }
    }
    code
}

fn validate_tol(tol: Option<f64>) -> Result<(), CmdError> {
    match tol {
        Some(t) if !t.is_finite() || t <= 0.0 => Err(CmdError::Usage(format!(
            "--tol must be finite and positive, got {t}"
        ))),
        _ => Ok(()),
    }
}

fn main() {
    std::process::exit(run());
}
