//! Command-line driver for the PPS4BP orbit family and its stability
//! analysis. Exit codes: 0 success, 1 numerical failure, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pps4bp::cli::{self, CliError, SweepConfig};
use pps4bp::model::MassParam;
use pps4bp::reduction;
use pps4bp::DEFAULT_STEP;

#[derive(Parser)]
#[command(
    name = "pps4bp",
    version,
    about = "Symmetric periodic collision orbits of the planar pairwise symmetric \
             four-body problem and their linear stability"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Produce and continue the periodic orbit family.
    Orbit {
        #[command(subcommand)]
        action: OrbitCommand,
    },
    /// Stability classification of family members.
    Stability {
        #[command(subcommand)]
        action: StabilityCommand,
    },
    /// Structural invariant reports.
    Check {
        #[command(subcommand)]
        action: CheckCommand,
    },
    /// Full-period consistency checks of the factorization.
    Monodromy {
        #[command(subcommand)]
        action: MonodromyCommand,
    },
    /// Plot-data export.
    Figure {
        #[command(subcommand)]
        action: FigureCommand,
    },
}

#[derive(Args)]
struct Numerics {
    /// Regularized-time step of the integrator.
    #[arg(long = "h-step", default_value_t = DEFAULT_STEP)]
    h_step: f64,
    /// Newton convergence tolerance on the shooting residual.
    #[arg(long, default_value_t = 1e-12)]
    newton_tol: f64,
    /// Maximum Newton iterations.
    #[arg(long, default_value_t = 25)]
    max_iter: usize,
    /// Reality/boundary tolerance of the classifier.
    #[arg(long, default_value_t = 1e-8)]
    class_tol: f64,
}

impl Numerics {
    fn apply(&self, cfg: &mut SweepConfig) {
        cfg.h = self.h_step;
        cfg.newton_tol = self.newton_tol;
        cfg.max_iter = self.max_iter;
        cfg.class_tol = self.class_tol;
    }
}

fn parse_mass(text: &str) -> Result<f64, String> {
    let m: f64 = text.parse().map_err(|e| format!("{e}"))?;
    MassParam::new(m).map_err(|e| e.to_string())?;
    Ok(m)
}

#[derive(Subcommand)]
enum OrbitCommand {
    /// Refine the family member at one mass (continuing from the built-in
    /// seed when needed).
    Refine {
        #[arg(long, value_parser = parse_mass)]
        m: f64,
        #[command(flatten)]
        numerics: Numerics,
        /// Orbit-store CSV to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Continue the family across a mass range and write the orbit store.
    Continue {
        #[arg(long, value_parser = parse_mass)]
        from: f64,
        #[arg(long, value_parser = parse_mass)]
        to: f64,
        #[arg(long)]
        step: f64,
        #[command(flatten)]
        numerics: Numerics,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum StabilityCommand {
    /// Continuation, reduction, and classification across a mass grid.
    Sweep {
        #[arg(long, value_parser = parse_mass)]
        from: f64,
        #[arg(long, value_parser = parse_mass)]
        to: f64,
        #[arg(long)]
        step: f64,
        #[command(flatten)]
        numerics: Numerics,
        /// Results CSV to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write the underlying orbit store.
        #[arg(long)]
        orbits: Option<PathBuf>,
    },
    /// One-mass stability classification, printed (and optionally saved).
    Single {
        #[arg(long, value_parser = parse_mass)]
        m: f64,
        #[command(flatten)]
        numerics: Numerics,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Print every structural invariant of one family member.
    Invariants {
        #[arg(long, value_parser = parse_mass)]
        m: f64,
        #[command(flatten)]
        numerics: Numerics,
        /// Include the full-period factorization cross-check.
        #[arg(long)]
        crosscheck: bool,
    },
}

#[derive(Subcommand)]
enum MonodromyCommand {
    /// Compare the full-period monodromy against the eighth-period
    /// factorization.
    Crosscheck {
        #[arg(long, value_parser = parse_mass)]
        m: f64,
        #[command(flatten)]
        numerics: Numerics,
    },
}

#[derive(Subcommand)]
enum FigureCommand {
    /// Emit plot data (m, eigenvalue index, value) for real eigenvalues.
    Emit {
        /// Results CSV produced by `stability sweep`.
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional gnuplot companion script.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Reality tolerance on the imaginary parts.
        #[arg(long, default_value_t = 1e-8)]
        class_tol: f64,
    },
}

fn print_row(row: &cli::SweepRow) {
    println!("m = {}", row.m);
    println!("  E_hat   = {:.12}", row.e_hat);
    println!("  lambda1 = {:.12} {:+.12}i", row.lam[0].re, row.lam[0].im);
    println!("  lambda2 = {:.12} {:+.12}i", row.lam[1].re, row.lam[1].im);
    println!("  lambda3 = {:.12} {:+.12}i", row.lam[2].re, row.lam[2].im);
    println!("  class   = {}", row.class);
    println!("  mult1   = {:.12} {:+.12}i", row.mult[0].re, row.mult[0].im);
    println!("  mult2   = {:.12} {:+.12}i", row.mult[1].re, row.mult[1].im);
    println!("  residual = {:.3e}, closure = {:.3e}, A = {:.6}", row.residual, row.closure, row.a_value);
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Orbit { action } => match action {
            OrbitCommand::Refine { m, numerics, out } => {
                let mut cfg = SweepConfig::single(m)?;
                numerics.apply(&mut cfg);
                let records = cli::family_over_grid(&cfg.grid, &cfg.shooting_options())?;
                let rec = &records[0];
                println!(
                    "m = {}\n  p = ({}, {}, {}, {})\n  E_hat = {:.12}\n  residual = {:.3e}\n  A = {:.9}\n  closure = {:.3e}",
                    rec.m, rec.p[0], rec.p[1], rec.p[2], rec.p[3], rec.e_hat, rec.residual_norm,
                    rec.a_value, rec.closure_error
                );
                if let Some(path) = out {
                    cli::write_orbit_store(&path, &records)?;
                    println!("orbit store written to {}", path.display());
                }
                Ok(())
            }
            OrbitCommand::Continue { from, to, step, numerics, out } => {
                let mut cfg = SweepConfig::from_range(from.min(to), from.max(to), step)?;
                numerics.apply(&mut cfg);
                let records = cli::family_over_grid(&cfg.grid, &cfg.shooting_options())?;
                cli::write_orbit_store(&out, &records)?;
                println!("{} orbit records written to {}", records.len(), out.display());
                Ok(())
            }
        },
        Command::Stability { action } => match action {
            StabilityCommand::Sweep { from, to, step, numerics, out, orbits } => {
                let mut cfg = SweepConfig::from_range(from.min(to), from.max(to), step)?;
                numerics.apply(&mut cfg);
                let (records, rows) = cli::run_sweep(&cfg)?;
                cli::write_results(&out, &rows)?;
                println!("{} sweep rows written to {}", rows.len(), out.display());
                if let Some(path) = orbits {
                    cli::write_orbit_store(&path, &records)?;
                    println!("orbit store written to {}", path.display());
                }
                Ok(())
            }
            StabilityCommand::Single { m, numerics, out } => {
                let mut cfg = SweepConfig::single(m)?;
                numerics.apply(&mut cfg);
                let (_, rows) = cli::run_sweep(&cfg)?;
                print_row(&rows[0]);
                if let Some(path) = out {
                    cli::write_results(&path, &rows)?;
                    println!("results written to {}", path.display());
                }
                Ok(())
            }
        },
        Command::Check { action } => match action {
            CheckCommand::Invariants { m, numerics, crosscheck } => {
                let mut cfg = SweepConfig::single(m)?;
                numerics.apply(&mut cfg);
                cfg.crosscheck = crosscheck;
                let report = cli::report_invariants(m, &cfg)?;
                print!("{report}");
                Ok(())
            }
        },
        Command::Monodromy { action } => match action {
            MonodromyCommand::Crosscheck { m, numerics } => {
                let mut cfg = SweepConfig::single(m)?;
                numerics.apply(&mut cfg);
                let records = cli::family_over_grid(&cfg.grid, &cfg.shooting_options())?;
                let report = reduction::monodromy_crosscheck(&records[0], cfg.h)?;
                println!("m = {m}");
                println!("  |Y0^-1 Y(2pi) - W^4|_max = {:.6e}", report.w4_defect);
                println!("  quarter-factor defect    = {:.6e}", report.quarter_factor_defect);
                for (i, defect) in report.trivial_defects.iter().enumerate() {
                    println!("  trivial direction {} defect = {:.6e}", i + 1, defect);
                }
                println!("  monodromy scale          = {:.3e}", report.monodromy_scale);
                Ok(())
            }
        },
        Command::Figure { action } => match action {
            FigureCommand::Emit { results, out, script, class_tol } => {
                let emitted = cli::emit_figure_data(&results, &out, class_tol, script.as_deref())?;
                println!("{emitted} figure rows written to {}", out.display());
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(1)
        }
    }
}
