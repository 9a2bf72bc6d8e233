//! Batch driver and persistence: mass-sweep orchestration, orbit-store and
//! results CSV files, invariant reports, and plot-data export.
//!
//! All numbers are serialized with 17 significant digits so files round-trip
//! bit-exactly; sweeps are sequential and deterministic.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::integrate::IntegrateError;
use crate::model::{MassParam, ModelError};
use crate::orbit::{
    self, newton_refine, reference_seed, Continuation, OrbitError, OrbitRecord, ShootingOptions,
};
use crate::reduction::{self, ReductionError, StabilityClass};
use crate::{Vec4, DEFAULT_STEP};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file {path}: {message}")]
    Parse { path: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Largest continuation stride between family members, independent of how
/// coarse the requested output grid is.
const MAX_CONTINUATION_STEP: f64 = 0.01;

/// Sweep parameters: output grid plus the numerical knobs.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Masses to report, each in `(0, 1]`.
    pub grid: Vec<f64>,
    pub h: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub class_tol: f64,
    pub crosscheck: bool,
}

impl SweepConfig {
    pub fn from_range(start: f64, stop: f64, step: f64) -> Result<Self, CliError> {
        if step <= 0.0 || !step.is_finite() {
            return Err(CliError::Usage(format!("grid step {step} must be positive")));
        }
        if stop < start {
            return Err(CliError::Usage(format!("grid range [{start}, {stop}] is reversed")));
        }
        let count = ((stop - start) / step).round();
        if ((start + count * step) - stop).abs() > 1e-12 {
            return Err(CliError::Usage(format!(
                "step {step} does not divide the range [{start}, {stop}]"
            )));
        }
        let grid: Vec<f64> = (0..=count as usize).map(|k| start + k as f64 * step).collect();
        Self::from_values(grid)
    }

    pub fn single(m: f64) -> Result<Self, CliError> {
        Self::from_values(vec![m])
    }

    pub fn from_values(mut grid: Vec<f64>) -> Result<Self, CliError> {
        if grid.is_empty() {
            return Err(CliError::Usage("empty mass grid".into()));
        }
        for &m in &grid {
            MassParam::new(m).map_err(|_| CliError::Usage(format!("mass {m} outside (0, 1]")))?;
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        Ok(Self {
            grid,
            h: DEFAULT_STEP,
            newton_tol: 1e-12,
            max_iter: 25,
            class_tol: 1e-8,
            crosscheck: false,
        })
    }

    pub fn shooting_options(&self) -> ShootingOptions {
        ShootingOptions {
            h: self.h,
            newton_tol: self.newton_tol,
            max_iter: self.max_iter,
            ..Default::default()
        }
    }
}

/// One emitted sweep result.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub m: f64,
    pub e_hat: f64,
    pub lam: [Complex64; 3],
    pub class: StabilityClass,
    /// One representative per nontrivial multiplier pair.
    pub mult: [Complex64; 2],
    pub residual: f64,
    pub closure: f64,
    pub a_value: f64,
}

/// Grows the family from the built-in seed to every grid mass.
///
/// The continuation marches upward and downward from the seed separately,
/// landing exactly on each requested value and never striding more than
/// [`MAX_CONTINUATION_STEP`] between Newton solves.
pub fn family_over_grid(grid: &[f64], opts: &ShootingOptions) -> Result<Vec<OrbitRecord>, CliError> {
    let seed_record = newton_refine(&reference_seed(), opts.newton_tol, opts.max_iter, opts.h)?;
    let anchor = seed_record.m;

    let mut records: Vec<OrbitRecord> = Vec::with_capacity(grid.len());
    if grid.iter().any(|&v| (v - anchor).abs() <= 1e-12) {
        records.push(seed_record);
    }

    let mut upward: Vec<f64> = grid.iter().copied().filter(|&v| v > anchor + 1e-12).collect();
    upward.sort_by(f64::total_cmp);
    let mut walker = Continuation::new(&seed_record, *opts);
    for target in upward {
        let gap = target - walker.current_mass();
        let spacing = gap.min(MAX_CONTINUATION_STEP);
        let batch = walker.march(target, spacing)?;
        records.push(*batch.last().expect("march to a farther target yields records"));
    }

    let mut downward: Vec<f64> = grid.iter().copied().filter(|&v| v < anchor - 1e-12).collect();
    downward.sort_by(|a, b| f64::total_cmp(b, a));
    let mut walker = Continuation::new(&seed_record, *opts);
    for target in downward {
        let gap = walker.current_mass() - target;
        let spacing = gap.min(MAX_CONTINUATION_STEP);
        let batch = walker.march(target, spacing)?;
        records.push(*batch.last().expect("march to a farther target yields records"));
    }

    records.sort_by(|a, b| f64::total_cmp(&a.m, &b.m));
    Ok(records)
}

/// Pick the canonical representative of a multiplier pair: the upper-half
/// member of a conjugate pair, otherwise the member off the unit disk.
fn representative(pair: (Complex64, Complex64)) -> Complex64 {
    let (a, b) = pair;
    if a.im != 0.0 || b.im != 0.0 {
        if a.im >= 0.0 {
            a
        } else {
            b
        }
    } else if a.norm() >= b.norm() {
        a
    } else {
        b
    }
}

/// Reduction and classification of one record into a sweep row.
pub fn row_for_record(rec: &OrbitRecord, h: f64, class_tol: f64) -> Result<SweepRow, CliError> {
    let result = reduction::reduce(rec, h, class_tol)?;
    Ok(SweepRow {
        m: rec.m,
        e_hat: rec.e_hat,
        lam: result.eigenvalues,
        class: result.class,
        mult: [
            representative((result.multipliers[0], result.multipliers[1])),
            representative((result.multipliers[2], result.multipliers[3])),
        ],
        residual: rec.residual_norm,
        closure: rec.closure_error,
        a_value: rec.a_value,
    })
}

/// Continuation plus reduction across the whole grid.
pub fn run_sweep(cfg: &SweepConfig) -> Result<(Vec<OrbitRecord>, Vec<SweepRow>), CliError> {
    let records = family_over_grid(&cfg.grid, &cfg.shooting_options())?;
    let rows = records
        .iter()
        .map(|rec| row_for_record(rec, cfg.h, cfg.class_tol))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((records, rows))
}

// ---------------------------------------------------------------------------
// CSV persistence
// ---------------------------------------------------------------------------

/// 17-significant-digit serialization; round-trips `f64` exactly.
fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

const ORBIT_HEADER: &str = "m,E_hat,u1,u2,v1,v2,residual_norm,A_value,closure_error";

/// Writes the orbit store, sorted by mass ascending.
pub fn write_orbit_store(path: &Path, records: &[OrbitRecord]) -> Result<(), CliError> {
    let mut sorted: Vec<&OrbitRecord> = records.iter().collect();
    sorted.sort_by(|a, b| f64::total_cmp(&a.m, &b.m));
    let mut text = String::from(ORBIT_HEADER);
    text.push('\n');
    for rec in sorted {
        let fields = [
            rec.m,
            rec.e_hat,
            rec.p[0],
            rec.p[1],
            rec.p[2],
            rec.p[3],
            rec.residual_norm,
            rec.a_value,
            rec.closure_error,
        ];
        let line: Vec<String> = fields.iter().map(|&x| fmt_g17(x)).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_orbit_store(path: &Path) -> Result<Vec<OrbitRecord>, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == ORBIT_HEADER => {}
        other => {
            return Err(CliError::Parse {
                path: path.display().to_string(),
                message: format!("unexpected header {other:?}"),
            })
        }
    }
    let mut records = Vec::new();
    for (number, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields = parse_fields(path, line, 9, number + 2)?;
        records.push(OrbitRecord {
            m: fields[0],
            e_hat: fields[1],
            p: Vec4::new(fields[2], fields[3], fields[4], fields[5]),
            residual_norm: fields[6],
            a_value: fields[7],
            closure_error: fields[8],
        });
    }
    Ok(records)
}

fn parse_fields(path: &Path, line: &str, expected: usize, line_number: usize) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = line.split(',').collect();
    if parts.len() != expected {
        return Err(CliError::Parse {
            path: path.display().to_string(),
            message: format!("line {line_number}: expected {expected} fields, found {}", parts.len()),
        });
    }
    parts
        .iter()
        .map(|s| {
            s.parse::<f64>().map_err(|e| CliError::Parse {
                path: path.display().to_string(),
                message: format!("line {line_number}: {e} in {s:?}"),
            })
        })
        .collect()
}

const RESULTS_HEADER: &str = "m,E_hat,lam1_re,lam1_im,lam2_re,lam2_im,lam3_re,lam3_im,class,\
mult1_re,mult1_im,mult2_re,mult2_im,residual,closure,A_value";

pub fn write_results(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut text = String::from(RESULTS_HEADER);
    text.push('\n');
    for row in rows {
        let mut line = String::new();
        let _ = write!(
            line,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_g17(row.m),
            fmt_g17(row.e_hat),
            fmt_g17(row.lam[0].re),
            fmt_g17(row.lam[0].im),
            fmt_g17(row.lam[1].re),
            fmt_g17(row.lam[1].im),
            fmt_g17(row.lam[2].re),
            fmt_g17(row.lam[2].im),
            row.class,
            fmt_g17(row.mult[0].re),
            fmt_g17(row.mult[0].im),
            fmt_g17(row.mult[1].re),
            fmt_g17(row.mult[1].im),
            fmt_g17(row.residual),
            fmt_g17(row.closure),
            fmt_g17(row.a_value),
        );
        text.push_str(&line);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_results(path: &Path) -> Result<Vec<SweepRow>, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == RESULTS_HEADER => {}
        other => {
            return Err(CliError::Parse {
                path: path.display().to_string(),
                message: format!("unexpected header {other:?}"),
            })
        }
    }
    let mut rows = Vec::new();
    for (number, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 16 {
            return Err(CliError::Parse {
                path: path.display().to_string(),
                message: format!("line {}: expected 16 fields, found {}", number + 2, parts.len()),
            });
        }
        let num = |idx: usize| -> Result<f64, CliError> {
            parts[idx].parse::<f64>().map_err(|e| CliError::Parse {
                path: path.display().to_string(),
                message: format!("line {}: {e} in {:?}", number + 2, parts[idx]),
            })
        };
        let class: StabilityClass = parts[8].parse().map_err(|message| CliError::Parse {
            path: path.display().to_string(),
            message,
        })?;
        rows.push(SweepRow {
            m: num(0)?,
            e_hat: num(1)?,
            lam: [
                Complex64::new(num(2)?, num(3)?),
                Complex64::new(num(4)?, num(5)?),
                Complex64::new(num(6)?, num(7)?),
            ],
            class,
            mult: [Complex64::new(num(9)?, num(10)?), Complex64::new(num(11)?, num(12)?)],
            residual: num(13)?,
            closure: num(14)?,
            a_value: num(15)?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Figure data
// ---------------------------------------------------------------------------

const FIGURE_HEADER: &str = "m,eig,value";

/// Writes `(m, i, λᵢ)` rows for the real-classified eigenvalues only, so the
/// complex windows show up as gaps in the plotted curves.
pub fn emit_figure_data(
    results_path: &Path,
    out_path: &Path,
    reality_tol: f64,
    script_path: Option<&Path>,
) -> Result<usize, CliError> {
    let rows = read_results(results_path)?;
    let mut text = String::from(FIGURE_HEADER);
    text.push('\n');
    let mut emitted = 0;
    for row in &rows {
        for (index, lambda) in row.lam.iter().enumerate() {
            if lambda.im.abs() <= reality_tol {
                let _ = writeln!(text, "{},{},{}", fmt_g17(row.m), index + 1, fmt_g17(lambda.re));
                emitted += 1;
            }
        }
    }
    std::fs::write(out_path, text).map_err(io_err(out_path))?;

    if let Some(script) = script_path {
        let data_name = out_path.display();
        let body = format!(
            "# gnuplot script: eigenvalues of the reduced 3x3 block versus mass\n\
             set datafile separator ','\n\
             set xlabel 'm'\n\
             set ylabel 'eigenvalue'\n\
             set key outside\n\
             plot for [i=1:3] '{data_name}' using 1:($2 == i ? $3 : 1/0) \\\n\
             \u{20}    with points pointtype 7 pointsize 0.5 title sprintf('lambda %d', i)\n"
        );
        std::fs::write(script, body).map_err(io_err(script))?;
    }
    Ok(emitted)
}

// ---------------------------------------------------------------------------
// Invariant report
// ---------------------------------------------------------------------------

/// Refines the orbit at `m` and prints every structural invariant with its
/// threshold. Diagnostic only; thresholds are enforced by the test suites.
pub fn report_invariants(m: f64, cfg: &SweepConfig) -> Result<String, CliError> {
    MassParam::new(m).map_err(|_| CliError::Usage(format!("mass {m} outside (0, 1]")))?;
    let records = family_over_grid(&[m], &cfg.shooting_options())?;
    let rec = records.first().expect("single-point grid yields one record");
    let periodicity = orbit::verify_periodicity(rec, cfg.h)?;
    let result = reduction::reduce(rec, cfg.h, cfg.class_tol)?;
    let gamma0 = crate::model::gamma_hat(&rec.initial_state(), rec.mass(), rec.e_hat)?;

    fn line(out: &mut String, name: &str, value: f64, threshold: f64) {
        let status = if value.abs() <= threshold { "ok" } else { "EXCEEDED" };
        let _ = writeln!(out, "{name:<28} {value: >13.3e}   (threshold {threshold:.1e})  {status}");
    }

    let mut out = String::new();
    let _ = writeln!(out, "m = {}", fmt_g17(rec.m));
    let _ = writeln!(out, "E_hat = {}", fmt_g17(rec.e_hat));
    let _ = writeln!(out, "A = {}", fmt_g17(rec.a_value));
    line(&mut out, "gamma at seed", gamma0, 1e-12);
    line(&mut out, "shooting residual", rec.residual_norm, cfg.newton_tol.max(1e-11));
    line(&mut out, "closure error", rec.closure_error, 1e-8);
    line(&mut out, "gamma drift", periodicity.gamma_drift, 1e-10);
    line(&mut out, "A drift", periodicity.a_drift, 1e-10);
    line(&mut out, "S_F symmetry defect", periodicity.sf_defect, 1e-8);
    line(&mut out, "S_G symmetry defect", periodicity.sg_defect, 1e-8);
    for (i, defect) in periodicity.sbc_defects.iter().enumerate() {
        line(&mut out, &format!("collision passage {}", i + 1), *defect, 1e-16);
    }
    line(&mut out, "Y0 orthogonality", result.defects.y0_orthogonality, 1e-12);
    line(&mut out, "Y0 symplecticity", result.defects.y0_symplectic, 1e-12);
    line(&mut out, "Y0' Q Y0 diagonalization", result.defects.y0_q_diagonalization, 1e-12);
    line(&mut out, "B symplecticity", result.defects.b_symplectic, 1e-9);
    line(&mut out, "Lambda involution", result.defects.lambda_involution, 1e-9);
    line(&mut out, "D involution", result.defects.d_involution, 1e-9);
    line(&mut out, "W symplecticity", result.defects.w_symplectic, 1e-9);
    line(&mut out, "W e5 fixed", result.defects.w_fixes_e5, 1e-9);
    line(&mut out, "W block structure", result.defects.w_block_structure, 1e-8);
    line(&mut out, "K first column", result.defects.k_first_column, 1e-8);
    line(&mut out, "K formula agreement", result.defects.k_formula_agreement, 1e-8);
    let _ = writeln!(out, "lambda1 = {}", format_complex(result.eigenvalues[0]));
    let _ = writeln!(out, "lambda2 = {}", format_complex(result.eigenvalues[1]));
    let _ = writeln!(out, "lambda3 = {}", format_complex(result.eigenvalues[2]));
    let _ = writeln!(out, "class = {}", result.class);
    for (i, multiplier) in result.multipliers.iter().enumerate() {
        let _ = writeln!(
            out,
            "multiplier {} = {}   |.| - 1 = {:+.3e}",
            i + 1,
            format_complex(*multiplier),
            multiplier.norm() - 1.0
        );
    }

    if cfg.crosscheck {
        let report = reduction::monodromy_crosscheck(rec, cfg.h)?;
        line(&mut out, "W^4 vs full-period defect", report.w4_defect, 1e-6);
        line(&mut out, "quarter-factor defect", report.quarter_factor_defect, 1e-6);
        line(&mut out, "full-period symplecticity", report.full_period_symplectic_defect, 1e-9);
        for (i, defect) in report.trivial_defects.iter().enumerate() {
            let _ = writeln!(out, "trivial direction {} defect = {:.3e}", i + 1, defect);
        }
        let _ = writeln!(out, "monodromy scale = {:.3e}", report.monodromy_scale);
    }
    Ok(out)
}

fn format_complex(z: Complex64) -> String {
    format!("{} {:+}i", fmt_g17(z.re), z.im)
}
