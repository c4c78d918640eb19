//! Command-line front end: solves problem specs, computes Pade pole reports
//! and re-runs the certificates stored in result files.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure, 3 check
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use num_complex::Complex64 as C;

use capmin::algebra::{admissible_connectivity, expand_at_infinity, FunctionExpr};
use capmin::files::{
    self, PoleFile, PoleReportData, ProblemSpecFile, SCHEMA_VERSION,
};
use capmin::hp::digits_to_bits;
use capmin::pade::{compute_pade, pole_metrics, poles};
use capmin::solver::newton::NewtonOptions;
use capmin::solver::{solve_minimal_set, SolveOptions};
use capmin::svg::{write_svg, SvgOptions};
use capmin::{Error, Result};

/// Decimal digits used for Pade computations when neither the command line
/// nor the spec file fixes them.
const DEFAULT_DIGITS: u32 = 60;
const DIGITS_ENV: &str = "CAPMIN_DIGITS";

#[derive(Parser)]
#[command(
    name = "capmin",
    version,
    about = "Sets of minimal logarithmic capacity: solver, certificates and Pade pole clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem spec and write a result file.
    Solve {
        /// Problem spec (JSON).
        spec: PathBuf,
        /// Result file to write.
        #[arg(long)]
        out: PathBuf,
        /// Also export an SVG figure of the solved set.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Period-residual convergence bar, overriding the spec.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Compute a diagonal Pade approximant of the spec's function and report
    /// its poles.
    Pade {
        /// Problem spec (JSON).
        spec: PathBuf,
        /// Approximant index: numerator degree n+1, denominator degree n.
        #[arg(short)]
        n: usize,
        /// Working precision in decimal digits (falls back to the spec, the
        /// CAPMIN_DIGITS environment variable, then 60).
        #[arg(long)]
        digits: Option<u32>,
        /// Pole report file to write.
        #[arg(long)]
        out: PathBuf,
        /// Prior result file; when given, poles are classified against its
        /// solved set.
        #[arg(long)]
        result: Option<PathBuf>,
        /// Also export an SVG of the stored set with the poles overlaid
        /// (needs --result).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Re-run the certificates stored in a result file.
    Check {
        /// Result file (JSON).
        result: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Solve { spec, out, svg, tol } => cmd_solve(&spec, &out, svg.as_deref(), tol),
        Command::Pade { spec, n, digits, out, result, svg } => {
            cmd_pade(&spec, n, digits, &out, result.as_deref(), svg.as_deref())
        }
        Command::Check { result } => cmd_check(&result),
    }
}

/// Digit precedence: command line, then spec fields, then the environment,
/// then the built-in default.
fn resolve_digits(flag: Option<u32>, from_spec: &[Option<u32>]) -> Result<u32> {
    if let Some(d) = flag {
        return Ok(d);
    }
    if let Some(d) = from_spec.iter().flatten().next() {
        return Ok(*d);
    }
    match std::env::var(DIGITS_ENV) {
        Ok(text) => text.trim().parse().map_err(|_| {
            Error::InvalidInput(format!("{DIGITS_ENV} must be a positive integer, got {text:?}"))
        }),
        Err(_) => Ok(DEFAULT_DIGITS),
    }
}

/// Series truncation for an [n+1/n] approximant: the order condition needs
/// coefficients through w^(2n+1), plus one as a guard. A spec that pins the
/// series order below that is an input error.
fn resolve_truncation(spec: &ProblemSpecFile, n: usize) -> Result<i64> {
    let needed = 2 * n as i64 + 2;
    match spec.solver.series_order {
        Some(t) if (t as i64) < needed => Err(Error::InvalidInput(format!(
            "configured series order {t} cannot support n = {n}; the order condition needs \
             at least {needed} coefficients"
        ))),
        Some(t) => Ok(t as i64),
        None => Ok(needed),
    }
}

fn pade_report_for_set(
    f: &FunctionExpr,
    spec: &ProblemSpecFile,
    set: &capmin::solver::MinimalSet,
    n: usize,
    digits: u32,
    epsilon: Option<f64>,
) -> Result<(PoleReportData, Vec<C>)> {
    let trunc = resolve_truncation(spec, n)?;
    let series = expand_at_infinity(f, trunc, digits_to_bits(digits))?;
    let approx = compute_pade(&series, n, digits)?;
    let pole_list = poles(&approx)?;
    let eps = epsilon.unwrap_or(0.05 * set.scale());
    let report = pole_metrics(&pole_list, set, eps, &spec.polar_points())?;
    Ok((
        PoleReportData::classified(n, digits, approx.effective_degree, eps, &report),
        pole_list,
    ))
}

fn cmd_solve(spec_path: &Path, out: &Path, svg: Option<&Path>, tol: Option<f64>) -> Result<()> {
    let spec = files::load_spec(spec_path)?;
    let f = spec.function()?;
    let constraint = admissible_connectivity(&f)?;
    let points: Vec<C> = constraint.groups.iter().flatten().copied().collect();
    let scale = capmin::problem_scale(&points);

    let mut newton = NewtonOptions::for_scale(scale);
    if let Some(t) = tol.or(spec.solver.tolerance) {
        if !(t > 0.0) {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        newton.tol = t;
    }
    let tolerance = newton.tol;
    let opts = SolveOptions {
        newton: Some(newton),
        max_shape_combos: spec.solver.max_shape_combos.unwrap_or(64),
        seeds: spec.solver.seeds.as_ref().map(|s| s.iter().map(|&p| C::new(p[0], p[1])).collect()),
        ..Default::default()
    };

    let t0 = Instant::now();
    let sol = solve_minimal_set(&constraint, &opts)?;
    let solve_ms = t0.elapsed().as_millis() as u64;

    let pade = match &spec.pade {
        Some(req) => {
            let digits = resolve_digits(None, &[req.digits, spec.solver.digits])?;
            let (report, _) =
                pade_report_for_set(&f, &spec, &sol.set, req.n, digits, req.epsilon)?;
            Some(report)
        }
        None => None,
    };

    let capacity_nodes = spec.solver.capacity_nodes.unwrap_or(200);
    let result = files::result_from_solution(
        spec.name.clone(),
        &f,
        &sol,
        capacity_nodes,
        tolerance,
        pade,
        solve_ms,
    )?;
    files::save_result(out, &result)?;

    let svg_path = svg.map(Path::to_path_buf).or_else(|| spec.outputs.svg.clone().map(Into::into));
    if let Some(path) = svg_path {
        let overlay: Vec<C> =
            result.pade.as_ref().map(|p| p.pole_points()).unwrap_or_default();
        write_svg(&path, &sol.set, &overlay, &SvgOptions::default())?;
    }

    println!(
        "solved {}: components {}, capacity {:.6}, period residual {:.2e}, checks {}",
        result.meta.encoding,
        sol.set.components.len(),
        result.capacity.value,
        result.checks.period_residual,
        if result.checks.all_pass { "pass" } else { "FAIL" },
    );
    Ok(())
}

fn cmd_pade(
    spec_path: &Path,
    n: usize,
    digits: Option<u32>,
    out: &Path,
    result: Option<&Path>,
    svg: Option<&Path>,
) -> Result<()> {
    let spec = files::load_spec(spec_path)?;
    let f = spec.function()?;
    let digits = resolve_digits(digits, &[spec.solver.digits])?;
    if digits < 16 {
        return Err(Error::InvalidInput("digits must be at least 16".into()));
    }

    let report = match result {
        Some(result_path) => {
            let stored = files::load_result(result_path)?;
            let set = stored.set.to_set()?;
            let epsilon = spec.pade.as_ref().and_then(|p| p.epsilon);
            let (report, pole_list) =
                pade_report_for_set(&f, &spec, &set, n, digits, epsilon)?;
            if let Some(path) = svg {
                write_svg(path, &set, &pole_list, &SvgOptions::default())?;
            }
            report
        }
        None => {
            if svg.is_some() {
                return Err(Error::InvalidInput(
                    "--svg needs --result: the overlay is drawn over a solved set".into(),
                ));
            }
            let trunc = resolve_truncation(&spec, n)?;
            let series = expand_at_infinity(&f, trunc, digits_to_bits(digits))?;
            let approx = compute_pade(&series, n, digits)?;
            let pole_list = poles(&approx)?;
            PoleReportData::unclassified(n, digits, approx.effective_degree, &pole_list)
        }
    };

    match (report.near_fraction, report.discrepancy) {
        (Some(nf), Some(d)) => println!(
            "pade n={n}: {} poles, near fraction {nf:.3}, potential discrepancy {d:.3e}",
            report.poles.len()
        ),
        (Some(nf), None) => {
            println!("pade n={n}: {} poles, near fraction {nf:.3}", report.poles.len())
        }
        _ => println!("pade n={n}: {} poles (no set to classify against)", report.poles.len()),
    }
    files::save_pole_file(
        out,
        &PoleFile { schema_version: SCHEMA_VERSION, name: spec.name.clone(), report },
    )
}

fn cmd_check(result_path: &Path) -> Result<()> {
    let stored = files::load_result(result_path)?;
    let set = stored.set.to_set()?;
    let q = stored.q.to_q()?;
    let (reports, _, cap) = files::run_checks(
        &q,
        &set,
        stored.meta.capacity_nodes,
        stored.checks.period_residual,
        stored.checks.end_snap,
    )?;

    let verdict = |pass: bool| if pass { "pass" } else { "FAIL" };
    println!(
        "normalization: {} (residual {:.3e}, bar {:.3e})",
        verdict(reports.normalization.pass),
        reports.normalization.residual,
        reports.normalization.bar
    );
    println!(
        "s-property:    {} (residual {:.3e}, bar {:.3e})",
        verdict(reports.s_property.pass),
        reports.s_property.residual,
        reports.s_property.bar
    );
    println!(
        "geometry:      {} (hull excess {:.3e}, {} components)",
        verdict(reports.geometry.ok),
        reports.geometry.hull_max_excess,
        reports.geometry.components.len()
    );
    println!("capacity:      {:.6} (stored {:.6})", cap.value, stored.capacity.value);

    if reports.all_pass {
        Ok(())
    } else {
        let mut failed = Vec::new();
        if !reports.normalization.pass {
            failed.push("normalization");
        }
        if !reports.s_property.pass {
            failed.push("s-property");
        }
        if !reports.geometry.ok {
            failed.push("geometry");
        }
        Err(Error::CheckFailed(failed.join(", ")))
    }
}
