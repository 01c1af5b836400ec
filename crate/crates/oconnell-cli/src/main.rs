//! Command-line front end: every evaluator as a subcommand, CSV/JSON
//! reports with a bit-stable schema, reproducible seeds.

mod config;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use oconnell::cbm::{cbm_estimate, Estimator, McConfig};
use oconnell::fredholm::{bc_fredholm_det, fredholm_rank_det, gram_matrix, ContourSpec};
use oconnell::kernel::{reciprocal_kernel, ObservablePoint};
use oconnell::measure::{direct_observable, moment_first, moment_kappa, moment_two_term};
use oconnell::ncbm::{gap_probability, WeylPoint};
use oconnell::selftest;
use oconnell::Error as LibError;
use report::ReportRow;

#[derive(Parser)]
#[command(
    name = "oconnell",
    about = "Evaluators for the softened gap observable of the O'Connell process",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file; CLI flags take precedence over its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv (default) or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Comma-separated drift configuration, e.g. -0.5,0.5.
    #[arg(long = "nu-hat", global = true, allow_hyphen_values = true)]
    nu_hat: Option<String>,
    /// Softening scale.
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Observation time.
    #[arg(long, global = true)]
    t: Option<f64>,
    /// Threshold: a number or an inclusive grid lo:hi:step.
    #[arg(long, global = true, allow_hyphen_values = true)]
    h: Option<String>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long = "gh-order", global = true)]
    gh_order: Option<usize>,
    #[arg(long = "gl-order", global = true)]
    gl_order: Option<usize>,
    /// Record measured wall times in the report. Off by default so reruns
    /// with the same seed are byte-identical.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Rank-N Gram determinant of the observable over the h grid.
    Fredholm,
    /// Monte Carlo over complex Brownian motion endpoints (mean and
    /// median-of-means rows, plus the imaginary-residual row).
    Cbm,
    /// Direct quadrature against the entrance-law density (N <= 2).
    OracleDirect,
    /// Noncolliding-BM gap probability (the a -> 0 target).
    OracleNcbm,
    /// Double-contour Fredholm series partial sums per truncation order.
    BcContour,
    /// Moments of exp(-X_1/a) for kappa <= 3, both evaluation routes.
    Moments,
    /// |fredholm(a) - ncbm oracle| along the softening sweep a = 0.4, 0.2, 0.1, 0.05.
    LimitSweep,
    /// Reciprocal-time kernel values on a grid for external plotting.
    KernelDump,
    /// Run the full invariant suite; fails fast with the violated check named.
    Selftest,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    std::process::exit(run(cli));
}

fn exit_code_for(err: &anyhow::Error) -> i32 {
    if let Some(lib) = err.downcast_ref::<LibError>() {
        if matches!(lib, LibError::NonConvergent { .. }) {
            return 2;
        }
    }
    1
}

fn run(cli: Cli) -> i32 {
    let file = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match serde_json::from_str::<config::FileConfig>(&text) {
                Ok(f) => Some(f),
                Err(e) => {
                    eprintln!("config {}: {e}", path.display());
                    return 1;
                }
            },
            Err(e) => {
                eprintln!("config {}: {e}", path.display());
                return 1;
            }
        },
        None => None,
    };
    let overrides = config::Overrides {
        nu_hat: cli.nu_hat.clone(),
        a: cli.a,
        t: cli.t,
        h: cli.h.clone(),
        samples: cli.samples,
        seed: cli.seed,
        gh_order: cli.gh_order,
        gl_order: cli.gl_order,
        format: cli.format.clone(),
        out: cli.out.clone(),
        timing: cli.timing,
    };
    let resolved = match config::resolve(file, overrides) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return 1;
        }
    };
    if cli.command == Command::Selftest {
        return run_selftest(&resolved);
    }
    let started = Instant::now();
    let rows = match dispatch(cli.command, &resolved) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e:#}");
            return exit_code_for(&e);
        }
    };
    let rows = stamp(rows, &resolved, started);
    let text = match resolved.format {
        config::Format::Csv => report::to_csv(&rows),
        config::Format::Json => report::to_json(&rows),
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 1;
        }
    };
    match &resolved.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("write {}: {e}", path.display());
                return 1;
            }
        }
        None => print!("{text}"),
    }
    0
}

fn stamp(mut rows: Vec<ReportRow>, resolved: &config::Resolved, started: Instant) -> Vec<ReportRow> {
    let elapsed = if resolved.timing {
        started.elapsed().as_millis() as u64
    } else {
        0
    };
    for r in &mut rows {
        r.wall_time_ms = elapsed;
    }
    rows
}

fn base_row(resolved: &config::Resolved, method: &str, h: f64, value: f64, error: f64) -> ReportRow {
    ReportRow {
        method: method.to_string(),
        n: resolved.drift.n(),
        a: resolved.drift.a(),
        t: resolved.t,
        h,
        value,
        error,
        warnings: String::new(),
        seed: resolved.seed,
        wall_time_ms: 0,
    }
}

fn dispatch(command: Command, r: &config::Resolved) -> anyhow::Result<Vec<ReportRow>> {
    match command {
        Command::Fredholm => cmd_fredholm(r),
        Command::Cbm => cmd_cbm(r),
        Command::OracleDirect => cmd_oracle_direct(r),
        Command::OracleNcbm => cmd_oracle_ncbm(r),
        Command::BcContour => cmd_bc_contour(r),
        Command::Moments => cmd_moments(r),
        Command::LimitSweep => cmd_limit_sweep(r),
        Command::KernelDump => cmd_kernel_dump(r),
        Command::Selftest => unreachable!("handled in run"),
    }
}

fn cmd_fredholm(r: &config::Resolved) -> anyhow::Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for &h in &r.h_values {
        let obs = ObservablePoint::new(r.t, h)?;
        let gram = gram_matrix(&r.drift, &obs, &r.quad)?;
        let value = gram.determinant()?;
        let mut row = base_row(r, "fredholm", h, value, gram.refine_discrepancy);
        if gram.truncation_warning {
            row.warnings = "TruncationActive".into();
        }
        rows.push(row);
    }
    Ok(rows)
}

fn cmd_cbm(r: &config::Resolved) -> anyhow::Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for &h in &r.h_values {
        let obs = ObservablePoint::new(r.t, h)?;
        let mean = cbm_estimate(&r.drift, &obs, &McConfig::new(r.samples, r.seed))?;
        let mom_cfg = McConfig {
            estimator: Estimator::MedianOfMeans { groups: 32 },
            ..McConfig::new(r.samples, r.seed)
        };
        let mom = cbm_estimate(&r.drift, &obs, &mom_cfg)?;
        let warn = |est: &oconnell::cbm::Estimate| {
            if est.rejected > 0 {
                format!("Rejected={}", est.rejected)
            } else {
                String::new()
            }
        };
        let mut row = base_row(r, "cbm", h, mean.value, mean.std_error);
        row.warnings = warn(&mean);
        rows.push(row);
        let mut row = base_row(r, "cbm:median_of_means", h, mom.value, mom.std_error);
        row.warnings = warn(&mom);
        rows.push(row);
        rows.push(base_row(
            r,
            "cbm:imag_residual",
            h,
            mean.imag_residual,
            mean.imag_std_error,
        ));
    }
    Ok(rows)
}

fn cmd_oracle_direct(r: &config::Resolved) -> anyhow::Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for &h in &r.h_values {
        let obs = ObservablePoint::new(r.t, h)?;
        let value = direct_observable(&r.drift, &obs, &r.quad)?;
        rows.push(base_row(r, "direct_oracle", h, value, 0.0));
    }
    Ok(rows)
}

fn start_point(r: &config::Resolved) -> anyhow::Result<WeylPoint> {
    let mut coords = r.drift.nu_hat().to_vec();
    coords.sort_by(f64::total_cmp);
    Ok(WeylPoint::new(coords)?)
}

fn cmd_oracle_ncbm(r: &config::Resolved) -> anyhow::Result<Vec<ReportRow>> {
    let start = start_point(r)?;
    let mut rows = Vec::new();
    for &h in &r.h_values {
        let value = gap_probability(&start, r.t, h, &r.quad)?;
        rows.push(base_row(r, "ncbm_oracle", h, value, 0.0));
    }
    Ok(rows)
}

fn cmd_bc_contour(r: &config::Resolved) -> anyhow::Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for &h in &r.h_values {
        let obs = ObservablePoint::new(r.t, h)?;
        let contour = ContourSpec::defaults(&r.drift, r.t, &r.quad)?;
        let series = bc_fredholm_det(&r.drift, &obs, &contour, 3)?;
        for (l, (&partial, &mag)) in series
            .partial_sums
            .iter()
            .zip(&series.term_magnitudes)
            .enumerate()
        {
            rows.push(base_row(r, &format!("bc_contour:L{l}"), h, partial, mag));
        }
    }
    Ok(rows)
}

fn cmd_moments(r: &config::Resolved) -> anyhow::Result<Vec<ReportRow>> {
    let pair = moment_first(&r.drift, r.t, &r.quad)?;
    let mut rows = vec![
        base_row(r, "moment:k1:residues", 0.0, pair.residues, pair.rel_gap),
        base_row(r, "moment:k1:contour", 0.0, pair.contour, pair.rel_gap),
    ];
    let m2 = moment_kappa(&r.drift, r.t, 2, &r.quad)?;
    let m2_two = moment_two_term(&r.drift, r.t, &r.quad)?;
    rows.push(base_row(r, "moment:k2", 0.0, m2, (m2 - m2_two).abs()));
    rows.push(base_row(r, "moment:k2:two_term", 0.0, m2_two, (m2 - m2_two).abs()));
    let m3 = moment_kappa(&r.drift, r.t, 3, &r.quad)?;
    rows.push(base_row(r, "moment:k3", 0.0, m3, 0.0));
    Ok(rows)
}

fn cmd_limit_sweep(r: &config::Resolved) -> anyhow::Result<Vec<ReportRow>> {
    let start = start_point(r)?;
    let h = r.h_values[0];
    let oracle = gap_probability(&start, r.t, h, &r.quad)?;
    let mut rows = vec![base_row(r, "ncbm_oracle", h, oracle, 0.0)];
    for &a in &[0.4, 0.2, 0.1, 0.05] {
        let drift = oconnell::kernel::DriftSpec::new(r.drift.nu_hat().to_vec(), a)?;
        let obs = ObservablePoint::new(r.t, h)?;
        let value = fredholm_rank_det(&drift, &obs, &r.quad)?;
        let mut row = base_row(r, "fredholm", h, value, (value - oracle).abs());
        row.a = a;
        rows.push(row);
        let mut gap_row = base_row(r, "limit_sweep:gap", h, (value - oracle).abs(), 0.0);
        gap_row.a = a;
        rows.push(gap_row);
    }
    Ok(rows)
}

fn cmd_kernel_dump(r: &config::Resolved) -> anyhow::Result<Vec<ReportRow>> {
    let lo = r.t * r.drift.nu_min() - 3.0 * r.t.sqrt();
    let hi = r.t * r.drift.nu_max() + 3.0 * r.t.sqrt();
    let points = 21usize;
    let step = (hi - lo) / (points - 1) as f64;
    let mut rows = Vec::new();
    for i in 0..points {
        let x = lo + step * i as f64;
        for j in 0..points {
            let xp = lo + step * j as f64;
            let value = reciprocal_kernel(&r.drift, r.t, x, xp, &r.quad)?;
            // The h column carries x'; the grid row lives in the method tag.
            rows.push(base_row(r, &format!("kernel:x={x:.6}"), xp, value, 0.0));
        }
    }
    Ok(rows)
}

fn run_selftest(r: &config::Resolved) -> i32 {
    for (name, f) in selftest::all_checks() {
        let outcome = selftest::run_check(name, f, &r.quad);
        if outcome.passed {
            println!("PASS {name}: {}", outcome.detail);
        } else {
            println!("FAIL {name}: {}", outcome.detail);
            return 3;
        }
    }
    println!("all invariants passed");
    0
}
