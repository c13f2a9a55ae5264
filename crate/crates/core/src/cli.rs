//! Command-line front end for `essabs`. Every subcommand writes its outputs
//! under `--out`; failures end with a single machine-readable stderr line
//! `essabs: error[<kind>]: <message>`.
//!
//! Exit codes: 0 success, 1 a verification verdict failed, 2 input or usage
//! error, 3 internal numerical failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::casebook::{is_refining, refinement_study, volterra_verify, VolterraReport};
use crate::document::{parse_family, preset};
use crate::linalg::ComplexMatrix;
use crate::model::{Family, ModelError};
use crate::numeric::{fmt_f64, linspace, logspace};
use crate::numrange::{cap_check, essential_region, numerical_range_boundary, sigma_slope_check};
use crate::perturbation::{track, verify_absorption, AbsorptionOptions, BranchSource, SigmaSpec};
use crate::sampling::{random_matrix, random_unit_vector};
use crate::secular::{
    crossing_locate, crossing_scan, example62_weights, write_scan_csv, Example62Kind, DEFAULT_N_MAX,
};
use crate::verify::{is_known_selector, run_verify_all, VerifyConfig};

#[derive(Debug, Parser)]
#[command(name = "essabs", version, about = "Eigenvalue absorption into the essential spectrum")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Numerical range of A₀ + iA₁ and, for structured families, the
    /// essential region, ω and the Σ(t)/t check.
    Numrange(FamilyArgs),
    /// Track the bottom eigenvalue branches over a t grid.
    Track(FamilyArgs),
    /// Verify the slopes of branches absorbed at t₀ against B₀ = P A₁ P.
    Absorb(FamilyArgs),
    /// Crossing scan (and optional localization) for the two rank-one models.
    Secular(SecularArgs),
    /// Discretized Volterra family against its closed-form spectrum.
    Volterra(VolterraArgs),
    /// Constructive check that W(T) ⊇ εW(T) + (1−ε)⟨Tx,x⟩ on a cap.
    Capcheck(CapArgs),
    /// Run the full verification suite.
    VerifyAll(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Logarithmic spacing.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// Family document (JSON).
    #[arg(long, conflicts_with = "preset")]
    pub input: Option<PathBuf>,
    /// example62a | example62b | volterra
    #[arg(long)]
    pub preset: Option<String>,
    /// Truncation size for presets.
    #[arg(long)]
    pub dim: Option<usize>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub tol_kernel: Option<f64>,
    /// Number of tracked branches.
    #[arg(long)]
    pub branches: Option<usize>,
    /// Base point of the absorption analysis.
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    /// Declared threshold Σ(t₀) for families without tail data.
    #[arg(long)]
    pub sigma_level: Option<f64>,
    /// Declared ω accompanying `--sigma-level`.
    #[arg(long, requires = "sigma_level")]
    pub omega: Option<f64>,
    /// Angles for the boundary sweep.
    #[arg(long, default_value_t = 256)]
    pub angles: usize,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct SecularArgs {
    /// example62 (the a/b pair).
    #[arg(long, default_value = "example62")]
    pub preset: String,
    /// Odd probe exponents m (λ = −e^{−m²}).
    #[arg(long, value_delimiter = ',', default_value = "5,7,9,11")]
    pub scan: Vec<u32>,
    /// Weight truncation: indices up to (4·n_max + 2)².
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    pub n_max: u32,
    /// Locate a crossing between consecutive probes of opposite sign.
    #[arg(long)]
    pub locate: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct VolterraArgs {
    #[arg(long, default_value_t = 1024)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// Number of compared modes.
    #[arg(long, default_value_t = 5)]
    pub modes: usize,
    /// Also run the refinement study over N = 128, 256, … up to `--dim`.
    #[arg(long)]
    pub refine: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct CapArgs {
    /// Family document; T = A₀ + iA₁ (or A₀ for constant families).
    #[arg(long, conflicts_with = "preset")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    /// Dimension of the random T when no family is given.
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 200)]
    pub targets: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Criterion id, name or group (secular, volterra, absorption, numrange).
    #[arg(long)]
    pub only: Option<String>,
    /// Multiplier on every tolerance (0 forces failures).
    #[arg(long, default_value_t = 1.0)]
    pub tol_scale: f64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(String),
    /// A verdict failed; the message names it.
    #[error("{0}")]
    Verdict(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verdict(_) => 1,
            CliError::Usage(_) | CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::Io(_) => "io",
            CliError::Numerical(_) => "numerical",
            CliError::Verdict(_) => "verdict",
        }
    }
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::Parse { .. }
        | ModelError::UnknownPreset(_)
        | ModelError::InvalidFamily(_)
        | ModelError::InvalidRule(_)
        | ModelError::Tail { .. }
        | ModelError::Linalg(_) => CliError::Input(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    }
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn csv_into<F>(dir: &Path, name: &str, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut Vec<u8>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
    write(dir, name, &buf)
}

fn load_family(input: &Option<PathBuf>, preset_name: &Option<String>, dim: Option<usize>) -> Result<Family, CliError> {
    match (input, preset_name) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            parse_family(&text).map_err(model_error)
        }
        (None, Some(name)) => preset(name, dim).map_err(model_error),
        (None, None) => Err(CliError::Usage("one of --input or --preset is required".into())),
    }
}

fn build_grid(g: &GridArgs, default: (f64, f64, usize, bool)) -> Result<Vec<f64>, CliError> {
    let t_min = g.t_min.unwrap_or(default.0);
    let t_max = g.t_max.unwrap_or(default.1);
    let count = g.grid.unwrap_or(default.2);
    let log = g.log || (g.t_min.is_none() && default.3);
    if !(t_min < t_max) || count < 2 || !t_min.is_finite() || !t_max.is_finite() {
        return Err(CliError::Usage(format!(
            "t grid needs t_min < t_max and count >= 2 (got {t_min}, {t_max}, {count})"
        )));
    }
    if log && t_min <= 0.0 {
        return Err(CliError::Usage("--log needs t_min > 0".into()));
    }
    Ok(if log {
        logspace(t_min, t_max, count)
    } else {
        linspace(t_min, t_max, count)
    })
}

fn generator(family: &Family) -> Result<ComplexMatrix, CliError> {
    let a0 = family.evaluate(0.0).map_err(model_error)?;
    let m = match family.a1() {
        Ok(a1) => a0.as_matrix() + a1.as_matrix() * Complex64::new(0.0, 1.0),
        Err(ModelError::NoFirstOrderTerm) => a0.as_matrix().clone(),
        Err(e) => return Err(model_error(e)),
    };
    ComplexMatrix::from_dmatrix(m).map_err(numerical)
}

fn cmd_numrange(a: &FamilyArgs) -> Result<String, CliError> {
    let family = load_family(&a.input, &a.preset, a.dim)?;
    if a.angles < 4 {
        return Err(CliError::Usage("--angles must be at least 4".into()));
    }
    let t = generator(&family)?;
    let boundary = numerical_range_boundary(&t, a.angles).map_err(numerical)?;
    csv_into(&a.out.out, "numrange_boundary.csv", |w| boundary.write_csv(w))?;
    let mut summary = format!(
        "dim = {}\nangles = {}\nsupport_defect = {}\n",
        boundary.dim,
        a.angles,
        fmt_f64(boundary.support_defect())
    );
    if let Some(s) = family.as_structured() {
        let data = s.essential_points();
        if data.points.is_empty() {
            summary.push_str("essential_region = empty (no finite limit points)\n");
        } else {
            let region = essential_region(&data).map_err(numerical)?;
            csv_into(&a.out.out, "essential_region.csv", |w| region.write_csv(w))?;
            let grid = build_grid(&a.grid, (1e-6, 1.0, 25, true))?;
            let report = sigma_slope_check(s, &grid).map_err(numerical)?;
            summary.push_str(&report.to_text());
        }
    }
    write(&a.out.out, "numrange_report.txt", summary.as_bytes())?;
    Ok(summary)
}

fn cmd_track(a: &FamilyArgs) -> Result<String, CliError> {
    let family = load_family(&a.input, &a.preset, a.dim)?;
    let grid = build_grid(&a.grid, (0.01, 1.0, 64, false))?;
    let n = a.branches.unwrap_or(4).min(family.dim());
    let traj = track(&family, &grid, n).map_err(|e| match e {
        crate::perturbation::PerturbationError::Grid(_)
        | crate::perturbation::PerturbationError::TooManyBranches { .. } => CliError::Usage(e.to_string()),
        e => numerical(e),
    })?;
    csv_into(&a.out.out, "trajectories.csv", |w| traj.write_csv(w))?;
    let mut summary = format!("branches = {}\ngrid_points = {}\n", traj.branches.len(), grid.len());
    for w in &traj.warnings {
        summary.push_str(&format!("warning = {w}\n"));
    }
    write(&a.out.out, "track_report.txt", summary.as_bytes())?;
    Ok(summary)
}

fn cmd_absorb(a: &FamilyArgs) -> Result<String, CliError> {
    let family = load_family(&a.input, &a.preset, a.dim)?;
    let t_grid = if a.grid.t_min.is_some() || a.grid.t_max.is_some() || a.grid.grid.is_some() {
        Some(build_grid(&a.grid, (1e-4, 1e-2, 16, true))?)
    } else {
        None
    };
    let options = AbsorptionOptions {
        t_grid,
        n_branches: a.branches,
        tol_kernel: a.tol_kernel,
        sigma: match a.sigma_level {
            Some(level) => SigmaSpec::Declared { level, omega: a.omega },
            None => SigmaSpec::Auto,
        },
        branch_source: BranchSource::Auto,
    };
    let report = verify_absorption(&family, a.t0, &options).map_err(|e| match e {
        crate::perturbation::PerturbationError::MissingSigma
        | crate::perturbation::PerturbationError::Grid(_)
        | crate::perturbation::PerturbationError::Tolerance(_) => CliError::Usage(e.to_string()),
        e => numerical(e),
    })?;
    let text = report.to_text();
    write(&a.out.out, "absorption_report.txt", text.as_bytes())?;
    csv_into(&a.out.out, "absorption.csv", |w| report.write_csv(w))?;
    if report.verdict.is_success() {
        Ok(text)
    } else {
        Err(CliError::Verdict(format!("absorption verdict {}", report.verdict.as_str())))
    }
}

fn cmd_secular(a: &SecularArgs) -> Result<String, CliError> {
    if !matches!(a.preset.as_str(), "example62" | "example62a" | "example62b") {
        return Err(CliError::Input(format!("unknown secular preset `{}`", a.preset)));
    }
    let input = |e: crate::secular::SecularError| CliError::Usage(e.to_string());
    let ma = example62_weights(Example62Kind::A, a.n_max).map_err(input)?;
    let mb = example62_weights(Example62Kind::B, a.n_max).map_err(input)?;
    let probes = crossing_scan(&ma, &mb, &a.scan).map_err(input)?;
    csv_into(&a.out.out, "crossing_scan.csv", |w| write_scan_csv(&probes, w))?;
    let signs: Vec<String> = probes.iter().map(|p| p.sign.to_string()).collect();
    let mut summary = format!("n_max = {}\nsigns = {}\n", a.n_max, signs.join(","));
    if a.locate {
        let mut rows = vec!["lambda_lo,lambda_hi,lambda_star,t_star,lambda_a,lambda_b,agreement".to_string()];
        for w in probes.windows(2) {
            if w[0].sign * w[1].sign < 0 {
                let loc = crossing_locate(&ma, &mb, (w[0].lambda, w[1].lambda)).map_err(numerical)?;
                rows.push(
                    [w[0].lambda, w[1].lambda, loc.lambda_star, loc.t_star, loc.lambda_a, loc.lambda_b, loc.agreement]
                        .map(fmt_f64)
                        .join(","),
                );
            }
        }
        summary.push_str(&format!("crossings_located = {}\n", rows.len() - 1));
        write(&a.out.out, "crossings.csv", (rows.join("\n") + "\n").as_bytes())?;
    }
    write(&a.out.out, "secular_report.txt", summary.as_bytes())?;
    Ok(summary)
}

fn cmd_volterra(a: &VolterraArgs) -> Result<String, CliError> {
    let casebook = |e: crate::casebook::CasebookError| match e {
        crate::casebook::CasebookError::TooSmall { .. }
        | crate::casebook::CasebookError::Pole { .. }
        | crate::casebook::CasebookError::EmptyRequest => CliError::Usage(e.to_string()),
        e => numerical(e),
    };
    let report = volterra_verify(a.dim, a.theta, a.modes).map_err(casebook)?;
    let mut text = report.to_text();
    csv_into(&a.out.out, "volterra_eigs.csv", |w| VolterraReport::write_csv(&report.rows, w))?;
    csv_into(&a.out.out, "volterra_compression.csv", |w| {
        VolterraReport::write_csv(&report.compression_rows, w)
    })?;
    let mut ok = report.max_rel_error <= 1e-2 && report.compression_max_rel_error <= 1e-2;
    if a.refine {
        let mut sizes = vec![128];
        while sizes.last().is_some_and(|&n| 2 * n <= a.dim) {
            sizes.push(2 * sizes.last().expect("non-empty"));
        }
        let levels = refinement_study(a.theta, &sizes, a.modes).map_err(casebook)?;
        let refining = is_refining(&levels, 0.1);
        ok &= refining;
        let mut csv = String::from("n,max_rel_error\n");
        for l in &levels {
            csv.push_str(&format!("{},{}\n", l.n, fmt_f64(l.max_rel_error)));
        }
        write(&a.out.out, "volterra_refinement.csv", csv.as_bytes())?;
        text.push_str(&format!("refining = {refining}\n"));
    }
    write(&a.out.out, "volterra_report.txt", text.as_bytes())?;
    if ok {
        Ok(text)
    } else {
        Err(CliError::Verdict("volterra errors exceed 1e-2 or do not refine".into()))
    }
}

fn cmd_capcheck(a: &CapArgs) -> Result<String, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let t = if a.input.is_some() || a.preset.is_some() {
        generator(&load_family(&a.input, &a.preset, None)?)?
    } else {
        if a.dim == 0 {
            return Err(CliError::Usage("--dim must be positive".into()));
        }
        random_matrix(&mut rng, a.dim)
    };
    let x = random_unit_vector(&mut rng, t.nrows());
    let report = cap_check(&t, &x, a.epsilon, a.targets, &mut rng).map_err(|e| match e {
        crate::numrange::NumRangeError::Epsilon(_) => CliError::Usage(e.to_string()),
        e => numerical(e),
    })?;
    let text = report.to_text();
    write(&a.out.out, "cap_report.txt", text.as_bytes())?;
    csv_into(&a.out.out, "cap_check.csv", |w| report.write_csv(w))?;
    if report.passed() {
        Ok(text)
    } else {
        Err(CliError::Verdict(format!("cap check failed on {} targets", report.failures.len())))
    }
}

fn cmd_verify_all(a: &VerifyArgs) -> Result<String, CliError> {
    if let Some(only) = &a.only {
        if !is_known_selector(only) {
            return Err(CliError::Usage(format!("--only `{only}` matches no criterion")));
        }
    }
    if !(a.tol_scale >= 0.0 && a.tol_scale.is_finite()) {
        return Err(CliError::Usage("--tol-scale must be a finite non-negative number".into()));
    }
    let run = run_verify_all(&VerifyConfig {
        seed: a.seed,
        tolerance_scale: a.tol_scale,
        only: a.only.clone(),
    });
    run.write_to(&a.out.out).map_err(|e| CliError::Io(e.to_string()))?;
    let table = run.summary_table();
    if run.all_passed() {
        Ok(table)
    } else {
        let failed: Vec<String> = run
            .outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.id.to_string())
            .collect();
        print!("{table}");
        Err(CliError::Verdict(format!("criteria failed: {}", failed.join(","))))
    }
}

/// Executes a parsed command, returning the text to print on success.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Numrange(a) => cmd_numrange(a),
        Command::Track(a) => cmd_track(a),
        Command::Absorb(a) => cmd_absorb(a),
        Command::Secular(a) => cmd_secular(a),
        Command::Volterra(a) => cmd_volterra(a),
        Command::Capcheck(a) => cmd_capcheck(a),
        Command::VerifyAll(a) => cmd_verify_all(a),
    }
}

/// Parses `argv`, runs, prints, and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let line = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("essabs: error[usage]: {line}");
            return 2;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("essabs: error[{}]: {}", e.kind(), e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}
