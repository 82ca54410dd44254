//! The `pqlap` command line. [`run`] parses arguments, performs one
//! subcommand and returns the process exit code.
//!
//! Exit codes: 0 success, 1 usage / input / file errors, 2 `classify` verdict
//! `Unknown`, 3 `solve` failed (no bracket or solver error), 4 a verification
//! check (`energy-check`, `operator-residual`) failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::classifier::{classify, m_window, region_boundaries, Verdict};
use crate::energy::{e1_evaluate, e2_evaluate, geometric_radii, interior_radii, EnergyOptions};
use crate::io::{csv_string, to_json_pretty, TrajectoryFile};
use crate::operator::{residual, GridFunctionPair};
use crate::params::ProblemParams;
use crate::shooting::{
    find_brackets, integral_form_residual, integrate_to_first_zero, shoot_scan, solve_dirichlet, DirichletSolution,
    Outcome, ScanEntry, ShootingOptions, Trajectory,
};

/// Relative output paths are resolved against this directory when set.
pub const OUTPUT_DIR_ENV: &str = "PQLAP_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_SOLVE_FAILED: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pqlap", version, about = "Radial p/q-Laplacian Lane–Emden systems on a ball")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the existence and nonexistence conditions.
    Classify(ClassifyArgs),
    /// Solve the Dirichlet problem on the ball of radius R by shooting.
    Solve(SolveArgs),
    /// Integrate one initial-value problem up to the first zero and write the trajectory.
    Shoot(ShootCmdArgs),
    /// Tabulate first-zero outcomes over a geometric grid of v(0) values.
    Scan(ScanArgs),
    /// Check the energy derivative identities on a trajectory.
    EnergyCheck(EnergyArgs),
    /// Fixed-point residual of the integral operator on a solution.
    OperatorResidual(ResidualArgs),
    /// Boundary data behind the m-window and (delta, mu) plots, as CSV.
    RegionData(RegionArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    #[arg(long = "N")]
    pub n: u32,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub mu: f64,
    /// Ball radius.
    #[arg(long = "R")]
    pub radius: Option<f64>,
}

impl ParamArgs {
    pub fn to_params(&self) -> crate::Result<ProblemParams> {
        let params = ProblemParams::new(self.n, self.p, self.q, self.delta, self.mu)?;
        match self.radius {
            Some(r) => params.with_radius(r),
            None => Ok(params),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ShootArgs {
    /// u(0).
    #[arg(long, default_value_t = 1.0)]
    pub a0: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub event_tol: f64,
    /// Relative distance under which the zeros of u and v count as one.
    #[arg(long, default_value_t = 1e-8)]
    pub simultaneity_tol: f64,
    /// Integration horizon.
    #[arg(long, default_value_t = 1e4)]
    pub r_max: f64,
}

impl ShootArgs {
    fn options(&self) -> ShootingOptions {
        ShootingOptions {
            rtol: self.rtol,
            event_tol: self.event_tol,
            simultaneity_tol: self.simultaneity_tol,
            r_max: self.r_max,
            ..ShootingOptions::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScanGrid {
    #[arg(long, default_value_t = 1e-3)]
    pub b_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub b_max: f64,
    #[arg(long, default_value_t = 60)]
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SolveArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub shoot: ShootArgs,
    #[command(flatten)]
    pub grid: ScanGrid,
    /// Lower end of a known bracket in v(0); skips the scan.
    #[arg(long, requires = "b_hi")]
    pub b_lo: Option<f64>,
    #[arg(long, requires = "b_lo")]
    pub b_hi: Option<f64>,
    /// Trajectory JSON destination (stdout when omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ScanArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub shoot: ShootArgs,
    #[command(flatten)]
    pub grid: ScanGrid,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ShootCmdArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub shoot: ShootArgs,
    /// v(0).
    #[arg(long)]
    pub b0: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnergyChoice {
    /// E2 for trajectories ending at a zero, E1 otherwise.
    Auto,
    E1,
    E2,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct EnergyArgs {
    /// Trajectory JSON; when omitted the problem given by the parameter flags is solved first.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long = "N")]
    pub n: Option<u32>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long = "R")]
    pub radius: Option<f64>,
    #[command(flatten)]
    pub shoot: ShootArgs,
    #[command(flatten)]
    pub grid: ScanGrid,
    #[arg(long, value_enum, default_value_t = EnergyChoice::Auto)]
    pub energy: EnergyChoice,
    #[arg(long, default_value_t = 60)]
    pub samples: usize,
    /// Smallest sample radius for E1 (geometric spacing).
    #[arg(long, default_value_t = 1e-2)]
    pub r_lo: f64,
    /// Largest sample radius for E1; defaults to 1e-10 times the last node.
    #[arg(long)]
    pub r_hi: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ResidualArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Pass threshold relative to ‖u‖∞ + ‖v‖∞.
    #[arg(long, default_value_t = 1e-4)]
    pub rel_threshold: f64,
    /// Absolute pass threshold; overrides the relative one.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    MWindowSub,
    MWindowSuper,
    DeltaMu,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct RegionArgs {
    /// m-window-sub, m-window-super or delta-mu.
    #[arg(long)]
    pub figure: String,
    #[arg(long = "N", default_value_t = 4)]
    pub n: u32,
    #[arg(long, default_value_t = 2.0)]
    pub m: f64,
    #[arg(long, default_value_t = 2)]
    pub n_min: u32,
    #[arg(long, default_value_t = 20)]
    pub n_max: u32,
    #[arg(long, default_value_t = 0.05)]
    pub mu_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 200)]
    pub mu_count: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Result of a subcommand: exit code plus the payload to emit.
struct Reply {
    code: i32,
    body: String,
    output: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit code. Payloads go to stdout or the `--output` file,
/// diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let reply = match dispatch(cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    match emit(&reply.body, reply.output.as_deref()) {
        Ok(()) => reply.code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

/// Applies the output-directory override to a relative path.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn emit(body: &str, output: Option<&Path>) -> anyhow::Result<()> {
    match output {
        Some(path) => {
            let path = resolve_output(path);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            if !body.ends_with('\n') {
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn dispatch(command: Command) -> anyhow::Result<Reply> {
    match command {
        Command::Classify(a) => cmd_classify(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Shoot(a) => cmd_shoot(a),
        Command::Scan(a) => cmd_scan(a),
        Command::EnergyCheck(a) => cmd_energy_check(a),
        Command::OperatorResidual(a) => cmd_operator_residual(a),
        Command::RegionData(a) => cmd_region_data(a),
    }
}

fn cmd_classify(args: ClassifyArgs) -> anyhow::Result<Reply> {
    let params = args.params.to_params()?;
    let report = classify(&params)?;
    eprintln!("verdict: {:?}", report.verdict);
    let code = if report.verdict == Verdict::Unknown {
        EXIT_UNKNOWN
    } else {
        EXIT_OK
    };
    Ok(Reply {
        code,
        body: to_json_pretty(&report)?,
        output: args.output,
    })
}

#[derive(Debug, Clone, Serialize)]
struct ScanRow {
    b: f64,
    outcome: Option<&'static str>,
    radius: Option<f64>,
    error: Option<String>,
}

fn scan_rows(scan: &[ScanEntry]) -> Vec<ScanRow> {
    scan.iter()
        .map(|e| {
            let (outcome, radius, error) = match &e.outcome {
                Ok(Outcome::UZeroFirst) => (Some("UZeroFirst"), None, None),
                Ok(Outcome::VZeroFirst) => (Some("VZeroFirst"), None, None),
                Ok(Outcome::Simultaneous(r)) => (Some("Simultaneous"), Some(*r), None),
                Ok(Outcome::NoZeroUpTo(r)) => (Some("NoZeroUpTo"), Some(*r), None),
                Err(err) => (None, None, Some(err.to_string())),
            };
            ScanRow {
                b: e.b,
                outcome,
                radius,
                error,
            }
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct SolveFailure {
    error: String,
    brackets: Vec<(f64, f64)>,
    scan: Vec<ScanRow>,
}

/// Scan (unless a bracket is given) and bisection. On failure returns the
/// diagnostic payload instead of a solution.
fn solve_with_scan(
    params: &ProblemParams,
    shoot: &ShootArgs,
    grid: &ScanGrid,
    bracket: Option<(f64, f64)>,
) -> anyhow::Result<std::result::Result<DirichletSolution, SolveFailure>> {
    let opts = shoot.options();
    if let Some(bracket) = bracket {
        return Ok(
            solve_dirichlet(params, shoot.a0, bracket, &opts).map_err(|e| SolveFailure {
                error: e.to_string(),
                brackets: vec![bracket],
                scan: Vec::new(),
            }),
        );
    }
    let scan = shoot_scan(params, shoot.a0, grid.b_min, grid.b_max, grid.count, opts.r_max, &opts)?;
    let brackets = find_brackets(&scan);
    let mut last_error = String::from("no bracket found");
    for &bracket in &brackets {
        match solve_dirichlet(params, shoot.a0, bracket, &opts) {
            Ok(sol) => return Ok(Ok(sol)),
            Err(e) => last_error = format!("bracket {bracket:?}: {e}"),
        }
    }
    Ok(Err(SolveFailure {
        error: last_error,
        brackets,
        scan: scan_rows(&scan),
    }))
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<Reply> {
    if args.params.radius.is_none() {
        bail!("solve needs the ball radius --R");
    }
    let params = args.params.to_params()?;
    let bracket = args.b_lo.zip(args.b_hi);
    match solve_with_scan(&params, &args.shoot, &args.grid, bracket)? {
        Ok(sol) => {
            let res = integral_form_residual(&sol.trajectory);
            eprintln!("converged: b* = {:e}, integral-form residual {res:e}", sol.b_star);
            Ok(Reply {
                code: EXIT_OK,
                body: TrajectoryFile::from_solution(&sol, Some(res)).to_json()?,
                output: args.output,
            })
        }
        Err(failure) => {
            eprintln!("solve failed: {}", failure.error);
            Ok(Reply {
                code: EXIT_SOLVE_FAILED,
                body: to_json_pretty(&failure)?,
                output: args.output,
            })
        }
    }
}

fn cmd_shoot(args: ShootCmdArgs) -> anyhow::Result<Reply> {
    let params = args.params.to_params()?;
    let opts = args.shoot.options();
    let traj = integrate_to_first_zero(&params, args.shoot.a0, args.b0, opts.r_max, &opts)?;
    eprintln!("outcome {:?} at r = {:e}", traj.outcome, traj.last_radius());
    Ok(Reply {
        code: EXIT_OK,
        body: TrajectoryFile::from_trajectory(&traj).to_json()?,
        output: args.output,
    })
}

fn cmd_scan(args: ScanArgs) -> anyhow::Result<Reply> {
    let params = args.params.to_params()?;
    let opts = args.shoot.options();
    let scan = shoot_scan(
        &params,
        args.shoot.a0,
        args.grid.b_min,
        args.grid.b_max,
        args.grid.count,
        opts.r_max,
        &opts,
    )?;
    let rows = scan_rows(&scan);
    let body = match args.format {
        Format::Csv => csv_string(&rows)?,
        Format::Json => to_json_pretty(&rows)?,
    };
    Ok(Reply {
        code: EXIT_OK,
        body,
        output: args.output,
    })
}

fn load_trajectory(path: &Path) -> anyhow::Result<Trajectory> {
    let file = TrajectoryFile::read(path).with_context(|| format!("reading {}", path.display()))?;
    let traj = file.to_trajectory();
    if traj.nodes.len() < 8 {
        bail!("{} holds too few nodes ({})", path.display(), traj.nodes.len());
    }
    Ok(traj)
}

fn cmd_energy_check(args: EnergyArgs) -> anyhow::Result<Reply> {
    let inline = match (args.n, args.p, args.q, args.delta, args.mu) {
        (Some(n), Some(p), Some(q), Some(delta), Some(mu)) => Some(ParamArgs {
            n,
            p,
            q,
            delta,
            mu,
            radius: args.radius,
        }),
        (None, None, None, None, None) => None,
        _ => bail!("an inline solve needs all of --N --p --q --delta --mu"),
    };
    let traj = match (&args.input, &inline) {
        (Some(path), _) => load_trajectory(path)?,
        (None, Some(p)) => {
            if p.radius.is_none() {
                bail!("an inline solve needs --R");
            }
            let params = p.to_params()?;
            match solve_with_scan(&params, &args.shoot, &args.grid, None)? {
                Ok(sol) => sol.trajectory,
                Err(f) => bail!("inline solve failed: {}", f.error),
            }
        }
        (None, None) => bail!("energy-check needs --input or the parameter flags"),
    };
    let opts = EnergyOptions {
        derivative_tol: args.tolerance,
        ..EnergyOptions::default()
    };
    let use_e1 = match args.energy {
        EnergyChoice::E1 => true,
        EnergyChoice::E2 => false,
        EnergyChoice::Auto => matches!(traj.outcome, Outcome::NoZeroUpTo(_)),
    };
    let r0 = traj.nodes[0].r;
    let last = traj.last_radius();
    let report = if use_e1 {
        let hi = args.r_hi.unwrap_or(1e-10 * last);
        if !(args.r_lo > r0 && hi > args.r_lo && hi < last) {
            bail!("E1 sample range [{}, {hi}] must lie inside ({r0}, {last})", args.r_lo);
        }
        e1_evaluate(&traj, &geometric_radii(args.r_lo, hi, args.samples), &opts)
    } else {
        let radii = interior_radii(r0, last, args.samples, 1e-3 * (last - r0));
        e2_evaluate(&traj, &radii, &opts)
    };
    match report {
        Ok(report) => {
            eprintln!(
                "max derivative mismatch {:e} ({})",
                report.max_derivative_mismatch,
                if report.derivative_check_passed { "pass" } else { "fail" }
            );
            let code = if report.derivative_check_passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            };
            Ok(Reply {
                code,
                body: to_json_pretty(&report)?,
                output: args.output,
            })
        }
        Err(e) => {
            eprintln!("energy check not certified: {e}");
            #[derive(Serialize)]
            struct Failure {
                error: String,
            }
            Ok(Reply {
                code: EXIT_CHECK_FAILED,
                body: to_json_pretty(&Failure { error: e.to_string() })?,
                output: args.output,
            })
        }
    }
}

#[derive(Debug, Serialize)]
struct ResidualReport {
    residual: f64,
    norm: f64,
    threshold: f64,
    passed: bool,
}

fn cmd_operator_residual(args: ResidualArgs) -> anyhow::Result<Reply> {
    let traj = load_trajectory(&args.input)?;
    let pair = GridFunctionPair::from_trajectory(&traj)?;
    let radius = pair.radius();
    let res = residual(&pair, &traj.params, radius)?;
    let norm = pair.sup_norm();
    let threshold = args.threshold.unwrap_or(args.rel_threshold * norm);
    let report = ResidualReport {
        residual: res,
        norm,
        threshold,
        passed: res <= threshold,
    };
    eprintln!("operator residual {res:e} (threshold {threshold:e})");
    Ok(Reply {
        code: if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED },
        body: to_json_pretty(&report)?,
        output: args.output,
    })
}

#[derive(Debug, Serialize)]
struct WindowRow {
    #[serde(rename = "N")]
    n: u32,
    lower: f64,
    upper: f64,
}

fn cmd_region_data(args: RegionArgs) -> anyhow::Result<Reply> {
    let figure = Figure::from_str(&args.figure, true).map_err(|_| {
        anyhow!(
            "unknown figure id '{}' (expected m-window-sub, m-window-super or delta-mu)",
            args.figure
        )
    })?;
    let body = match figure {
        Figure::MWindowSub | Figure::MWindowSuper => {
            if args.n_min < 2 || args.n_max < args.n_min {
                bail!("need 2 <= n-min <= n-max");
            }
            let rows: Vec<WindowRow> = (args.n_min..=args.n_max)
                .map(|n| {
                    let (lower, upper) = m_window(n);
                    WindowRow { n, lower, upper }
                })
                .collect();
            csv_string(&rows)?
        }
        Figure::DeltaMu => {
            ProblemParams::new(args.n, args.m, args.m, 1.0, 1.0)?;
            if !(args.mu_min > 0.0 && args.mu_max > args.mu_min && args.mu_count >= 2) {
                bail!("need 0 < mu-min < mu-max and mu-count >= 2");
            }
            let grid: Vec<f64> = (0..args.mu_count)
                .map(|i| args.mu_min + (args.mu_max - args.mu_min) * i as f64 / (args.mu_count - 1) as f64)
                .collect();
            csv_string(&region_boundaries(args.n, args.m, &grid))?
        }
    };
    Ok(Reply {
        code: EXIT_OK,
        body,
        output: args.output,
    })
}
