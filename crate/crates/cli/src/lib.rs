//! `polarize`: check, scan, count and export hierarchy relaxations.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use polarize_core::hierarchy::{build_lp, check_pi_soundness, HierarchyError, HierarchySpec};
use polarize_core::io::{read_matrix, read_problem, IoError};
use polarize_core::lp::{export, ExportFormat, LpError, LpStatus, Solver, DEFAULT_FEAS_TOL};
use polarize_core::moments::count_indices;
use polarize_core::nmf::{
    check_point, nested_rectangles_problem, nmf_problem, scan_region, write_region_csv, NmfError, ScanConfig,
};
use polarize_core::{ConstraintFamily, PolarizationMap, Problem, Variant};

pub const EXIT_FEASIBLE: u8 = 0;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_UNKNOWN: u8 = 3;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_INTERNAL: u8 = 70;
pub const EXIT_IO: u8 = 74;

const PI_SAMPLES: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "polarize", version, about = "Polarization-hierarchy LP relaxations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one nested-rectangles point or a problem file.
    Check(CheckArgs),
    /// Classify a grid of (a, b) and bisect the boundary.
    Scan(ScanArgs),
    /// Rank-k feasibility for a nonnegative matrix.
    Nmf(NmfArgs),
    /// Write the LP without solving it.
    Export(ExportArgs),
    /// Print the number of symmetric moment variables.
    Count(CountArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Plus,
    Polarized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PiArg {
    Id,
    Hs,
    #[value(alias = "mp")]
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Lite,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Mps,
    Lp,
}

#[derive(Debug, Clone, Args)]
pub struct HierarchyArgs {
    /// Hierarchy level.
    #[arg(long = "n", default_value_t = 3)]
    pub level: usize,
    #[arg(long, value_enum, default_value_t = VariantArg::Plus)]
    pub variant: VariantArg,
    /// Polarization map for the polarized variant.
    #[arg(long, value_enum, default_value_t = PiArg::Id)]
    pub pi: PiArg,
    #[arg(long, value_enum, default_value_t = FamilyArg::Lite)]
    pub family: FamilyArg,
    /// Feasibility and certificate tolerance.
    #[arg(long, default_value_t = DEFAULT_FEAS_TOL)]
    pub feas_tol: f64,
    /// Seed for the polarization-map soundness sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long, required_unless_present = "problem", allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, required_unless_present = "problem", allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Problem JSON instead of a nested-rectangles point.
    #[arg(long, conflicts_with_all = ["a", "b"])]
    pub problem: Option<PathBuf>,
    /// Also write the LP to this path before solving.
    #[arg(long)]
    pub export: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Mps, requires = "export")]
    pub format: FormatArg,
    #[command(flatten)]
    pub hierarchy: HierarchyArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub bisect_tol: f64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub hierarchy: HierarchyArgs,
}

#[derive(Debug, Clone, Args)]
pub struct NmfArgs {
    /// Matrix JSON: {"rows", "cols", "entries"}.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    #[command(flatten)]
    pub hierarchy: HierarchyArgs,
}

#[derive(Debug, Clone, Args)]
#[command(group(clap::ArgGroup::new("instance").args(["a", "matrix", "problem"]).required(true)))]
pub struct ExportArgs {
    #[arg(long, requires = "b", allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, requires = "a", allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Mps)]
    pub format: FormatArg,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub hierarchy: HierarchyArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CountArgs {
    #[arg(long = "n", default_value_t = 3)]
    pub level: usize,
    /// Built-in instance; only nested-rectangles is available.
    #[arg(long, default_value = "nested-rectangles", value_parser = ["nested-rectangles"])]
    pub instance: String,
    /// Count for a problem file instead.
    #[arg(long)]
    pub problem: Option<PathBuf>,
}

/// Everything a run depends on, echoed to stderr.
#[derive(Debug, Serialize)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub level: usize,
    pub variant: Option<VariantArg>,
    pub pi: Option<PiArg>,
    pub family: Option<FamilyArg>,
    pub feas_tol: Option<f64>,
    pub seed: Option<u64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub rank: Option<usize>,
    pub grid: Option<usize>,
    pub bisect_tol: Option<f64>,
    pub workers: Option<usize>,
    pub format: Option<FormatArg>,
    pub instance: Option<String>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub solver: String,
}

#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Io(String),
    Internal(String),
}

impl RunError {
    fn code(&self) -> u8 {
        match self {
            RunError::Usage(_) => EXIT_USAGE,
            RunError::Io(_) => EXIT_IO,
            RunError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Usage(m) | RunError::Io(m) | RunError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<LpError> for RunError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::Io(e) => RunError::Io(e.to_string()),
            LpError::UnknownBackend(m) => RunError::Usage(format!("unknown backend {m}")),
            other => RunError::Internal(other.to_string()),
        }
    }
}

impl From<HierarchyError> for RunError {
    fn from(e: HierarchyError) -> Self {
        RunError::Usage(e.to_string())
    }
}

impl From<NmfError> for RunError {
    fn from(e: NmfError) -> Self {
        match e {
            NmfError::Io(e) => RunError::Io(e.to_string()),
            NmfError::Csv(e) => RunError::Io(e.to_string()),
            NmfError::Lp(e) => e.into(),
            NmfError::StateSpace(e) => RunError::Internal(e.to_string()),
            other => RunError::Usage(other.to_string()),
        }
    }
}

impl From<IoError> for RunError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Read { .. } => RunError::Io(e.to_string()),
            IoError::Nmf(e) => e.into(),
            other => RunError::Usage(other.to_string()),
        }
    }
}

impl HierarchyArgs {
    pub fn spec(&self) -> Result<HierarchySpec, RunError> {
        let variant = match self.variant {
            VariantArg::Plus => Variant::Plus,
            VariantArg::Polarized => Variant::Polarized(match self.pi {
                PiArg::Id => PolarizationMap::Identity,
                PiArg::Hs => PolarizationMap::HilbertSchmidt,
                PiArg::Matrix => PolarizationMap::MatrixProduct,
            }),
        };
        let family = match self.family {
            FamilyArg::Lite => ConstraintFamily::PaperLite,
            FamilyArg::Full => ConstraintFamily::FullFacetProducts,
        };
        let spec = HierarchySpec { level: self.level, variant, family };
        spec.validate()?;
        if !(self.feas_tol > 0.0) {
            return Err(RunError::Usage("--feas-tol must be positive".into()));
        }
        Ok(spec)
    }

    fn solver(&self) -> Result<Solver, RunError> {
        Ok(Solver::from_env()?.with_feas_tol(self.feas_tol))
    }

    fn config(&self, subcommand: &'static str, solver: &Solver) -> RunConfig {
        RunConfig {
            subcommand,
            level: self.level,
            variant: Some(self.variant),
            pi: Some(self.pi),
            family: Some(self.family),
            feas_tol: Some(self.feas_tol),
            seed: Some(self.seed),
            a: None,
            b: None,
            rank: None,
            grid: None,
            bisect_tol: None,
            workers: None,
            format: None,
            instance: None,
            input: None,
            output: None,
            solver: solver.backend_name().to_string(),
        }
    }
}

fn echo(config: &RunConfig) {
    if let Ok(s) = serde_json::to_string(config) {
        eprintln!("{s}");
    }
}

fn status_code(status: LpStatus) -> u8 {
    match status {
        LpStatus::Feasible => EXIT_FEASIBLE,
        LpStatus::Infeasible => EXIT_INFEASIBLE,
        LpStatus::Unknown => EXIT_UNKNOWN,
    }
}

/// Samples the polarization map before relying on it.
fn check_pi(spec: &HierarchySpec, problem: &Problem, seed: u64) -> Result<(), RunError> {
    if let Variant::Polarized(pi) = spec.variant {
        let f = &problem.constraint_map;
        if !check_pi_soundness(&pi, f.output_dim(), f.output_shape(), PI_SAMPLES, seed) {
            return Err(RunError::Internal(format!("polarization map {pi} failed soundness sampling")));
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct Verdict {
    level: usize,
    variant: &'static str,
    pi: String,
    family: String,
    status: LpStatus,
    objective_value: Option<f64>,
    certificate_verified: bool,
    solve_seconds: f64,
}

fn solve_problem(problem: &Problem, spec: &HierarchySpec, solver: &Solver) -> Result<Verdict, RunError> {
    let built = build_lp(problem, spec)?;
    let start = std::time::Instant::now();
    let outcome = solver.solve(&built.lp)?;
    let solve_seconds = start.elapsed().as_secs_f64();
    if let Some(d) = &outcome.diagnostic {
        log::info!("{d}");
    }
    Ok(Verdict {
        level: spec.level,
        variant: spec.variant.label(),
        pi: match spec.variant {
            Variant::Plus => "none".into(),
            Variant::Polarized(pi) => pi.to_string(),
        },
        family: spec.family.to_string(),
        status: outcome.status,
        objective_value: outcome.objective_value,
        certificate_verified: outcome.certificate.is_some(),
        solve_seconds,
    })
}

fn print_json<T: Serialize>(value: &T) -> Result<(), RunError> {
    let s = serde_json::to_string(value).map_err(|e| RunError::Internal(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{s}").map_err(|e| RunError::Io(e.to_string()))
}

fn run_check(args: &CheckArgs) -> Result<u8, RunError> {
    let spec = args.hierarchy.spec()?;
    let solver = args.hierarchy.solver()?;
    let mut config = args.hierarchy.config("check", &solver);
    config.a = args.a;
    config.b = args.b;
    config.input = args.problem.clone();
    config.rank = args.problem.is_none().then_some(3);
    config.format = args.export.is_some().then_some(args.format);
    config.output = args.export.clone();
    echo(&config);
    if let Some(out) = &args.export {
        let problem = match &args.problem {
            Some(path) => read_problem(path)?,
            None => nested_rectangles_problem(args.a.expect("required by clap"), args.b.expect("required by clap"))?,
        };
        export(&build_lp(&problem, &spec)?.lp, export_format(args.format), out)?;
    }
    if let Some(path) = &args.problem {
        let problem = read_problem(path)?;
        check_pi(&spec, &problem, args.hierarchy.seed)?;
        let verdict = solve_problem(&problem, &spec, &solver)?;
        print_json(&verdict)?;
        return Ok(status_code(verdict.status));
    }
    let (a, b) = (args.a.expect("required by clap"), args.b.expect("required by clap"));
    check_pi(&spec, &nested_rectangles_problem(a, b)?, args.hierarchy.seed)?;
    let record = check_point(a, b, &spec, &solver)?;
    print_json(&record)?;
    Ok(status_code(record.status))
}

fn run_scan(args: &ScanArgs) -> Result<u8, RunError> {
    let spec = args.hierarchy.spec()?;
    let solver = args.hierarchy.solver()?;
    let mut config = args.hierarchy.config("scan", &solver);
    config.rank = Some(3);
    config.grid = Some(args.grid);
    config.bisect_tol = Some(args.bisect_tol);
    config.workers = Some(args.workers);
    config.output = args.out.clone();
    echo(&config);
    check_pi(&spec, &nested_rectangles_problem(0.0, 0.0)?, args.hierarchy.seed)?;
    let scan = ScanConfig { spec, grid: args.grid, bisect_tol: args.bisect_tol, workers: args.workers };
    let records = scan_region(&scan, &solver)?;
    match &args.out {
        Some(path) => write_region_csv(&records, path)?,
        None => {
            let dir = std::env::temp_dir().join(format!("polarize-scan-{}.csv", std::process::id()));
            write_region_csv(&records, &dir)?;
            let text = std::fs::read_to_string(&dir).map_err(|e| RunError::Io(e.to_string()))?;
            let _ = std::fs::remove_file(&dir);
            print!("{text}");
        }
    }
    Ok(0)
}

fn run_nmf(args: &NmfArgs) -> Result<u8, RunError> {
    let spec = args.hierarchy.spec()?;
    let solver = args.hierarchy.solver()?;
    let mut config = args.hierarchy.config("nmf", &solver);
    config.rank = Some(args.rank);
    config.input = Some(args.matrix.clone());
    echo(&config);
    let matrix = read_matrix(&args.matrix)?;
    let problem = nmf_problem(&matrix, args.rank)?;
    check_pi(&spec, &problem, args.hierarchy.seed)?;
    let verdict = solve_problem(&problem, &spec, &solver)?;
    print_json(&verdict)?;
    Ok(status_code(verdict.status))
}

fn run_export(args: &ExportArgs) -> Result<u8, RunError> {
    let spec = args.hierarchy.spec()?;
    let solver = args.hierarchy.solver()?;
    let mut config = args.hierarchy.config("export", &solver);
    config.a = args.a;
    config.b = args.b;
    config.format = Some(args.format);
    config.output = Some(args.out.clone());
    config.input = args.matrix.clone().or_else(|| args.problem.clone());
    config.rank = args.problem.is_none().then_some(if args.matrix.is_some() { args.rank } else { 3 });
    echo(&config);
    let problem = match (&args.problem, &args.matrix, args.a, args.b) {
        (Some(path), _, _, _) => read_problem(path)?,
        (None, Some(path), _, _) => nmf_problem(&read_matrix(path)?, args.rank)?,
        (None, None, Some(a), Some(b)) => nested_rectangles_problem(a, b)?,
        _ => return Err(RunError::Usage("export needs --a/--b, --matrix or --problem".into())),
    };
    let built = build_lp(&problem, &spec)?;
    export(&built.lp, export_format(args.format), &args.out)?;
    Ok(0)
}

fn export_format(format: FormatArg) -> ExportFormat {
    match format {
        FormatArg::Mps => ExportFormat::FreeMps,
        FormatArg::Lp => ExportFormat::LpText,
    }
}

fn run_count(args: &CountArgs) -> Result<u8, RunError> {
    let config = RunConfig {
        subcommand: "count",
        level: args.level,
        variant: None,
        pi: None,
        family: None,
        feas_tol: None,
        seed: None,
        a: None,
        b: None,
        rank: args.problem.is_none().then_some(3),
        grid: None,
        bisect_tol: None,
        workers: None,
        format: None,
        instance: args.problem.is_none().then(|| args.instance.clone()),
        input: args.problem.clone(),
        output: None,
        solver: "none".into(),
    };
    echo(&config);
    let dims = match &args.problem {
        Some(path) => read_problem(path)?.dims(),
        // 4x3 and 3x4 left-stochastic factors.
        None => vec![9, 8],
    };
    println!("{}", count_indices(args.level, &dims));
    Ok(0)
}

/// Parses `argv` and runs the subcommand, returning the process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Check(a) => run_check(a),
        Command::Scan(a) => run_scan(a),
        Command::Nmf(a) => run_nmf(a),
        Command::Export(a) => run_export(a),
        Command::Count(a) => run_count(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

pub fn main_exit() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
