//! Command-line front end: schedule tables, fidelity scans, error-functional
//! profiles and invariant diagnostics, all written as CSV.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use grover_sta::counterdiabatic::DEFAULT_ACTION_SAMPLES;
use grover_sta::dynamics::MAX_FULL_DIMENSION;
use grover_sta::{
    action, build_effective, default_plan, default_steps, endpoint_commutators, error_functionals,
    evolve, evolve_inverse, invariant_residual_at, log_grid, sample_times, scan_tf, BlochPlan,
    EvolutionConfig, Family, Functional, InverseSchedule, ProblemSize, Representation, Schedule,
    ScheduleFn, ScheduleSpec,
};

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const DIVERGENCE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] grover_sta::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(grover_sta::Error::Divergence { .. }) => exit::DIVERGENCE,
            CliError::Core(grover_sta::Error::Io(_)) | CliError::Io { .. } => exit::IO,
            CliError::Core(_) | CliError::Usage(_) => exit::CONFIG,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "grover-sta",
    version,
    about = "Shortcuts to adiabaticity for the adiabatic Grover search"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate A, B, their derivatives, the gap and the mixing angle.
    Schedule(ScheduleArgs),
    /// Final fidelity over a log-spaced grid of run times.
    Scan(ScanArgs),
    /// Error-functional profile along a schedule, with action integrals.
    Functionals(ScheduleArgs),
    /// Inverse-engineering diagnostics for a Bloch-angle plan.
    Invariant(InvariantArgs),
    /// Compare the two-level evolution with the dense N-dimensional one.
    OracleCheck(OracleArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Schedule(_) => "schedule",
            Command::Scan(_) => "scan",
            Command::Functionals(_) => "functionals",
            Command::Invariant(_) => "invariant",
            Command::OracleCheck(_) => "oracle-check",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Search-space size N (at least 2).
    #[arg(long)]
    pub n: u64,
    /// Output file; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SourceArgs {
    /// Schedule family.
    #[arg(long, default_value = "qab-linear")]
    pub family: String,
    /// Run time t_f. Taken from the table for custom-tabulated schedules.
    #[arg(long)]
    pub tf: Option<f64>,
    /// `t,A,B` table for the custom-tabulated family.
    #[arg(long)]
    pub schedule_file: Option<PathBuf>,
    /// Bloch-angle plan for the inverse-engineered family.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Cumulative-table resolution for the quadratic-constraint families.
    #[arg(long, default_value_t = grover_sta::schedules::DEFAULT_QUADRATURE_POINTS)]
    pub quadrature_points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Number of uniformly spaced rows, endpoints included.
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated families; all closed-form and quadratic ones if omitted.
    #[arg(long, value_delimiter = ',')]
    pub families: Vec<String>,
    /// Largest run time of the grid.
    #[arg(long, alias = "tf-max")]
    pub tf: f64,
    /// Smallest run time of the grid (default t_f / 100).
    #[arg(long)]
    pub tf_min: Option<f64>,
    /// Number of grid points.
    #[arg(long, alias = "points", default_value_t = 20)]
    pub samples: usize,
    /// Add the counterdiabatic term.
    #[arg(long)]
    pub with_cd: bool,
    /// Fixed RK4 step count for every run.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct InvariantArgs {
    #[command(flatten)]
    pub common: Common,
    /// Run time t_f.
    #[arg(long)]
    pub tf: f64,
    /// Plan file with `which,power,coefficient` rows; default plan if omitted.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Number of uniformly spaced rows, endpoints included.
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    /// Fixed RK4 step count for the fidelity run.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Fixed RK4 step count shared by both representations.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Accepted for uniformity; unused.
    #[arg(long, hide = true)]
    pub samples: Option<usize>,
}

/// Sidecar record of a run, written next to `--out` files.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub seedless: bool,
    pub tool_version: String,
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV body plus `# key=value` footer lines.
struct Table {
    writer: csv::Writer<Vec<u8>>,
    footer: Vec<String>,
}

impl Table {
    fn new(header: &[&str]) -> CliResult<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(header)
            .map_err(grover_sta::Error::from)?;
        Ok(Self {
            writer,
            footer: Vec::new(),
        })
    }

    fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(grover_sta::Error::from)?;
        Ok(())
    }

    fn footer(&mut self, key: &str, value: String) {
        self.footer.push(format!("# {key}={value}"));
    }

    fn into_bytes(self) -> CliResult<Vec<u8>> {
        let mut bytes = self
            .writer
            .into_inner()
            .map_err(|e| CliError::Usage(format!("csv buffer: {e}")))?;
        for line in self.footer {
            bytes.extend_from_slice(line.as_bytes());
            bytes.push(b'\n');
        }
        Ok(bytes)
    }
}

fn problem_size(n: u64) -> CliResult<ProblemSize> {
    Ok(ProblemSize::new(n)?)
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn load_plan(n: ProblemSize, t_f: f64, path: Option<&Path>) -> CliResult<BlochPlan> {
    Ok(match path {
        Some(p) => BlochPlan::from_csv(n, t_f, open(p)?)?,
        None => default_plan(n, t_f)?,
    })
}

fn build_schedule(n: ProblemSize, src: &SourceArgs) -> CliResult<Schedule> {
    let family: Family = src.family.parse()?;
    match family {
        Family::CustomTabulated => {
            let path = src
                .schedule_file
                .as_deref()
                .ok_or_else(|| CliError::Usage("custom-tabulated needs --schedule-file".into()))?;
            let table = grover_sta::schedules::TabulatedSchedule::from_csv(n, open(path)?)?;
            if let Some(t_f) = src.tf {
                if (t_f - table.t_f()).abs() > 1e-12 * t_f.abs() {
                    return Err(CliError::Usage(format!(
                        "--tf {t_f} disagrees with the table's final time {}",
                        table.t_f()
                    )));
                }
            }
            Ok(Schedule::tabulated(table))
        }
        Family::InverseEngineered if src.plan.is_some() => {
            let t_f = require_tf(src)?;
            let plan = load_plan(n, t_f, src.plan.as_deref())?;
            Ok(Schedule::Inverse(Box::new(InverseSchedule::new(plan)?)))
        }
        _ => {
            let spec = ScheduleSpec::new(family, n, require_tf(src)?)?
                .with_quadrature_points(src.quadrature_points)?;
            Ok(Schedule::build(&spec)?)
        }
    }
}

fn require_tf(src: &SourceArgs) -> CliResult<f64> {
    src.tf
        .ok_or_else(|| CliError::Usage(format!("{} needs --tf", src.family)))
}

fn cmd_schedule(args: &ScheduleArgs) -> CliResult<Vec<u8>> {
    let n = problem_size(args.common.n)?;
    let schedule = build_schedule(n, &args.source)?;
    let mut table = Table::new(&["t", "A", "B", "dA", "dB", "Delta", "theta", "dtheta"])?;
    for t in sample_times(schedule.t_f(), args.samples) {
        let p = schedule.point(t)?;
        let h = build_effective(n, &p)?;
        table.row([t, p.a, p.b, p.da, p.db, h.gap, h.theta, h.dtheta].map(fmt))?;
    }
    table.into_bytes()
}

fn cmd_scan(args: &ScanArgs) -> CliResult<Vec<u8>> {
    let n = problem_size(args.common.n)?;
    let families: Vec<Family> = if args.families.is_empty() {
        Family::BUILT_IN.to_vec()
    } else {
        args.families
            .iter()
            .map(|f| f.parse())
            .collect::<Result<_, _>>()?
    };
    if let Some(f) = families.iter().find(|f| f.constraint().is_none()) {
        return Err(CliError::Usage(format!(
            "{f} cannot be scanned over run times"
        )));
    }
    let grid = log_grid(
        args.tf_min.unwrap_or(args.tf / 100.0),
        args.tf,
        args.samples,
    )?;
    let config = EvolutionConfig {
        steps: args.steps,
        with_cd: args.with_cd,
        ..EvolutionConfig::default()
    };
    let mut table = Table::new(&["family", "N", "t_f", "fidelity"])?;
    for family in families {
        let scan = scan_tf(family, n, &grid, &config)?;
        for row in scan.rows {
            table.row([
                family.name().to_string(),
                n.get().to_string(),
                fmt(row.t_f),
                fmt(row.fidelity),
            ])?;
        }
    }
    table.into_bytes()
}

fn cmd_functionals(args: &ScheduleArgs) -> CliResult<Vec<u8>> {
    let n = problem_size(args.common.n)?;
    let schedule = build_schedule(n, &args.source)?;
    let mut table = Table::new(&[
        "t",
        "L_qab",
        "L_cd",
        "part_offset",
        "part_gap",
        "part_direction",
    ])?;
    for t in sample_times(schedule.t_f(), args.samples) {
        let f = error_functionals(n, &schedule.point(t)?)?;
        table.row(
            [
                t,
                f.l_qab,
                f.l_cd,
                f.parts.offset,
                f.parts.gap,
                f.parts.direction,
            ]
            .map(fmt),
        )?;
    }
    let quad = DEFAULT_ACTION_SAMPLES.max(args.samples);
    table.footer("action_qab", fmt(action(&schedule, Functional::Qab, quad)?));
    table.footer("action_cd", fmt(action(&schedule, Functional::Cd, quad)?));
    table.into_bytes()
}

fn cmd_invariant(args: &InvariantArgs) -> CliResult<Vec<u8>> {
    let n = problem_size(args.common.n)?;
    let plan = load_plan(n, args.tf, args.plan.as_deref())?;
    let violations = plan
        .boundary_report()
        .violations(grover_sta::inverse::BOUNDARY_TOLERANCE);
    for v in &violations {
        eprintln!("warning: boundary condition not met: {v}");
    }
    // Rejects divergent plans before any output is produced.
    InverseSchedule::new(plan.clone())?;
    let mut table = Table::new(&["t", "Theta", "Phi", "A", "B", "residual"])?;
    for t in sample_times(plan.t_f(), args.samples) {
        let angles = plan.angles(t);
        let (a, b) = plan.coefficients(t);
        let residual = invariant_residual_at(&plan, t)?;
        table.row([t, angles.theta, angles.phi, a, b, residual].map(fmt))?;
    }
    let (start, end) = endpoint_commutators(&plan)?;
    let run = evolve_inverse(&plan, args.steps)?;
    table.footer("commutator_start", fmt(start));
    table.footer("commutator_end", fmt(end));
    table.footer("fidelity", fmt(run.fidelity()));
    table.footer("min_adiabatic_overlap", fmt(run.min_adiabatic_overlap));
    table.footer(
        "min_invariant_population",
        fmt(run.min_invariant_population()),
    );
    for v in violations {
        table.footer("boundary_violation", v);
    }
    table.into_bytes()
}

fn cmd_oracle(args: &OracleArgs) -> CliResult<Vec<u8>> {
    let n = problem_size(args.common.n)?;
    if n.get() > MAX_FULL_DIMENSION {
        return Err(CliError::Usage(format!(
            "oracle-check is limited to N <= {MAX_FULL_DIMENSION}"
        )));
    }
    let schedule = build_schedule(n, &args.source)?;
    let base = EvolutionConfig {
        trace_samples: 2,
        ..EvolutionConfig::default()
    };
    let steps = match args.steps {
        Some(s) => s,
        None => default_steps(&schedule, &base)?,
    };
    let two = evolve(&schedule, &base.steps(steps))?;
    let full = evolve(
        &schedule,
        &base.steps(steps).representation(Representation::Full),
    )?;
    let mut table = Table::new(&[
        "family",
        "N",
        "t_f",
        "steps",
        "fidelity_two_level",
        "fidelity_full",
        "difference",
    ])?;
    table.row([
        schedule.family().name().to_string(),
        n.get().to_string(),
        fmt(schedule.t_f()),
        steps.to_string(),
        fmt(two.fidelity),
        fmt(full.fidelity),
        fmt((two.fidelity - full.fidelity).abs()),
    ])?;
    table.into_bytes()
}

fn manifest<T: Serialize>(command: &str, args: &T) -> CliResult<RunManifest> {
    let value = serde_json::to_value(args).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut parameters = BTreeMap::new();
    flatten("", value, &mut parameters);
    Ok(RunManifest {
        command: command.to_string(),
        parameters,
        seedless: true,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

// Lifts the flattened clap groups (`common`, `source`) to the top level.
fn flatten(prefix: &str, value: serde_json::Value, out: &mut BTreeMap<String, serde_json::Value>) {
    match value {
        serde_json::Value::Object(map)
            if prefix.is_empty() || matches!(prefix, "common" | "source") =>
        {
            for (k, v) in map {
                if matches!(k.as_str(), "common" | "source") {
                    flatten(&k, v, out);
                } else {
                    out.insert(k, v);
                }
            }
        }
        other => {
            out.insert(prefix.to_string(), other);
        }
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8], manifest: &RunManifest) -> CliResult<()> {
    match out {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes)
                .and_then(|_| lock.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
        Some(path) => {
            let io_err = |p: &Path| {
                let p = p.to_owned();
                move |source| CliError::Io { path: p, source }
            };
            std::fs::write(path, bytes).map_err(io_err(path))?;
            let mut side = path.as_os_str().to_owned();
            side.push(".manifest.json");
            let side = PathBuf::from(side);
            let mut json =
                serde_json::to_vec_pretty(manifest).map_err(|e| CliError::Usage(e.to_string()))?;
            json.push(b'\n');
            std::fs::write(&side, json).map_err(io_err(&side))
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let name = cli.command.name();
    let (bytes, manifest, out) = match &cli.command {
        Command::Schedule(a) => (cmd_schedule(a)?, manifest(name, a)?, &a.common.out),
        Command::Scan(a) => (cmd_scan(a)?, manifest(name, a)?, &a.common.out),
        Command::Functionals(a) => (cmd_functionals(a)?, manifest(name, a)?, &a.common.out),
        Command::Invariant(a) => (cmd_invariant(a)?, manifest(name, a)?, &a.common.out),
        Command::OracleCheck(a) => (cmd_oracle(a)?, manifest(name, a)?, &a.common.out),
    };
    write_output(out.as_deref(), &bytes, &manifest)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::CONFIG
            } else {
                exit::SUCCESS
            };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
