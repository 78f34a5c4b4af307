//! The `aloha` command-line tool.
//!
//! Every output (JSON or CSV) embeds the [`RunConfig`] that produced it, the
//! library version and the RNG name; `aloha replay FILE` re-runs an embedded
//! config.

pub mod config;
pub mod figures;

use std::ffi::OsString;
use std::path::PathBuf;

use aloha_core::conjecture::{sandwich_scan, scan_conjecture_bc};
use aloha_core::control::{control_feasible, convexity_probe, epigraph_convexity_check, trace_boundary_2d};
use aloha_core::exact::DEFAULT_N_MAX;
use aloha_core::geometry::{bc_member, region_member, srs_member};
use aloha_core::monte_carlo::figure3_table;
use aloha_core::region::membership_feasibility;
use aloha_core::sampling::derive_seed;
use aloha_core::{RateVector, Region, ScanReport, RNG_ALGORITHM, VERSION};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

pub use config::{Format, NRange, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// Inconclusive membership rate above which conjecture scans exit with 3.
pub const MAX_INCONCLUSIVE_RATE: f64 = 0.01;

pub const DEFAULT_SEED: u64 = 1;
const DEFAULT_C: f64 = 100.0;
const DEFAULT_STARTS: usize = 10_000;
const DEFAULT_RESOLUTION: usize = 400;

#[derive(Debug, Parser)]
#[command(name = "aloha", version, about = "Worst-case slotted Aloha stability region toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Dimension or inclusive range, e.g. `3` or `2..6`.
    #[arg(long, global = true)]
    pub n: Option<NRange>,
    /// Ellipsoid center coordinate.
    #[arg(long, global = true)]
    pub c: Option<f64>,
    /// Sample count (accepts `1e6`).
    #[arg(long, global = true, value_parser = config::parse_count)]
    pub samples: Option<usize>,
    /// Multistart count for minimization scans (accepts `1e4`).
    #[arg(long, global = true, value_parser = config::parse_count)]
    pub starts: Option<usize>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact and Monte Carlo volumes of Λ and its bounds versus n.
    Volume,
    /// Membership of a rate vector in every region.
    Member {
        /// Rate vector, e.g. `0.25,0.25`.
        #[arg(long)]
        x: String,
    },
    /// Falsification scans for the outer-bound and sandwich conjectures.
    Conjecture {
        #[arg(long, value_enum, default_value_t = Which::All)]
        which: Which,
    },
    /// Feasibility and convexity checks of the stabilizing-control set.
    Controls {
        #[arg(long)]
        x: String,
    },
    /// Boundary polylines for plotting (two users only).
    Fig {
        #[arg(value_enum)]
        kind: FigKind,
        #[arg(long)]
        x: Option<String>,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
    },
    /// Re-run the config embedded in a previous output file.
    Replay { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Bc,
    Sandwich,
    All,
}

impl Which {
    fn as_str(self) -> &'static str {
        match self {
            Which::Bc => "bc",
            Which::Sandwich => "sandwich",
            Which::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigKind {
    Regions,
    Controls,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(aloha_core::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<aloha_core::Error> for CliError {
    fn from(e: aloha_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Tabular form of a result.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Result of executing a config.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub body: Map<String, Value>,
    pub table: Table,
    pub code: i32,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn rate_vector(raw: &str, n: Option<NRange>) -> Result<RateVector, CliError> {
    let coords = config::parse_point(raw).map_err(usage)?;
    if let Some(n) = n {
        if n.start != n.end || n.start != coords.len() {
            return Err(usage(format!("--n {n} does not match a point with {} coordinates", coords.len())));
        }
    }
    Ok(RateVector::new(coords)?)
}

/// Resolves command-line defaults into a full config.
pub fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let a = &cli.common;
    let mut cfg = RunConfig {
        command: String::new(),
        target: None,
        n: a.n.unwrap_or(NRange { start: 2, end: 6 }),
        x: None,
        c: a.c.unwrap_or(DEFAULT_C),
        samples: a.samples.unwrap_or(1_000_000),
        starts: a.starts.unwrap_or(DEFAULT_STARTS),
        seed: a.seed,
        tol: a.tol.unwrap_or(1e-9),
        resolution: None,
        output_format: a.format,
        output_path: a.out.clone(),
    };
    match &cli.command {
        Command::Volume => cfg.command = "volume".into(),
        Command::Member { x } => {
            cfg.command = "member".into();
            let x = rate_vector(x, a.n)?;
            cfg.n = NRange::single(x.dim());
            cfg.x = Some(x.into_inner());
        }
        Command::Conjecture { which } => {
            cfg.command = "conjecture".into();
            cfg.target = Some(which.as_str().into());
            cfg.n = a.n.unwrap_or(NRange { start: 2, end: 5 });
            cfg.samples = a.samples.unwrap_or(100_000);
            cfg.tol = a.tol.unwrap_or(1e-6);
        }
        Command::Controls { x } => {
            cfg.command = "controls".into();
            let x = rate_vector(x, a.n)?;
            cfg.n = NRange::single(x.dim());
            cfg.x = Some(x.into_inner());
            cfg.samples = a.samples.unwrap_or(10_000);
        }
        Command::Fig { kind, x, resolution } => {
            cfg.command = "fig".into();
            cfg.resolution = Some(*resolution);
            cfg.n = a.n.unwrap_or(NRange::single(2));
            match kind {
                FigKind::Regions => cfg.target = Some("regions".into()),
                FigKind::Controls => {
                    cfg.target = Some("controls".into());
                    let raw = x.as_deref().ok_or_else(|| usage("fig controls needs --x"))?;
                    let x = rate_vector(raw, a.n)?;
                    cfg.n = NRange::single(x.dim());
                    cfg.x = Some(x.into_inner());
                }
            }
        }
        Command::Replay { .. } => return Err(usage("replay has no config of its own")),
    }
    Ok(cfg)
}

fn exec_volume(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.n.start < 2 || cfg.n.end > DEFAULT_N_MAX {
        return Err(usage(format!("volume supports n in 2..{DEFAULT_N_MAX}, got {}", cfg.n)));
    }
    let rows = figure3_table(cfg.n.iter(), cfg.c, cfg.samples, cfg.seed)?;
    let mut table = Table::new(&["n", "estimator", "mean", "std_error", "samples", "seed"]);
    let mut records = Vec::new();
    let mut exact = Vec::new();
    for row in &rows {
        exact.push(json!({
            "n": row.n,
            "lambda": row.lambda_exact.to_string(),
            "srs": row.srs_exact.to_string(),
        }));
        for r in row.records() {
            table.push(vec![
                r.n.to_string(),
                r.estimator.clone(),
                r.mean.to_string(),
                r.std_error.to_string(),
                r.samples.to_string(),
                r.seed.to_string(),
            ]);
            records.push(r);
        }
    }
    let mut body = Map::new();
    body.insert("exact".into(), Value::Array(exact));
    body.insert("rows".into(), serde_json::to_value(records).expect("records serialize"));
    Ok(Outcome {
        body,
        table,
        code: EXIT_OK,
    })
}

fn config_point(cfg: &RunConfig) -> Result<RateVector, CliError> {
    let x = cfg.x.clone().ok_or_else(|| usage("this command needs --x"))?;
    Ok(RateVector::new(x)?)
}

fn exec_member(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let x = config_point(cfg)?;
    let n = x.dim();
    let verdict = membership_feasibility(&x, cfg.tol);
    let inner = Region::inner(n, cfg.c)?;
    let outer = Region::outer(n, cfg.c)?;
    let bc = bc_member(&x).ok();
    let entries = vec![
        json!({"region": "lambda", "member": verdict.is_member(), "status": verdict.status.as_str(),
               "residual": verdict.residual, "witness": verdict.witness}),
        json!({"region": "srs", "member": srs_member(&x)}),
        json!({"region": "bc", "member": bc}),
        json!({"region": "inner", "member": region_member(&inner, &x), "c": cfg.c}),
        json!({"region": "outer", "member": region_member(&outer, &x), "c": cfg.c}),
    ];
    let mut table = Table::new(&["region", "member", "status"]);
    for e in &entries {
        let member = match &e["member"] {
            Value::Bool(b) => b.to_string(),
            _ => String::new(),
        };
        let status = e.get("status").and_then(Value::as_str).unwrap_or_default();
        table.push(vec![e["region"].as_str().unwrap_or_default().into(), member, status.into()]);
    }
    let mut body = Map::new();
    body.insert("x".into(), json!(x));
    body.insert("regions".into(), Value::Array(entries));
    Ok(Outcome {
        body,
        table,
        code: EXIT_OK,
    })
}

fn report_row(check: &str, r: &ScanReport) -> Vec<String> {
    vec![
        check.to_string(),
        r.conjecture_id.clone(),
        r.n.to_string(),
        r.trials.to_string(),
        r.worst_violation.to_string(),
        r.violations.to_string(),
        r.inconclusive.to_string(),
        opt(r.kkt_residual),
        opt(r.min_value),
        opt(r.acceptance_rate),
        r.seed.to_string(),
    ]
}

const REPORT_HEADER: [&str; 11] = [
    "check",
    "conjecture_id",
    "n",
    "trials",
    "worst_violation",
    "violations",
    "inconclusive",
    "kkt_residual",
    "min_value",
    "acceptance_rate",
    "seed",
];

/// A violation outranks an inconclusive overflow.
pub fn scan_exit_code(reports: &[ScanReport]) -> i32 {
    if reports.iter().any(ScanReport::has_violation) {
        EXIT_VIOLATION
    } else if reports.iter().any(|r| r.inconclusive_rate() > MAX_INCONCLUSIVE_RATE) {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    }
}

fn exec_conjecture(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.n.start < 2 {
        return Err(usage("conjecture scans need n >= 2"));
    }
    let which = cfg.target.as_deref().unwrap_or("all");
    if !matches!(which, "bc" | "sandwich" | "all") {
        return Err(usage(format!("unknown conjecture `{which}`")));
    }
    let mut reports = Vec::new();
    let mut table = Table::new(&REPORT_HEADER);
    for n in cfg.n.iter() {
        if which != "sandwich" {
            let r = scan_conjecture_bc(n, cfg.starts, derive_seed(cfg.seed, n as u64, 0), cfg.tol)?;
            table.push(report_row("bc", &r));
            reports.push(r);
        }
        if which != "bc" {
            let r = sandwich_scan(n, cfg.c, cfg.samples, derive_seed(cfg.seed, n as u64, 1), cfg.tol)?;
            table.push(report_row("sandwich", &r));
            reports.push(r);
        }
    }
    let violation = reports.iter().any(ScanReport::has_violation);
    let worst_inconclusive = reports.iter().map(ScanReport::inconclusive_rate).fold(0.0, f64::max);
    let code = scan_exit_code(&reports);
    let mut body = Map::new();
    body.insert("violation".into(), json!(violation));
    body.insert("inconclusive_rate".into(), json!(worst_inconclusive));
    body.insert("reports".into(), serde_json::to_value(&reports).expect("reports serialize"));
    Ok(Outcome { body, table, code })
}

fn exec_controls(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let x = config_point(cfg)?;
    let verdict = control_feasible(&x, cfg.tol);
    let mut table = Table::new(&REPORT_HEADER);
    let mut body = Map::new();
    let mut violation = false;
    body.insert("verdict".into(), serde_json::to_value(&verdict).expect("verdict serializes"));
    if verdict.is_member() {
        let probe = convexity_probe(&x, cfg.samples, derive_seed(cfg.seed, 0, 2))?;
        table.push(report_row("convexity", &probe));
        violation |= probe.has_violation();
        let mut epigraph = Vec::new();
        for i in (0..x.dim()).filter(|&i| x[i] > 0.0) {
            let r = epigraph_convexity_check(&x, i, cfg.samples, derive_seed(cfg.seed, i as u64 + 1, 2))?;
            table.push(report_row(&format!("epigraph_{}", i + 1), &r));
            violation |= r.has_violation();
            epigraph.push(r);
        }
        body.insert("convexity".into(), serde_json::to_value(&probe).expect("report serializes"));
        body.insert("epigraph".into(), serde_json::to_value(&epigraph).expect("reports serialize"));
    } else {
        body.insert("convexity".into(), Value::Null);
        body.insert("epigraph".into(), json!([]));
    }
    Ok(Outcome {
        body,
        table,
        code: if violation { EXIT_VIOLATION } else { EXIT_OK },
    })
}

fn exec_fig(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.n != NRange::single(2) {
        return Err(usage(format!("figures are only defined for n = 2, got {}", cfg.n)));
    }
    let resolution = cfg.resolution.unwrap_or(DEFAULT_RESOLUTION);
    let mut body = Map::new();
    let table = match cfg.target.as_deref() {
        Some("regions") => {
            let curves = figures::region_curves(cfg.c, resolution)?;
            let mut table = Table::new(&["curve", "x1", "x2"]);
            for curve in &curves {
                for [x1, x2] in &curve.points {
                    table.push(vec![curve.name.clone(), x1.to_string(), x2.to_string()]);
                }
            }
            body.insert("curves".into(), serde_json::to_value(&curves).expect("curves serialize"));
            table
        }
        Some("controls") => {
            let x = config_point(cfg)?;
            let trace = trace_boundary_2d(&x, resolution)?;
            let mut table = Table::new(&["p1", "p2_lower", "p2_upper"]);
            for s in &trace {
                table.push(vec![s.p1.to_string(), s.p2_lower.to_string(), s.p2_upper.to_string()]);
            }
            body.insert("polyline".into(), serde_json::to_value(&trace).expect("trace serializes"));
            table
        }
        other => return Err(usage(format!("unknown figure {other:?}"))),
    };
    Ok(Outcome {
        body,
        table,
        code: EXIT_OK,
    })
}

/// Runs a fully resolved config.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command.as_str() {
        "volume" => exec_volume(cfg),
        "member" => exec_member(cfg),
        "conjecture" => exec_conjecture(cfg),
        "controls" => exec_controls(cfg),
        "fig" => exec_fig(cfg),
        other => Err(usage(format!("unknown command `{other}`"))),
    }
}

/// Serializes an outcome with its config, the library version and the RNG
/// name. CSV output carries them as leading `#` comment lines.
pub fn render(cfg: &RunConfig, outcome: &Outcome) -> Result<String, CliError> {
    match cfg.output_format {
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("version".into(), json!(VERSION));
            doc.insert("rng".into(), json!(RNG_ALGORITHM));
            doc.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
            doc.insert("exit_code".into(), json!(outcome.code));
            doc.extend(outcome.body.clone());
            let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("document serializes");
            text.push('\n');
            Ok(text)
        }
        Format::Csv => {
            let mut text = format!(
                "# aloha {VERSION}\n# rng {RNG_ALGORITHM}\n# config {}\n",
                serde_json::to_string(cfg).expect("config serializes")
            );
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(&outcome.table.header).map_err(std::io::Error::from)?;
            for row in &outcome.table.rows {
                w.write_record(row).map_err(std::io::Error::from)?;
            }
            let bytes = w.into_inner().map_err(|e| e.into_error())?;
            text.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
            Ok(text)
        }
    }
}

/// Extracts the config embedded in a JSON or CSV output file.
pub fn embedded_config(text: &str) -> Result<RunConfig, CliError> {
    let parsed = if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(text).map_err(|e| usage(format!("not an aloha JSON file: {e}")))?;
        serde_json::from_value(doc["config"].clone())
    } else {
        let line = text
            .lines()
            .find_map(|l| l.strip_prefix("# config "))
            .ok_or_else(|| usage("no embedded config found"))?;
        serde_json::from_str(line)
    };
    parsed.map_err(|e| usage(format!("invalid embedded config: {e}")))
}

fn emit(cfg: &RunConfig, outcome: &Outcome) -> Result<(), CliError> {
    let text = render(cfg, outcome)?;
    match &cfg.output_path {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_cli(cli: Cli) -> Result<i32, CliError> {
    if let Some(threads) = cli.common.threads {
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let cfg = match &cli.command {
        Command::Replay { file } => {
            let mut cfg = embedded_config(&std::fs::read_to_string(file)?)?;
            if cli.common.out.is_some() {
                cfg.output_path = cli.common.out.clone();
            }
            cfg
        }
        _ => build_config(&cli)?,
    };
    let outcome = execute(&cfg)?;
    emit(&cfg, &outcome)?;
    Ok(outcome.code)
}

/// Parses `args` (including the program name) and runs; returns the exit code.
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
    match run_cli(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
