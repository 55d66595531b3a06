//! Command-line front end: emitter-set generation, boundary tracing,
//! capacity sweeps, optimality probes, and built-in cross-checks.
//!
//! Configuration precedence is command-line flags over config-file values
//! over built-in defaults. The config file is TOML with the same names as
//! the long flags (unknown keys are rejected); the effective configuration
//! is echoed to stderr before any computation so runs are reproducible from
//! their logs. The default output directory `.` can be overridden by the
//! `GRIDCAP_OUT_DIR` environment variable, which in turn ranks below the
//! config file and the `--out-dir` flag.
//!
//! Exit codes: 0 on full success; 1 when a computation fails (sweep rows
//! that did complete are still written); 2 for usage or configuration
//! errors, before any computation starts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::area_tracer::{InterfererSet, ReceptionArea, TracerConfig, trace_boundary};
use crate::capacity::{
    Scheme, SweepSpec, aloha_sigma, grid_capacity, log_spaced, mc_aloha_sigma, mc_grid_coverage,
    run_sweep, write_gnuplot_table, write_sweep_csv,
};
use crate::error::Error;
use crate::geometry::{Mat2, Vec2, Window};
use crate::lattice::{EmitterSet, LatticeKind};
use crate::optimality::{DiffConfig, hessian_u, linear_response};
use crate::sir_field::{FieldParams, SirField};

/// Reception areas and local capacity of regular wireless networks.
#[derive(Parser, Debug)]
#[command(name = "gridcap", version, about, max_term_width = 100)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory (default ".", or the GRIDCAP_OUT_DIR environment
    /// variable when set).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Report format for trace/hessian/linresp reports.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    /// Worker threads for sweep evaluation (default: machine parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an emitter set and write it as CSV plus a metadata sidecar.
    Generate(GenerateArgs),
    /// Trace one emitter's reception-area boundary and report its area.
    Trace(TraceArgs),
    /// Evaluate local capacity per scheme, optionally sweeping beta or alpha.
    Capacity(CapacityArgs),
    /// Finite-difference gradient and Hessian of the covered-area functional.
    Hessian(HessianArgs),
    /// Linear response of a reception area to a global deformation.
    Linresp(LinrespArgs),
    /// Run the built-in oracle cross-checks and report pass/fail.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    /// Machine-readable comma-separated values.
    Csv,
    /// Human-readable structured text (capacity sweeps emit a gnuplot table).
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Square,
    Hexagonal,
    Triangular,
    Poisson,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GridArg {
    Square,
    Hexagonal,
    Triangular,
    All,
}

impl GridArg {
    fn kinds(self) -> Vec<LatticeKind> {
        match self {
            GridArg::Square => vec![LatticeKind::Square],
            GridArg::Hexagonal => vec![LatticeKind::Hexagonal],
            GridArg::Triangular => vec![LatticeKind::Triangular],
            GridArg::All => vec![
                LatticeKind::Square,
                LatticeKind::Hexagonal,
                LatticeKind::Triangular,
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MatrixArg {
    /// Uniform scaling generator (trace 2): predicted derivative 2 sigma0.
    Identity,
    /// Rotation generator (traceless): predicted derivative 0.
    Rotation,
    /// Shear generator (traceless): predicted derivative 0.
    Shear,
    /// Stretch-one-axis-shrink-the-other generator (traceless): predicted 0.
    Stretch,
}

impl MatrixArg {
    fn matrix(self) -> Mat2 {
        match self {
            MatrixArg::Identity => Mat2::IDENTITY,
            MatrixArg::Rotation => Mat2::ROTATION_GENERATOR,
            MatrixArg::Shear => Mat2::SHEAR,
            MatrixArg::Stretch => Mat2::STRETCH,
        }
    }
    fn name(self) -> &'static str {
        match self {
            MatrixArg::Identity => "identity",
            MatrixArg::Rotation => "rotation",
            MatrixArg::Shear => "shear",
            MatrixArg::Stretch => "stretch",
        }
    }
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct GenerateArgs {
    /// Point-pattern kind.
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Nearest-neighbor spacing in meters (lattices).
    #[arg(long)]
    d: Option<f64>,
    /// Emitter density per square meter (poisson).
    #[arg(long)]
    lambda: Option<f64>,
    /// Square window side in meters, centered at the origin.
    #[arg(long)]
    window: Option<f64>,
    /// RNG seed (poisson).
    #[arg(long)]
    seed: Option<u64>,
    /// Lattice offset, x component (meters).
    #[arg(long, default_value_t = 0.0)]
    offset_x: f64,
    /// Lattice offset, y component (meters).
    #[arg(long, default_value_t = 0.0)]
    offset_y: f64,
    /// Positions CSV for --kind custom (header `x,y`).
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct TraceArgs {
    /// Point-pattern kind.
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Positions CSV for --kind custom.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// SIR threshold.
    #[arg(long)]
    beta: Option<f64>,
    /// Path-loss exponent.
    #[arg(long)]
    alpha: Option<f64>,
    /// Emitter index to trace (default: the one nearest the window center).
    #[arg(long)]
    emitter: Option<usize>,
    /// Marching step along the boundary (meters).
    #[arg(long)]
    arc_step: Option<f64>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct CapacityArgs {
    /// Comma-separated schemes, or "all" (square,hexagonal,triangular,aloha).
    #[arg(long)]
    schemes: Option<String>,
    /// Parameter to sweep.
    #[arg(long, value_parser = ["beta", "alpha", "none"])]
    sweep: Option<String>,
    /// Explicit comma-separated sweep values.
    #[arg(long)]
    values: Option<String>,
    /// Log-spaced sweep start (with --to and --points).
    #[arg(long)]
    from: Option<f64>,
    /// Log-spaced sweep end.
    #[arg(long)]
    to: Option<f64>,
    /// Number of log-spaced sweep points.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Shared emitter density; grids derive their spacing from it.
    #[arg(long)]
    lambda: Option<f64>,
    /// Monte-Carlo cross-check trials for ALOHA points (0 disables).
    #[arg(long)]
    mc_trials: Option<u64>,
    /// Monte-Carlo seed for the cross-check.
    #[arg(long)]
    mc_seed: Option<u64>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct HessianArgs {
    /// Grid kind(s) to probe.
    #[arg(long, value_enum)]
    kind: Option<GridArg>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Field window side (meters); emitters fill it.
    #[arg(long)]
    window: Option<f64>,
    /// Central-difference half-step (meters).
    #[arg(long)]
    delta: Option<f64>,
    /// Influence radius: emitters within it are re-traced per stencil point.
    #[arg(long)]
    influence: Option<f64>,
    /// Integration-region side (meters); default auto-sizes it.
    #[arg(long)]
    region: Option<f64>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct LinrespArgs {
    /// Grid kind(s).
    #[arg(long, value_enum)]
    kind: Option<GridArg>,
    /// Deformation generator A in z -> (I + tA) z.
    #[arg(long = "matrix", visible_alias = "A", value_enum)]
    matrix: Option<MatrixArg>,
    /// Half-step t of the central difference in the deformation parameter.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    window: Option<f64>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Trials for the ALOHA Monte-Carlo cross-check.
    #[arg(long, default_value_t = 20_000)]
    mc_trials: u64,
    /// Samples for the grid-coverage Monte-Carlo cross-check.
    #[arg(long, default_value_t = 200_000)]
    mc_samples: u64,
}

/// TOML config file: top-level keys mirror the long flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    beta: Option<f64>,
    alpha: Option<f64>,
    d: Option<f64>,
    lambda: Option<f64>,
    window: Option<f64>,
    seed: Option<u64>,
    schemes: Option<Vec<String>>,
    out_dir: Option<PathBuf>,
    format: Option<String>,
    threads: Option<usize>,
    tracer: Option<TracerFile>,
    diff: Option<DiffFile>,
    linresp: Option<LinrespFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TracerFile {
    arc_step: Option<f64>,
    newton_tol: Option<f64>,
    newton_max_iter: Option<usize>,
    closure_tol: Option<f64>,
    max_steps: Option<usize>,
    /// "query-centered" or "emitter-centered".
    interferers: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiffFile {
    delta: Option<f64>,
    influence_radius: Option<f64>,
    region: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinrespFile {
    matrix: Option<String>,
    t: Option<f64>,
}

/// A CLI failure with its exit code: 2 before computation (usage/config),
/// 1 during it.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: msg.into(),
        }
    }
    fn compute(msg: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    /// Library errors surfacing during the run phase.
    fn from(e: Error) -> Self {
        Failure::compute(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::compute(format!("i/o error: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Entry point for the `gridcap` binary.
pub fn run_from_env() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let file = load_config(cli.config.as_deref())?;
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(Failure::config("--threads must be at least 1"));
        }
        // A later re-initialization (tests, repeated calls) is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| file.out_dir.clone())
        .or_else(|| std::env::var_os("GRIDCAP_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let format = match (cli.format, file.format.as_deref()) {
        (Some(f), _) => f,
        (None, Some("csv")) => OutputFormat::Csv,
        (None, Some("text")) => OutputFormat::Text,
        (None, Some(other)) => {
            return Err(Failure::config(format!(
                "unknown format '{other}' in config file (expected csv or text)"
            )));
        }
        (None, None) => OutputFormat::Csv,
    };
    fs::create_dir_all(&out_dir)
        .map_err(|e| Failure::config(format!("cannot create {}: {e}", out_dir.display())))?;

    match cli.command {
        Command::Generate(a) => cmd_generate(a, &file, &out_dir),
        Command::Trace(a) => cmd_trace(a, &file, &out_dir, format),
        Command::Capacity(a) => cmd_capacity(a, &file, &out_dir, format),
        Command::Hessian(a) => cmd_hessian(a, &file, &out_dir, format),
        Command::Linresp(a) => cmd_linresp(a, &file, &out_dir, format),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn load_config(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| Failure::config(format!("bad config {}: {e}", path.display())))
}

/// Nine-significant-digit float formatting shared by all outputs.
fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

fn echo_config(entries: &[(&str, String)]) {
    eprintln!("# effective configuration");
    for (k, v) in entries {
        eprintln!("#   {k} = {v}");
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Positions CSV reader: optional `x,y` header, one point per line.
fn read_positions_csv(path: &Path) -> CliResult<Vec<Vec2>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |s: Option<&str>| {
            s.and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    Failure::config(format!(
                        "{}:{}: expected `x,y` floats, got '{line}'",
                        path.display(),
                        lineno + 1
                    ))
                })
        };
        let x = parse(parts.next())?;
        let y = parse(parts.next())?;
        out.push(Vec2::new(x, y));
    }
    if out.is_empty() {
        return Err(Failure::config(format!(
            "{}: no positions found",
            path.display()
        )));
    }
    Ok(out)
}

/// Shared generation parameters after precedence resolution.
struct SetSpec {
    kind: KindArg,
    d: f64,
    lambda: f64,
    window_side: f64,
    seed: u64,
    offset: Vec2,
    input: Option<PathBuf>,
}

impl SetSpec {
    const DEFAULT_D: f64 = 25.0;
    const DEFAULT_WINDOW: f64 = 1000.0;

    fn resolve(
        kind: Option<KindArg>,
        d: Option<f64>,
        lambda: Option<f64>,
        window: Option<f64>,
        seed: Option<u64>,
        offset: Vec2,
        input: Option<PathBuf>,
        file: &FileConfig,
    ) -> SetSpec {
        let d = d.or(file.d).unwrap_or(Self::DEFAULT_D);
        SetSpec {
            kind: kind.unwrap_or(KindArg::Square),
            d,
            lambda: lambda.or(file.lambda).unwrap_or(1.0 / (d * d)),
            window_side: window.or(file.window).unwrap_or(Self::DEFAULT_WINDOW),
            seed: seed.or(file.seed).unwrap_or(42),
            offset,
            input,
        }
    }

    /// Build the emitter set; configuration problems exit with code 2.
    fn build(&self) -> CliResult<EmitterSet> {
        let window = Window::centered_square(self.window_side)
            .map_err(|e| Failure::config(e.to_string()))?;
        let set = match self.kind {
            KindArg::Square => EmitterSet::lattice(LatticeKind::Square, self.d, window, self.offset),
            KindArg::Hexagonal => {
                EmitterSet::lattice(LatticeKind::Hexagonal, self.d, window, self.offset)
            }
            KindArg::Triangular => {
                EmitterSet::lattice(LatticeKind::Triangular, self.d, window, self.offset)
            }
            KindArg::Poisson => EmitterSet::poisson(self.lambda, window, self.seed),
            KindArg::Custom => {
                let input = self.input.as_deref().ok_or_else(|| {
                    Failure::config("--kind custom requires --input FILE".to_string())
                })?;
                let positions = read_positions_csv(input)?;
                EmitterSet::custom(positions, window)
            }
        };
        set.map_err(|e| Failure::config(e.to_string()))
    }

    fn echo_entries(&self) -> Vec<(&'static str, String)> {
        let mut v = vec![
            ("kind", format!("{:?}", self.kind).to_lowercase()),
            ("window", sig9(self.window_side)),
        ];
        match self.kind {
            KindArg::Poisson => {
                v.push(("lambda", sig9(self.lambda)));
                v.push(("seed", self.seed.to_string()));
            }
            KindArg::Custom => {
                if let Some(p) = &self.input {
                    v.push(("input", p.display().to_string()));
                }
            }
            _ => v.push(("d", sig9(self.d))),
        }
        v
    }
}

fn cmd_generate(a: GenerateArgs, file: &FileConfig, out_dir: &Path) -> CliResult<()> {
    let spec = SetSpec::resolve(
        a.kind,
        a.d,
        a.lambda,
        a.window,
        a.seed,
        Vec2::new(a.offset_x, a.offset_y),
        a.input,
        file,
    );
    echo_config(&spec.echo_entries());
    let set = spec.build()?;

    let mut csv = Vec::new();
    set.write_csv(&mut csv)?;
    write_file(
        &out_dir.join("emitters.csv"),
        std::str::from_utf8(&csv).expect("csv is utf-8"),
    )?;
    write_file(&out_dir.join("emitters.toml"), &set.metadata_toml())?;
    println!(
        "generated {} emitters ({}), density {}",
        set.len(),
        set.kind(),
        sig9(set.len() as f64 / set.window().area())
    );
    Ok(())
}

/// Field parameters after precedence resolution (defaults beta 10, alpha 4).
fn resolve_params(beta: Option<f64>, alpha: Option<f64>, file: &FileConfig) -> CliResult<FieldParams> {
    let beta = beta.or(file.beta).unwrap_or(10.0);
    let alpha = alpha.or(file.alpha).unwrap_or(4.0);
    FieldParams::new(alpha, beta).map_err(|e| Failure::config(e.to_string()))
}

fn resolve_tracer(d: f64, arc_step: Option<f64>, file: &FileConfig) -> CliResult<TracerConfig> {
    let mut t = TracerConfig::for_spacing(d);
    if let Some(tf) = &file.tracer {
        if let Some(v) = tf.arc_step {
            t.arc_step = v;
        }
        if let Some(v) = tf.newton_tol {
            t.newton_tol = v;
        }
        if let Some(v) = tf.newton_max_iter {
            t.newton_max_iter = v;
        }
        if let Some(v) = tf.closure_tol {
            t.closure_tol = v;
        }
        if let Some(v) = tf.max_steps {
            t.max_steps = v;
        }
        match tf.interferers.as_deref() {
            Some("query-centered") | None => {}
            Some("emitter-centered") => t.interferers = InterfererSet::EmitterCentered,
            Some(other) => {
                return Err(Failure::config(format!(
                    "unknown interferer policy '{other}' (expected query-centered or emitter-centered)"
                )));
            }
        }
    }
    if let Some(v) = arc_step {
        t.arc_step = v;
    }
    Ok(t)
}

fn cmd_trace(a: TraceArgs, file: &FileConfig, out_dir: &Path, format: OutputFormat) -> CliResult<()> {
    let spec = SetSpec::resolve(
        a.kind, a.d, a.lambda, a.window, a.seed, Vec2::ZERO, a.input, file,
    );
    let params = resolve_params(a.beta, a.alpha, file)?;
    let set = spec.build()?;
    let tracer = resolve_tracer(set.nn_distance(), a.arc_step, file)?;

    let mut entries = spec.echo_entries();
    entries.push(("beta", sig9(params.beta)));
    entries.push(("alpha", sig9(params.alpha)));
    entries.push(("arc_step", sig9(tracer.arc_step)));
    echo_config(&entries);

    let field = SirField::new(&set, params).map_err(|e| Failure::config(e.to_string()))?;
    let emitter = match a.emitter {
        Some(i) if i < set.len() => i,
        Some(i) => {
            return Err(Failure::config(format!(
                "emitter index {i} out of range ({} emitters)",
                set.len()
            )));
        }
        None => field
            .nearest_emitter(set.window().center)
            .expect("set is non-empty")
            .0,
    };

    let area = trace_boundary(&field, emitter, &tracer)?;

    // Boundary CSV with the SIR residual re-evaluated at every vertex.
    let beta = params.beta;
    let mut csv = String::from("k,x,y,sir_residual\n");
    for (k, z) in area.boundary.iter().enumerate() {
        let residual = field.sir(emitter, *z) / beta - 1.0;
        csv.push_str(&format!(
            "{k},{},{},{}\n",
            sig9(z.x),
            sig9(z.y),
            sig9(residual)
        ));
    }
    write_file(&out_dir.join("boundary.csv"), &csv)?;

    let report = trace_report(&area, &field, emitter, format);
    let name = match format {
        OutputFormat::Csv => "trace.csv",
        OutputFormat::Text => "trace.txt",
    };
    write_file(&out_dir.join(name), &report)?;
    println!(
        "emitter {emitter}: sigma = {} m^2 over {} boundary vertices",
        sig9(area.sigma),
        area.boundary.len()
    );
    Ok(())
}

fn trace_report(area: &ReceptionArea, field: &SirField, emitter: usize, format: OutputFormat) -> String {
    let z = field.position(emitter);
    match format {
        OutputFormat::Csv => format!(
            "emitter,x,y,sigma,sigma_polygon,closed,steps,max_residual\n{},{},{},{},{},{},{},{}\n",
            emitter,
            sig9(z.x),
            sig9(z.y),
            sig9(area.sigma),
            sig9(area.sigma_polygon),
            area.closed,
            area.steps,
            sig9(area.max_residual),
        ),
        OutputFormat::Text => format!(
            "reception area of emitter {emitter}\n\
             position        = ({}, {})\n\
             sigma           = {} m^2\n\
             sigma_polygon   = {} m^2\n\
             closed          = {}\n\
             steps           = {}\n\
             max_residual    = {}\n",
            sig9(z.x),
            sig9(z.y),
            sig9(area.sigma),
            sig9(area.sigma_polygon),
            area.closed,
            area.steps,
            sig9(area.max_residual),
        ),
    }
}

fn parse_schemes(s: &str) -> CliResult<Vec<Scheme>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(vec![
            Scheme::Grid(LatticeKind::Square),
            Scheme::Grid(LatticeKind::Hexagonal),
            Scheme::Grid(LatticeKind::Triangular),
            Scheme::Aloha,
        ]);
    }
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<Scheme>()
                .map_err(|e| Failure::config(e.to_string()))
        })
        .collect()
}

fn parse_values(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|e| Failure::config(format!("bad sweep value '{part}': {e}")))
        })
        .collect()
}

fn cmd_capacity(
    a: CapacityArgs,
    file: &FileConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> CliResult<()> {
    let beta = a.beta.or(file.beta).unwrap_or(10.0);
    let alpha = a.alpha.or(file.alpha).unwrap_or(4.0);
    let lambda = a.lambda.or(file.lambda).unwrap_or_else(|| {
        let d = file.d.unwrap_or(25.0);
        1.0 / (d * d)
    });
    let schemes = match (&a.schemes, &file.schemes) {
        (Some(s), _) => parse_schemes(s)?,
        (None, Some(list)) => parse_schemes(&list.join(","))?,
        (None, None) => parse_schemes("all")?,
    };

    let sweep = a.sweep.as_deref().unwrap_or("none");
    let sweep_values = match (&a.values, a.from, a.to, a.points) {
        (Some(v), _, _, _) => Some(parse_values(v)?),
        (None, Some(lo), Some(hi), n) => {
            Some(log_spaced(lo, hi, n.unwrap_or(13)).map_err(|e| Failure::config(e.to_string()))?)
        }
        (None, None, None, _) => None,
        _ => {
            return Err(Failure::config(
                "log-spaced sweeps need both --from and --to",
            ));
        }
    };
    let (betas, alphas) = match sweep {
        "beta" => (
            sweep_values.unwrap_or_else(|| log_spaced(0.5, 100.0, 13).expect("valid range")),
            vec![alpha],
        ),
        "alpha" => (
            vec![beta],
            sweep_values.unwrap_or_else(|| vec![2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 12.0, 16.0]),
        ),
        "none" => (vec![beta], vec![alpha]),
        other => return Err(Failure::config(format!("unknown sweep '{other}'"))),
    };

    // Parameters that every sweep point shares are preconditions, checked
    // before any computation; a sub-unit beta stays a per-point matter (the
    // closed form accepts it where the tracer cannot).
    for &al in &alphas {
        if !al.is_finite() || al <= 2.0 {
            return Err(Failure::config(format!(
                "path-loss exponent must be finite and > 2 (got {al})"
            )));
        }
    }
    for &b in &betas {
        if !b.is_finite() || b <= 0.0 {
            return Err(Failure::config(format!(
                "SIR threshold must be finite and positive (got {b})"
            )));
        }
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Failure::config(format!(
            "density must be positive and finite (got {lambda})"
        )));
    }

    let aloha_mc = match a.mc_trials {
        Some(0) | None => None,
        Some(n) => Some((n, a.mc_seed.or(file.seed).unwrap_or(42))),
    };

    echo_config(&[
        (
            "schemes",
            schemes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("sweep", sweep.to_string()),
        ("betas", format!("{} value(s)", betas.len())),
        ("alphas", format!("{} value(s)", alphas.len())),
        ("lambda", sig9(lambda)),
    ]);

    let spec = SweepSpec {
        schemes,
        betas,
        alphas,
        lambda,
        aloha_mc,
    };
    let points = run_sweep(&spec);

    let mut buf = Vec::new();
    let name = match format {
        OutputFormat::Csv => {
            write_sweep_csv(&points, &mut buf)?;
            "capacity.csv"
        }
        OutputFormat::Text => {
            write_gnuplot_table(&points, &mut buf)?;
            "capacity.dat"
        }
    };
    write_file(
        &out_dir.join(name),
        std::str::from_utf8(&buf).expect("output is utf-8"),
    )?;

    let failures: Vec<_> = points.iter().filter(|p| p.error.is_some()).collect();
    for p in &failures {
        eprintln!(
            "point scheme={} beta={} alpha={} failed: {}",
            p.scheme,
            sig9(p.beta),
            sig9(p.alpha),
            p.error.as_deref().unwrap_or("unknown")
        );
    }
    println!(
        "evaluated {} point(s), {} failed",
        points.len(),
        failures.len()
    );
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::compute(format!(
            "{} of {} sweep points failed (completed rows were written)",
            failures.len(),
            points.len()
        )))
    }
}

fn cmd_hessian(
    a: HessianArgs,
    file: &FileConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> CliResult<()> {
    let params = resolve_params(a.beta, a.alpha, file)?;
    let d = a.d.or(file.d).unwrap_or(25.0);
    let window_side = a.window.or(file.window).unwrap_or(1000.0);
    let kinds = a.kind.unwrap_or(GridArg::All).kinds();

    let mut cfg = DiffConfig::for_spacing(d);
    if let Some(df) = &file.diff {
        if let Some(v) = df.delta {
            cfg.delta_x = v;
            cfg.delta_y = v;
        }
        if let Some(v) = df.influence_radius {
            cfg.influence_radius = v;
        }
        if let Some(side) = df.region {
            cfg.region = Some(
                Window::new(Vec2::ZERO, side / 2.0, side / 2.0)
                    .map_err(|e| Failure::config(e.to_string()))?,
            );
        }
    }
    if let Some(v) = a.delta {
        cfg.delta_x = v;
        cfg.delta_y = v;
    }
    if let Some(v) = a.influence {
        cfg.influence_radius = v;
    }
    if let Some(side) = a.region {
        cfg.region = Some(
            Window::new(Vec2::ZERO, side / 2.0, side / 2.0)
                .map_err(|e| Failure::config(e.to_string()))?,
        );
    }

    echo_config(&[
        (
            "kinds",
            kinds
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("beta", sig9(params.beta)),
        ("alpha", sig9(params.alpha)),
        ("d", sig9(d)),
        ("window", sig9(window_side)),
        ("delta", sig9(cfg.delta_x)),
        ("influence_radius", sig9(cfg.influence_radius)),
    ]);

    let window = Window::centered_square(window_side).map_err(|e| Failure::config(e.to_string()))?;
    let mut csv = String::from(
        "kind,beta,alpha,d,delta,Ux,Uy,Uxx,Uxy,Uyy,detH,classification,sigma0,u0\n",
    );
    let mut text = String::new();
    for kind in &kinds {
        let set = EmitterSet::lattice(*kind, d, window, Vec2::ZERO)
            .map_err(|e| Failure::config(e.to_string()))?;
        let probe = set
            .center_index()
            .ok_or_else(|| Failure::config("window too small: no center emitter".to_string()))?;
        let field = SirField::new(&set, params.clone()).map_err(|e| Failure::config(e.to_string()))?;
        let rep = hessian_u(&field, probe, &cfg)?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            kind,
            sig9(params.beta),
            sig9(params.alpha),
            sig9(d),
            sig9(cfg.delta_x),
            sig9(rep.ux),
            sig9(rep.uy),
            sig9(rep.uxx),
            sig9(rep.uxy),
            sig9(rep.uyy),
            sig9(rep.det_hessian),
            rep.classification,
            sig9(rep.sigma_base),
            sig9(rep.u0),
        ));
        text.push_str(&format!(
            "{kind} grid, beta = {}, alpha = {}, d = {} m, half-step {} m\n\
             derivatives of U/sigma0 (sigma0 = {} m^2, the probe's own base area):\n\
             Ux   = {:>16}   Uy   = {:>16}\n\
             Uxx  = {:>16}   Uxy  = {:>16}   Uyy = {:>16}\n\
             detH = {:>16}   classification: {}\n\
             near set {} emitters, far set {} regions, U0 = {} m^2\n\n",
            sig9(params.beta),
            sig9(params.alpha),
            sig9(d),
            sig9(cfg.delta_x),
            sig9(rep.sigma_base),
            sig9(rep.ux),
            sig9(rep.uy),
            sig9(rep.uxx),
            sig9(rep.uxy),
            sig9(rep.uyy),
            sig9(rep.det_hessian),
            rep.classification,
            rep.near_count,
            rep.far_count,
            sig9(rep.u0),
        ));
        println!(
            "{kind}: Uxx = {}, detH = {}, {}",
            sig9(rep.uxx),
            sig9(rep.det_hessian),
            rep.classification
        );
    }
    let (name, contents) = match format {
        OutputFormat::Csv => ("hessian.csv", csv),
        OutputFormat::Text => ("hessian.txt", text),
    };
    write_file(&out_dir.join(name), &contents)
}

fn cmd_linresp(
    a: LinrespArgs,
    file: &FileConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> CliResult<()> {
    let params = resolve_params(a.beta, a.alpha, file)?;
    let d = a.d.or(file.d).unwrap_or(25.0);
    // Deformation probes keep the rim of the truncation disk far out by
    // default: membership changes there are the main error source.
    let window_side = a.window.or(file.window).unwrap_or(2000.0);
    let kinds = a.kind.unwrap_or(GridArg::Square).kinds();
    let file_lin = file.linresp.as_ref();
    let matrix = match (a.matrix, file_lin.and_then(|l| l.matrix.as_deref())) {
        (Some(m), _) => m,
        (None, Some("identity")) => MatrixArg::Identity,
        (None, Some("rotation")) => MatrixArg::Rotation,
        (None, Some("shear")) => MatrixArg::Shear,
        (None, Some("stretch")) => MatrixArg::Stretch,
        (None, Some(other)) => {
            return Err(Failure::config(format!(
                "unknown matrix '{other}' (expected identity, rotation, shear, or stretch)"
            )));
        }
        (None, None) => MatrixArg::Identity,
    };
    let t = a.t.or(file_lin.and_then(|l| l.t)).unwrap_or(1e-4);

    echo_config(&[
        (
            "kinds",
            kinds
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("matrix", matrix.name().to_string()),
        ("t", sig9(t)),
        ("beta", sig9(params.beta)),
        ("alpha", sig9(params.alpha)),
        ("d", sig9(d)),
        ("window", sig9(window_side)),
    ]);

    let window = Window::centered_square(window_side).map_err(|e| Failure::config(e.to_string()))?;
    let tracer = resolve_tracer(d, None, file)?;
    let mut csv =
        String::from("kind,matrix,t,sigma0,derivative,predicted,deviation,rel_deviation\n");
    let mut text = String::new();
    for kind in &kinds {
        let set = EmitterSet::lattice(*kind, d, window, Vec2::ZERO)
            .map_err(|e| Failure::config(e.to_string()))?;
        let emitter = set
            .center_index()
            .ok_or_else(|| Failure::config("window too small: no center emitter".to_string()))?;
        let rep = linear_response(&set, params.clone(), emitter, matrix.matrix(), t, &tracer)?;
        let scale = 2.0 * rep.sigma_base;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            kind,
            matrix.name(),
            sig9(t),
            sig9(rep.sigma_base),
            sig9(rep.derivative),
            sig9(rep.predicted),
            sig9(rep.deviation),
            sig9(rep.deviation / scale),
        ));
        text.push_str(&format!(
            "{kind} grid under z -> (I + tA) z, A = {}, t = {}\n\
             sigma0     = {} m^2\n\
             d sigma/dt = {} m^2 (central difference)\n\
             predicted  = {} m^2 (sigma0 * tr A)\n\
             deviation  = {} m^2 ({} of 2 sigma0)\n\n",
            matrix.name(),
            sig9(t),
            sig9(rep.sigma_base),
            sig9(rep.derivative),
            sig9(rep.predicted),
            sig9(rep.deviation),
            sig9(rep.deviation / scale),
        ));
        println!(
            "{kind}: d sigma/dt = {} vs predicted {} (deviation {})",
            sig9(rep.derivative),
            sig9(rep.predicted),
            sig9(rep.deviation)
        );
    }
    let (name, contents) = match format {
        OutputFormat::Csv => ("linresp.csv", csv),
        OutputFormat::Text => ("linresp.txt", text),
    };
    write_file(&out_dir.join(name), &contents)
}

fn cmd_validate(a: ValidateArgs) -> CliResult<()> {
    let mut all_ok = true;
    let mut run = |name: &str, result: std::result::Result<String, String>| {
        match result {
            Ok(detail) => println!("check {name}: PASS ({detail})"),
            Err(detail) => {
                all_ok = false;
                println!("check {name}: FAIL ({detail})");
            }
        }
    };

    run("apollonius-oracle", check_apollonius());
    run("tracer-area-consistency", check_area_consistency());
    run("aloha-closed-form-vs-mc", check_aloha_mc(a.mc_trials));
    run("grid-traced-vs-mc", check_grid_mc(a.mc_samples));
    run("sir-gradient-vs-fd", check_gradient_fd());

    if all_ok {
        println!("all checks passed");
        Ok(())
    } else {
        Err(Failure::compute("one or more validation checks failed"))
    }
}

fn check_apollonius() -> std::result::Result<String, String> {
    let d = 25.0;
    let window = Window::centered_square(200.0).map_err(|e| e.to_string())?;
    let set = EmitterSet::custom(vec![Vec2::ZERO, Vec2::new(d, 0.0)], window)
        .map_err(|e| e.to_string())?;
    let field = SirField::new(&set, FieldParams::new(4.0, 10.0).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let area = trace_boundary(&field, 0, &TracerConfig::for_spacing(d)).map_err(|e| e.to_string())?;
    let k = 10f64.powf(0.25);
    let exact = std::f64::consts::PI * (k * d / (k * k - 1.0)).powi(2);
    let rel = (area.sigma - exact).abs() / exact;
    if rel < 5e-3 {
        Ok(format!(
            "sigma {} vs exact {}, rel {:.2e}",
            sig9(area.sigma),
            sig9(exact),
            rel
        ))
    } else {
        Err(format!(
            "sigma {} vs exact {}, rel {:.2e} exceeds 5e-3",
            sig9(area.sigma),
            sig9(exact),
            rel
        ))
    }
}

fn check_area_consistency() -> std::result::Result<String, String> {
    let d = 25.0;
    let window = Window::centered_square(400.0).map_err(|e| e.to_string())?;
    let set = EmitterSet::lattice(LatticeKind::Square, d, window, Vec2::ZERO)
        .map_err(|e| e.to_string())?;
    let field = SirField::new(&set, FieldParams::new(4.0, 10.0).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let probe = set.center_index().expect("window holds a center emitter");
    let area = trace_boundary(&field, probe, &TracerConfig::for_spacing(d))
        .map_err(|e| e.to_string())?;
    let rel = (area.sigma - area.sigma_polygon).abs() / area.sigma;
    // The shoelace value is a plain polygon area, second order in the arc
    // step; at d/500 its discretization gap against the curvature-corrected
    // line integral is ~6e-6. Anything past 2e-5 means a genuine defect.
    if area.closed && rel < 2e-5 && area.max_residual < 5.0 * 1e-10 {
        Ok(format!(
            "line-integral vs shoelace rel {:.2e}, max residual {:.2e}",
            rel, area.max_residual
        ))
    } else {
        Err(format!(
            "closed={} rel={:.2e} max_residual={:.2e}",
            area.closed, rel, area.max_residual
        ))
    }
}

fn check_aloha_mc(trials: u64) -> std::result::Result<String, String> {
    let lambda = 1e-3;
    let exact = aloha_sigma(lambda, 10.0, 4.0).map_err(|e| e.to_string())?;
    let mc = mc_aloha_sigma(lambda, 10.0, 4.0, trials, 1).map_err(|e| e.to_string())?;
    let rel = (mc.value - exact).abs() / exact;
    if rel < 0.03 {
        Ok(format!(
            "closed form {} vs mc {} +- {}, rel {:.2e}",
            sig9(exact),
            sig9(mc.value),
            sig9(mc.ci_halfwidth),
            rel
        ))
    } else {
        Err(format!(
            "closed form {} vs mc {}, rel {:.2e} exceeds 3e-2",
            sig9(exact),
            sig9(mc.value),
            rel
        ))
    }
}

fn check_grid_mc(samples: u64) -> std::result::Result<String, String> {
    let traced = grid_capacity(LatticeKind::Square, 25.0, 4.0, 10.0).map_err(|e| e.to_string())?;
    let mc = mc_grid_coverage(LatticeKind::Square, 25.0, 4.0, 10.0, samples, 2)
        .map_err(|e| e.to_string())?;
    let rel = (mc.value - traced.capacity).abs() / traced.capacity;
    if rel < 0.01 {
        Ok(format!(
            "traced c {} vs mc {} +- {}, rel {:.2e}",
            sig9(traced.capacity),
            sig9(mc.value),
            sig9(mc.ci_halfwidth),
            rel
        ))
    } else {
        Err(format!(
            "traced c {} vs mc {}, rel {:.2e} exceeds 1e-2",
            sig9(traced.capacity),
            sig9(mc.value),
            rel
        ))
    }
}

fn check_gradient_fd() -> std::result::Result<String, String> {
    use rand::{RngExt, SeedableRng};
    let d = 25.0;
    let window = Window::centered_square(300.0).map_err(|e| e.to_string())?;
    let set = EmitterSet::lattice(LatticeKind::Square, d, window, Vec2::ZERO)
        .map_err(|e| e.to_string())?;
    let field = SirField::new(&set, FieldParams::new(4.0, 10.0).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let probe = set.center_index().expect("window holds a center emitter");
    let zp = field.position(probe);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 100 {
        let z = zp + Vec2::new(
            rng.random_range(-0.45 * d..0.45 * d),
            rng.random_range(-0.45 * d..0.45 * d),
        );
        // Keep clear of the emitter itself where the power law blows up.
        if z.dist(zp) < 0.05 * d {
            continue;
        }
        let grad = field.sir_gradient(probe, z).map_err(|e| e.to_string())?;
        let fx = (field.sir(probe, z + Vec2::new(h, 0.0))
            - field.sir(probe, z - Vec2::new(h, 0.0)))
            / (2.0 * h);
        let fy = (field.sir(probe, z + Vec2::new(0.0, h))
            - field.sir(probe, z - Vec2::new(0.0, h)))
            / (2.0 * h);
        let rel = (grad - Vec2::new(fx, fy)).norm() / grad.norm().max(1e-300);
        worst = worst.max(rel);
        checked += 1;
    }
    if worst < 1e-5 {
        Ok(format!("100 points, worst rel {:.2e}", worst))
    } else {
        Err(format!("worst rel {:.2e} exceeds 1e-5", worst))
    }
}
