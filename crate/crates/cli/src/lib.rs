//! Command-line front end: measure generation, checks, report export.
//!
//! Exit codes: 0 when the check passes, 1 when it fails, 2 on any usage,
//! configuration or I/O error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fracmeasure::family::{BallFamily, FamilySpec};
use fracmeasure::growth::{growth_constant, BallSampler};
use fracmeasure::io::{fmt17, load_measure, save_measure, write_atomic};
use fracmeasure::kernels::{check_regularity, check_size};
use fracmeasure::verify::{self, CheckOptions, Side};
use fracmeasure::{
    generate_measure, refinement_levels, AtomicMeasure, CheckReport, CurveSpec, FractionalKernel, MeasureKind,
    TestFunctionKind,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "fracmeasure", version, about = "Fractional integrals on n-dimensional measures")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "FRACMEASURE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate or describe measure files.
    #[command(subcommand)]
    Measure(MeasureCommand),
    /// Run one check and emit its report.
    #[command(allow_negative_numbers = true)]
    Check(Box<CheckArgs>),
    /// Convert a JSON report to CSV.
    Export(ExportArgs),
}

#[derive(Subcommand, Debug)]
enum MeasureCommand {
    Gen(GenArgs),
    Info {
        #[arg(long)]
        measure: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Uniform,
    Cantor,
    Curve,
    PowerDensity,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Cube dimension (uniform).
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Atoms per axis (uniform) or in total (curve, power density).
    #[arg(long)]
    atoms: Option<usize>,
    /// Cantor generation; the measure has 2^depth atoms.
    #[arg(long)]
    depth: Option<u32>,
    /// Density exponent s of t^(s-1) dt (power density).
    #[arg(long)]
    exponent: Option<f64>,
    /// `segment:x0,y0,x1,y1`, `arc:cx,cy,r,start,end` or `polyline:x0,y0;x1,y1;...`
    #[arg(long)]
    curve: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CheckName {
    Growth,
    #[value(name = "lemma21")]
    InnerPotential,
    #[value(name = "lemma22")]
    OuterPotential,
    Hls,
    Necessity,
    Localpot,
    Geometry,
    LipImage,
    LipPreserve,
    RbmoImage,
    RbmoLip,
    KernelSize,
    KernelReg,
}

impl CheckName {
    /// Checks that accept several refinement levels.
    fn multi_level(self) -> bool {
        matches!(
            self,
            CheckName::Hls
                | CheckName::Localpot
                | CheckName::LipImage
                | CheckName::LipPreserve
                | CheckName::RbmoImage
                | CheckName::RbmoLip
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(value_enum)]
    check: CheckName,
    /// Measure file; repeat to give refinement levels explicitly, coarse to fine.
    #[arg(long = "measure", required = true)]
    measures: Vec<PathBuf>,
    /// Refinement levels regenerated from the measure's generator, ending at
    /// the given measure (default 2 when possible).
    #[arg(long)]
    levels: Option<usize>,
    /// Refinement factor between regenerated levels.
    #[arg(long, default_value_t = 4)]
    refine: usize,
    /// `riesz`, `zero`, `modulated:<scale>` or `modulated:<scale>:<frequency>`.
    #[arg(long, default_value = "riesz")]
    kernel: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// Expected HLS exponent; rejected unless it matches 1/q = 1/p - alpha/n.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Dimension claimed for the measure, overriding the file.
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    slack: Option<f64>,
    /// Test function generator: `ball_indicator`, `signed_ball_combo[:k]`,
    /// `smooth_bump`, `random_atomwise` or `mixed`.
    #[arg(long)]
    functions: Option<String>,
    /// Function pool size for the pointwise checks.
    #[arg(long)]
    pool: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.0)]
    shift: f64,
    #[arg(long)]
    max_centers: Option<usize>,
    /// Finest radius floor of the growth-type checks, in units of h.
    #[arg(long)]
    min_radius: Option<f64>,
    /// Allowed multiple of the theoretical constant (lemma21, lemma22).
    #[arg(long, default_value_t = 2.0)]
    multiplier: f64,
    /// Containment pairs examined by `geometry` (default all).
    #[arg(long)]
    max_pairs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(fracmeasure::Error),
}

impl From<fracmeasure::Error> for CliError {
    fn from(e: fracmeasure::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("invalid parameter `{field}`: {reason}"))
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: {}", usage("threads", "must be at least 1"));
            return EXIT_USAGE;
        }
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| execute(cli.command)) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(command: Command) -> CliResult<bool> {
    match command {
        Command::Measure(MeasureCommand::Gen(args)) => measure_gen(&args),
        Command::Measure(MeasureCommand::Info { measure }) => measure_info(&measure),
        Command::Check(args) => run_check(&args),
        Command::Export(args) => {
            let text = std::fs::read_to_string(&args.report).map_err(fracmeasure::Error::from)?;
            let report = CheckReport::from_json(&text)?;
            emit(&export_csv(&report), args.out.as_deref())?;
            Ok(true)
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => {
            // A closed reader (`| head`) is not an error.
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(fracmeasure::Error::from(e).into());
                }
            }
        }
    }
    Ok(())
}

fn required<T: Copy>(value: Option<T>, field: &str, kind: &str) -> CliResult<T> {
    value.ok_or_else(|| usage(field, format!("--{field} is required for `{kind}`")))
}

fn parse_curve(spec: &str) -> CliResult<CurveSpec> {
    let bad = || usage("curve", format!("cannot parse {spec:?}"));
    let nums = |s: &str| -> CliResult<Vec<f64>> {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad))
            .collect()
    };
    let (head, rest) = spec.split_once(':').ok_or_else(bad)?;
    match head {
        "segment" => match nums(rest)?.as_slice() {
            &[x0, y0, x1, y1] => Ok(CurveSpec::Segment { from: [x0, y0], to: [x1, y1] }),
            _ => Err(bad()),
        },
        "arc" => match nums(rest)?.as_slice() {
            &[cx, cy, radius, start, end] => Ok(CurveSpec::CircleArc {
                center: [cx, cy],
                radius,
                start,
                end,
            }),
            _ => Err(bad()),
        },
        "polyline" => rest
            .split(';')
            .map(|v| match nums(v)?.as_slice() {
                &[x, y] => Ok([x, y]),
                _ => Err(bad()),
            })
            .collect::<CliResult<Vec<_>>>()
            .map(CurveSpec::Polyline),
        _ => Err(bad()),
    }
}

fn measure_gen(args: &GenArgs) -> CliResult<bool> {
    let kind_name = match args.kind {
        Kind::Uniform => "uniform",
        Kind::Cantor => "cantor",
        Kind::Curve => "curve",
        Kind::PowerDensity => "power-density",
    };
    let kind = match args.kind {
        Kind::Uniform => MeasureKind::UniformCube {
            dim: args.dim,
            per_axis: required(args.atoms, "atoms", kind_name)?,
        },
        Kind::Cantor => MeasureKind::Cantor {
            depth: required(args.depth, "depth", kind_name)?,
        },
        Kind::Curve => MeasureKind::Curve {
            curve: parse_curve(args.curve.as_deref().ok_or_else(|| usage("curve", "--curve is required for `curve`"))?)?,
            atoms: required(args.atoms, "atoms", kind_name)?,
        },
        Kind::PowerDensity => MeasureKind::PowerDensity {
            exponent: required(args.exponent, "exponent", kind_name)?,
            atoms: required(args.atoms, "atoms", kind_name)?,
        },
    };
    let m = generate_measure(&kind)?;
    save_measure(&m, &args.out)?;
    eprintln!("wrote {} atoms to {}", m.len(), args.out.display());
    Ok(true)
}

fn measure_info(path: &Path) -> CliResult<bool> {
    let m = load_measure(path)?;
    let info = json!({
        "atoms": m.len(),
        "n": m.n(),
        "h": m.h(),
        "diameter": m.diameter(),
        "total_mass": m.total_mass(),
        "ambient_dim": m.space().ambient_dim(),
        "growth_hint": m.growth_hint(),
        "metadata": m.metadata(),
    });
    let text = serde_json::to_string_pretty(&info).map_err(fracmeasure::Error::from)?;
    emit(&format!("{text}\n"), None)?;
    Ok(true)
}

/// Range checks that must pass before any quadrature runs.
fn validate(args: &CheckArgs, n: f64) -> CliResult<()> {
    let positive = |v: Option<f64>, field: &str| match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(usage(field, format!("must be positive, got {x}"))),
        _ => Ok(()),
    };
    if let Some(a) = args.alpha {
        if !(a > 0.0 && a < n) {
            return Err(usage("alpha", format!("must lie in (0, {n}), got {a}")));
        }
    }
    if let Some(p) = args.p {
        if !(p >= 1.0) {
            return Err(usage("p", format!("must be at least 1, got {p}")));
        }
    }
    if let Some(r) = args.rho {
        if !(r > 1.0 && r.is_finite()) {
            return Err(usage("rho", format!("must exceed 1, got {r}")));
        }
    }
    positive(args.gamma, "gamma")?;
    positive(args.beta, "beta")?;
    positive(args.epsilon, "epsilon")?;
    positive(args.n, "n")?;
    positive(args.min_radius, "min-radius")?;
    positive(Some(args.multiplier), "multiplier")?;
    if let Some(s) = args.slack {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(usage("slack", format!("must be nonnegative, got {s}")));
        }
    }
    if args.trials == Some(0) {
        return Err(usage("trials", "must be at least 1"));
    }
    if args.levels == Some(0) {
        return Err(usage("levels", "must be at least 1"));
    }
    if args.refine < 2 {
        return Err(usage("refine", format!("must be at least 2, got {}", args.refine)));
    }
    if !(args.scale.is_finite() && args.scale != 0.0) {
        return Err(usage("scale", "must be finite and nonzero"));
    }
    if !args.shift.is_finite() {
        return Err(usage("shift", "must be finite"));
    }
    Ok(())
}

fn with_dimension(m: AtomicMeasure, n: Option<f64>) -> CliResult<AtomicMeasure> {
    Ok(match n {
        Some(n) => m.with_dimension(n)?,
        None => m,
    })
}

/// Measures for the check, coarse to fine. `notes` collects remarks for the report.
fn load_levels(args: &CheckArgs, notes: &mut Vec<String>) -> CliResult<Vec<AtomicMeasure>> {
    let mut loaded = args
        .measures
        .iter()
        .map(|p| load_measure(p).map_err(CliError::from).and_then(|m| with_dimension(m, args.n)))
        .collect::<CliResult<Vec<_>>>()?;
    if loaded.len() > 1 {
        if !args.check.multi_level() {
            return Err(usage("measure", format!("`{}` takes a single measure", check_label(args.check))));
        }
        if args.levels.is_some_and(|l| l != loaded.len()) {
            return Err(usage("levels", "conflicts with the number of --measure files"));
        }
        return Ok(loaded);
    }
    let finest = loaded.pop().unwrap();
    if !args.check.multi_level() {
        if args.levels.is_some_and(|l| l > 1) {
            return Err(usage("levels", format!("`{}` uses a single measure", check_label(args.check))));
        }
        return Ok(vec![finest]);
    }
    let kind = MeasureKind::from_metadata(finest.metadata());
    let levels = args.levels.unwrap_or(2);
    if levels == 1 {
        return Ok(vec![finest]);
    }
    let coarse = kind
        .as_ref()
        .map(|k| refinement_levels(k, levels, args.refine))
        .transpose()
        .unwrap_or(None);
    match coarse {
        Some(mut ms) => {
            ms.pop();
            let mut out = ms
                .into_iter()
                .map(|m| with_dimension(m, args.n))
                .collect::<CliResult<Vec<_>>>()?;
            out.push(finest);
            Ok(out)
        }
        None if args.levels.is_some() => Err(usage(
            "levels",
            "cannot regenerate coarser levels of this measure; repeat --measure instead",
        )),
        None => {
            notes.push("single level: the measure cannot be coarsened".into());
            Ok(vec![finest])
        }
    }
}

fn check_label(c: CheckName) -> String {
    c.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

fn kernel(args: &CheckArgs, alpha: f64, n: f64) -> CliResult<FractionalKernel> {
    let k = FractionalKernel::from_label(&args.kernel, alpha, n)?;
    Ok(match args.epsilon {
        Some(e) => k.with_epsilon(e),
        None => k,
    })
}

fn run_check(args: &CheckArgs) -> CliResult<bool> {
    let label = check_label(args.check);
    let mut notes = Vec::new();
    let levels = load_levels(args, &mut notes)?;
    let finest = levels.last().unwrap();
    let n = finest.n();
    validate(args, n)?;
    let need = |v: Option<f64>, field: &str| required(v, field, &label);

    let functions = match &args.functions {
        Some(s) => TestFunctionKind::parse(s)?,
        None if args.check == CheckName::LipPreserve => TestFunctionKind::SmoothBump,
        None => TestFunctionKind::Mixed,
    };
    let rbmo = matches!(args.check, CheckName::RbmoImage | CheckName::RbmoLip);
    let pointwise = matches!(args.check, CheckName::LipPreserve | CheckName::RbmoLip);
    let mut opts = CheckOptions::default()
        .with_trials(args.trials.unwrap_or(if pointwise { 1000 } else { 50 }))
        .with_seed(args.seed)
        .with_slack(args.slack.unwrap_or(if rbmo { verify::RBMO_SLACK } else { 0.25 }))
        .with_functions(functions)
        .with_scale(args.scale)
        .with_shift(args.shift);
    if let Some(pool) = args.pool {
        opts.function_pool = pool;
    }
    let mut sampler = BallSampler {
        seed: args.seed,
        min_radius: args.min_radius.map(|k| k * finest.h()),
        ..BallSampler::default()
    };
    if let Some(c) = args.max_centers {
        sampler.max_centers = c;
    }
    if let Some(s) = args.slack {
        sampler.slack = s;
    }
    let mut family = FamilySpec::default()
        .with_seed(args.seed)
        .with_rho(args.rho.unwrap_or(2.0));
    if let Some(c) = args.max_centers {
        family = family.with_max_centers(c);
    }

    let mut report = match args.check {
        CheckName::Growth => growth_constant(finest, args.n.unwrap_or(n), &sampler)?,
        CheckName::InnerPotential | CheckName::OuterPotential => {
            let side = if args.check == CheckName::InnerPotential {
                Side::Inner
            } else {
                Side::Outer
            };
            verify::check_growth_lemmas(finest, need(args.gamma, "gamma")?, side, &sampler, args.multiplier)?
        }
        CheckName::Hls => {
            let (alpha, p) = (need(args.alpha, "alpha")?, need(args.p, "p")?);
            let r = verify::check_hls(&levels, alpha, p, &opts)?;
            if let Some(q) = args.q {
                let computed = r.params["q"].as_f64().unwrap_or(f64::NAN);
                if !((q - computed).abs() <= 1e-12 * computed.abs()) {
                    return Err(usage("q", format!("expected 1/q = 1/p - alpha/n, i.e. q = {computed}, got {q}")));
                }
            }
            r
        }
        CheckName::Necessity => verify::check_necessity(finest, need(args.alpha, "alpha")?, need(args.p, "p")?, &sampler)?,
        CheckName::Localpot => {
            verify::check_local_potential(&levels, need(args.alpha, "alpha")?, args.rho.unwrap_or(2.0), &opts, &family)?
        }
        CheckName::Geometry => {
            let balls = BallFamily::build(finest, &family)?;
            verify::check_dilation_geometry(finest, &balls, args.max_pairs.unwrap_or(usize::MAX), args.seed)?
        }
        CheckName::LipImage => {
            let k = kernel(args, need(args.alpha, "alpha")?, n)?;
            verify::check_lip_image(&levels, &k, need(args.p, "p")?, &opts)?
        }
        CheckName::LipPreserve => {
            let k = kernel(args, need(args.alpha, "alpha")?, n)?;
            verify::check_lip_preservation(&levels, &k, need(args.beta, "beta")?, &opts)?
        }
        CheckName::RbmoImage => {
            let k = kernel(args, need(args.alpha, "alpha")?, n)?;
            verify::check_rbmo_image(&levels, &k, &opts, &family)?
        }
        CheckName::RbmoLip => {
            let k = kernel(args, need(args.alpha, "alpha")?, n)?;
            verify::check_rbmo_to_lip(&levels, &k, &opts, &family)?
        }
        CheckName::KernelSize | CheckName::KernelReg => {
            let k = kernel(args, need(args.alpha, "alpha")?, n)?;
            let trials = args.trials.unwrap_or(10_000);
            if args.check == CheckName::KernelSize {
                check_size(&k, finest, trials, args.seed)?
            } else {
                check_regularity(&k, finest, trials, args.seed)?
            }
        }
    };
    for note in notes {
        report.note(note);
    }
    let text = match args.format {
        Format::Json => report.to_json()?,
        Format::Csv => export_csv(&report),
    };
    emit(&text, args.out.as_deref())?;
    eprintln!(
        "{label}: {} ({} level{}, last sup {})",
        if report.pass { "PASS" } else { "FAIL" },
        report.levels.len(),
        if report.levels.len() == 1 { "" } else { "s" },
        fmt17(report.last_sup())
    );
    Ok(report.pass)
}

/// CSV with header `level,atoms,sup_ratio,pass` and one row per level.
pub fn export_csv(report: &CheckReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["level", "atoms", "sup_ratio", "pass"]).unwrap();
    for (k, level) in report.levels.iter().enumerate() {
        let pass = report.tolerance.level_passes(&report.levels, k);
        w.write_record([k.to_string(), level.atoms.to_string(), fmt17(level.sup_ratio), pass.to_string()])
            .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}
