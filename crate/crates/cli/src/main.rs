use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use delaysteer::analysis::{classify, PBH_REL_TOL};
use delaysteer::io::{
    self, ClassificationJson, ControlJson, GridJson, RunInfo, SimulationJson, SpectrumJson, VerifyJson, WindowJson,
};
use delaysteer::model::{DelaySystem, M2State, KERNEL_REL_TOL};
use delaysteer::simulator::{simulate, verify_null, ControlInput, Grid, SampledControl, SimOptions, Trajectory, ZeroControl};
use delaysteer::spectral::{find_eigenvalues, Window, RESIDUAL_TOL};
use delaysteer::synthesis::{
    synthesize, MethodChoice, SynthesisOptions, DEFAULT_TRUNCATION, FAMILY_TOL, GRAM_CUTOFF, IMAG_TOL, MOMENT_RESIDUAL_TOL,
};

const SEED_VAR: &str = "DELAYSTEER_SEED";
const DEFAULT_WINDOW: &str = "-3,3,-3,3";
const DEFAULT_DT: &str = "1/512";

#[derive(Parser)]
#[command(name = "delaysteer", version, about = "Controllability analysis and steering controls for unit-delay systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify controllability of a system.
    Analyze(SpectrumArgs),
    /// List eigenvalues in a window.
    Spectrum(SpectrumArgs),
    /// Build a control steering the given state to zero.
    Synthesize(SynthesizeArgs),
    /// Integrate the system under a control.
    Simulate(SimulateArgs),
    /// Check that a trajectory vanishes on `[T-1, T]`.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Auto,
    Series,
    MinNorm,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; JSON goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    system: PathBuf,
    /// re_min,re_max,im_min,im_max
    #[arg(long, allow_hyphen_values = true, default_value = DEFAULT_WINDOW)]
    window: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    horizon: f64,
    /// Eigenvalues kept per branch.
    #[arg(long, default_value_t = DEFAULT_TRUNCATION)]
    truncation: usize,
    /// Search window; derived from the truncation when absent.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    method: Method,
    /// Split multiple eigenvalues with a small random feedback.
    #[arg(long)]
    perturb: bool,
    /// Sampling step of the CSV output, as a number or `1/N`.
    #[arg(long, default_value = DEFAULT_DT)]
    dt: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    state: PathBuf,
    /// Control as written by `synthesize` (JSON or CSV); zero input when absent.
    #[arg(long)]
    control: Option<PathBuf>,
    /// End time; defaults to the control horizon.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value = DEFAULT_DT)]
    dt: String,
    /// Treat the history as differentiable (needed for neutral systems).
    #[arg(long)]
    smooth_history: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Trajectory CSV as written by `simulate --format csv`.
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long)]
    horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

enum Failure {
    /// Unreadable or malformed input; exit status 2.
    Input(String),
    /// The computation itself failed; exit status 1.
    Domain(String),
}

fn input(e: impl Display) -> Failure {
    Failure::Input(e.to_string())
}

fn domain(e: impl Display) -> Failure {
    Failure::Domain(e.to_string())
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = seed().and_then(|seed| match cli.command {
        Command::Analyze(a) => analyze(a, seed),
        Command::Spectrum(a) => spectrum(a, seed),
        Command::Synthesize(a) => synthesize_cmd(a, seed),
        Command::Simulate(a) => simulate_cmd(a, seed),
        Command::Verify(a) => verify_cmd(a, seed),
    });
    match result {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn seed() -> Result<u64, Failure> {
    match std::env::var(SEED_VAR) {
        Ok(s) => s.trim().parse().map_err(|_| input(format!("{SEED_VAR} must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(0),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))
}

fn load_system(path: &Path) -> Result<DelaySystem, Failure> {
    io::parse_system(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_state(path: &Path, n: usize) -> Result<M2State, Failure> {
    io::parse_state(&read(path)?, n).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn parse_window(s: &str) -> Result<Window, Failure> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| input(format!("window must be re_min,re_max,im_min,im_max, got {s:?}")))?;
    if v.len() != 4 {
        return Err(input(format!("window needs four numbers, got {}", v.len())));
    }
    Window::new(v[0], v[1], v[2], v[3]).map_err(input)
}

fn parse_dt(s: &str) -> Result<f64, Failure> {
    let bad = || input(format!("dt must be a positive number or 1/N, got {s:?}"));
    let dt = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().map_err(|_| bad())? / b.trim().parse::<f64>().map_err(|_| bad())?,
        None => s.trim().parse::<f64>().map_err(|_| bad())?,
    };
    if dt > 0.0 && dt.is_finite() {
        Ok(dt)
    } else {
        Err(bad())
    }
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(input(format!("{name} must be positive, got {v}")))
    }
}

/// Sidecar metadata file next to a CSV output.
fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| input(format!("cannot write {}: {e}", path.display())))
}

fn emit_json(out: &OutputArgs, json: &str) -> Result<(), Failure> {
    match &out.out {
        Some(p) => write_file(p, json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

/// CSV goes to `--out` with the JSON report in the sidecar.
fn emit_csv(out: &OutputArgs, csv: &str, json: &str) -> Result<(), Failure> {
    let Some(p) = &out.out else {
        return Err(input("--format csv needs --out"));
    };
    write_file(p, csv)?;
    write_file(&sidecar(p), json)
}

fn csv_text(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(domain)?;
    for r in rows {
        w.write_record(&r).map_err(domain)?;
    }
    let bytes = w.into_inner().map_err(domain)?;
    String::from_utf8(bytes).map_err(domain)
}

fn analysis_run(command: &str, seed: u64, w: &Window) -> RunInfo {
    let mut run = RunInfo::new(command, seed)
        .tolerance("pbh_rank_rel", PBH_REL_TOL)
        .tolerance("kernel_rel", KERNEL_REL_TOL)
        .tolerance("eigen_residual", RESIDUAL_TOL);
    run.window = Some(w.into());
    run
}

fn analyze(a: SpectrumArgs, seed: u64) -> Outcome {
    let sys = load_system(&a.system)?;
    let w = parse_window(&a.window)?;
    if a.output.format == Format::Csv {
        return Err(input("analyze writes JSON only"));
    }
    let report = classify(&sys, &w, seed).map_err(domain)?;
    let json = io::to_json(&ClassificationJson::new(analysis_run("analyze", seed, &w), &report));
    emit_json(&a.output, &json)?;
    Ok(ExitCode::SUCCESS)
}

fn spectrum(a: SpectrumArgs, seed: u64) -> Outcome {
    let sys = load_system(&a.system)?;
    let w = parse_window(&a.window)?;
    let report = find_eigenvalues(&sys, &w).map_err(domain)?;
    let doc = SpectrumJson::new(analysis_run("spectrum", seed, &w), &report);
    let json = io::to_json(&doc);
    match a.output.format {
        Format::Json => emit_json(&a.output, &json)?,
        Format::Csv => {
            let header: Vec<String> =
                ["re", "im", "multiplicity", "branch", "index", "residual"].iter().map(|s| s.to_string()).collect();
            let opt = |v: Option<String>| v.unwrap_or_default();
            let rows = doc.eigenvalues.iter().map(|e| {
                vec![
                    e.re.to_string(),
                    e.im.to_string(),
                    e.multiplicity.to_string(),
                    opt(e.branch.map(|b| b.to_string())),
                    opt(e.index.map(|k| k.to_string())),
                    e.residual.to_string(),
                ]
            });
            emit_csv(&a.output, &csv_text(&header, rows)?, &json)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn synthesize_cmd(a: SynthesizeArgs, seed: u64) -> Outcome {
    let sys = load_system(&a.system)?;
    let x0 = load_state(&a.state, sys.n())?;
    let horizon = positive("horizon", a.horizon)?;
    if a.truncation == 0 {
        return Err(input("truncation must be positive"));
    }
    let window = a.window.as_deref().map(parse_window).transpose()?;
    let grid = Grid::from_dt(parse_dt(&a.dt)?, horizon).map_err(input)?;
    let method = match a.method {
        Method::Auto => MethodChoice::Auto,
        Method::Series => MethodChoice::Series,
        Method::MinNorm => MethodChoice::MinNorm,
    };
    let opts = SynthesisOptions { method, window, perturb_multiple: a.perturb, seed };
    let s = synthesize(&sys, &x0, horizon, a.truncation, &opts).map_err(domain)?;

    let mut run = RunInfo::new("synthesize", seed)
        .tolerance("gram_cutoff", GRAM_CUTOFF)
        .tolerance("moment_residual", MOMENT_RESIDUAL_TOL)
        .tolerance("family_defect", FAMILY_TOL)
        .tolerance("imag_ratio", IMAG_TOL)
        .tolerance("eigen_residual", RESIDUAL_TOL);
    run.window = Some(WindowJson::from(&s.spectrum.window));
    run.truncation = Some(a.truncation);
    run.grid = Some(GridJson::from(&grid));
    let json = io::to_json(&ControlJson::new(run, &s));
    match a.output.format {
        Format::Json => emit_json(&a.output, &json)?,
        Format::Csv => {
            let header = vec!["t".to_string(), "u".to_string()];
            let rows = s.control.samples(grid.steps_per_unit()).into_iter().map(|(t, u)| vec![t.to_string(), u.to_string()]);
            emit_csv(&a.output, &csv_text(&header, rows)?, &json)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Reads `(t, u)` samples starting at `t = 0`.
fn load_sampled_control(path: &Path) -> Result<SampledControl, Failure> {
    let text = read(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let bad = |msg: &str| input(format!("{}: {msg}", path.display()));
    let mut ts = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(&e.to_string()))?;
        let num =
            |i: usize| rec.get(i).and_then(|s| s.trim().parse::<f64>().ok()).ok_or_else(|| bad("expected numeric columns t,u"));
        ts.push(num(0)?);
        values.push(num(1)?);
    }
    if ts.len() < 2 || ts[0] != 0.0 {
        return Err(bad("control samples must start at t = 0 and have at least two rows"));
    }
    Ok(SampledControl { dt: ts[1] - ts[0], values })
}

fn load_control(path: &Path) -> Result<(Box<dyn ControlInput>, f64), Failure> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let c = load_sampled_control(path)?;
        let horizon = c.dt * (c.values.len() - 1) as f64;
        Ok((Box::new(c), horizon))
    } else {
        let c = io::parse_control(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
        let horizon = c.horizon;
        Ok((Box::new(c), horizon))
    }
}

fn trajectory_csv(traj: &Trajectory) -> Result<String, Failure> {
    let n = traj.z.first().map_or(0, |z| z.len());
    let nu = traj.grid.steps_per_unit();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("z_{i}")));
    header.push("u".to_string());
    let rows = traj.z.iter().enumerate().map(|(k, z)| {
        let mut row = vec![traj.time(k).to_string()];
        row.extend(z.iter().map(|v| v.to_string()));
        row.push(if k >= nu { traj.u[k - nu].to_string() } else { String::new() });
        row
    });
    csv_text(&header, rows)
}

fn simulate_cmd(a: SimulateArgs, seed: u64) -> Outcome {
    let sys = load_system(&a.system)?;
    let x0 = load_state(&a.state, sys.n())?;
    let (control, control_horizon): (Box<dyn ControlInput>, Option<f64>) = match &a.control {
        Some(p) => {
            let (c, h) = load_control(p)?;
            (c, Some(h))
        }
        None => (Box::new(ZeroControl), None),
    };
    let horizon = match a.horizon.or(control_horizon) {
        Some(h) => positive("horizon", h)?,
        None => return Err(input("simulate needs --horizon when no control is given")),
    };
    let grid = Grid::from_dt(parse_dt(&a.dt)?, horizon).map_err(input)?;
    let opts = SimOptions { smooth_history: a.smooth_history };
    let traj = simulate(&sys, &x0, control.as_ref(), grid, opts).map_err(domain)?;
    let terminal = verify_null(&traj, grid.horizon(), 0.0).map_err(domain)?;

    let mut run = RunInfo::new("simulate", seed);
    run.grid = Some(GridJson::from(&grid));
    let json = io::to_json(&SimulationJson::new(run, &traj, terminal));
    match a.output.format {
        Format::Json => emit_json(&a.output, &json)?,
        Format::Csv => emit_csv(&a.output, &trajectory_csv(&traj)?, &json)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn load_trajectory(path: &Path) -> Result<Trajectory, Failure> {
    let text = read(path)?;
    let bad = |msg: String| input(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let n = header.iter().filter(|h| h.starts_with("z_")).count();
    if n == 0 || header.len() != n + 2 {
        return Err(bad("expected columns t,z_1..z_n,u".into()));
    }
    let mut ts = Vec::new();
    let mut z = Vec::new();
    let mut u = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| bad(format!("non-numeric entry in row {}", ts.len() + 1)))
        };
        let t = num(0)?;
        z.push(DVector::from_vec((1..=n).map(num).collect::<Result<Vec<_>, _>>()?));
        if t >= 0.0 {
            u.push(num(n + 1)?);
        }
        ts.push(t);
    }
    if ts.len() < 2 || (ts[0] + 1.0).abs() > 1e-12 {
        return Err(bad("trajectory must start at t = -1".into()));
    }
    let spu = (1.0 / (ts[1] - ts[0])).round();
    if spu.is_nan() || spu < 1.0 || ts.len() <= spu as usize {
        return Err(bad("cannot infer the time grid".into()));
    }
    let spu = spu as usize;
    let grid = Grid::new(spu, (ts.len() - 1 - spu) as f64 / spu as f64).map_err(input)?;
    if grid.steps() + spu + 1 != ts.len() {
        return Err(bad("row count does not match the time grid".into()));
    }
    Ok(Trajectory { grid, z, u })
}

fn verify_cmd(a: VerifyArgs, seed: u64) -> Outcome {
    let traj = load_trajectory(&a.trajectory)?;
    let horizon = positive("horizon", a.horizon)?;
    let tol = positive("tol", a.tol)?;
    let check = verify_null(&traj, horizon, tol).map_err(domain)?;
    let mut run = RunInfo::new("verify", seed).tolerance("tol", tol);
    run.grid = Some(GridJson::from(&traj.grid));
    let doc = VerifyJson { run, horizon, tol, is_null: check.is_null, residual: check.residual };
    if a.output.format == Format::Csv {
        return Err(input("verify writes JSON only"));
    }
    emit_json(&a.output, &io::to_json(&doc))?;
    if check.is_null {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verify: residual {:e} on [{}, {}] exceeds tol {:e}", check.residual, horizon - 1.0, horizon, tol);
        Ok(ExitCode::from(1))
    }
}
