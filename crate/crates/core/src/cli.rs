//! The `droplet` command line.
//!
//! Exit status: 0 success, 1 usage or parameter-domain error, 2 runtime
//! failure, 3 complete but flagged (metastability, slow χ chain, unconverged
//! multicanonical weights).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::contour::{droplet_fraction, extract_contours, CensusWindow, ContourCensus};
use crate::error::{Error, Result};
use crate::harness::output::{curve_csv, fmt_f64, write_text};
use crate::harness::{run_sweep, LogpSettings, Mode, SweepSpec};
use crate::lattice::{measure_chi, CanonicalConstraint, ExchangeMode, SpinConfig};
use crate::rng::RngStream;
use crate::theory::{critical_delta, critical_lambda, lambda_curve, minimize_phi, phi};
use crate::thermo::{tau_w_unit_volume, wulff_construct, Symmetry, TauFunction};

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "DROPLET_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "droplet-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_FLAGGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "droplet", version, about = "Droplet formation at fixed magnetization in the 2D Ising model")]
pub struct Cli {
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Progress lines on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate Φ_Δ(λ), or write the curve over [0, 1].
    TheoryPhi(PhiArgs),
    /// Print Δ_c and λ_c.
    TheoryCritical {
        #[arg(long, default_value_t = 2)]
        d: u32,
    },
    /// Write λ_Δ over a Δ grid as CSV.
    TheoryCurve(CurveArgs),
    /// Wulff construction for the Ising, isotropic or tabulated tension.
    Wulff(WulffArgs),
    /// Measure the susceptibility χ = Var(M)/|Λ|.
    Chi(ChiArgs),
    /// Fixed-magnetization sweep: census and droplet fraction.
    Simulate(SimulateArgs),
    /// Multicanonical ln p_L(M) and the rate comparison.
    Logp(LogpArgs),
    /// Contour census of a `+`/`-` grid file.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct PhiArgs {
    #[arg(long, default_value_t = 2)]
    pub d: u32,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, conflicts_with = "points")]
    pub lambda: Option<f64>,
    /// Number of λ samples for a `lambda,phi` curve.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = 2)]
    pub d: u32,
    #[arg(long, default_value_t = 0.0)]
    pub delta_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 201)]
    pub n: usize,
    /// Explicit ascending Δ values (overrides the range).
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SymmetryArg {
    None,
    Square,
    Isotropic,
}

#[derive(Debug, Args)]
pub struct WulffArgs {
    /// Exact 2D Ising tension at this β.
    #[arg(long, conflicts_with_all = ["isotropic", "tau_file"])]
    pub beta: Option<f64>,
    /// Constant tension τ₀.
    #[arg(long, conflicts_with = "tau_file")]
    pub isotropic: Option<f64>,
    /// Two-column `theta,tau` table.
    #[arg(long)]
    pub tau_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "none")]
    pub symmetry: SymmetryArg,
    #[arg(long, default_value_t = crate::thermo::DEFAULT_RESOLUTION)]
    pub resolution: usize,
    /// Write the shape vertices as `x,y` CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ChiArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long = "L", default_value_t = 64)]
    pub l: usize,
    #[arg(long, default_value_t = 2000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 20000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML sweep file; inline parameters are then not accepted.
    #[arg(long, conflicts_with_all = ["beta", "l", "delta", "v_l"])]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub beta: Option<f64>,
    #[arg(long = "L", value_delimiter = ',', required_unless_present = "config")]
    pub l: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', conflicts_with = "v_l", required_unless_present_any = ["config", "v_l"])]
    pub delta: Option<Vec<f64>>,
    #[arg(long = "vL", value_delimiter = ',')]
    pub v_l: Option<Vec<f64>>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub cadence: Option<usize>,
    #[arg(long = "K", value_delimiter = ',')]
    pub k: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<String>>,
    #[arg(long)]
    pub exchange: Option<String>,
    /// Frozen χ; measured when absent.
    #[arg(long)]
    pub chi: Option<f64>,
    #[arg(long)]
    pub raw: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LogpArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long = "L")]
    pub l: usize,
    #[arg(long = "vL", value_delimiter = ',', required = true)]
    pub v_l: Vec<f64>,
    #[arg(long)]
    pub chi: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub runs: usize,
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    #[arg(long)]
    pub production_sweeps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Plain-text grid of `+` and `-`.
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long = "K", default_value_t = 4.0)]
    pub k: f64,
    /// Excess volume for λ̂.
    #[arg(long = "vL")]
    pub v_l: Option<f64>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::DegenerateShape(_) | Error::InvalidWindow { .. } | Error::Config(_) | Error::Parse(_) => {
            EXIT_USAGE
        }
        Error::Checkpoint(_) | Error::Io(_) | Error::Json(_) => EXIT_RUNTIME,
    }
}

fn out_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(rendered.as_bytes()) } else { stderr.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let threads = cli.threads;
    let verbose = cli.verbose;
    match cli.command {
        Command::TheoryPhi(a) => theory_phi(a, out),
        Command::TheoryCritical { d } => {
            writeln!(out, "delta_c = {}", fmt_f64(critical_delta(d)?))?;
            writeln!(out, "lambda_c = {}", fmt_f64(critical_lambda(d)?))?;
            Ok(EXIT_OK)
        }
        Command::TheoryCurve(a) => theory_curve(a, out),
        Command::Wulff(a) => wulff(a, out),
        Command::Chi(a) => chi(a, out),
        Command::Simulate(a) => simulate(a, threads, verbose, out),
        Command::Logp(a) => logp(a, threads, verbose, out),
        Command::Analyze(a) => analyze(a, out),
    }
}

fn theory_phi(a: PhiArgs, out: &mut dyn Write) -> Result<i32> {
    match (a.lambda, a.points) {
        (Some(lambda), _) => {
            writeln!(out, "{}", fmt_f64(phi(a.d, a.delta, lambda)?))?;
        }
        (None, Some(n)) => {
            if n < 2 {
                return Err(usage("--points must be at least 2"));
            }
            let mut text = String::from("lambda,phi\n");
            for i in 0..n {
                let lambda = i as f64 / (n - 1) as f64;
                text.push_str(&format!("{},{}\n", fmt_f64(lambda), fmt_f64(phi(a.d, a.delta, lambda)?)));
            }
            emit(out, a.out.as_deref(), &text)?;
        }
        (None, None) => {
            let m = minimize_phi(a.d, a.delta)?;
            writeln!(out, "lambda_star = {}", fmt_f64(m.lambda_star))?;
            writeln!(out, "phi_value = {}", fmt_f64(m.phi_value))?;
            writeln!(out, "degenerate = {}", m.degenerate)?;
            if let (Some(l), Some(v)) = (m.barrier_lambda, m.barrier_value) {
                writeln!(out, "barrier_lambda = {}", fmt_f64(l))?;
                writeln!(out, "barrier_value = {}", fmt_f64(v))?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn theory_curve(a: CurveArgs, out: &mut dyn Write) -> Result<i32> {
    let grid = match a.deltas {
        Some(g) => g,
        None => {
            if a.n < 2 || !(a.delta_max > a.delta_min) {
                return Err(usage("need --n >= 2 and --delta-max > --delta-min"));
            }
            (0..a.n).map(|i| a.delta_min + (a.delta_max - a.delta_min) * i as f64 / (a.n - 1) as f64).collect()
        }
    };
    let curve = lambda_curve(a.d, &grid)?;
    let text = curve_csv(a.d, critical_delta(a.d)?, critical_lambda(a.d)?, &curve);
    emit(out, a.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn wulff(a: WulffArgs, out: &mut dyn Write) -> Result<i32> {
    let symmetry = match a.symmetry {
        SymmetryArg::None => Symmetry::None,
        SymmetryArg::Square => Symmetry::Square,
        SymmetryArg::Isotropic => Symmetry::Isotropic,
    };
    let tau = match (a.beta, a.isotropic, &a.tau_file) {
        (Some(beta), None, None) => TauFunction::ising(beta)?,
        (None, Some(t), None) => {
            if !(t > 0.0 && t.is_finite()) {
                return Err(usage("--isotropic must be positive"));
            }
            TauFunction::Isotropic(t)
        }
        (None, None, Some(path)) => TauFunction::from_table_file(path, symmetry)?,
        _ => return Err(usage("give exactly one of --beta, --isotropic, --tau-file")),
    };
    let shape = wulff_construct(&tau, a.resolution)?;
    let tau_w = tau_w_unit_volume(&shape);
    writeln!(out, "tau_W = {}", fmt_f64(tau_w))?;
    writeln!(out, "area = {}", fmt_f64(shape.area))?;
    writeln!(out, "boundary_energy = {}", fmt_f64(shape.boundary_energy))?;
    writeln!(
        out,
        "identity_deviation = {}",
        fmt_f64((shape.boundary_energy - 2.0 * shape.area).abs() / shape.boundary_energy)
    )?;
    if let Some(beta) = a.beta {
        writeln!(out, "reduced_tau_W = {}", fmt_f64(beta * tau_w))?;
    }
    if let Some(path) = &a.out {
        shape.write_csv(path)?;
    }
    Ok(EXIT_OK)
}

fn chi(a: ChiArgs, out: &mut dyn Write) -> Result<i32> {
    let mut rng = RngStream::new(a.seed, crate::harness::plan::CHI_STREAM);
    let est = measure_chi(a.beta, a.l, a.burnin, a.sweeps, &mut rng)?;
    writeln!(out, "chi = {}", fmt_f64(est.chi))?;
    writeln!(out, "std_error = {}", fmt_f64(est.std_error))?;
    writeln!(out, "tau_int = {}", fmt_f64(est.tau_int))?;
    writeln!(out, "flagged = {}", est.flagged)?;
    Ok(if est.flagged { EXIT_FLAGGED } else { EXIT_OK })
}

fn parse_modes(names: &[String]) -> Result<Vec<Mode>> {
    names
        .iter()
        .map(|n| match n.as_str() {
            "census" => Ok(Mode::Census),
            "lambda" => Ok(Mode::Lambda),
            "logp" => Ok(Mode::Logp),
            other => Err(usage(format!("unknown mode {other:?}"))),
        })
        .collect()
}

fn parse_exchange(name: &str) -> Result<ExchangeMode> {
    match name {
        "local" => Ok(ExchangeMode::Local),
        "nonlocal" => Ok(ExchangeMode::Nonlocal),
        other => Err(usage(format!("unknown exchange mode {other:?}"))),
    }
}

fn simulate(a: SimulateArgs, threads: usize, verbose: bool, out: &mut dyn Write) -> Result<i32> {
    let mut spec = match &a.config {
        Some(path) => SweepSpec::from_file(path)?,
        None => {
            let mut s = SweepSpec::new(a.beta.expect("required by clap"), a.l.clone().expect("required by clap"));
            s.delta_grid = a.delta.clone();
            s.v_list = a.v_l.clone();
            s
        }
    };
    if let Some(x) = a.replicas {
        spec.replicas = x;
    }
    if let Some(x) = a.burnin {
        spec.burnin_sweeps = x;
    }
    if let Some(x) = a.samples {
        spec.samples = x;
    }
    if let Some(x) = a.cadence {
        spec.cadence_sweeps = x;
    }
    if let Some(x) = &a.k {
        spec.k_list = x.clone();
    }
    if let Some(x) = a.seed {
        spec.seed = x;
    }
    if let Some(x) = &a.modes {
        spec.modes = parse_modes(x)?;
    }
    if let Some(x) = &a.exchange {
        spec.exchange = parse_exchange(x)?;
    }
    if a.chi.is_some() {
        spec.chi = a.chi;
    }
    if a.raw {
        spec.raw = true;
    }
    if threads > 0 {
        spec.threads = threads;
    }
    spec.validate()?;
    finish_sweep(&spec, out_dir(a.out), verbose, out)
}

fn logp(a: LogpArgs, threads: usize, verbose: bool, out: &mut dyn Write) -> Result<i32> {
    let mut spec = SweepSpec::new(a.beta, vec![a.l]);
    spec.v_list = Some(a.v_l);
    spec.modes = vec![Mode::Logp];
    spec.seed = a.seed;
    spec.chi = a.chi;
    spec.threads = threads;
    spec.logp = LogpSettings {
        runs: a.runs,
        max_sweeps: a.max_sweeps.unwrap_or(LogpSettings::default().max_sweeps),
        production_sweeps: a.production_sweeps.unwrap_or(LogpSettings::default().production_sweeps),
        ..LogpSettings::default()
    };
    spec.validate()?;
    finish_sweep(&spec, out_dir(a.out), verbose, out)
}

fn finish_sweep(spec: &SweepSpec, dir: PathBuf, verbose: bool, out: &mut dyn Write) -> Result<i32> {
    let outcome = run_sweep(spec, &dir, verbose)?;
    for f in &outcome.files {
        writeln!(out, "wrote {}", f.display())?;
    }
    for r in &outcome.plan.rejected {
        writeln!(out, "rejected L={}: {}", r.l, r.reason)?;
    }
    Ok(if outcome.flags.any() { EXIT_FLAGGED } else { EXIT_OK })
}

fn analyze(a: AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    let text = std::fs::read_to_string(&a.grid)?;
    // β does not enter the contour geometry.
    let config = SpinConfig::from_grid_text(&text, 1.0)?;
    let contours = extract_contours(&config)?;
    let window = CensusWindow::new(config.side(), a.k)?;
    let census = ContourCensus::tally(&contours, window);
    let lambda = match a.v_l {
        Some(v) => Some(droplet_fraction(&census, &CanonicalConstraint { v_l: v, target_m: config.magnetization() })?),
        None => None,
    };
    let report = json!({
        "L": config.side(),
        "magnetization": config.magnetization(),
        "contours": contours.iter().map(|c| json!({
            "length": c.length,
            "diameter": c.diameter,
            "volume": c.volume,
            "enclosed_minus": c.enclosed_minus,
            "depth": c.depth,
        })).collect::<Vec<_>>(),
        "census": census,
        "event_a": census.event_a(),
        "event_b": census.event_b(),
        "event_c": census.event_c(),
        "lambda_hat": lambda,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(EXIT_OK)
}
