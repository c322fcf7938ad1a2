//! Parameter sweeps: planning `(L, v_L)` points from a `Δ` grid, running
//! replicas, fitting the large-deviation rate and writing results.

pub mod config;
pub mod output;
pub mod plan;
pub mod rate;
pub mod run;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use config::{Budget, LogpSettings, Mode, SweepSpec};
pub use plan::{plan_sweep, realized_delta, resolve_thermo, RejectedPoint, RunPoint, SweepPlan};
pub use rate::{fit_rate, logp_range, RateFit, RatePoint, SkippedRate};
pub use run::{aggregate, monotonicity_violations, run_point, run_replica, ReplicaResult, RunRecord, RunSettings};

use crate::contour::CensusWindow;
use crate::error::{Error, Result};
use crate::lattice::{combine_log_p, multicanonical_logp, Boundary, ChiEstimate, LogNormalization, MulticanonicalSchedule};
use crate::rng::RngStream;
use crate::thermo::IsingThermo;

pub const FORMAT_VERSION: u32 = 1;

/// Stream ids of multicanonical runs live in the top half of the id space.
fn logp_stream(l: usize, run: usize) -> u64 {
    (1u64 << 63) | ((l as u64) << 24) | run as u64
}

/// Flags that leave a sweep complete but suspect.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepFlags {
    pub metastable_points: Vec<usize>,
    pub chi_flagged: bool,
    pub logp_unconverged: Vec<usize>,
}

impl SweepFlags {
    pub fn any(&self) -> bool {
        !self.metastable_points.is_empty() || self.chi_flagged || !self.logp_unconverged.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub plan: SweepPlan,
    pub chi_estimate: Option<ChiEstimate>,
    pub records: Vec<RunRecord>,
    pub rate: Vec<RatePoint>,
    pub rate_skipped: Vec<SkippedRate>,
    pub flags: SweepFlags,
    pub files: Vec<PathBuf>,
}

/// Combined multicanonical estimate for one lattice size.
#[derive(Debug, Clone)]
pub struct LogpEstimate {
    pub l: usize,
    /// `(M, mean ln p, standard error)`, maximum at 0.
    pub rows: Vec<(i64, f64, f64)>,
    pub histogram: crate::lattice::MagnetizationHistogram,
    pub converged: bool,
}

/// Independent multicanonical runs over `m_range`, combined bin by bin.
pub fn estimate_logp(
    beta: f64,
    l: usize,
    m_range: (i64, i64),
    settings: &LogpSettings,
    seed: u64,
) -> Result<LogpEstimate> {
    let schedule = MulticanonicalSchedule {
        ln_f_final: settings.ln_f_final,
        check_every_sweeps: settings.check_every_sweeps,
        max_sweeps: settings.max_sweeps,
        production_sweeps: settings.production_sweeps,
        ..MulticanonicalSchedule::default()
    };
    let runs: Vec<_> = (0..settings.runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, logp_stream(l, r));
            multicanonical_logp(beta, l, m_range, Boundary::Plus, &schedule, &mut rng)
        })
        .collect::<Result<_>>()?;
    let rows = combine_log_p(&runs, LogNormalization::Max)?;
    let mut histogram = runs[0].clone();
    let top = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    histogram.log_p = rows.iter().map(|r| r.1 - top).collect();
    histogram.visits =
        (0..histogram.bins()).map(|i| runs.iter().map(|h| h.visits[i]).min().unwrap_or(0)).collect();
    let converged = runs.iter().all(|h| h.converged);
    let rows = rows.into_iter().map(|(m, lp, e)| (m, lp - top, e)).collect();
    Ok(LogpEstimate { l, rows, histogram, converged })
}

/// Runs a full sweep and writes `runs.csv`, `rate.csv` and `summary.json`
/// (plus per-size `logp_L*.csv` and optional raw replica files) into `out_dir`.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path, progress: bool) -> Result<SweepOutcome> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep_inner(spec, out_dir, progress))
}

fn run_sweep_inner(spec: &SweepSpec, out_dir: &Path, progress: bool) -> Result<SweepOutcome> {
    let log = |msg: String| {
        if progress {
            eprintln!("{msg}");
        }
    };
    let (thermo, chi_estimate) = resolve_thermo(spec)?;
    if let Some(est) = &chi_estimate {
        log(format!("chi = {} +- {} (tau_int {:.1} sweeps)", est.chi, est.std_error, est.tau_int));
    }
    let plan = plan_sweep(spec, &thermo)?;
    for r in &plan.rejected {
        log(format!("rejected L={} : {}", r.l, r.reason));
    }
    let mut flags = SweepFlags { chi_flagged: chi_estimate.is_some_and(|e| e.flagged), ..Default::default() };
    let mut files = Vec::new();

    let mut records = Vec::new();
    if spec.has_mode(Mode::Lambda) || spec.has_mode(Mode::Census) {
        let settings = RunSettings {
            budget: spec.budget(),
            replicas: spec.replicas,
            seed: spec.seed,
            exchange: spec.exchange,
            k_list: spec.k_list.clone(),
        };
        for point in &plan.points {
            let (recs, results) = run_point(point, &settings, &thermo)?;
            for r in &recs {
                log(format!(
                    "point {} L={} K={} delta={:.4} v_L={:.2}: lambda = {:.4} +- {:.4}, P[intermediate] = {:.3}{}",
                    r.point,
                    r.l,
                    r.k,
                    r.delta,
                    r.v_l,
                    r.mean_lambda,
                    r.lambda_err,
                    r.p_intermediate,
                    if r.metastable { " (metastable)" } else { "" }
                ));
            }
            if recs.iter().any(|r| r.metastable) {
                flags.metastable_points.push(point.index);
            }
            if spec.raw {
                let window = CensusWindow::new(point.l, spec.k_list[0])?;
                for res in &results {
                    let path = out_dir.join("raw").join(format!("point{}_replica{}.csv", point.index, res.replica));
                    output::write_text(&path, &output::raw_csv(res, window))?;
                    files.push(path);
                }
            }
            records.extend(recs);
        }
    }

    let mut rate = Vec::new();
    let mut rate_skipped = Vec::new();
    if spec.has_mode(Mode::Logp) {
        for &l in &spec.l_list {
            let vs: Vec<f64> = plan.points.iter().filter(|p| p.l == l).map(|p| p.v_target).collect();
            let Some(v_max) = vs.iter().copied().reduce(f64::max) else { continue };
            let range = logp_range(&thermo, l, v_max, spec.logp.margin_sigmas)?;
            log(format!("multicanonical L={l} over M in [{}, {}]", range.0, range.1));
            let est = estimate_logp(spec.beta, l, range, &spec.logp, spec.seed)?;
            if !est.converged {
                flags.logp_unconverged.push(l);
            }
            let errs: Vec<f64> = est.rows.iter().map(|r| r.2).collect();
            let fit = fit_rate(&est.histogram, &thermo, &vs, Some(&errs))?;
            let path = out_dir.join(format!("logp_L{l}.csv"));
            output::write_text(&path, &output::logp_csv(thermo.m_star, l * l, &est.rows))?;
            files.push(path);
            rate.extend(fit.points);
            rate_skipped.extend(fit.skipped);
        }
    }

    let runs_path = out_dir.join("runs.csv");
    output::write_text(&runs_path, &output::runs_csv(&records))?;
    let rate_path = out_dir.join("rate.csv");
    output::write_text(&rate_path, &output::rate_csv(&rate))?;
    let summary_path = out_dir.join("summary.json");
    let summary = summary_json(spec, &plan, chi_estimate.as_ref(), &records, &rate_skipped, &flags);
    output::write_text(&summary_path, &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    files.extend([runs_path, rate_path, summary_path]);
    Ok(SweepOutcome { plan, chi_estimate, records, rate, rate_skipped, flags, files })
}

fn summary_json(
    spec: &SweepSpec,
    plan: &SweepPlan,
    chi: Option<&ChiEstimate>,
    records: &[RunRecord],
    rate_skipped: &[SkippedRate],
    flags: &SweepFlags,
) -> serde_json::Value {
    let thermo: &IsingThermo = &plan.thermo;
    let (violations, pairs) = monotonicity_violations(records);
    json!({
        "format_version": FORMAT_VERSION,
        "package_version": env!("CARGO_PKG_VERSION"),
        "config": spec,
        "thermo": {
            "beta": thermo.beta,
            "beta_c": thermo.beta_c,
            "m_star": thermo.m_star,
            "tau_axis": thermo.tau_axis,
            "tau_w": thermo.tau_w,
            "reduced_tau_w": thermo.reduced_tau_w(),
            "chi": thermo.chi,
        },
        "chi_estimate": chi,
        "points": plan.points,
        "rejected": plan.rejected,
        "rate_skipped": rate_skipped,
        "monotonicity": { "violations": violations, "pairs": pairs },
        "flags": flags,
    })
}
