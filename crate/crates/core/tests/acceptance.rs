//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! The rate criterion is extended: it only runs with `--ignored` (or
//! `--include-ignored`) and is otherwise reported as SKIP.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use droplet_core::contour::CensusWindow;
use droplet_core::harness::{estimate_logp, fit_rate, logp_range, resolve_thermo, run_sweep, LogpSettings, Mode, SweepSpec};
use droplet_core::lattice::ExchangeMode;
use droplet_core::rng::RngStream;
use droplet_core::theory::{critical_delta, critical_lambda, minimize_phi, phi};
use droplet_core::thermo::{tau_w_unit_volume, wulff_construct, TauFunction};

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    extended: bool,
    check: fn() -> Outcome,
}

fn theory_exactness() -> Outcome {
    let dc = critical_delta(2).map_err(|e| e.to_string())?;
    let exact = 0.5 * 1.5f64.powf(1.5);
    let lc = critical_lambda(2).map_err(|e| e.to_string())?;
    let tie = (phi(2, dc, 0.0).unwrap() - phi(2, dc, 2.0 / 3.0).unwrap()).abs();
    let detail = format!("delta_c = {dc:.16}, |delta_c - exact| = {:.1e}, lambda_c = {lc}, tie gap = {tie:.1e}", (dc - exact).abs());
    if (dc - 0.9185586535436919).abs() <= 1e-12 && (dc - exact).abs() <= 1e-12 && lc == 2.0 / 3.0 && tie <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn minimizer_oracle() -> Outcome {
    const GRID: usize = 1_000_000;
    let h = 1.0 / GRID as f64;
    let mut rng = RngStream::new(2, 0);
    let mut worst_lambda: f64 = 0.0;
    let mut worst_value: f64 = 0.0;
    let mut ties = 0;
    for i in 0..200 {
        let d = 2 + (i % 3) as u32;
        let delta = 3.0 * rng.uniform();
        let m = minimize_phi(d, delta).map_err(|e| e.to_string())?;
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for k in 0..=GRID {
            let lambda = k as f64 * h;
            let v = phi(d, delta, lambda).unwrap();
            if v < best {
                best = v;
                arg = lambda;
            }
        }
        // The exact minimum lies below every grid value, and by no more than
        // the change of Φ across one grid cell.
        let slack = phi(d, delta, (m.lambda_star + h).min(1.0)).unwrap() - m.phi_value;
        let slack = slack.max(phi(d, delta, (m.lambda_star - h).max(0.0)).unwrap() - m.phi_value);
        if m.phi_value > best + 1e-12 || best - m.phi_value > slack.abs() + 1e-12 {
            return Err(format!("d={d} delta={delta}: minimum {} vs grid {best}", m.phi_value));
        }
        worst_value = worst_value.max(best - m.phi_value);
        // With two near-equal minima the grid may pick either one.
        let near_tie = (phi(d, delta, 0.0).unwrap() - m.phi_value).abs() < 1e-6 && m.lambda_star > 0.0;
        if near_tie {
            ties += 1;
            continue;
        }
        if (arg - m.lambda_star).abs() > 2.0 * h {
            return Err(format!("d={d} delta={delta}: argmin {} vs grid {arg}", m.lambda_star));
        }
        worst_lambda = worst_lambda.max((arg - m.lambda_star).abs());
    }
    Ok(format!("200 cases, max |dlambda| = {worst_lambda:.1e}, max dPhi = {worst_value:.1e}, near-ties {ties}"))
}

fn sampler_correctness() -> Outcome {
    common::glauber_l2(0.4, 2024)?;
    common::canonical_l3(ExchangeMode::Nonlocal, 7)?;
    common::canonical_l3(ExchangeMode::Local, 8)?;
    common::random_round_trips(10_000, 8)?;
    Ok("L=2 glauber, L=3 local and nonlocal exchange within 3 sigma per state; 10^4 round trips".into())
}

fn wulff_identity() -> Outcome {
    let mut parts = Vec::new();
    for (label, tau) in [("ising beta=0.7", TauFunction::ising(0.7).unwrap()), ("isotropic", TauFunction::Isotropic(1.3))] {
        let shape = wulff_construct(&tau, 4096).map_err(|e| e.to_string())?;
        let rel = (shape.boundary_energy - 2.0 * shape.area).abs() / shape.boundary_energy;
        parts.push(format!("{label}: |W - 2|K||/W = {rel:.1e}"));
        if rel >= 1e-3 {
            return Err(parts.join(", "));
        }
        if let TauFunction::Isotropic(t0) = tau {
            let gap = (tau_w_unit_volume(&shape) - 2.0 * std::f64::consts::PI.sqrt() * t0).abs();
            parts.push(format!("|tau_W - 2 sqrt(pi) tau_0| = {gap:.1e}"));
            if gap >= 1e-4 {
                return Err(parts.join(", "));
            }
        }
    }
    Ok(parts.join(", "))
}

fn phase_structure() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut spec = SweepSpec::new(0.7, vec![128]);
    spec.delta_grid = Some(vec![0.4, 0.6, 0.8, 1.1, 1.3, 1.6]);
    spec.replicas = 32;
    spec.burnin_sweeps = 2000;
    spec.samples = 100;
    spec.cadence_sweeps = 10;
    spec.seed = 1;
    let outcome = run_sweep(&spec, dir.path(), false).map_err(|e| e.to_string())?;
    // Thresholds apply to the grid values; the realized Δ differs slightly
    // because the magnetization is rounded to the lattice parity.
    let grid = |r: &droplet_core::harness::RunRecord| r.delta_target.unwrap_or(r.delta);
    let rows: Vec<(f64, f64, f64)> = outcome.records.iter().map(|r| (r.delta, r.mean_lambda, r.lambda_err)).collect();
    let table = rows.iter().map(|(d, l, e)| format!("{d:.3}:{l:.3}+-{e:.3}")).collect::<Vec<_>>().join(" ");
    let low = outcome.records.iter().filter(|r| grid(r) <= 0.6).all(|r| r.mean_lambda < 0.15);
    let high = outcome.records.iter().filter(|r| grid(r) >= 1.3).all(|r| r.mean_lambda > 0.55);
    // Linear interpolation of the first upward crossing of 0.4.
    let crossing = rows.windows(2).find(|w| w[0].1 < 0.4 && w[1].1 >= 0.4).map(|w| {
        let (a, b) = (w[0], w[1]);
        a.0 + (0.4 - a.1) * (b.0 - a.0) / (b.1 - a.1)
    });
    let crossing_ok = crossing.is_some_and(|c| (0.7..=1.2).contains(&c));
    let flags = if outcome.flags.metastable_points.is_empty() {
        String::new()
    } else {
        format!(" metastable points {:?}", outcome.flags.metastable_points)
    };
    let split = outcome
        .records
        .iter()
        .filter(|r| grid(r) >= 1.3)
        .map(|r| format!("{:.3}: random {:.3} block {:.3}", r.delta, r.lambda_random_init, r.lambda_block_init))
        .collect::<Vec<_>>()
        .join(", ");
    let detail = format!("lambda by realized delta {table}; crossing of 0.4 at {crossing:?}; by init {split}{flags}");
    if low && high && crossing_ok {
        Ok(detail)
    } else {
        Err(format!("{detail} (low ok {low}, high ok {high}, crossing ok {crossing_ok})"))
    }
}

fn census() -> Outcome {
    let windows: Vec<String> = [64, 128, 192]
        .iter()
        .map(|&l| {
            let w = CensusWindow::new(l, 4.0).unwrap();
            format!("L={l}: K ln L = {:.2} > L^(2/3)/K = {:.2}", w.lo, w.hi)
        })
        .collect();
    // Diagnostic at K=2, where the window is non-empty for L=128 and 192.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut spec = SweepSpec::new(0.7, vec![128, 192]);
    spec.delta_grid = Some(vec![0.6, 1.3]);
    spec.k_list = vec![2.0];
    spec.modes = vec![Mode::Census];
    spec.burnin_sweeps = 1500;
    spec.samples = 50;
    spec.seed = 1;
    let diag = match run_sweep(&spec, dir.path(), false) {
        Ok(o) => o
            .records
            .iter()
            .map(|r| format!("L={} delta={:.2}: P[intermediate] = {:.3}+-{:.3}", r.l, r.delta, r.p_intermediate, r.p_intermediate_err))
            .collect::<Vec<_>>()
            .join("; "),
        Err(e) => format!("diagnostic failed: {e}"),
    };
    Err(format!(
        "intermediate window is empty at K=4 for every tested size ({}), so the frequency cannot be measured; K=2 diagnostic: {diag}",
        windows.join(", ")
    ))
}

fn rate() -> Outcome {
    let (beta, l) = (0.7, 64);
    let vs = [50.0, 100.0, 200.0, 300.0, 400.0];
    let spec = SweepSpec::new(beta, vec![l]);
    let (thermo, _) = resolve_thermo(&spec).map_err(|e| e.to_string())?;
    let range = logp_range(&thermo, l, 400.0, 4.0).map_err(|e| e.to_string())?;
    let settings = LogpSettings { runs: 4, ..LogpSettings::default() };
    let est = estimate_logp(beta, l, range, &settings, 1).map_err(|e| e.to_string())?;
    let errs: Vec<f64> = est.rows.iter().map(|r| r.2).collect();

    let fit = fit_rate(&est.histogram, &thermo, &vs, Some(&errs)).map_err(|e| e.to_string())?;
    let within = fit.points.iter().filter(|p| p.deviation.abs() <= 0.25).count();
    let table =
        fit.points.iter().map(|p| format!("v={:.0}: {:.3} vs {:.3}", p.v_l, p.rate, p.theory)).collect::<Vec<_>>().join(", ");

    // Local exponent of -ln p in v. Theory: 2 in the λ = 0 regime, about
    // 2/3 and falling toward 1/2 on the droplet branch.
    let below = fit_rate(&est.histogram, &thermo, &[10.0, 20.0], None).map_err(|e| e.to_string())?;
    let exponent = |pts: &[droplet_core::harness::RatePoint], theory: bool| {
        let xs: Vec<f64> = pts.iter().map(|p| p.v_l.ln()).collect();
        let ys: Vec<f64> =
            pts.iter().map(|p| (if theory { p.theory } else { p.rate } * p.v_l.sqrt()).ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    };
    if below.points.len() < 2 || fit.points.len() < 2 {
        return Err(format!("too few usable bins; {table}"));
    }
    let low = exponent(&below.points, false);
    let high = exponent(&fit.points, false);
    let high_theory = exponent(&fit.points, true);
    let slope_ok = low > 1.4 && (high - high_theory).abs() <= 0.3 && low - high > 0.5;
    let detail = format!(
        "{within}/5 within 25% ({table}); exponent {low:.2} for v in [10,20], {high:.2} on [50,400] (theory {high_theory:.2}){}",
        if est.converged { "" } else { "; not converged" }
    );
    if within >= 3 && slope_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let mut spec = SweepSpec::new(0.7, vec![32]);
    spec.delta_grid = Some(vec![0.5, 1.5]);
    spec.replicas = 4;
    spec.burnin_sweeps = 200;
    spec.samples = 10;
    spec.seed = 99;
    spec.threads = 2;
    let mut bytes = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_sweep(&spec, dir.path(), false).map_err(|e| e.to_string())?;
        bytes.push(std::fs::read(dir.path().join("runs.csv")).map_err(|e| e.to_string())?);
    }
    if bytes[0] == bytes[1] {
        Ok(format!("runs.csv identical ({} bytes)", bytes[0].len()))
    } else {
        Err("runs.csv differs between identical invocations".into())
    }
}

const CRITERIA: &[Criterion] = &[
    Criterion { name: "theory_exactness", extended: false, check: theory_exactness },
    Criterion { name: "minimizer_oracle", extended: false, check: minimizer_oracle },
    Criterion { name: "sampler_correctness", extended: false, check: sampler_correctness },
    Criterion { name: "wulff_identity", extended: false, check: wulff_identity },
    Criterion { name: "phase_structure", extended: false, check: phase_structure },
    Criterion { name: "intermediate_census", extended: false, check: census },
    Criterion { name: "rate_function", extended: true, check: rate },
    Criterion { name: "determinism", extended: false, check: determinism },
];

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for c in CRITERIA {
            println!("{}: test", c.name);
        }
        return ExitCode::SUCCESS;
    }
    let extended = args.iter().any(|a| a == "--ignored" || a == "--include-ignored");
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        if c.extended && !extended {
            println!("SKIP {} (extended; run with --ignored)", c.name);
            continue;
        }
        let start = Instant::now();
        let outcome = (c.check)();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} [{secs:.1}s] {detail}", c.name),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} [{secs:.1}s] {detail}", c.name);
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
