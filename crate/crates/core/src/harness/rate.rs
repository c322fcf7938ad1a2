use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::lattice::{CanonicalConstraint, MagnetizationHistogram};
use crate::theory::minimize_phi;
use crate::thermo::IsingThermo;

/// Empirical and predicted `v^{-1/2} log p_L` at one excess volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub l: usize,
    pub v_target: f64,
    /// Realized `v_L` of the bin used.
    pub v_l: f64,
    pub target_m: i64,
    pub delta: f64,
    /// `ln p(target_M) - ln p(mode)`.
    pub log_p: f64,
    /// Standard error of `log_p` across runs, when available.
    pub log_p_err: f64,
    /// Mean of `ln p` over the five bins around the target, as a cross-check.
    pub log_p_local: f64,
    /// `-log_p / sqrt(v_L)`.
    pub rate: f64,
    /// `β τ_W inf Φ_Δ`.
    pub theory: f64,
    /// `rate / theory - 1`.
    pub deviation: f64,
    /// Minimizer `λ_Δ` at this `Δ`.
    pub lambda_theory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRate {
    pub v_target: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub points: Vec<RatePoint>,
    pub skipped: Vec<SkippedRate>,
}

/// Compares `-ln p_L / sqrt(v_L)` with `β τ_W inf Φ_Δ` for each `v`.
///
/// `log_p_err` supplies per-bin errors (same layout as the histogram) when the
/// histogram is a combination of independent runs.
pub fn fit_rate(
    hist: &MagnetizationHistogram,
    thermo: &IsingThermo,
    v_values: &[f64],
    log_p_err: Option<&[f64]>,
) -> Result<RateFit> {
    let chi = thermo.require_chi()?;
    if let Some(err) = log_p_err {
        if err.len() != hist.bins() {
            return domain("error vector does not match the histogram bins");
        }
    }
    let sites = hist.l * hist.l;
    let mode = hist.mode();
    let reference = hist.log_p_at(mode).expect("mode lies in range");
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &v in v_values {
        let skip = |reason: String| SkippedRate { v_target: v, reason };
        if !(v > 0.0) {
            skipped.push(skip("excess volume must be positive".into()));
            continue;
        }
        let constraint = match CanonicalConstraint::from_excess(sites, thermo.m_star, v) {
            Ok(c) => c,
            Err(e) => {
                skipped.push(skip(e.to_string()));
                continue;
            }
        };
        let Some(bin) = hist.bin(constraint.target_m) else {
            skipped.push(skip(format!("M = {} lies outside the histogram", constraint.target_m)));
            continue;
        };
        if hist.visits[bin] == 0 {
            skipped.push(skip(format!("M = {} was never visited", constraint.target_m)));
            continue;
        }
        if !(constraint.v_l > 0.0) {
            skipped.push(skip("excess volume rounds to zero".into()));
            continue;
        }
        let delta = crate::theory::delta_ising(thermo.m_star, chi, thermo.reduced_tau_w(), constraint.v_l, sites as f64)?;
        let min = minimize_phi(2, delta)?;
        let log_p = hist.log_p[bin] - reference;
        let lo = bin.saturating_sub(2);
        let hi = (bin + 2).min(hist.bins() - 1);
        let log_p_local = hist.log_p[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64 - reference;
        let rate = -log_p / constraint.v_l.sqrt();
        let theory = thermo.reduced_tau_w() * min.phi_value;
        points.push(RatePoint {
            l: hist.l,
            v_target: v,
            v_l: constraint.v_l,
            target_m: constraint.target_m,
            delta,
            log_p,
            log_p_err: log_p_err.map_or(f64::NAN, |e| e[bin]),
            log_p_local,
            rate,
            theory,
            deviation: rate / theory - 1.0,
            lambda_theory: min.lambda_star,
        });
    }
    Ok(RateFit { points, skipped })
}

/// Magnetization window of a rate measurement: from the largest `v` up to a
/// margin above the typical magnetization.
pub fn logp_range(thermo: &IsingThermo, l: usize, v_max: f64, margin_sigmas: f64) -> Result<(i64, i64)> {
    let sites = l * l;
    let chi = thermo.require_chi()?;
    let low = CanonicalConstraint::from_excess(sites, thermo.m_star, v_max)?.target_m - 4;
    let typical = thermo.m_star * sites as f64;
    let high = (typical + margin_sigmas * (chi * sites as f64).sqrt()).ceil() as i64;
    crate::lattice::snap_range(sites, low.max(-(sites as i64)), high.min(sites as i64))
}
