use serde::{Deserialize, Serialize};

use super::dynamics::glauber_sweep;
use super::spin::SpinConfig;
use crate::error::{domain, Result};
use crate::rng::RngStream;
use crate::thermo::beta_critical;

/// Sweeps below this are rejected outright.
pub const MIN_MEASUREMENT_SWEEPS: usize = 1000;

/// Susceptibility estimate `Var(M_L)/|Λ_L|` from the plus-boundary chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiEstimate {
    pub chi: f64,
    pub std_error: f64,
    /// Integrated autocorrelation time of `M_L`, in sweeps.
    pub tau_int: f64,
    pub sweeps: usize,
    /// Set when `tau_int > sweeps / 100`.
    pub flagged: bool,
}

/// Standard error of the mean of a correlated series by repeated pairwise
/// blocking; returns the largest estimate over levels that keep at least 32
/// blocks, together with the naive (level 0) error.
pub fn blocking_error(series: &[f64]) -> (f64, f64) {
    let mut data: Vec<f64> = series.to_vec();
    let mut naive = f64::NAN;
    let mut best: f64 = 0.0;
    while data.len() >= 32 {
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let err = (var / n).sqrt();
        if naive.is_nan() {
            naive = err;
        }
        best = best.max(err);
        data = data.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    }
    (best, naive)
}

/// Grandcanonical estimate of `χ` at `(beta, l)`.
pub fn measure_chi(
    beta: f64,
    l: usize,
    burnin_sweeps: usize,
    sweeps: usize,
    rng: &mut RngStream,
) -> Result<ChiEstimate> {
    if !(beta > beta_critical()) {
        return domain(format!("beta = {beta} must exceed beta_c"));
    }
    if sweeps < MIN_MEASUREMENT_SWEEPS {
        return domain(format!("need at least {MIN_MEASUREMENT_SWEEPS} measurement sweeps, got {sweeps}"));
    }
    let mut config = SpinConfig::all_plus(l, beta)?;
    for _ in 0..burnin_sweeps {
        glauber_sweep(&mut config, rng);
    }
    let mut series = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        glauber_sweep(&mut config, rng);
        series.push(config.magnetization() as f64);
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let sq: Vec<f64> = series.iter().map(|m| (m - mean).powi(2)).collect();
    let var = sq.iter().sum::<f64>() / (n - 1.0);
    let sites = (l * l) as f64;
    let (err_sq, _) = blocking_error(&sq);
    let (err_m, naive_m) = blocking_error(&series);
    let tau_int = if naive_m > 0.0 { 0.5 * (err_m / naive_m).powi(2) } else { 0.5 };
    Ok(ChiEstimate {
        chi: var / sites,
        std_error: err_sq / sites,
        tau_int,
        sweeps,
        flagged: tau_int > sweeps as f64 / 100.0,
    })
}
