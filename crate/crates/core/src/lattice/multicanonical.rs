//! Flat-histogram estimate of the magnetization distribution `p_L(M)`.
//!
//! Single-spin Metropolis moves are reweighted by `exp(-S(M))`. `S` is learned
//! with a Wang–Landau schedule (`ln f` halved whenever the visit histogram is
//! flat), then frozen for a production run; the estimate is
//! `ln p(M) = S(M) + ln H(M) + const`.

use serde::{Deserialize, Serialize};

use super::spin::{Boundary, SpinConfig};
use crate::error::{domain, Result};
use crate::rng::RngStream;
use crate::thermo::beta_critical;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MulticanonicalSchedule {
    pub ln_f_initial: f64,
    pub ln_f_final: f64,
    /// A stage ends once `min(H) >= flatness * mean(H)`.
    pub flatness: f64,
    pub check_every_sweeps: usize,
    /// Sweep budget for the learning stages.
    pub max_sweeps: usize,
    pub production_sweeps: usize,
}

impl Default for MulticanonicalSchedule {
    fn default() -> Self {
        Self {
            ln_f_initial: 1.0,
            ln_f_final: 1e-8,
            flatness: 0.8,
            check_every_sweeps: 100,
            max_sweeps: 10_000_000,
            production_sweeps: 100_000,
        }
    }
}

/// Learned weights and the resulting `ln p_L(M)` over `[m_min, m_max]` in
/// steps of 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationHistogram {
    pub l: usize,
    pub beta: f64,
    pub boundary: Boundary,
    pub m_min: i64,
    pub m_max: i64,
    pub log_weight: Vec<f64>,
    /// Production-run visits.
    pub visits: Vec<u64>,
    /// `ln p(M)` shifted so that the largest bin is 0.
    pub log_p: Vec<f64>,
    /// `min(H)/mean(H)` of the production histogram.
    pub flatness: f64,
    pub final_ln_f: f64,
    pub learning_sweeps: usize,
    /// False if the learning budget ran out or a bin was never visited in
    /// production.
    pub converged: bool,
}

impl MagnetizationHistogram {
    pub fn bins(&self) -> usize {
        self.log_p.len()
    }

    pub fn m_values(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.bins()).map(move |i| self.m_min + 2 * i as i64)
    }

    pub fn bin(&self, m: i64) -> Option<usize> {
        if m < self.m_min || m > self.m_max || (m - self.m_min) % 2 != 0 {
            None
        } else {
            Some(((m - self.m_min) / 2) as usize)
        }
    }

    pub fn log_p_at(&self, m: i64) -> Option<f64> {
        self.bin(m).map(|i| self.log_p[i])
    }

    /// `ln p(M)` normalized so that `Σ p = 1` over the covered range.
    pub fn normalized_log_probabilities(&self) -> Vec<f64> {
        let lse = log_sum_exp(&self.log_p);
        self.log_p.iter().map(|x| x - lse).collect()
    }

    /// Magnetization of the most probable bin.
    pub fn mode(&self) -> i64 {
        let i = self
            .log_p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.m_min + 2 * i as i64
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn shift_to_max_zero(xs: &mut [f64]) {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for x in xs.iter_mut() {
        *x -= max;
    }
}

/// Magnetization range `[lo, hi]` snapped inward to the parity of `sites`.
pub fn snap_range(sites: usize, lo: i64, hi: i64) -> Result<(i64, i64)> {
    let n = sites as i64;
    let lo = lo.max(-n);
    let hi = hi.min(n);
    let lo = if (n - lo) % 2 != 0 { lo + 1 } else { lo };
    let hi = if (n - hi) % 2 != 0 { hi - 1 } else { hi };
    if lo >= hi {
        return domain(format!("magnetization range [{lo}, {hi}] holds fewer than two bins"));
    }
    Ok((lo, hi))
}

struct Walker<'a> {
    config: SpinConfig,
    weights: &'a mut Vec<f64>,
    m_min: i64,
    m_max: i64,
}

impl Walker<'_> {
    #[inline]
    fn bin(&self, m: i64) -> usize {
        ((m - self.m_min) / 2) as usize
    }

    /// One proposal; returns the bin occupied afterwards.
    #[inline]
    fn step(&mut self, rng: &mut RngStream) -> usize {
        let l = self.config.side();
        let i = rng.below(self.config.sites());
        let p = self.config.padded(i / l, i % l);
        let u = rng.uniform();
        let m = self.config.magnetization();
        let cur = self.bin(m);
        let m_new = m - 2 * self.config.spin_at(p) as i64;
        if m_new < self.m_min || m_new > self.m_max {
            return cur;
        }
        let new = self.bin(m_new);
        let de = self.config.flip_cost(p);
        let log_a = -self.config.beta() * de as f64 + self.weights[cur] - self.weights[new];
        if log_a >= 0.0 || u < log_a.exp() {
            self.config.flip(p);
            new
        } else {
            cur
        }
    }
}

/// Learns `ln p_L(M)` over `m_range` (inclusive, snapped to parity).
pub fn multicanonical_logp(
    beta: f64,
    l: usize,
    m_range: (i64, i64),
    boundary: Boundary,
    schedule: &MulticanonicalSchedule,
    rng: &mut RngStream,
) -> Result<MagnetizationHistogram> {
    if boundary == Boundary::Plus && !(beta > beta_critical()) {
        return domain(format!("beta = {beta} must exceed beta_c"));
    }
    if !(schedule.flatness > 0.0 && schedule.flatness < 1.0) {
        return domain("flatness must lie in (0, 1)");
    }
    if !(schedule.ln_f_initial > 0.0 && schedule.ln_f_final > 0.0) || schedule.check_every_sweeps == 0 {
        return domain("invalid multicanonical schedule");
    }
    let sites = l * l;
    let (m_min, m_max) = snap_range(sites, m_range.0, m_range.1)?;
    let bins = ((m_max - m_min) / 2 + 1) as usize;

    // Start from all plus and flip random plus spins until inside the range.
    let mut config = SpinConfig::uniform(l, beta, boundary, 1)?;
    let target = (m_min + m_max) / 2;
    while config.magnetization() > m_max || config.magnetization() > target + 1 {
        let i = rng.below(sites);
        let p = config.padded(i / l, i % l);
        if config.spin_at(p) > 0 {
            config.flip(p);
        }
    }

    let mut weights = vec![0.0; bins];
    let mut hist = vec![0u64; bins];
    let mut walker = Walker { config, weights: &mut weights, m_min, m_max };
    let mut ln_f = schedule.ln_f_initial;
    let mut learning_sweeps = 0;
    let mut budget_exhausted = false;
    while ln_f >= schedule.ln_f_final {
        if learning_sweeps >= schedule.max_sweeps {
            budget_exhausted = true;
            break;
        }
        for _ in 0..schedule.check_every_sweeps {
            for _ in 0..sites {
                let b = walker.step(rng);
                walker.weights[b] += ln_f;
                hist[b] += 1;
            }
        }
        learning_sweeps += schedule.check_every_sweeps;
        let mean = hist.iter().sum::<u64>() as f64 / bins as f64;
        let min = *hist.iter().min().unwrap() as f64;
        if min >= schedule.flatness * mean {
            ln_f *= 0.5;
            hist.iter_mut().for_each(|h| *h = 0);
        }
    }
    // Keep the weights bounded.
    let w0 = walker.weights[0];
    walker.weights.iter_mut().for_each(|w| *w -= w0);

    let mut visits = vec![0u64; bins];
    for _ in 0..schedule.production_sweeps {
        for _ in 0..sites {
            visits[walker.step(rng)] += 1;
        }
    }
    let all_visited = visits.iter().all(|&v| v > 0);
    let mut log_p: Vec<f64> = walker
        .weights
        .iter()
        .zip(&visits)
        .map(|(&w, &h)| if h > 0 { w + (h as f64).ln() } else { w })
        .collect();
    shift_to_max_zero(&mut log_p);
    let mean = visits.iter().sum::<u64>() as f64 / bins as f64;
    let flatness = if mean > 0.0 { *visits.iter().min().unwrap() as f64 / mean } else { 0.0 };

    Ok(MagnetizationHistogram {
        l,
        beta,
        boundary,
        m_min,
        m_max,
        log_weight: weights,
        visits,
        log_p,
        flatness,
        final_ln_f: ln_f,
        learning_sweeps,
        converged: !budget_exhausted && all_visited,
    })
}

/// Which reference a combined estimate is shifted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogNormalization {
    /// Largest bin at 0.
    Max,
    /// `Σ p = 1` over the range.
    Sum,
}

/// Per-bin mean and standard error of `ln p` across independent runs over the
/// same range.
pub fn combine_log_p(runs: &[MagnetizationHistogram], norm: LogNormalization) -> Result<Vec<(i64, f64, f64)>> {
    let first = runs.first().ok_or_else(|| crate::error::Error::Domain("no runs to combine".into()))?;
    if runs.iter().any(|r| r.m_min != first.m_min || r.m_max != first.m_max) {
        return domain("runs cover different magnetization ranges");
    }
    let curves: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| match norm {
            LogNormalization::Max => r.log_p.clone(),
            LogNormalization::Sum => r.normalized_log_probabilities(),
        })
        .collect();
    let n = runs.len() as f64;
    Ok(first
        .m_values()
        .enumerate()
        .map(|(i, m)| {
            let mean = curves.iter().map(|c| c[i]).sum::<f64>() / n;
            let err = if runs.len() > 1 {
                (curves.iter().map(|c| (c[i] - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                f64::NAN
            };
            (m, mean, err)
        })
        .collect())
}
