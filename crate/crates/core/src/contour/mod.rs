//! Peierls contours: extraction, size classification and the droplet
//! fraction `λ̂`.
//!
//! Contours are sorted by diameter into small (`< K ln L`), intermediate
//! (`K ln L ..= L^{2/3}/K`) and large (`> L^{2/3}/K`).

mod extract;
mod union_find;

use serde::{Deserialize, Serialize};

pub use extract::{extract_contours, render_from_contours, Contour};

use crate::error::{domain, Error, Result};
use crate::lattice::CanonicalConstraint;

/// Diameter thresholds for one `(L, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensusWindow {
    pub l: usize,
    pub k: f64,
    /// `K ln L`
    pub lo: f64,
    /// `L^{2/3} / K`
    pub hi: f64,
}

impl CensusWindow {
    pub fn new(l: usize, k: f64) -> Result<Self> {
        if l < 2 {
            return domain(format!("lattice side must be >= 2, got {l}"));
        }
        if !(k > 0.0 && k.is_finite()) {
            return domain(format!("K must be positive, got {k}"));
        }
        let lf = l as f64;
        Ok(Self { l, k, lo: k * lf.ln(), hi: lf.powf(2.0 / 3.0) / k })
    }

    pub fn is_valid(&self) -> bool {
        self.lo < self.hi
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidWindow { l: self.l, k: self.k, lo: self.lo, hi: self.hi })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SizeClass {
    Small,
    Intermediate,
    Large,
}

impl CensusWindow {
    /// Large takes precedence, so when the window is empty every contour is
    /// either small or large.
    pub fn classify_diameter(&self, diameter: usize) -> SizeClass {
        let d = diameter as f64;
        if d > self.hi {
            SizeClass::Large
        } else if d < self.lo {
            SizeClass::Small
        } else {
            SizeClass::Intermediate
        }
    }
}

/// Per-configuration contour statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourCensus {
    pub window: CensusWindow,
    pub n_small: usize,
    pub n_intermediate: usize,
    pub n_large: usize,
    /// Diameter and volume of the maximal-diameter contour.
    pub largest_diameter: Option<usize>,
    pub largest_volume: Option<usize>,
    /// Volume of the most voluminous large contour (0 if none).
    pub largest_large_volume: usize,
    /// Minus spins inside that same contour.
    pub largest_large_enclosed_minus: usize,
    pub total_large_volume: usize,
    /// Contours with `diam ≥ K ln L`.
    pub n_at_least_lo: usize,
    /// Contours with `diam ≥ L^{2/3}/K`.
    pub n_at_least_hi: usize,
    /// Contours with `diam > K ln L`, the designated droplet excluded.
    pub n_others_above_lo: usize,
}

impl ContourCensus {
    pub fn total(&self) -> usize {
        self.n_small + self.n_intermediate + self.n_large
    }

    /// No contour with `K ln L ≤ diam ≤ L^{2/3}/K`.
    pub fn event_a(&self) -> bool {
        self.n_intermediate == 0
    }

    /// No contour with `diam ≥ K ln L`.
    pub fn event_b(&self) -> bool {
        self.n_at_least_lo == 0
    }

    /// Exactly one contour with `diam ≥ L^{2/3}/K`; all others `≤ K ln L`.
    pub fn event_c(&self) -> bool {
        self.n_at_least_hi == 1 && self.n_others_above_lo == 0
    }

    /// Tallies contours against `window` without validating it.
    pub fn tally(contours: &[Contour], window: CensusWindow) -> Self {
        let mut census = ContourCensus {
            window,
            n_small: 0,
            n_intermediate: 0,
            n_large: 0,
            largest_diameter: None,
            largest_volume: None,
            largest_large_volume: 0,
            largest_large_enclosed_minus: 0,
            total_large_volume: 0,
            n_at_least_lo: 0,
            n_at_least_hi: 0,
            n_others_above_lo: 0,
        };
        let mut droplet: Option<&Contour> = None;
        for c in contours {
            match window.classify_diameter(c.diameter) {
                SizeClass::Small => census.n_small += 1,
                SizeClass::Intermediate => census.n_intermediate += 1,
                SizeClass::Large => {
                    census.n_large += 1;
                    census.total_large_volume += c.volume;
                    if c.volume > census.largest_large_volume {
                        census.largest_large_volume = c.volume;
                        census.largest_large_enclosed_minus = c.enclosed_minus;
                    }
                }
            }
            let d = c.diameter as f64;
            if d >= window.lo {
                census.n_at_least_lo += 1;
            }
            if d >= window.hi {
                census.n_at_least_hi += 1;
                if droplet.is_none_or(|g| c.diameter > g.diameter) {
                    droplet = Some(c);
                }
            }
            if census.largest_diameter.is_none_or(|best| c.diameter > best) {
                census.largest_diameter = Some(c.diameter);
                census.largest_volume = Some(c.volume);
            }
        }
        census.n_others_above_lo = contours
            .iter()
            .filter(|c| !droplet.is_some_and(|g| std::ptr::eq(*c, g)))
            .filter(|c| c.diameter as f64 > window.lo)
            .count();
        census
    }
}

/// Classifies contours for a valid `(L, K)` window.
pub fn classify(contours: &[Contour], l: usize, k: f64) -> Result<ContourCensus> {
    let window = CensusWindow::new(l, k)?;
    window.validate()?;
    Ok(ContourCensus::tally(contours, window))
}

/// `λ̂ = volume(largest large contour) / v_L`; zero without a large contour.
pub fn droplet_fraction(census: &ContourCensus, constraint: &CanonicalConstraint) -> Result<f64> {
    if !(constraint.v_l > 0.0) {
        return domain(format!("v_L must be positive, got {}", constraint.v_l));
    }
    Ok(census.largest_large_volume as f64 / constraint.v_l)
}

/// Like [`droplet_fraction`] but counting only the droplet's minus spins.
pub fn droplet_fraction_net(census: &ContourCensus, constraint: &CanonicalConstraint) -> Result<f64> {
    if !(constraint.v_l > 0.0) {
        return domain(format!("v_L must be positive, got {}", constraint.v_l));
    }
    Ok(census.largest_large_enclosed_minus as f64 / constraint.v_l)
}

/// Event frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub p: f64,
    pub err: f64,
}

impl Frequency {
    pub fn from_counts(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Self { p, err: (p * (1.0 - p) / n as f64).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusSummary {
    pub samples: usize,
    pub p_a: Frequency,
    pub p_b: Frequency,
    pub p_c: Frequency,
    /// Fraction of samples with at least one intermediate contour.
    pub p_intermediate: Frequency,
    pub mean_lambda: f64,
    pub lambda_err: f64,
    /// `λ̂` restricted to samples in which `C_{L,K}` holds.
    pub lambda_given_c: Vec<f64>,
    pub mean_lambda_given_c: Option<f64>,
}

/// Event frequencies and `λ̂` statistics over independent samples.
pub fn census_frequencies(
    records: &[ContourCensus],
    constraint: &CanonicalConstraint,
) -> Result<CensusSummary> {
    if records.is_empty() {
        return domain("census_frequencies needs at least one record");
    }
    let n = records.len();
    let count = |f: fn(&ContourCensus) -> bool| records.iter().filter(|r| f(r)).count();
    let lambdas: Vec<f64> = if constraint.v_l > 0.0 {
        records.iter().map(|r| droplet_fraction(r, constraint)).collect::<Result<_>>()?
    } else {
        vec![0.0; n]
    };
    let mean = lambdas.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        lambdas.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let lambda_given_c: Vec<f64> =
        records.iter().zip(&lambdas).filter(|(r, _)| r.event_c()).map(|(_, &l)| l).collect();
    let mean_lambda_given_c = (!lambda_given_c.is_empty())
        .then(|| lambda_given_c.iter().sum::<f64>() / lambda_given_c.len() as f64);
    Ok(CensusSummary {
        samples: n,
        p_a: Frequency::from_counts(count(ContourCensus::event_a), n),
        p_b: Frequency::from_counts(count(ContourCensus::event_b), n),
        p_c: Frequency::from_counts(count(ContourCensus::event_c), n),
        p_intermediate: Frequency::from_counts(n - count(ContourCensus::event_a), n),
        mean_lambda: mean,
        lambda_err: (var / n as f64).sqrt(),
        lambda_given_c,
        mean_lambda_given_c,
    })
}
