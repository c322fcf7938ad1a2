//! Universal droplet theory.
//!
//! A finite system at phase coexistence that carries an excess `δN` of
//! particles can either spread the excess over bulk fluctuations (Gaussian
//! cost) or put a fraction `λ` of it into a single droplet (surface cost).
//! After rescaling, the competition is governed by
//!
//! ```text
//! Φ_Δ(λ) = λ^{(d-1)/d} + Δ (1 - λ)²,   0 ≤ λ ≤ 1
//! ```
//!
//! whose global minimizer `λ_Δ` jumps from `0` to `λ_c = 2/(d+1)` at
//! `Δ_c = (1/d) ((d+1)/2)^{(d+1)/d}`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Bisection stops once the bracket is narrower than this.
pub const ROOT_TOLERANCE: f64 = 1e-12;

/// `|Δ - Δ_c|` below this is reported as a tie between the two minima.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Default isoperimetric constant for intermediate droplets.
pub const DEFAULT_ISOPERIMETRIC_C: f64 = 1.0;

fn check_dim(d: u32) -> Result<()> {
    if d < 2 {
        return domain(format!("dimension must be >= 2, got {d}"));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return domain(format!("{name} must be positive and finite, got {x}"));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return domain(format!("delta must be >= 0 and finite, got {delta}"));
    }
    Ok(())
}

#[inline]
fn phi_unchecked(d: u32, delta: f64, lambda: f64) -> f64 {
    let d = f64::from(d);
    lambda.powf((d - 1.0) / d) + delta * (1.0 - lambda) * (1.0 - lambda)
}

/// Evaluates `Φ_Δ(λ)`.
pub fn phi(d: u32, delta: f64, lambda: f64) -> Result<f64> {
    check_dim(d)?;
    check_delta(delta)?;
    if !(0.0..=1.0).contains(&lambda) {
        return domain(format!("lambda must lie in [0, 1], got {lambda}"));
    }
    Ok(phi_unchecked(d, delta, lambda))
}

/// Critical value `Δ_c(d)` separating the droplet-free and droplet regimes.
pub fn critical_delta(d: u32) -> Result<f64> {
    check_dim(d)?;
    let d = f64::from(d);
    Ok(((d + 1.0) / 2.0).powf((d + 1.0) / d) / d)
}

/// Droplet fraction at onset, `2/(d+1)`.
pub fn critical_lambda(d: u32) -> Result<f64> {
    check_dim(d)?;
    Ok(2.0 / (f64::from(d) + 1.0))
}

/// Outcome of minimizing `Φ_Δ` over `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiMinResult {
    pub lambda_star: f64,
    pub phi_value: f64,
    /// Set when `Δ` is within [`DEGENERACY_TOLERANCE`] of `Δ_c`: both `λ = 0`
    /// and `lambda_star` are global minimizers.
    pub degenerate: bool,
    /// Interior local maximum separating `λ = 0` from the droplet branch.
    pub barrier_lambda: Option<f64>,
    pub barrier_value: Option<f64>,
}

// Stationary points of Φ_Δ solve h(λ) = λ^{1/d} (1 - λ) = (d-1) / (2 d Δ).
// h is unimodal with its maximum at 1/(d+1), so each side of that point holds
// at most one root.
fn stationarity_gap(d: f64, delta: f64, lambda: f64) -> f64 {
    lambda.powf(1.0 / d) * (1.0 - lambda) - (d - 1.0) / (2.0 * d * delta)
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        if hi - lo <= ROOT_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Global minimizer of `Φ_Δ` on `[0, 1]`.
///
/// Below `Δ_c` the minimizer is `λ = 0`; above it the minimizer is the larger
/// root of `((d-1)/d) λ^{-1/d} = 2Δ(1-λ)`, which never falls below
/// `2/(d+1)`. The barrier fields are filled whenever the two interior
/// stationary points exist, including the metastable window below `Δ_c`.
pub fn minimize_phi(d: u32, delta: f64) -> Result<PhiMinResult> {
    check_dim(d)?;
    check_delta(delta)?;
    let delta_c = critical_delta(d)?;
    let at_zero = PhiMinResult {
        lambda_star: 0.0,
        phi_value: delta,
        degenerate: false,
        barrier_lambda: None,
        barrier_value: None,
    };
    if delta == 0.0 {
        return Ok(at_zero);
    }

    let df = f64::from(d);
    let split = 1.0 / (df + 1.0);
    let gap = |l: f64| stationarity_gap(df, delta, l);
    if gap(split) < 0.0 {
        // Φ is increasing on the whole interval.
        return Ok(at_zero);
    }

    let barrier = bisect(0.0, split, gap);
    let droplet = bisect(split, 1.0, gap);
    let droplet_phi = phi_unchecked(d, delta, droplet);
    let degenerate = (delta - delta_c).abs() < DEGENERACY_TOLERANCE;
    let (lambda_star, phi_value) = if degenerate || droplet_phi < delta {
        (droplet, droplet_phi)
    } else {
        (0.0, delta)
    };
    Ok(PhiMinResult {
        lambda_star,
        phi_value,
        degenerate,
        barrier_lambda: Some(barrier),
        barrier_value: Some(phi_unchecked(d, delta, barrier)),
    })
}

/// One point of the `λ_Δ` versus `Δ` curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub delta: f64,
    pub min: PhiMinResult,
}

/// Evaluates [`minimize_phi`] along an ascending grid of `Δ` values.
pub fn lambda_curve(d: u32, delta_grid: &[f64]) -> Result<Vec<CurvePoint>> {
    if delta_grid.windows(2).any(|w| w[1] < w[0]) {
        return domain("delta grid must be ascending");
    }
    delta_grid
        .iter()
        .map(|&delta| Ok(CurvePoint { delta, min: minimize_phi(d, delta)? }))
        .collect()
}

/// Coexistence data of a generic two-phase system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseParams {
    pub d: u32,
    pub rho_liquid: f64,
    pub rho_gas: f64,
    /// Compressibility, normalized so that an excess `δN` in volume `V`
    /// costs `exp(-δN² / (2 κ V))`.
    pub kappa: f64,
    /// Surface free energy of a unit-volume Wulff droplet.
    pub tau_w: f64,
}

impl TwoPhaseParams {
    pub fn new(d: u32, rho_liquid: f64, rho_gas: f64, kappa: f64, tau_w: f64) -> Result<Self> {
        let p = Self { d, rho_liquid, rho_gas, kappa, tau_w };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.d)?;
        check_positive("rho_gas", self.rho_gas)?;
        check_positive("kappa", self.kappa)?;
        check_positive("tau_w", self.tau_w)?;
        if !(self.rho_liquid > self.rho_gas && self.rho_liquid.is_finite()) {
            return domain(format!(
                "rho_liquid ({}) must exceed rho_gas ({})",
                self.rho_liquid, self.rho_gas
            ));
        }
        Ok(())
    }

    pub fn density_gap(&self) -> f64 {
        self.rho_liquid - self.rho_gas
    }
}

/// Dimensionless excess parameter
/// `Δ = (ρ_L-ρ_G)^{(d-1)/d} δN^{(d+1)/d} / (2 κ τ_W V)`.
pub fn delta_from_physical(p: &TwoPhaseParams, excess: f64, volume: f64) -> Result<f64> {
    p.validate()?;
    check_positive("excess", excess)?;
    check_positive("volume", volume)?;
    let d = f64::from(p.d);
    Ok(p.density_gap().powf((d - 1.0) / d) * excess.powf((d + 1.0) / d)
        / (2.0 * p.kappa * p.tau_w * volume))
}

/// `Δ` for the 2D Ising lattice gas: `2 m*² v_L^{3/2} / (χ τ_W |Λ_L|)`.
///
/// `tau_w` is the reduced (dimensionless, `β`-scaled) Wulff constant.
pub fn delta_ising(m_star: f64, chi: f64, tau_w: f64, v_l: f64, sites: f64) -> Result<f64> {
    check_positive("m_star", m_star)?;
    check_positive("chi", chi)?;
    check_positive("tau_w", tau_w)?;
    check_positive("v_L", v_l)?;
    check_positive("lattice_sites", sites)?;
    Ok(2.0 * m_star * m_star * v_l.powf(1.5) / (chi * tau_w * sites))
}

/// Inverse of [`delta_ising`] in `v_L`.
pub fn excess_volume_for_delta(
    delta: f64,
    m_star: f64,
    chi: f64,
    tau_w: f64,
    sites: f64,
) -> Result<f64> {
    check_positive("delta", delta)?;
    check_positive("m_star", m_star)?;
    check_positive("chi", chi)?;
    check_positive("tau_w", tau_w)?;
    check_positive("lattice_sites", sites)?;
    Ok((delta * chi * tau_w * sites / (2.0 * m_star * m_star)).powf(2.0 / 3.0))
}

/// Crossover scale `Θ`, with `Θ^{d+1} = (κ τ_W)^d (ρ_L-ρ_G)^{1-d}`. The
/// droplet mechanism wins for `δN ≫ Θ V^{d/(d+1)}`.
pub fn crossover_scale(p: &TwoPhaseParams) -> Result<f64> {
    p.validate()?;
    let d = f64::from(p.d);
    let log_theta =
        (d * (p.kappa * p.tau_w).ln() + (1.0 - d) * p.density_gap().ln()) / (d + 1.0);
    Ok(log_theta.exp())
}

/// Split of the excess into small-scale fluctuations, intermediate droplets
/// and large droplets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismSplit {
    pub dn_small: f64,
    pub dn_intermediate: f64,
    pub dn_large: f64,
    /// Number of intermediate droplets.
    pub n: u32,
    pub isoperimetric_c: f64,
}

impl MechanismSplit {
    pub fn new(dn_small: f64, dn_intermediate: f64, dn_large: f64, n: u32) -> Self {
        Self { dn_small, dn_intermediate, dn_large, n, isoperimetric_c: DEFAULT_ISOPERIMETRIC_C }
    }

    pub fn total(&self) -> f64 {
        self.dn_small + self.dn_intermediate + self.dn_large
    }
}

/// Exponent costs of the two ways of absorbing `dn_small + dn_intermediate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismCosts {
    /// `δN_S²/(2κV) + τ_W C δN_I^{(d-1)/d} n^{1/d}`
    pub combined: f64,
    /// `(δN_S + δN_I)²/(2κV)`
    pub pure_fluctuation: f64,
}

pub fn mechanism_costs(
    split: &MechanismSplit,
    p: &TwoPhaseParams,
    volume: f64,
) -> Result<MechanismCosts> {
    p.validate()?;
    check_positive("volume", volume)?;
    for (name, x) in [
        ("dN_S", split.dn_small),
        ("dN_I", split.dn_intermediate),
        ("dN_L", split.dn_large),
    ] {
        if !(x >= 0.0 && x.is_finite()) {
            return domain(format!("{name} must be >= 0, got {x}"));
        }
    }
    if !(split.isoperimetric_c > 0.0 && split.isoperimetric_c.is_finite()) {
        return domain(format!("isoperimetric constant must be positive, got {}", split.isoperimetric_c));
    }
    let d = f64::from(p.d);
    let gauss = |x: f64| x * x / (2.0 * p.kappa * volume);
    let surface = p.tau_w
        * split.isoperimetric_c
        * split.dn_intermediate.powf((d - 1.0) / d)
        * f64::from(split.n).powf(1.0 / d);
    Ok(MechanismCosts {
        combined: gauss(split.dn_small) + surface,
        pure_fluctuation: gauss(split.dn_small + split.dn_intermediate),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params(d: u32) -> TwoPhaseParams {
        TwoPhaseParams::new(d, 2.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn phi_endpoints() {
        assert_eq!(phi(2, 0.8, 0.0).unwrap(), 0.8);
        for delta in [0.0, 0.3, 5.0] {
            assert_eq!(phi(2, delta, 1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn phi_ties_at_critical_point() {
        // sqrt(2/3) + Δ_c / 9 = Δ_c
        let dc = 0.918559;
        let left = phi(2, dc, 0.0).unwrap();
        let right = phi(2, dc, 2.0 / 3.0).unwrap();
        assert!((left - 0.918559).abs() < 1e-5);
        assert!((right - 0.918559).abs() < 1e-5);
    }

    #[test]
    fn phi_domain_errors() {
        assert!(phi(1, 0.5, 0.5).is_err());
        assert!(phi(2, 0.5, 1.5).is_err());
        assert!(phi(2, 0.5, -0.1).is_err());
        assert!(phi(2, -0.5, 0.5).is_err());
    }

    #[test]
    fn critical_values() {
        let dc2 = critical_delta(2).unwrap();
        assert!((dc2 - 0.9186).abs() < 5e-4);
        assert!((dc2 - 0.5 * 1.5f64.powf(1.5)).abs() < 1e-15);
        assert!((critical_delta(3).unwrap() - 0.839947).abs() < 1e-5);
        assert_eq!(critical_lambda(2).unwrap(), 2.0 / 3.0);
        assert_eq!(critical_lambda(3).unwrap(), 0.5);
        let mut prev = 1.0;
        for d in 2..50 {
            let l = critical_lambda(d).unwrap();
            assert!(l < prev);
            prev = l;
        }
        assert!(critical_delta(1).is_err());
        assert!(critical_lambda(0).is_err());
    }

    #[test]
    fn minimizer_below_and_above_onset() {
        let below = minimize_phi(2, 0.8).unwrap();
        assert_eq!(below.lambda_star, 0.0);
        assert_eq!(below.phi_value, 0.8);
        assert!(!below.degenerate);

        let above = minimize_phi(2, 0.96).unwrap();
        assert!(above.lambda_star > 2.0 / 3.0);
        assert!((above.lambda_star - 0.685).abs() < 5e-3, "{}", above.lambda_star);
        assert!((above.phi_value - 0.923).abs() < 5e-3, "{}", above.phi_value);
        assert!(above.phi_value < 0.96);
        let b = above.barrier_lambda.unwrap();
        assert!(b > 0.0 && b < above.lambda_star);
        assert!(above.barrier_value.unwrap() > 0.96);
    }

    #[test]
    fn minimizer_at_onset_is_degenerate() {
        let dc = critical_delta(2).unwrap();
        let r = minimize_phi(2, dc).unwrap();
        assert!(r.degenerate);
        assert!((r.lambda_star - 2.0 / 3.0).abs() < 1e-6);
        assert!((r.phi_value - dc).abs() < 1e-10);

        // Six-digit rounding of Δ_c lies outside the tie band but both minima
        // still agree to 1e-6.
        let r = minimize_phi(2, 0.918559).unwrap();
        assert!(!r.degenerate);
        assert!((phi(2, 0.918559, 0.0).unwrap() - r.phi_value).abs() < 1e-6);
        assert!((r.lambda_star - 2.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn large_delta_pushes_lambda_to_one() {
        let r = minimize_phi(2, 10.0).unwrap();
        assert!(r.lambda_star > 0.93 && r.lambda_star < 1.0);
    }

    #[test]
    fn curve_jumps_at_onset() {
        let pts = lambda_curve(2, &[0.5, 0.918559, 1.5]).unwrap();
        assert_eq!(pts[0].min.lambda_star, 0.0);
        assert!(pts[1].min.lambda_star >= 2.0 / 3.0);
        assert!(pts[2].min.lambda_star > pts[1].min.lambda_star);
        let all_below = lambda_curve(2, &[0.1, 0.4, 0.9]).unwrap();
        assert!(all_below.iter().all(|p| p.min.lambda_star == 0.0));
        assert!(lambda_curve(2, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn physical_delta_scaling() {
        let p = TwoPhaseParams::new(2, 1.5, 0.5, 1.0, 1.0).unwrap();
        let delta = delta_from_physical(&p, 100.0, 10_000.0).unwrap();
        assert!((delta - 0.05).abs() < 1e-15);
        let half = delta_from_physical(&p, 100.0, 20_000.0).unwrap();
        assert!((half - 0.025).abs() < 1e-15);
        let quad = delta_from_physical(&p, 400.0, 10_000.0).unwrap();
        assert!((quad / delta - 8.0).abs() < 1e-12);
        assert!(delta_from_physical(&p, 0.0, 1.0).is_err());
        assert!(delta_from_physical(&p, 1.0, -1.0).is_err());
        assert!(TwoPhaseParams::new(2, 0.5, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn ising_delta_and_inverse() {
        assert!((delta_ising(1.0, 1.0, 1.0, 100.0, 10_000.0).unwrap() - 0.2).abs() < 1e-15);
        let (m, chi, tw, n) = (0.97, 0.021, 4.6, 16_384.0);
        for delta in [0.3, 0.918, 1.7] {
            let v = excess_volume_for_delta(delta, m, chi, tw, n).unwrap();
            let back = delta_ising(m, chi, tw, v, n).unwrap();
            assert!((back - delta).abs() < 1e-12 * delta);
        }
        assert!(delta_ising(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn crossover_examples() {
        assert!((crossover_scale(&unit_params(2)).unwrap() - 1.0).abs() < 1e-15);
        let p = TwoPhaseParams::new(2, 2.0, 1.0, 8.0, 1.0).unwrap();
        assert!((crossover_scale(&p).unwrap() - 4.0).abs() < 1e-12);

        let p = TwoPhaseParams::new(2, 3.5, 0.25, 0.7, 2.3).unwrap();
        let v: f64 = 5.0e4;
        let excess = crossover_scale(&p).unwrap() * v.powf(2.0 / 3.0);
        let delta = delta_from_physical(&p, excess, v).unwrap();
        assert!((delta - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mechanism_cost_examples() {
        let p = unit_params(2);
        let none = mechanism_costs(&MechanismSplit::new(30.0, 0.0, 5.0, 0), &p, 1e4).unwrap();
        assert_eq!(none.combined, none.pure_fluctuation);
        let zero_intermediate =
            mechanism_costs(&MechanismSplit::new(30.0, 0.0, 0.0, 3), &p, 1e4).unwrap();
        assert_eq!(zero_intermediate.combined, zero_intermediate.pure_fluctuation);

        let c = mechanism_costs(&MechanismSplit::new(1e4, 1e3, 0.0, 1), &p, 1e6).unwrap();
        assert!((c.combined - (50.0 + 1000f64.sqrt())).abs() < 1e-9);
        assert!((c.pure_fluctuation - 60.5).abs() < 1e-9);
        assert!(c.combined > c.pure_fluctuation);

        assert!(mechanism_costs(&MechanismSplit::new(-1.0, 0.0, 0.0, 0), &p, 1.0).is_err());
    }
}
