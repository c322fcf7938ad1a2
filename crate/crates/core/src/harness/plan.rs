use serde::{Deserialize, Serialize};

use super::config::SweepSpec;
use crate::error::Result;
use crate::lattice::{measure_chi, CanonicalConstraint, ChiEstimate};
use crate::rng::RngStream;
use crate::theory::{delta_ising, excess_volume_for_delta, minimize_phi};
use crate::thermo::IsingThermo;

/// Stream id reserved for the susceptibility chain.
pub const CHI_STREAM: u64 = u64::MAX;

/// One `(L, v_L)` point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPoint {
    pub index: usize,
    pub beta: f64,
    pub l: usize,
    /// Requested `Δ`, when the sweep was given as a `Δ` grid.
    pub delta_target: Option<f64>,
    /// Requested excess volume before rounding.
    pub v_target: f64,
    pub constraint: CanonicalConstraint,
    /// `Δ` of the realized `v_L`.
    pub delta: f64,
    /// Minimizer `λ_Δ` at the realized `Δ`.
    pub lambda_theory: f64,
}

impl RunPoint {
    pub fn sites(&self) -> usize {
        self.l * self.l
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedPoint {
    pub l: usize,
    pub delta_target: Option<f64>,
    pub v_target: Option<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub thermo: IsingThermo,
    pub points: Vec<RunPoint>,
    pub rejected: Vec<RejectedPoint>,
}

/// Exact `m*` and `τ_W`, plus `χ` from the config or from a plus-boundary chain.
pub fn resolve_thermo(spec: &SweepSpec) -> Result<(IsingThermo, Option<ChiEstimate>)> {
    let thermo = IsingThermo::exact(spec.beta, spec.wulff_resolution)?;
    match spec.chi {
        Some(chi) => Ok((thermo.with_chi(chi)?, None)),
        None => {
            let mut rng = RngStream::new(spec.seed, CHI_STREAM);
            let est = measure_chi(spec.beta, spec.chi_l, spec.chi_burnin_sweeps, spec.chi_sweeps, &mut rng)?;
            Ok((thermo.with_chi(est.chi)?, Some(est)))
        }
    }
}

/// `Δ` for an excess volume on `sites` sites, using the reduced `τ_W`.
pub fn realized_delta(thermo: &IsingThermo, v_l: f64, sites: usize) -> Result<f64> {
    delta_ising(thermo.m_star, thermo.require_chi()?, thermo.reduced_tau_w(), v_l, sites as f64)
}

/// Maps the configured `Δ` grid (or `v_L` list) to achievable magnetization
/// sectors, one point per `(L, value)` in config order.
pub fn plan_sweep(spec: &SweepSpec, thermo: &IsingThermo) -> Result<SweepPlan> {
    spec.validate()?;
    let chi = thermo.require_chi()?;
    let mut points = Vec::new();
    let mut rejected = Vec::new();
    for &l in &spec.l_list {
        let sites = l * l;
        let targets: Vec<(Option<f64>, Result<f64>)> = match (&spec.delta_grid, &spec.v_list) {
            (Some(grid), _) => grid
                .iter()
                .map(|&d| {
                    (Some(d), excess_volume_for_delta(d, thermo.m_star, chi, thermo.reduced_tau_w(), sites as f64))
                })
                .collect(),
            (None, Some(vs)) => vs.iter().map(|&v| (None, Ok(v))).collect(),
            (None, None) => unreachable!("validated"),
        };
        for (delta_target, v) in targets {
            let reject = |v_target: Option<f64>, reason: String| RejectedPoint { l, delta_target, v_target, reason };
            let v = match v {
                Ok(v) => v,
                Err(e) => {
                    rejected.push(reject(None, e.to_string()));
                    continue;
                }
            };
            let constraint = match CanonicalConstraint::from_excess(sites, thermo.m_star, v) {
                Ok(c) => c,
                Err(e) => {
                    rejected.push(reject(Some(v), e.to_string()));
                    continue;
                }
            };
            if !(constraint.v_l > 0.0) {
                rejected.push(reject(Some(v), "excess volume rounds to zero".into()));
                continue;
            }
            let delta = realized_delta(thermo, constraint.v_l, sites)?;
            points.push(RunPoint {
                index: points.len(),
                beta: spec.beta,
                l,
                delta_target,
                v_target: v,
                constraint,
                delta,
                lambda_theory: minimize_phi(2, delta)?.lambda_star,
            });
        }
    }
    Ok(SweepPlan { thermo: *thermo, points, rejected })
}
