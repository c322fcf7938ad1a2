use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::Budget;
use super::plan::RunPoint;
use crate::contour::{
    census_frequencies, droplet_fraction, droplet_fraction_net, extract_contours, CensusWindow, Contour,
    ContourCensus,
};
use crate::error::{domain, Error, Result};
use crate::lattice::{CanonicalSampler, ExchangeMode, InitMode};
use crate::rng::RngStream;

/// Replica settings shared by every point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub budget: Budget,
    pub replicas: usize,
    pub seed: u64,
    pub exchange: ExchangeMode,
    pub k_list: Vec<f64>,
}

/// Stream id of one replica: point index in the high word.
pub fn replica_stream(point_index: usize, replica: usize) -> u64 {
    ((point_index as u64) << 32) | replica as u64
}

/// Even replicas start from scattered minus spins, odd ones from a block.
pub fn replica_init(replica: usize) -> InitMode {
    if replica % 2 == 0 {
        InitMode::Random
    } else {
        InitMode::Block
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleObs {
    /// Sweeps completed, burn-in included.
    pub sweep: usize,
    pub magnetization: i64,
    pub energy: i64,
    /// Contours without their interior spans.
    pub contours: Vec<Contour>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaResult {
    pub replica: usize,
    pub init: InitMode,
    pub samples: Vec<SampleObs>,
}

pub fn run_replica(point: &RunPoint, settings: &RunSettings, replica: usize) -> Result<ReplicaResult> {
    let budget = &settings.budget;
    budget.validate()?;
    let init = replica_init(replica);
    let mut rng = RngStream::new(settings.seed, replica_stream(point.index, replica));
    let mut sampler =
        CanonicalSampler::initialized(point.l, point.beta, &point.constraint, init, settings.exchange, &mut rng)?;
    for _ in 0..budget.burnin_sweeps {
        sampler.sweep(&mut rng);
    }
    let mut samples = Vec::with_capacity(budget.samples);
    for s in 0..budget.samples {
        for _ in 0..budget.cadence_sweeps {
            sampler.sweep(&mut rng);
        }
        let config = sampler.config();
        let mut contours = extract_contours(config)?;
        contours.iter_mut().for_each(|c| c.spans = Vec::new());
        samples.push(SampleObs {
            sweep: budget.burnin_sweeps + (s + 1) * budget.cadence_sweeps,
            magnetization: config.magnetization(),
            energy: config.energy(),
            contours,
        });
    }
    if !sampler.check_coherence() || sampler.config().magnetization() != point.constraint.target_m {
        return Err(Error::Domain(format!("replica {replica} left its magnetization sector")));
    }
    Ok(ReplicaResult { replica, init, samples })
}

/// All replicas of a point, in replica order.
pub fn run_replicas(point: &RunPoint, settings: &RunSettings) -> Result<Vec<ReplicaResult>> {
    if settings.replicas == 0 {
        return domain("replicas must be >= 1");
    }
    (0..settings.replicas).into_par_iter().map(|r| run_replica(point, settings, r)).collect()
}

/// Aggregated measurements of one point at one `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub point: usize,
    pub beta: f64,
    pub l: usize,
    pub k: f64,
    pub seed: u64,
    pub exchange: ExchangeMode,
    pub target_m: i64,
    pub v_l: f64,
    pub delta: f64,
    pub delta_target: Option<f64>,
    pub m_star: f64,
    pub chi: f64,
    /// Reduced `β τ_W`.
    pub tau_w: f64,
    pub lambda_theory: f64,
    pub replicas: usize,
    pub samples: usize,
    pub window_valid: bool,
    pub p_a: f64,
    pub p_a_err: f64,
    pub p_b: f64,
    pub p_b_err: f64,
    pub p_c: f64,
    pub p_c_err: f64,
    /// Frequency of samples with at least one intermediate contour.
    pub p_intermediate: f64,
    pub p_intermediate_err: f64,
    /// Intermediate contours per sample.
    pub n_intermediate_rate: f64,
    pub mean_lambda: f64,
    /// Standard error over replica means.
    pub lambda_err: f64,
    /// `λ̂` counting only the droplet's minus spins.
    pub mean_lambda_net: f64,
    pub lambda_net_err: f64,
    pub lambda_random_init: f64,
    pub lambda_block_init: f64,
    /// Random and block initializations disagree beyond 3σ.
    pub metastable: bool,
}

fn mean_and_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Merges replica results into one record. The merge sorts by replica index
/// first, so the input order does not matter.
pub fn aggregate(point: &RunPoint, settings: &RunSettings, k: f64, results: &[ReplicaResult]) -> Result<RunRecord> {
    if results.is_empty() {
        return domain("no replica results to aggregate");
    }
    let mut sorted: Vec<&ReplicaResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.replica);
    let window = CensusWindow::new(point.l, k)?;
    let constraint = &point.constraint;

    let mut censuses = Vec::new();
    let mut replica_lambda = Vec::new();
    let mut replica_net = Vec::new();
    let mut by_init: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for r in &sorted {
        let mut lam = Vec::with_capacity(r.samples.len());
        let mut net = Vec::with_capacity(r.samples.len());
        for s in &r.samples {
            let census = ContourCensus::tally(&s.contours, window);
            lam.push(droplet_fraction(&census, constraint)?);
            net.push(droplet_fraction_net(&census, constraint)?);
            censuses.push(census);
        }
        let m = mean_and_err(&lam).0;
        replica_lambda.push(m);
        replica_net.push(mean_and_err(&net).0);
        by_init[matches!(r.init, InitMode::Block) as usize].push(m);
    }
    if censuses.is_empty() {
        return domain("replicas produced no samples");
    }
    let summary = census_frequencies(&censuses, constraint)?;
    let (mean_lambda, lambda_err) = mean_and_err(&replica_lambda);
    let (mean_lambda_net, lambda_net_err) = mean_and_err(&replica_net);
    let (lr, er) = if by_init[0].is_empty() { (f64::NAN, f64::NAN) } else { mean_and_err(&by_init[0]) };
    let (lb, eb) = if by_init[1].is_empty() { (f64::NAN, f64::NAN) } else { mean_and_err(&by_init[1]) };
    let metastable = if by_init.iter().all(|g| g.len() >= 2) {
        (lr - lb).abs() > 3.0 * (er * er + eb * eb).sqrt()
    } else {
        false
    };
    let n_inter: usize = censuses.iter().map(|c| c.n_intermediate).sum();
    Ok(RunRecord {
        point: point.index,
        beta: point.beta,
        l: point.l,
        k,
        seed: settings.seed,
        exchange: settings.exchange,
        target_m: constraint.target_m,
        v_l: constraint.v_l,
        delta: point.delta,
        delta_target: point.delta_target,
        m_star: 0.0,
        chi: 0.0,
        tau_w: 0.0,
        lambda_theory: point.lambda_theory,
        replicas: sorted.len(),
        samples: censuses.len(),
        window_valid: window.is_valid(),
        p_a: summary.p_a.p,
        p_a_err: summary.p_a.err,
        p_b: summary.p_b.p,
        p_b_err: summary.p_b.err,
        p_c: summary.p_c.p,
        p_c_err: summary.p_c.err,
        p_intermediate: summary.p_intermediate.p,
        p_intermediate_err: summary.p_intermediate.err,
        n_intermediate_rate: n_inter as f64 / censuses.len() as f64,
        mean_lambda,
        lambda_err,
        mean_lambda_net,
        lambda_net_err,
        lambda_random_init: lr,
        lambda_block_init: lb,
        metastable,
    })
}

/// Runs every replica of `point` and aggregates one record per `K`.
pub fn run_point(
    point: &RunPoint,
    settings: &RunSettings,
    thermo: &crate::thermo::IsingThermo,
) -> Result<(Vec<RunRecord>, Vec<ReplicaResult>)> {
    settings.budget.validate()?;
    let results = run_replicas(point, settings)?;
    let chi = thermo.require_chi()?;
    let records = settings
        .k_list
        .iter()
        .map(|&k| {
            let mut rec = aggregate(point, settings, k, &results)?;
            rec.m_star = thermo.m_star;
            rec.chi = chi;
            rec.tau_w = thermo.reduced_tau_w();
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((records, results))
}

/// Adjacent `Δ` pairs at fixed `(L, K)` whose `λ̂` drops by more than
/// `2σ`; returns `(violations, pairs)`.
pub fn monotonicity_violations(records: &[RunRecord]) -> (usize, usize) {
    let mut groups: std::collections::BTreeMap<(usize, u64), Vec<&RunRecord>> = Default::default();
    for r in records {
        groups.entry((r.l, r.k.to_bits())).or_default().push(r);
    }
    let (mut bad, mut pairs) = (0, 0);
    for g in groups.values_mut() {
        g.sort_by(|a, b| a.delta.total_cmp(&b.delta));
        for w in g.windows(2) {
            pairs += 1;
            let sigma = (w[0].lambda_err.powi(2) + w[1].lambda_err.powi(2)).sqrt();
            let sigma = if sigma.is_finite() { sigma } else { 0.0 };
            if w[1].mean_lambda < w[0].mean_lambda - 2.0 * sigma {
                bad += 1;
            }
        }
    }
    (bad, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::SweepSpec;
    use crate::harness::plan::plan_sweep;
    use crate::thermo::IsingThermo;

    fn setup(replicas: usize) -> (RunPoint, RunSettings, IsingThermo) {
        let thermo = IsingThermo::exact(0.7, 512).unwrap().with_chi(0.016).unwrap();
        let mut spec = SweepSpec::new(0.7, vec![24]);
        spec.delta_grid = Some(vec![1.5]);
        let point = plan_sweep(&spec, &thermo).unwrap().points.remove(0);
        let settings = RunSettings {
            budget: Budget { burnin_sweeps: 20, samples: 4, cadence_sweeps: 2 },
            replicas,
            seed: 99,
            exchange: ExchangeMode::Nonlocal,
            k_list: vec![2.0, 4.0],
        };
        (point, settings, thermo)
    }

    #[test]
    fn replicas_are_deterministic_and_order_independent() {
        let (point, settings, thermo) = setup(4);
        let (rec_a, res_a) = run_point(&point, &settings, &thermo).unwrap();
        let (rec_b, _) = run_point(&point, &settings, &thermo).unwrap();
        assert_eq!(rec_a, rec_b);
        assert_eq!(rec_a.len(), 2);
        let mut shuffled = res_a.clone();
        shuffled.reverse();
        shuffled.swap(0, 2);
        assert_eq!(aggregate(&point, &settings, 4.0, &shuffled).unwrap(), aggregate(&point, &settings, 4.0, &res_a).unwrap());
        // Replicas sharing a stream reproduce each other.
        assert_eq!(run_replica(&point, &settings, 3).unwrap(), res_a[3]);
        assert_eq!(rec_a[0].samples, 16);
    }

    #[test]
    fn zero_budget_is_rejected() {
        let (point, mut settings, thermo) = setup(2);
        settings.budget.samples = 0;
        assert!(run_point(&point, &settings, &thermo).is_err());
        settings.budget.samples = 1;
        settings.budget.cadence_sweeps = 0;
        assert!(run_point(&point, &settings, &thermo).is_err());
        settings.budget.cadence_sweeps = 1;
        settings.replicas = 0;
        assert!(run_point(&point, &settings, &thermo).is_err());
    }

    #[test]
    fn init_groups_are_compared() {
        let (point, settings, _) = setup(4);
        let obs = |vol: usize| SampleObs {
            sweep: 0,
            magnetization: point.constraint.target_m,
            energy: 0,
            contours: vec![Contour {
                length: 4 * 20,
                diameter: 20,
                extent_x: 20,
                extent_y: 20,
                volume: vol,
                enclosed_minus: vol,
                depth: 0,
                exterior: true,
                spans: Vec::new(),
            }],
        };
        let fake = |replica: usize, vol: usize| ReplicaResult {
            replica,
            init: replica_init(replica),
            samples: vec![obs(vol), obs(vol + 1)],
        };
        let split = [fake(0, 0), fake(1, 40), fake(2, 1), fake(3, 41)];
        let rec = aggregate(&point, &settings, 4.0, &split).unwrap();
        assert!(rec.metastable);
        let agree = [fake(0, 30), fake(1, 31), fake(2, 31), fake(3, 30)];
        assert!(!aggregate(&point, &settings, 4.0, &agree).unwrap().metastable);
    }
}
