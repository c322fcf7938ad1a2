//! Oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use droplet_core::contour::{extract_contours, render_from_contours};
use droplet_core::lattice::{
    glauber_step, Boundary, CanonicalConstraint, CanonicalSampler, ExchangeMode, InitMode, SpinConfig,
};
use droplet_core::rng::RngStream;

pub fn state_index(config: &SpinConfig) -> usize {
    let l = config.side();
    let mut idx = 0;
    for r in 0..l {
        for c in 0..l {
            idx = idx << 1 | (config.get(r, c) < 0) as usize;
        }
    }
    idx
}

pub fn spins_of(l: usize, idx: usize) -> Vec<i8> {
    let n = l * l;
    (0..n).map(|i| if idx >> (n - 1 - i) & 1 == 1 { -1 } else { 1 }).collect()
}

/// Exact probabilities over the states accepted by `keep`.
pub fn exact_distribution(l: usize, beta: f64, keep: impl Fn(&SpinConfig) -> bool) -> Vec<f64> {
    let n = 1usize << (l * l);
    let mut w = vec![0.0; n];
    for (idx, wi) in w.iter_mut().enumerate() {
        let cfg = SpinConfig::from_spins(l, beta, Boundary::Plus, &spins_of(l, idx)).unwrap();
        if keep(&cfg) {
            *wi = (-beta * cfg.energy() as f64).exp();
        }
    }
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// Runs `steps` moves in batches and returns, per state, the mean visit
/// frequency and its batch-means standard error.
pub fn empirical(states: usize, batches: usize, per_batch: usize, mut step: impl FnMut() -> usize) -> Vec<(f64, f64)> {
    let mut freq = vec![vec![0.0; batches]; states];
    for b in 0..batches {
        let mut counts = vec![0u64; states];
        for _ in 0..per_batch {
            counts[step()] += 1;
        }
        for s in 0..states {
            freq[s][b] = counts[s] as f64 / per_batch as f64;
        }
    }
    freq.iter()
        .map(|f| {
            let n = f.len() as f64;
            let mean = f.iter().sum::<f64>() / n;
            let var = f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (mean, (var / n).sqrt())
        })
        .collect()
}

pub fn within_3_sigma(exact: &[f64], measured: &[(f64, f64)]) -> Result<(), String> {
    for (s, (&p, &(m, err))) in exact.iter().zip(measured).enumerate() {
        if p == 0.0 {
            if m != 0.0 {
                return Err(format!("state {s} is outside the sector but was visited"));
            }
            continue;
        }
        if !(err > 0.0) {
            return Err(format!("state {s} has no spread"));
        }
        if (m - p).abs() > 3.0 * err {
            return Err(format!("state {s}: exact {p:.6}, measured {m:.6} +- {err:.6}"));
        }
    }
    Ok(())
}

pub fn glauber_l2(beta: f64, seed: u64) -> Result<(), String> {
    let exact = exact_distribution(2, beta, |_| true);
    let mut cfg = SpinConfig::all_plus(2, beta).unwrap();
    let mut rng = RngStream::new(seed, 0);
    let measured = empirical(16, 1000, 10_000, || {
        glauber_step(&mut cfg, &mut rng);
        state_index(&cfg)
    });
    within_3_sigma(&exact, &measured)?;
    if cfg.recompute_magnetization() != cfg.magnetization() {
        return Err("cached magnetization drifted".into());
    }
    Ok(())
}

pub fn canonical_l3(mode: ExchangeMode, seed: u64) -> Result<(), String> {
    let beta = 0.4;
    let target = CanonicalConstraint::from_magnetization(9, 1.0, 3);
    let exact = exact_distribution(3, beta, |c| c.magnetization() == 3);
    assert_eq!(exact.iter().filter(|&&p| p > 0.0).count(), 84);
    let mut rng = RngStream::new(seed, 0);
    let mut sampler = CanonicalSampler::initialized(3, beta, &target, InitMode::Random, mode, &mut rng).unwrap();
    let measured = empirical(512, 1000, 10_000, || {
        sampler.step(&mut rng);
        state_index(sampler.config())
    });
    within_3_sigma(&exact, &measured)?;
    if !sampler.check_coherence() {
        return Err("sampler bookkeeping is incoherent".into());
    }
    Ok(())
}

/// Number of nearest-neighbor pairs (boundary pairs included) with opposite spins.
pub fn unsatisfied_bonds(cfg: &SpinConfig) -> usize {
    let l = cfg.side() as isize;
    let at = |r: isize, c: isize| if r < 0 || c < 0 || r >= l || c >= l { 1 } else { cfg.get(r as usize, c as usize) };
    let mut n = 0;
    for r in -1..l {
        for c in -1..l {
            if c >= 0 && at(r, c) != at(r + 1, c) {
                n += 1;
            }
            if r >= 0 && at(r, c) != at(r, c + 1) {
                n += 1;
            }
        }
    }
    n
}

pub fn contour_invariants(cfg: &SpinConfig) -> Result<(), String> {
    let l = cfg.side();
    let contours = extract_contours(cfg).map_err(|e| e.to_string())?;
    if render_from_contours(l, &contours) != cfg.to_spins() {
        return Err(format!("round trip failed:\n{}", cfg.to_grid_text()));
    }
    let minus: i64 = contours.iter().map(|c| if c.depth % 2 == 0 { 1 } else { -1 } * c.volume as i64).sum();
    if minus as usize != cfg.minus_count() || (l * l) as i64 - 2 * minus != cfg.magnetization() {
        return Err(format!("magnetization sum rule fails:\n{}", cfg.to_grid_text()));
    }
    // Loops are edge-disjoint and cover every unsatisfied bond.
    if contours.iter().map(|c| c.length).sum::<usize>() != unsatisfied_bonds(cfg) {
        return Err(format!("contour lengths miss some bonds:\n{}", cfg.to_grid_text()));
    }
    for c in &contours {
        let ok = c.length >= 4
            && c.length % 2 == 0
            && c.volume >= 1
            && c.length >= 2 * (c.extent_x + c.extent_y)
            && c.diameter == c.extent_x.max(c.extent_y)
            && c.enclosed_minus <= c.volume
            && c.exterior == (c.depth == 0);
        if !ok {
            return Err(format!("bad contour {c:?} in\n{}", cfg.to_grid_text()));
        }
    }
    Ok(())
}

/// The round trip on `n` random 8 × 8 configurations at a spread of densities.
pub fn random_round_trips(n: usize, seed: u64) -> Result<(), String> {
    let mut rng = RngStream::new(seed, 8);
    for i in 0..n {
        let density = [0.1, 0.3, 0.5, 0.7, 0.9][i % 5];
        let spins: Vec<i8> = (0..64).map(|_| if rng.uniform() < density { -1 } else { 1 }).collect();
        contour_invariants(&SpinConfig::from_spins(8, 0.7, Boundary::Plus, &spins).unwrap())?;
    }
    Ok(())
}
