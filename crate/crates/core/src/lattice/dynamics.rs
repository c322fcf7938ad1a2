use serde::{Deserialize, Serialize};

use super::spin::SpinConfig;
use crate::error::{domain, Result};
use crate::rng::RngStream;

/// Single-site Metropolis decision at padded site `p` given a uniform draw.
#[inline]
pub fn glauber_flip_at(config: &mut SpinConfig, p: usize, u: f64) -> bool {
    let de = config.flip_cost(p);
    if de <= 0 || u < config.acceptance(de) {
        config.flip(p);
        true
    } else {
        false
    }
}

/// One random-site Metropolis proposal under the unconstrained Gibbs measure.
#[inline]
pub fn glauber_step(config: &mut SpinConfig, rng: &mut RngStream) -> bool {
    let i = rng.below(config.sites());
    let l = config.side();
    let p = config.padded(i / l, i % l);
    let u = rng.uniform();
    glauber_flip_at(config, p, u)
}

/// `L²` Glauber proposals.
pub fn glauber_sweep(config: &mut SpinConfig, rng: &mut RngStream) {
    for _ in 0..config.sites() {
        glauber_step(config, rng);
    }
}

/// Exchanges the opposite spins at padded sites `a` and `b` if the
/// Metropolis test passes for the draw `u`. Returns whether the swap happened.
#[inline]
pub fn exchange_at(config: &mut SpinConfig, a: usize, b: usize, u: f64) -> bool {
    debug_assert_ne!(config.spin_at(a), config.spin_at(b));
    let de_a = config.flip_cost(a);
    config.flip(a);
    let de = de_a + config.flip_cost(b);
    if de <= 0 || u < config.acceptance(de) {
        config.flip(b);
        true
    } else {
        config.flip(a);
        false
    }
}

/// Fixed-magnetization sector `M_L = target_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalConstraint {
    /// Realized excess volume `(m*|Λ| - target_m) / (2 m*)`.
    pub v_l: f64,
    pub target_m: i64,
}

impl CanonicalConstraint {
    /// Rounds `m*|Λ| - 2 m* v` to the nearest magnetization with the parity
    /// of `|Λ|`, keeping the realized `v_L` nonnegative.
    pub fn from_excess(sites: usize, m_star: f64, v: f64) -> Result<Self> {
        if !(m_star > 0.0 && m_star <= 1.0) {
            return domain(format!("m_star must lie in (0, 1], got {m_star}"));
        }
        if !(v >= 0.0 && v.is_finite()) {
            return domain(format!("excess volume must be >= 0, got {v}"));
        }
        let n = sites as f64;
        let ideal = m_star * n - 2.0 * m_star * v;
        let mut minus = ((n - ideal) / 2.0).round().max(0.0) as i64;
        if (n as i64 - 2 * minus) as f64 > m_star * n {
            minus += 1;
        }
        if minus > sites as i64 {
            return domain(format!("excess volume {v} needs more than {sites} minus spins"));
        }
        Ok(Self::from_magnetization(sites, m_star, sites as i64 - 2 * minus))
    }

    pub fn from_magnetization(sites: usize, m_star: f64, target_m: i64) -> Self {
        let n = sites as f64;
        Self { v_l: (m_star * n - target_m as f64) / (2.0 * m_star), target_m }
    }

    pub fn minus_count(&self, sites: usize) -> usize {
        ((sites as i64 - self.target_m) / 2) as usize
    }

    pub fn is_achievable(&self, sites: usize) -> bool {
        let n = sites as i64;
        self.target_m.abs() <= n && (n - self.target_m) % 2 == 0
    }
}

/// Spin-exchange proposal used by the fixed-magnetization sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExchangeMode {
    /// Adjacent opposite pair (Kawasaki).
    Local,
    /// Any `+`/`-` pair.
    Nonlocal,
}

/// How the minus spins are placed before a fixed-magnetization run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Random,
    /// A centered, nearly square block.
    Block,
}

/// Fixed-magnetization sampler. Owns the configuration and the site lists
/// needed for uniform `+`/`-` pair proposals.
#[derive(Debug, Clone)]
pub struct CanonicalSampler {
    config: SpinConfig,
    mode: ExchangeMode,
    plus: Vec<u32>,
    minus: Vec<u32>,
    /// Position of each padded site within its list.
    slot: Vec<u32>,
}

impl CanonicalSampler {
    pub fn new(config: SpinConfig, mode: ExchangeMode) -> Self {
        let mut s = Self { mode, plus: Vec::new(), minus: Vec::new(), slot: vec![0; (config.side() + 2).pow(2)], config };
        s.rebuild_lists();
        s
    }

    /// Plus-boundary configuration in the sector of `constraint`.
    pub fn initialized(
        l: usize,
        beta: f64,
        constraint: &CanonicalConstraint,
        init: InitMode,
        mode: ExchangeMode,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let sites = l * l;
        if !constraint.is_achievable(sites) {
            return domain(format!("target magnetization {} is not achievable on {l}x{l}", constraint.target_m));
        }
        let k = constraint.minus_count(sites);
        let mut values = vec![1i8; sites];
        match init {
            InitMode::Random => {
                // Partial Fisher-Yates over site indices.
                let mut idx: Vec<usize> = (0..sites).collect();
                for i in 0..k {
                    let j = i + rng.below(sites - i);
                    idx.swap(i, j);
                    values[idx[i]] = -1;
                }
            }
            InitMode::Block => {
                let side = ((k as f64).sqrt().ceil() as usize).min(l).max(1);
                let rows = k.div_ceil(side).min(l);
                let r0 = (l - rows) / 2;
                let c0 = (l - side) / 2;
                let mut placed = 0;
                'fill: for r in r0..l {
                    for c in c0..c0 + side {
                        if placed == k {
                            break 'fill;
                        }
                        values[r * l + c] = -1;
                        placed += 1;
                    }
                }
                // Anything left over (only when the block would overflow the box).
                for v in values.iter_mut() {
                    if placed == k {
                        break;
                    }
                    if *v == 1 {
                        *v = -1;
                        placed += 1;
                    }
                }
            }
        }
        let config = SpinConfig::from_spins(l, beta, super::Boundary::Plus, &values)?;
        Ok(Self::new(config, mode))
    }

    fn rebuild_lists(&mut self) {
        self.plus.clear();
        self.minus.clear();
        let sites: Vec<usize> = self.config.interior().collect();
        for p in sites {
            let list = if self.config.spin_at(p) > 0 { &mut self.plus } else { &mut self.minus };
            self.slot[p] = list.len() as u32;
            list.push(p as u32);
        }
    }

    pub fn config(&self) -> &SpinConfig {
        &self.config
    }

    pub fn into_config(self) -> SpinConfig {
        self.config
    }

    pub fn mode(&self) -> ExchangeMode {
        self.mode
    }

    // a was +, b was -; they have just been exchanged.
    fn swap_lists(&mut self, a: usize, b: usize) {
        let (sa, sb) = (self.slot[a] as usize, self.slot[b] as usize);
        self.plus[sa] = b as u32;
        self.minus[sb] = a as u32;
        self.slot[b] = sa as u32;
        self.slot[a] = sb as u32;
    }

    /// Exchange of the pair `(plus_site, minus_site)` (padded indices) with a
    /// given acceptance draw.
    pub fn exchange_with_draw(&mut self, plus_site: usize, minus_site: usize, u: f64) -> bool {
        if exchange_at(&mut self.config, plus_site, minus_site, u) {
            self.swap_lists(plus_site, minus_site);
            true
        } else {
            false
        }
    }

    /// One exchange proposal. Returns whether it was accepted.
    #[inline]
    pub fn step(&mut self, rng: &mut RngStream) -> bool {
        #[cfg(debug_assertions)]
        let before = self.config.magnetization();
        let accepted = match self.mode {
            ExchangeMode::Nonlocal => {
                if self.plus.is_empty() || self.minus.is_empty() {
                    return false;
                }
                let a = self.plus[rng.below(self.plus.len())] as usize;
                let b = self.minus[rng.below(self.minus.len())] as usize;
                let u = rng.uniform();
                self.exchange_with_draw(a, b, u)
            }
            ExchangeMode::Local => {
                let i = rng.below(self.config.sites());
                let l = self.config.side();
                let a = self.config.padded(i / l, i % l);
                let b = self.config.neighbors(a)[rng.below(4)];
                let u = rng.uniform();
                if !self.config.is_interior(b) || self.config.spin_at(a) == self.config.spin_at(b) {
                    false
                } else if self.config.spin_at(a) > 0 {
                    self.exchange_with_draw(a, b, u)
                } else {
                    self.exchange_with_draw(b, a, u)
                }
            }
        };
        #[cfg(debug_assertions)]
        debug_assert_eq!(before, self.config.magnetization());
        accepted
    }

    /// `L²` exchange proposals.
    pub fn sweep(&mut self, rng: &mut RngStream) {
        for _ in 0..self.config.sites() {
            self.step(rng);
        }
    }

    /// Checks the cached magnetization and the site lists against the spins.
    pub fn check_coherence(&self) -> bool {
        let c = &self.config;
        c.recompute_magnetization() == c.magnetization()
            && self.minus.len() == c.minus_count()
            && self.plus.iter().all(|&p| c.spin_at(p as usize) > 0)
            && self.minus.iter().all(|&p| c.spin_at(p as usize) < 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    #[test]
    fn downhill_glauber_always_accepted() {
        // Lone minus spin in a plus sea: flipping it lowers the energy.
        let mut cfg = SpinConfig::from_spins(3, 0.7, Boundary::Plus, &[1, 1, 1, 1, -1, 1, 1, 1, 1]).unwrap();
        let p = cfg.padded(1, 1);
        assert!(glauber_flip_at(&mut cfg, p, 0.999_999));
        assert_eq!(cfg.magnetization(), 9);
    }

    #[test]
    fn double_flip_restores() {
        let mut cfg = SpinConfig::all_plus(4, 0.0).unwrap();
        let p = cfg.padded(2, 3);
        assert!(glauber_flip_at(&mut cfg, p, 0.0));
        assert!(glauber_flip_at(&mut cfg, p, 0.0));
        assert_eq!(cfg, SpinConfig::all_plus(4, 0.0).unwrap());
    }

    #[test]
    fn infinite_temperature_accepts_everything() {
        let mut cfg = SpinConfig::all_plus(6, 0.0).unwrap();
        let mut rng = RngStream::new(3, 0);
        assert!((0..10_000).all(|_| glauber_step(&mut cfg, &mut rng)));
    }

    #[test]
    fn downhill_exchange_accepted() {
        // Moving a lone minus spin next to another lowers the energy.
        let cfg = SpinConfig::from_spins(3, 0.7, Boundary::Plus, &[-1, 1, 1, 1, 1, 1, 1, 1, -1]).unwrap();
        let mut s = CanonicalSampler::new(cfg, ExchangeMode::Nonlocal);
        let plus_site = s.config().padded(0, 1);
        let minus_site = s.config().padded(2, 2);
        let before = s.config().energy();
        assert!(s.exchange_with_draw(plus_site, minus_site, 0.999_999));
        assert!(s.config().energy() < before);
        assert!(s.check_coherence());
    }

    #[test]
    fn exchanges_conserve_magnetization() {
        for mode in [ExchangeMode::Local, ExchangeMode::Nonlocal] {
            let constraint = CanonicalConstraint::from_excess(256, 0.9, 20.0).unwrap();
            let mut rng = RngStream::new(9, 1);
            let mut s =
                CanonicalSampler::initialized(16, 0.5, &constraint, InitMode::Random, mode, &mut rng).unwrap();
            let m = s.config().magnetization();
            assert_eq!(m, constraint.target_m);
            for _ in 0..200_000 {
                s.step(&mut rng);
                assert_eq!(s.config().magnetization(), m);
            }
            assert!(s.check_coherence());
        }
    }

    #[test]
    fn constraint_rounding() {
        let c = CanonicalConstraint::from_excess(100, 0.9, 10.0).unwrap();
        // ideal 90 - 18 = 72 → M = 72 exactly (parity of 100 is even).
        assert_eq!(c.target_m, 72);
        assert!((c.v_l - 10.0).abs() < 1e-12);
        let c = CanonicalConstraint::from_excess(64 * 64, 0.98, 33.3).unwrap();
        assert!(c.is_achievable(4096));
        assert!(c.v_l >= 0.0);
        assert!((c.v_l - 33.3).abs() <= 1.0 / 0.98);
        let zero = CanonicalConstraint::from_excess(9, 0.97, 0.0).unwrap();
        assert!(zero.v_l >= 0.0);
        assert!(zero.is_achievable(9));
        assert!(CanonicalConstraint::from_excess(9, 0.9, 100.0).is_err());
    }

    #[test]
    fn block_init_places_a_square() {
        let c = CanonicalConstraint { v_l: 0.0, target_m: 64 - 2 * 9 };
        let mut rng = RngStream::new(0, 0);
        let s = CanonicalSampler::initialized(8, 0.7, &c, InitMode::Block, ExchangeMode::Nonlocal, &mut rng).unwrap();
        assert_eq!(s.config().minus_count(), 9);
        // A 3x3 block has 12 broken bonds: E = E_plus + 24.
        let plus = SpinConfig::all_plus(8, 0.7).unwrap().energy();
        assert_eq!(s.config().energy(), plus + 24);
    }
}
