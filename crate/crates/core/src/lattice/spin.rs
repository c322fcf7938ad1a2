use std::fmt;

use crate::error::{Error, Result};

/// Spins surrounding the `L × L` box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Every external neighbor is a fixed `+1`.
    Plus,
    /// No external neighbors. Only used for symmetry checks.
    Free,
}

impl Boundary {
    fn ghost(self) -> i8 {
        match self {
            Boundary::Plus => 1,
            Boundary::Free => 0,
        }
    }
}

/// `L × L` Ising configuration stored with a one-site frame of ghost spins,
/// so every interior site has four neighbors in the buffer.
#[derive(Clone, PartialEq)]
pub struct SpinConfig {
    l: usize,
    beta: f64,
    boundary: Boundary,
    spins: Vec<i8>,
    magnetization: i64,
    /// `min(1, exp(-β ΔE))` indexed by `ΔE + 16; pair exchanges reach |ΔE| = 16`.
    acceptance: [f64; 33],
}

impl fmt::Debug for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpinConfig")
            .field("l", &self.l)
            .field("beta", &self.beta)
            .field("boundary", &self.boundary)
            .field("magnetization", &self.magnetization)
            .finish()
    }
}

impl SpinConfig {
    pub fn uniform(l: usize, beta: f64, boundary: Boundary, spin: i8) -> Result<Self> {
        if l == 0 {
            return Err(Error::Domain("lattice side must be positive".into()));
        }
        if spin != 1 && spin != -1 {
            return Err(Error::Domain(format!("spin must be +1 or -1, got {spin}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("beta must be >= 0, got {beta}")));
        }
        let w = l + 2;
        let mut spins = vec![boundary.ghost(); w * w];
        for r in 0..l {
            for c in 0..l {
                spins[(r + 1) * w + c + 1] = spin;
            }
        }
        let mut acceptance = [1.0; 33];
        for (i, a) in acceptance.iter_mut().enumerate() {
            let de = i as f64 - 16.0;
            *a = (-beta * de).exp().min(1.0);
        }
        Ok(Self {
            l,
            beta,
            boundary,
            spins,
            magnetization: spin as i64 * (l * l) as i64,
            acceptance,
        })
    }

    pub fn all_plus(l: usize, beta: f64) -> Result<Self> {
        Self::uniform(l, beta, Boundary::Plus, 1)
    }

    /// Builds a configuration from row-major `±1` values.
    pub fn from_spins(l: usize, beta: f64, boundary: Boundary, values: &[i8]) -> Result<Self> {
        if values.len() != l * l {
            return Err(Error::Domain(format!("expected {} spins, got {}", l * l, values.len())));
        }
        let mut cfg = Self::uniform(l, beta, boundary, 1)?;
        for (i, &s) in values.iter().enumerate() {
            if s != 1 && s != -1 {
                return Err(Error::Domain(format!("spin must be +1 or -1, got {s}")));
            }
            if s == -1 {
                cfg.flip(cfg.padded(i / l, i % l));
            }
        }
        Ok(cfg)
    }

    /// Parses the fixture format: one row per line, `+` and `-` characters.
    pub fn from_grid_text(text: &str, beta: f64) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|r| !r.is_empty() && !r.starts_with('#'))
            .collect();
        let l = rows.len();
        let mut values = Vec::with_capacity(l * l);
        for (i, row) in rows.iter().enumerate() {
            let cells: Vec<char> = row.chars().filter(|c| !c.is_whitespace()).collect();
            if cells.len() != l {
                return Err(Error::Parse(format!(
                    "grid row {} has {} cells, expected {l}",
                    i + 1,
                    cells.len()
                )));
            }
            for c in cells {
                values.push(match c {
                    '+' => 1,
                    '-' => -1,
                    other => return Err(Error::Parse(format!("unexpected grid character {other:?}"))),
                });
            }
        }
        Self::from_spins(l, beta, Boundary::Plus, &values)
    }

    pub fn to_grid_text(&self) -> String {
        let mut s = String::with_capacity(self.l * (self.l + 1));
        for r in 0..self.l {
            for c in 0..self.l {
                s.push(if self.get(r, c) > 0 { '+' } else { '-' });
            }
            s.push('\n');
        }
        s
    }

    pub fn side(&self) -> usize {
        self.l
    }

    pub fn sites(&self) -> usize {
        self.l * self.l
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Cached total magnetization `M_L`.
    pub fn magnetization(&self) -> i64 {
        self.magnetization
    }

    pub fn minus_count(&self) -> usize {
        ((self.sites() as i64 - self.magnetization) / 2) as usize
    }

    pub fn recompute_magnetization(&self) -> i64 {
        self.interior().map(|p| self.spins[p] as i64).sum()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i8 {
        self.spins[self.padded(r, c)]
    }

    /// Row-major interior spins.
    pub fn to_spins(&self) -> Vec<i8> {
        self.interior().map(|p| self.spins[p]).collect()
    }

    #[inline]
    pub(crate) fn padded(&self, r: usize, c: usize) -> usize {
        (r + 1) * (self.l + 2) + c + 1
    }

    pub(crate) fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        let w = self.l + 2;
        (1..=self.l).flat_map(move |r| (1..=self.l).map(move |c| r * w + c))
    }

    #[inline]
    pub(crate) fn spin_at(&self, p: usize) -> i8 {
        self.spins[p]
    }

    #[inline]
    pub(crate) fn neighbors(&self, p: usize) -> [usize; 4] {
        let w = self.l + 2;
        [p - 1, p + 1, p - w, p + w]
    }

    #[inline]
    pub(crate) fn is_interior(&self, p: usize) -> bool {
        let (w, l) = (self.l + 2, self.l);
        let (r, c) = (p / w, p % w);
        r >= 1 && r <= l && c >= 1 && c <= l
    }

    /// Energy change of flipping the spin at padded index `p`.
    #[inline]
    pub(crate) fn flip_cost(&self, p: usize) -> i32 {
        let w = self.l + 2;
        let s = &self.spins;
        let h = s[p - 1] as i32 + s[p + 1] as i32 + s[p - w] as i32 + s[p + w] as i32;
        2 * s[p] as i32 * h
    }

    #[inline]
    pub(crate) fn acceptance(&self, delta_e: i32) -> f64 {
        self.acceptance[(delta_e + 16) as usize]
    }

    #[inline]
    pub(crate) fn flip(&mut self, p: usize) {
        let s = -self.spins[p];
        self.spins[p] = s;
        self.magnetization += 2 * s as i64;
    }

    /// `H = -Σ σ_x σ_y` over nearest-neighbor pairs, including bonds to the
    /// fixed external spins.
    pub fn energy(&self) -> i64 {
        let w = self.l + 2;
        let mut e = 0i64;
        for r in 0..self.l + 1 {
            for c in 0..self.l + 1 {
                let p = r * w + c;
                let here = self.spins[p] as i64;
                // Bond to the right and bond downwards, skipping ghost-ghost pairs.
                if r >= 1 {
                    e -= here * self.spins[p + 1] as i64;
                }
                if c >= 1 {
                    e -= here * self.spins[p + w] as i64;
                }
            }
        }
        e
    }
}
