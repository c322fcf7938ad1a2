//! Exact thermodynamic inputs for the square-lattice Ising model (`J = 1`)
//! and a numerical Wulff construction.
//!
//! Interface tensions are in energy units; multiply by `β` for the reduced
//! (dimensionless) values that enter Boltzmann exponents.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub const DEFAULT_RESOLUTION: usize = 4096;
pub const MIN_RESOLUTION: usize = 16;

/// Self-dual point `½ ln(1 + √2)`.
pub fn beta_critical() -> f64 {
    0.5 * (1.0 + 2f64.sqrt()).ln()
}

/// Spontaneous magnetization `(1 - sinh(2β)^{-4})^{1/8}`, zero for `β ≤ β_c`.
pub fn m_star(beta: f64) -> f64 {
    if !(beta > beta_critical()) {
        return 0.0;
    }
    let s = (2.0 * beta).sinh();
    let bracket = 1.0 - s.powi(-4);
    if bracket <= 0.0 {
        0.0
    } else {
        bracket.powf(0.125)
    }
}

fn check_ordered(beta: f64) -> Result<()> {
    if !(beta > beta_critical() && beta.is_finite()) {
        return domain(format!("beta = {beta} is not above beta_c = {}", beta_critical()));
    }
    Ok(())
}

/// Level of the exact equilibrium crystal shape
/// `cosh(βx) + cosh(βy) = cosh²(2β)/sinh(2β)`.
fn shape_level(beta: f64) -> f64 {
    let c2 = (2.0 * beta).cosh();
    c2 * c2 / (2.0 * beta).sinh()
}

/// Reduced interface tension `βτ(θ)` for the interface with normal angle `θ`.
///
/// `βτ(θ) = |cos θ| asinh(α|cos θ|) + |sin θ| asinh(α|sin θ|)` where `α`
/// solves `√(1 + α² cos²θ) + √(1 + α² sin²θ) = cosh²(2β)/sinh(2β)`.
pub fn reduced_tau_ising(beta: f64, theta: f64) -> Result<f64> {
    check_ordered(beta)?;
    let level = shape_level(beta);
    let (c, s) = (theta.cos().abs(), theta.sin().abs());
    let q = (s * s - c * c).powi(2);
    let excess = level * level - 4.0;
    // Smaller root of q u² - 2C² u + C²(C² - 4) = 0, u = α², rationalized.
    let alpha_sq = level * excess / (level + (level * level - q * excess).sqrt());
    let alpha = alpha_sq.max(0.0).sqrt();
    Ok(c * (alpha * c).asinh() + s * (alpha * s).asinh())
}

/// Interface tension `τ(θ)` in energy units.
pub fn tau_ising(beta: f64, theta: f64) -> Result<f64> {
    Ok(reduced_tau_ising(beta, theta)? / beta)
}

/// Point symmetry declared by a tension function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    None,
    /// Invariant under `θ → θ + π/2` and `θ → -θ`.
    Square,
    Isotropic,
}

/// Interface tension as a function of the normal angle.
#[derive(Debug, Clone, PartialEq)]
pub enum TauFunction {
    Isotropic(f64),
    Ising { beta: f64 },
    /// Periodic piecewise-linear interpolation of `(θ, τ)` samples sorted by
    /// angle in `[0, 2π)`.
    Sampled { thetas: Vec<f64>, values: Vec<f64>, symmetry: Symmetry },
}

impl TauFunction {
    pub fn ising(beta: f64) -> Result<Self> {
        check_ordered(beta)?;
        Ok(Self::Ising { beta })
    }

    pub fn sampled(mut samples: Vec<(f64, f64)>, symmetry: Symmetry) -> Result<Self> {
        if samples.len() < 3 {
            return domain("a sampled tension needs at least 3 points");
        }
        for s in samples.iter_mut() {
            if !(s.1 > 0.0 && s.1.is_finite() && s.0.is_finite()) {
                return domain(format!("tension must be positive and finite, got {:?}", s));
            }
            s.0 = s.0.rem_euclid(TAU);
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if samples.windows(2).any(|w| w[1].0 - w[0].0 <= 0.0) {
            return domain("duplicate angles in tension table");
        }
        let (thetas, values) = samples.into_iter().unzip();
        Ok(Self::Sampled { thetas, values, symmetry })
    }

    /// Reads a whitespace- or comma-separated `theta_radians tau` table.
    /// Blank lines and lines starting with `#` are skipped, as is a header
    /// line that does not parse as numbers.
    pub fn from_table_file(path: &Path, symmetry: Symmetry) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> =
                line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
            let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
            match parsed {
                Some(v) if v.len() == 2 => samples.push((v[0], v[1])),
                None if samples.is_empty() => continue,
                _ => {
                    return Err(Error::Parse(format!(
                        "{}:{}: expected two numbers, got {line:?}",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Self::sampled(samples, symmetry)
    }

    pub fn symmetry(&self) -> Symmetry {
        match self {
            Self::Isotropic(_) => Symmetry::Isotropic,
            Self::Ising { .. } => Symmetry::Square,
            Self::Sampled { symmetry, .. } => *symmetry,
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            Self::Isotropic(t) => *t,
            Self::Ising { beta } => {
                reduced_tau_ising(*beta, theta).expect("beta validated on construction") / beta
            }
            Self::Sampled { thetas, values, .. } => {
                let t = theta.rem_euclid(TAU);
                let n = thetas.len();
                let hi = thetas.partition_point(|&x| x <= t);
                let (i0, i1) = if hi == 0 || hi == n { (n - 1, 0) } else { (hi - 1, hi) };
                let mut span = thetas[i1] - thetas[i0];
                let mut offset = t - thetas[i0];
                if span <= 0.0 {
                    span += TAU;
                }
                if offset < 0.0 {
                    offset += TAU;
                }
                let w = offset / span;
                values[i0] * (1.0 - w) + values[i1] * w
            }
        }
    }

    /// Scales the tension by a positive constant.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return domain(format!("scale factor must be positive, got {factor}"));
        }
        Ok(match self {
            Self::Isotropic(t) => Self::Isotropic(t * factor),
            Self::Ising { .. } => {
                let thetas: Vec<f64> =
                    (0..DEFAULT_RESOLUTION).map(|i| TAU * i as f64 / DEFAULT_RESOLUTION as f64).collect();
                let values = thetas.iter().map(|&t| self.eval(t) * factor).collect();
                Self::Sampled { thetas, values, symmetry: Symmetry::Square }
            }
            Self::Sampled { thetas, values, symmetry } => Self::Sampled {
                thetas: thetas.clone(),
                values: values.iter().map(|v| v * factor).collect(),
                symmetry: *symmetry,
            },
        })
    }
}

/// Convex polygon approximating `{x : x·n̂(θ) ≤ τ(θ) for all θ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WulffShape {
    /// Counter-clockwise vertices.
    pub vertices: Vec<[f64; 2]>,
    pub area: f64,
    /// `Σ τ(θ_i) |edge_i|`.
    pub boundary_energy: f64,
}

impl WulffShape {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(out, "x,y")?;
        for [x, y] in &self.vertices {
            writeln!(out, "{x:.16e},{y:.16e}")?;
        }
        out.flush()?;
        Ok(())
    }
}

struct HalfPlane {
    cos: f64,
    sin: f64,
    offset: f64,
}

impl HalfPlane {
    fn meet(&self, other: &HalfPlane) -> [f64; 2] {
        let det = self.cos * other.sin - self.sin * other.cos;
        [
            (self.offset * other.sin - other.offset * self.sin) / det,
            (self.cos * other.offset - other.cos * self.offset) / det,
        ]
    }

    fn excludes(&self, p: [f64; 2]) -> bool {
        self.cos * p[0] + self.sin * p[1] > self.offset * (1.0 + 1e-13) + 1e-300
    }
}

/// Intersects the half-planes `x·n̂(θ_i) ≤ τ(θ_i)` on a uniform angular grid.
pub fn wulff_construct(tau: &TauFunction, resolution: usize) -> Result<WulffShape> {
    if resolution < MIN_RESOLUTION {
        return domain(format!("resolution must be >= {MIN_RESOLUTION}, got {resolution}"));
    }
    let planes: Vec<HalfPlane> = (0..resolution)
        .map(|i| {
            let theta = TAU * i as f64 / resolution as f64;
            HalfPlane { cos: theta.cos(), sin: theta.sin(), offset: tau.eval(theta) }
        })
        .collect();
    if let Some(p) = planes.iter().find(|p| !(p.offset > 0.0 && p.offset.is_finite())) {
        return domain(format!("tension must be positive, got {}", p.offset));
    }

    // Angle-sorted deque intersection.
    let mut dq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for (k, plane) in planes.iter().enumerate() {
        while dq.len() >= 2 && plane.excludes(planes[dq[dq.len() - 2]].meet(&planes[dq[dq.len() - 1]])) {
            dq.pop_back();
        }
        while dq.len() >= 2 && plane.excludes(planes[dq[0]].meet(&planes[dq[1]])) {
            dq.pop_front();
        }
        dq.push_back(k);
    }
    while dq.len() >= 3 && planes[dq[0]].excludes(planes[dq[dq.len() - 2]].meet(&planes[dq[dq.len() - 1]])) {
        dq.pop_back();
    }
    while dq.len() >= 3 && planes[dq[dq.len() - 1]].excludes(planes[dq[0]].meet(&planes[dq[1]])) {
        dq.pop_front();
    }
    if dq.len() < 3 {
        return Err(Error::DegenerateShape(format!("only {} active half-planes", dq.len())));
    }

    let active: Vec<&HalfPlane> = dq.iter().map(|&i| &planes[i]).collect();
    let m = active.len();
    let vertices: Vec<[f64; 2]> = (0..m).map(|i| active[i].meet(active[(i + 1) % m])).collect();
    let mut area = 0.0;
    let mut boundary_energy = 0.0;
    for i in 0..m {
        let [x0, y0] = vertices[(i + m - 1) % m];
        let [x1, y1] = vertices[i];
        area += 0.5 * (x0 * y1 - x1 * y0);
        // Edge i (between vertices i-1 and i) lies on active plane i.
        boundary_energy += active[i].offset * ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
    }
    if !(area > 0.0) || vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
        return Err(Error::DegenerateShape(format!("polygon area {area}")));
    }
    Ok(WulffShape { vertices, area, boundary_energy })
}

/// Surface free energy of the unit-area Wulff droplet, `2 √|K_τ|`.
pub fn tau_w_unit_volume(shape: &WulffShape) -> f64 {
    2.0 * shape.area.sqrt()
}

/// Thermodynamic inputs of the plus phase at inverse temperature `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingThermo {
    pub beta: f64,
    pub beta_c: f64,
    pub m_star: f64,
    /// `τ(0)` in energy units.
    pub tau_axis: f64,
    /// Unit-area Wulff energy in energy units; see [`IsingThermo::reduced_tau_w`].
    pub tau_w: f64,
    /// `Var(M_L)/|Λ_L|` under the plus-boundary Gibbs measure.
    pub chi: Option<f64>,
}

impl IsingThermo {
    pub fn exact(beta: f64, resolution: usize) -> Result<Self> {
        let tau = TauFunction::ising(beta)?;
        let shape = wulff_construct(&tau, resolution)?;
        Ok(Self {
            beta,
            beta_c: beta_critical(),
            m_star: m_star(beta),
            tau_axis: tau_ising(beta, 0.0)?,
            tau_w: tau_w_unit_volume(&shape),
            chi: None,
        })
    }

    pub fn with_chi(mut self, chi: f64) -> Result<Self> {
        if !(chi > 0.0 && chi.is_finite()) {
            return domain(format!("chi must be positive, got {chi}"));
        }
        self.chi = Some(chi);
        Ok(self)
    }

    /// `β τ_W`: the Wulff constant as it appears in probability exponents.
    pub fn reduced_tau_w(&self) -> f64 {
        self.beta * self.tau_w
    }

    pub fn require_chi(&self) -> Result<f64> {
        self.chi.ok_or_else(|| Error::Config("susceptibility chi has not been supplied".into()))
    }
}

/// Boundary cost of the unit-area disc under `tau`.
pub fn disc_cost(tau: &TauFunction, samples: usize) -> f64 {
    let r = 1.0 / PI.sqrt();
    let h = TAU / samples as f64;
    (0..samples).map(|i| tau.eval(h * i as f64)).sum::<f64>() * h * r
}

/// Boundary cost of the unit-area square rotated by `angle`.
pub fn square_cost(tau: &TauFunction, angle: f64) -> f64 {
    (0..4).map(|k| tau.eval(angle + k as f64 * PI / 2.0)).sum()
}
