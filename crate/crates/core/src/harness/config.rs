use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contour::CensusWindow;
use crate::error::{Error, Result};
use crate::lattice::ExchangeMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Contour census with a validated `(L, K)` window.
    Census,
    /// Droplet fraction `λ̂`.
    Lambda,
    /// Multicanonical `ln p_L` and the rate comparison.
    Logp,
}

/// Sweep budget of one canonical replica, in units of `L²` proposals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub burnin_sweeps: usize,
    pub samples: usize,
    pub cadence_sweeps: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self { burnin_sweeps: 1000, samples: 20, cadence_sweeps: 10 }
    }
}

impl Budget {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.cadence_sweeps == 0 {
            return Err(Error::Config("budget must take at least one sample at a nonzero cadence".into()));
        }
        Ok(())
    }

    pub fn total_sweeps(&self) -> usize {
        self.burnin_sweeps + self.samples * self.cadence_sweeps
    }
}

/// Parameters of the multicanonical stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogpSettings {
    /// Independent runs per lattice size (error bars).
    pub runs: usize,
    pub max_sweeps: usize,
    pub production_sweeps: usize,
    pub check_every_sweeps: usize,
    pub ln_f_final: f64,
    /// Bins kept above the typical magnetization, in units of `sqrt(χ |Λ|)`.
    pub margin_sigmas: f64,
}

impl Default for LogpSettings {
    fn default() -> Self {
        Self {
            runs: 4,
            max_sweeps: 2_000_000,
            production_sweeps: 200_000,
            check_every_sweeps: 100,
            ln_f_final: 1e-6,
            margin_sigmas: 4.0,
        }
    }
}

/// One parameter sweep, read from a flat TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub beta: f64,
    #[serde(rename = "L_list")]
    pub l_list: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_grid: Option<Vec<f64>>,
    #[serde(default, rename = "vL_list", skip_serializing_if = "Option::is_none")]
    pub v_list: Option<Vec<f64>>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_burnin")]
    pub burnin_sweeps: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_cadence")]
    pub cadence_sweeps: usize,
    #[serde(rename = "K_list", default = "default_k_list")]
    pub k_list: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default = "default_exchange")]
    pub exchange: ExchangeMode,
    /// Worker threads; 0 uses the machine's parallelism.
    #[serde(default)]
    pub threads: usize,
    /// Frozen susceptibility. Measured before planning when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(rename = "chi_L", default = "default_chi_l")]
    pub chi_l: usize,
    #[serde(default = "default_chi_burnin")]
    pub chi_burnin_sweeps: usize,
    #[serde(default = "default_chi_sweeps")]
    pub chi_sweeps: usize,
    #[serde(default = "default_resolution")]
    pub wulff_resolution: usize,
    /// Write one raw measurement CSV per replica.
    #[serde(default)]
    pub raw: bool,
    #[serde(default)]
    pub logp: LogpSettings,
}

fn default_replicas() -> usize {
    16
}
fn default_burnin() -> usize {
    Budget::default().burnin_sweeps
}
fn default_samples() -> usize {
    Budget::default().samples
}
fn default_cadence() -> usize {
    Budget::default().cadence_sweeps
}
fn default_k_list() -> Vec<f64> {
    vec![4.0]
}
fn default_modes() -> Vec<Mode> {
    vec![Mode::Lambda]
}
fn default_exchange() -> ExchangeMode {
    ExchangeMode::Nonlocal
}
fn default_chi_l() -> usize {
    64
}
fn default_chi_burnin() -> usize {
    2_000
}
fn default_chi_sweeps() -> usize {
    20_000
}
fn default_resolution() -> usize {
    crate::thermo::DEFAULT_RESOLUTION
}

impl SweepSpec {
    /// A sweep with every optional key at its default.
    pub fn new(beta: f64, l_list: Vec<usize>) -> Self {
        Self {
            beta,
            l_list,
            delta_grid: None,
            v_list: None,
            replicas: default_replicas(),
            burnin_sweeps: default_burnin(),
            samples: default_samples(),
            cadence_sweeps: default_cadence(),
            k_list: default_k_list(),
            seed: 0,
            modes: default_modes(),
            exchange: default_exchange(),
            threads: 0,
            chi: None,
            chi_l: default_chi_l(),
            chi_burnin_sweeps: default_chi_burnin(),
            chi_sweeps: default_chi_sweeps(),
            wulff_resolution: default_resolution(),
            raw: false,
            logp: LogpSettings::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn budget(&self) -> Budget {
        Budget { burnin_sweeps: self.burnin_sweeps, samples: self.samples, cadence_sweeps: self.cadence_sweeps }
    }

    pub fn has_mode(&self, mode: Mode) -> bool {
        self.modes.contains(&mode)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.beta > crate::thermo::beta_critical() && self.beta.is_finite()) {
            return bad(format!("beta = {} must exceed beta_c", self.beta));
        }
        if self.l_list.is_empty() || self.l_list.iter().any(|&l| l < 2) {
            return bad("L_list must be nonempty with every L >= 2".into());
        }
        match (&self.delta_grid, &self.v_list) {
            (Some(_), Some(_)) => return bad("delta_grid and vL_list are mutually exclusive".into()),
            (None, None) => return bad("one of delta_grid or vL_list is required".into()),
            (Some(g), None) => {
                if g.is_empty() || g.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return bad("delta_grid must be nonempty and positive".into());
                }
            }
            (None, Some(v)) => {
                if v.is_empty() || v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return bad("vL_list must be nonempty and positive".into());
                }
            }
        }
        if self.replicas == 0 {
            return bad("replicas must be >= 1".into());
        }
        if self.modes.is_empty() {
            return bad("modes must name at least one of census, lambda, logp".into());
        }
        if self.k_list.is_empty() || self.k_list.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return bad("K_list must be nonempty and positive".into());
        }
        if self.has_mode(Mode::Census) {
            for &l in &self.l_list {
                for &k in &self.k_list {
                    CensusWindow::new(l, k)?.validate()?;
                }
            }
        }
        if self.has_mode(Mode::Census) || self.has_mode(Mode::Lambda) {
            self.budget().validate()?;
        }
        if let Some(chi) = self.chi {
            if !(chi > 0.0 && chi.is_finite()) {
                return bad(format!("chi must be positive, got {chi}"));
            }
        }
        if self.logp.runs == 0 {
            return bad("logp.runs must be >= 1".into());
        }
        Ok(())
    }
}
