//! Python bindings: the theory functions, exact Ising inputs, the
//! fixed-magnetization sampler, contour analysis and parameter sweeps.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use droplet_core::contour::{extract_contours as extract, CensusWindow, Contour, ContourCensus};
use droplet_core::harness::{run_sweep as run, SweepSpec};
use droplet_core::lattice::{CanonicalConstraint, CanonicalSampler, ExchangeMode, InitMode, SpinConfig};
use droplet_core::rng::RngStream;
use droplet_core::{theory, thermo, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Checkpoint(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn from_json<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

#[pyfunction]
fn phi(d: u32, delta: f64, lam: f64) -> PyResult<f64> {
    theory::phi(d, delta, lam).map_err(py_err)
}

#[pyfunction]
fn critical_delta(d: u32) -> PyResult<f64> {
    theory::critical_delta(d).map_err(py_err)
}

#[pyfunction]
fn critical_lambda(d: u32) -> PyResult<f64> {
    theory::critical_lambda(d).map_err(py_err)
}

/// Returns a dict with `lambda_star`, `phi_value`, `degenerate` and the
/// barrier (or `None`).
#[pyfunction]
fn minimize_phi(py: Python<'_>, d: u32, delta: f64) -> PyResult<Bound<'_, PyDict>> {
    let m = theory::minimize_phi(d, delta).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("lambda_star", m.lambda_star)?;
    out.set_item("phi_value", m.phi_value)?;
    out.set_item("degenerate", m.degenerate)?;
    out.set_item("barrier_lambda", m.barrier_lambda)?;
    out.set_item("barrier_value", m.barrier_value)?;
    Ok(out)
}

/// `[(delta, lambda_star, phi_value), ...]`
#[pyfunction]
fn lambda_curve(d: u32, deltas: Vec<f64>) -> PyResult<Vec<(f64, f64, f64)>> {
    let curve = theory::lambda_curve(d, &deltas).map_err(py_err)?;
    Ok(curve.iter().map(|p| (p.delta, p.min.lambda_star, p.min.phi_value)).collect())
}

#[pyfunction]
fn delta_ising(m_star: f64, chi: f64, tau_w: f64, v_l: f64, sites: f64) -> PyResult<f64> {
    theory::delta_ising(m_star, chi, tau_w, v_l, sites).map_err(py_err)
}

#[pyfunction]
fn beta_critical() -> f64 {
    thermo::beta_critical()
}

#[pyfunction]
fn m_star(beta: f64) -> f64 {
    thermo::m_star(beta)
}

#[pyfunction]
fn tau_ising(beta: f64, theta: f64) -> PyResult<f64> {
    thermo::tau_ising(beta, theta).map_err(py_err)
}

/// Wulff polygon of the Ising tension at `beta`, or of a constant tension
/// `isotropic` when given. Returns `(vertices, area, boundary_energy)`.
#[pyfunction]
#[pyo3(signature = (beta=None, isotropic=None, resolution=thermo::DEFAULT_RESOLUTION))]
fn wulff(beta: Option<f64>, isotropic: Option<f64>, resolution: usize) -> PyResult<(Vec<(f64, f64)>, f64, f64)> {
    let tau = match (beta, isotropic) {
        (Some(b), None) => thermo::TauFunction::ising(b).map_err(py_err)?,
        (None, Some(t)) => thermo::TauFunction::Isotropic(t),
        _ => return Err(PyValueError::new_err("give exactly one of beta or isotropic")),
    };
    let shape = thermo::wulff_construct(&tau, resolution).map_err(py_err)?;
    Ok((shape.vertices.iter().map(|v| (v[0], v[1])).collect(), shape.area, shape.boundary_energy))
}

#[pyclass(name = "IsingThermo", frozen)]
struct PyIsingThermo(thermo::IsingThermo);

#[pymethods]
impl PyIsingThermo {
    #[new]
    #[pyo3(signature = (beta, chi=None, resolution=thermo::DEFAULT_RESOLUTION))]
    fn new(beta: f64, chi: Option<f64>, resolution: usize) -> PyResult<Self> {
        let mut t = thermo::IsingThermo::exact(beta, resolution).map_err(py_err)?;
        if let Some(c) = chi {
            t = t.with_chi(c).map_err(py_err)?;
        }
        Ok(Self(t))
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }
    #[getter]
    fn m_star(&self) -> f64 {
        self.0.m_star
    }
    #[getter]
    fn tau_axis(&self) -> f64 {
        self.0.tau_axis
    }
    #[getter]
    fn tau_w(&self) -> f64 {
        self.0.tau_w
    }
    #[getter]
    fn reduced_tau_w(&self) -> f64 {
        self.0.reduced_tau_w()
    }
    #[getter]
    fn chi(&self) -> Option<f64> {
        self.0.chi
    }

    /// `Δ` realized by excess volume `v_l` on an `l × l` box; needs `chi`.
    fn delta(&self, v_l: f64, l: usize) -> PyResult<f64> {
        let chi = self.0.require_chi().map_err(py_err)?;
        theory::delta_ising(self.0.m_star, chi, self.0.reduced_tau_w(), v_l, (l * l) as f64).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("IsingThermo(beta={}, m_star={:.6}, tau_w={:.6}, chi={:?})", self.0.beta, self.0.m_star, self.0.tau_w, self.0.chi)
    }
}

fn contour_dict<'py>(py: Python<'py>, c: &Contour) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("length", c.length)?;
    d.set_item("diameter", c.diameter)?;
    d.set_item("extent_x", c.extent_x)?;
    d.set_item("extent_y", c.extent_y)?;
    d.set_item("volume", c.volume)?;
    d.set_item("enclosed_minus", c.enclosed_minus)?;
    d.set_item("depth", c.depth)?;
    Ok(d)
}

fn census_dict<'py>(py: Python<'py>, census: &ContourCensus) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(census).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let d = from_json(py, &text)?;
    d.set_item("event_a", census.event_a())?;
    d.set_item("event_b", census.event_b())?;
    d.set_item("event_c", census.event_c())?;
    Ok(d)
}

/// Contours of a `+`/`-` grid (plus boundary outside).
#[pyfunction]
fn extract_contours<'py>(py: Python<'py>, grid: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let config = SpinConfig::from_grid_text(grid, 1.0).map_err(py_err)?;
    extract(&config).map_err(py_err)?.iter().map(|c| contour_dict(py, c)).collect()
}

/// Fixed-magnetization Ising sampler on an `L × L` box with plus boundary.
#[pyclass(name = "Sampler")]
struct PySampler {
    sampler: CanonicalSampler,
    rng: RngStream,
    v_l: f64,
}

#[pymethods]
impl PySampler {
    /// The target is the excess volume `v_l`: `M = m* L² - 2 v_l`, rounded to parity.
    #[new]
    #[pyo3(signature = (l, beta, v_l, seed=0, init="random", exchange="nonlocal"))]
    fn new(l: usize, beta: f64, v_l: f64, seed: u64, init: &str, exchange: &str) -> PyResult<Self> {
        let init = match init {
            "random" => InitMode::Random,
            "block" => InitMode::Block,
            other => return Err(PyValueError::new_err(format!("unknown init {other:?}"))),
        };
        let mode = match exchange {
            "nonlocal" => ExchangeMode::Nonlocal,
            "local" => ExchangeMode::Local,
            other => return Err(PyValueError::new_err(format!("unknown exchange {other:?}"))),
        };
        let constraint = CanonicalConstraint::from_excess(l * l, thermo::m_star(beta), v_l).map_err(py_err)?;
        let mut rng = RngStream::new(seed, 0);
        let sampler = CanonicalSampler::initialized(l, beta, &constraint, init, mode, &mut rng).map_err(py_err)?;
        Ok(Self { sampler, rng, v_l: constraint.v_l })
    }

    #[pyo3(signature = (n=1))]
    fn sweep(&mut self, py: Python<'_>, n: usize) {
        let Self { sampler, rng, .. } = self;
        py.detach(|| {
            for _ in 0..n {
                sampler.sweep(rng);
            }
        });
    }

    #[getter]
    fn magnetization(&self) -> i64 {
        self.sampler.config().magnetization()
    }

    #[getter]
    fn energy(&self) -> i64 {
        self.sampler.config().energy()
    }

    #[getter]
    fn v_l(&self) -> f64 {
        self.v_l
    }

    fn spins(&self) -> Vec<Vec<i8>> {
        let l = self.sampler.config().side();
        self.sampler.config().to_spins().chunks(l).map(<[i8]>::to_vec).collect()
    }

    fn grid(&self) -> String {
        self.sampler.config().to_grid_text()
    }

    fn contours<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        extract(self.sampler.config()).map_err(py_err)?.iter().map(|c| contour_dict(py, c)).collect()
    }

    /// Contour census with thresholds `K ln L` and `L^(2/3)/K`, plus the
    /// droplet fraction under key `lambda_hat`.
    #[pyo3(signature = (k=4.0))]
    fn census<'py>(&self, py: Python<'py>, k: f64) -> PyResult<Bound<'py, PyAny>> {
        let config = self.sampler.config();
        let contours = extract(config).map_err(py_err)?;
        let census = ContourCensus::tally(&contours, CensusWindow::new(config.side(), k).map_err(py_err)?);
        let d = census_dict(py, &census)?;
        let constraint = CanonicalConstraint { v_l: self.v_l, target_m: config.magnetization() };
        d.set_item("lambda_hat", droplet_core::contour::droplet_fraction(&census, &constraint).map_err(py_err)?)?;
        Ok(d)
    }
}

/// Runs a sweep from TOML text and writes its outputs under `out_dir`.
/// Returns the parsed `summary.json`.
#[pyfunction]
#[pyo3(signature = (config, out_dir, progress=false))]
fn run_sweep<'py>(py: Python<'py>, config: &str, out_dir: PathBuf, progress: bool) -> PyResult<Bound<'py, PyAny>> {
    let spec = SweepSpec::from_toml_str(config).map_err(py_err)?;
    py.detach(|| run(&spec, &out_dir, progress)).map_err(py_err)?;
    let text = std::fs::read_to_string(out_dir.join("summary.json")).map_err(|e| PyIOError::new_err(e.to_string()))?;
    from_json(py, &text)
}

#[pymodule]
fn droplet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(critical_delta, m)?)?;
    m.add_function(wrap_pyfunction!(critical_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(minimize_phi, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_curve, m)?)?;
    m.add_function(wrap_pyfunction!(delta_ising, m)?)?;
    m.add_function(wrap_pyfunction!(beta_critical, m)?)?;
    m.add_function(wrap_pyfunction!(m_star, m)?)?;
    m.add_function(wrap_pyfunction!(tau_ising, m)?)?;
    m.add_function(wrap_pyfunction!(wulff, m)?)?;
    m.add_function(wrap_pyfunction!(extract_contours, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_class::<PyIsingThermo>()?;
    m.add_class::<PySampler>()?;
    Ok(())
}
