//! Python bindings for the pulsed Brownian oscillator toolkit.
//!
//! The module mirrors the core crate's main types and operations: spectral
//! densities with their kernels, pulse trains, the exact Gaussian propagation
//! with qubit readout, the analytic dephasing branch, and the scenario runner
//! behind the figure presets. Validation failures raise ValueError, numerical
//! failures (divergent integrals, caustics, unphysical states) raise
//! RuntimeError, matching the CLI exit codes 1 and 2.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use esbm::environment::{BathKernels, SamplingScheme};
use esbm::propagator::{effective_params, solve, SystemParams, TimeGrid};
use esbm::state::{evolve_initial, vacuum_cov, GaussianMoments, InitialState};
use esbm::{dephasing, pulses, scenario};

fn err(e: esbm::Error) -> PyErr {
    match e.exit_code() {
        1 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix_rows(m: &nalgebra::Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Continuum bath description I(omega) = 2 M gamma omega^nu exp(-omega/uv),
/// zero below the infrared cutoff. Frequencies in angular GHz, temperature in
/// the same units (hbar = k_B = 1); multiply mK by GHZ_PER_MK to convert.
#[pyclass(name = "SpectralDensity", frozen)]
#[derive(Clone)]
struct PySpectralDensity {
    inner: esbm::environment::SpectralDensity,
}

#[pymethods]
impl PySpectralDensity {
    #[new]
    #[pyo3(signature = (exponent, coupling, uv_cutoff, ir_cutoff = 0.0, mass = 1.0, temperature = 0.0))]
    fn new(
        exponent: f64,
        coupling: f64,
        uv_cutoff: f64,
        ir_cutoff: f64,
        mass: f64,
        temperature: f64,
    ) -> PyResult<Self> {
        let inner =
            esbm::environment::SpectralDensity::new(exponent, coupling, uv_cutoff, ir_cutoff, mass, temperature)
                .map_err(err)?;
        Ok(PySpectralDensity { inner })
    }

    #[getter]
    fn exponent(&self) -> f64 {
        self.inner.exponent
    }

    #[getter]
    fn coupling(&self) -> f64 {
        self.inner.coupling
    }

    #[getter]
    fn uv_cutoff(&self) -> f64 {
        self.inner.uv_cutoff
    }

    #[getter]
    fn ir_cutoff(&self) -> f64 {
        self.inner.ir_cutoff
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.inner.mass
    }

    #[getter]
    fn temperature(&self) -> f64 {
        self.inner.temperature
    }

    /// I(omega); zero below the infrared cutoff.
    fn value(&self, omega: f64) -> PyResult<f64> {
        self.inner.value(omega).map_err(err)
    }

    /// Dissipation kernel mu(t) = -(1/pi) int I(omega) sin(omega t) domega.
    fn dissipation_kernel(&self, t: f64) -> PyResult<f64> {
        self.inner.dissipation_kernel(t).map_err(err)
    }

    /// Noise kernel nu(t) = (1/pi) int I(omega) coth(omega/2T) cos(omega t).
    fn noise_kernel(&self, t: f64) -> PyResult<f64> {
        self.inner.noise_kernel(t).map_err(err)
    }

    /// Frequency-squared shift (2/pi) int I(omega)/omega domega that the
    /// counterterm cancels.
    fn counterterm_frequency(&self) -> PyResult<f64> {
        self.inner.counterterm_frequency().map_err(err)
    }

    /// Discretize into `count` oscillators; returns (frequency, mass,
    /// coupling) triples. `scheme` is "linear" or "log".
    #[pyo3(signature = (count, scheme = "linear"))]
    fn sample_modes(&self, count: usize, scheme: &str) -> PyResult<Vec<(f64, f64, f64)>> {
        let scheme = match scheme {
            "linear" => SamplingScheme::Linear,
            "log" => SamplingScheme::Log,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown sampling scheme `{other}` (expected linear or log)"
                )))
            }
        };
        let modes = self.inner.sample_modes(count, scheme).map_err(err)?;
        Ok(modes.iter().map(|m| (m.frequency, m.mass, m.coupling)).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "SpectralDensity(exponent={}, coupling={}, uv_cutoff={}, ir_cutoff={}, mass={}, temperature={})",
            self.inner.exponent,
            self.inner.coupling,
            self.inner.uv_cutoff,
            self.inner.ir_cutoff,
            self.inner.mass,
            self.inner.temperature
        )
    }
}

/// Periodic kick schedule: kick_angle on [0, interval), 0 on
/// [interval, 2 interval), repeating. Exact propagation requires odd-pi kicks.
#[pyclass(name = "PulseTrain", frozen)]
#[derive(Clone)]
struct PyPulseTrain {
    inner: pulses::PulseTrain,
}

#[pymethods]
impl PyPulseTrain {
    #[new]
    fn new(strength: f64, duration: f64, interval: f64, kick_angle: f64) -> PyResult<Self> {
        Ok(PyPulseTrain {
            inner: pulses::PulseTrain::new(strength, duration, interval, kick_angle).map_err(err)?,
        })
    }

    /// Idealized instantaneous pi-kick train with the given half-period.
    #[staticmethod]
    fn pi_train(interval: f64) -> PyResult<Self> {
        Ok(PyPulseTrain { inner: pulses::PulseTrain::pi_train(interval).map_err(err)? })
    }

    /// No pulses; free evolution.
    #[staticmethod]
    fn disabled() -> Self {
        PyPulseTrain { inner: pulses::PulseTrain::disabled() }
    }

    #[getter]
    fn interval(&self) -> f64 {
        self.inner.interval
    }

    #[getter]
    fn kick_angle(&self) -> f64 {
        self.inner.kick_angle
    }

    #[getter]
    fn enabled(&self) -> bool {
        self.inner.enabled
    }

    /// True when the kick angle is an odd multiple of pi.
    fn is_odd_pi(&self) -> bool {
        self.inner.is_odd_pi()
    }

    /// Dimensionless pulse rate eta = uv_cutoff * interval / pi.
    fn eta(&self, uv_cutoff: f64) -> f64 {
        self.inner.eta(uv_cutoff)
    }

    fn __repr__(&self) -> String {
        if self.inner.enabled {
            format!(
                "PulseTrain(interval={}, kick_angle={})",
                self.inner.interval, self.inner.kick_angle
            )
        } else {
            "PulseTrain.disabled()".to_string()
        }
    }
}

/// Reduced Gaussian channel at the final time: phase-space transport matrix,
/// accumulated noise matrix, and the ladder scale fixing the readout basis.
#[pyclass(name = "Evolution", frozen)]
struct PyEvolution {
    map: esbm::propagator::AffineGaussianMap,
    ladder: f64,
}

impl PyEvolution {
    fn density(&self, initial: &str, cap: usize) -> PyResult<esbm::state::FockDensity> {
        let state: InitialState = initial.parse().map_err(err)?;
        evolve_initial(state, &self.map, self.ladder, cap).map_err(err)
    }
}

#[pymethods]
impl PyEvolution {
    #[getter]
    fn transport(&self) -> [[f64; 2]; 2] {
        matrix_rows(&self.map.transport)
    }

    #[getter]
    fn noise(&self) -> [[f64; 2]; 2] {
        matrix_rows(&self.map.noise)
    }

    #[getter]
    fn ladder(&self) -> f64 {
        self.ladder
    }

    /// Push a Gaussian (mean, covariance) through the channel.
    fn apply(
        &self,
        mean: (f64, f64),
        cov: ((f64, f64), (f64, f64)),
    ) -> ((f64, f64), [[f64; 2]; 2]) {
        let m0 = nalgebra::Vector2::new(mean.0, mean.1);
        let c0 = nalgebra::Matrix2::new(cov.0 .0, cov.0 .1, cov.1 .0, cov.1 .1);
        let (m, c) = self.map.apply(&m0, &c0);
        ((m[0], m[1]), matrix_rows(&c))
    }

    /// Uncertainty measure A^2 = det cov of the evolved vacuum; 1/4 is the
    /// minimum-uncertainty floor.
    fn uncertainty(&self) -> PyResult<f64> {
        let (mean, cov) = self.map.apply(&nalgebra::Vector2::zeros(), &vacuum_cov(self.ladder));
        let m = GaussianMoments::from_cov(mean, cov, self.ladder).map_err(err)?;
        let a = m.uncertainty().a;
        Ok(a * a)
    }

    /// Fock populations [rho_00, ..., rho_cap,cap] of the evolved initial
    /// state ("ground", "excited", or "superposition").
    #[pyo3(signature = (initial, cap = 8))]
    fn populations(&self, initial: &str, cap: usize) -> PyResult<Vec<f64>> {
        let rho = self.density(initial, cap)?;
        Ok((0..=cap).map(|k| rho.population(k)).collect())
    }

    /// Pauli expectations (sx, sy, sz) of the two lowest levels.
    #[pyo3(signature = (initial, cap = 8))]
    fn pauli(&self, initial: &str, cap: usize) -> PyResult<(f64, f64, f64)> {
        self.density(initial, cap)?.pauli().map_err(err)
    }

    /// Population outside the qubit pair, 1 - rho_00 - rho_11.
    #[pyo3(signature = (initial, cap = 8))]
    fn leakage(&self, initial: &str, cap: usize) -> PyResult<f64> {
        self.density(initial, cap)?.leakage().map_err(err)
    }

    /// Decay factor -ln rho_11 of the first excited level.
    #[pyo3(signature = (initial, cap = 8))]
    fn decay_factor(&self, initial: &str, cap: usize) -> PyResult<f64> {
        self.density(initial, cap)?.decay_factor().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Evolution(transport={:?}, noise={:?}, ladder={})",
            matrix_rows(&self.map.transport),
            matrix_rows(&self.map.noise),
            self.ladder
        )
    }
}

/// Solve the reduced dynamics of an oscillator with frequency `omega` and
/// mass `mass` coupled to the bath, evolved to `t_final` on `steps` grid
/// points under the pulse train. `nbath` > 0 replaces the continuum kernels
/// with that many linearly sampled oscillators. `counterterms` cancels the
/// bath-induced frequency shift; `field` applies the constant control V.
#[pyfunction]
#[pyo3(signature = (sd, train, t_final, steps, omega = 1.0, mass = 1.0, counterterms = false, field = 0.0, nbath = 0))]
#[allow(clippy::too_many_arguments)]
fn solve_evolution(
    sd: &PySpectralDensity,
    train: &PyPulseTrain,
    t_final: f64,
    steps: usize,
    omega: f64,
    mass: f64,
    counterterms: bool,
    field: f64,
    nbath: usize,
) -> PyResult<PyEvolution> {
    let sys = SystemParams::new(omega, mass)
        .map_err(err)?
        .with_counterterms(counterterms)
        .with_constant_field(field);
    let bath = if nbath > 0 {
        BathKernels::Modes {
            modes: sd.inner.sample_modes(nbath, SamplingScheme::Linear).map_err(err)?,
            temperature: sd.inner.temperature,
        }
    } else {
        BathKernels::Continuum(sd.inner)
    };
    let grid = TimeGrid::new(t_final, steps).map_err(err)?;
    let eff = effective_params(&sys, &bath).map_err(err)?;
    let solution = solve(&sys, &bath, &train.inner, &grid).map_err(err)?;
    Ok(PyEvolution { map: solution.as_map(), ladder: eff.ladder })
}

/// Pure-dephasing exponent D after `pairs` flip pairs of half-period
/// `interval`. Returns None when the filter resonates with an in-band
/// frequency and the exponent diverges. `nbath` > 0 uses a discrete-mode sum.
#[pyfunction]
#[pyo3(signature = (sd, interval, pairs, nbath = 0))]
fn dephasing_exponent(
    sd: &PySpectralDensity,
    interval: f64,
    pairs: usize,
    nbath: usize,
) -> PyResult<Option<f64>> {
    let mut cfg = dephasing::DephasingConfig::new(sd.inner, interval, pairs).map_err(err)?;
    if nbath > 0 {
        cfg = cfg.mode(dephasing::FilterMode::Discrete(nbath));
    }
    Ok(dephasing::dephasing_exponent(&cfg).map_err(err)?.value())
}

/// Flip-free dephasing exponent at total time `t_final`.
#[pyfunction]
#[pyo3(signature = (sd, t_final, nbath = 0))]
fn free_dephasing_exponent(sd: &PySpectralDensity, t_final: f64, nbath: usize) -> PyResult<f64> {
    let mut cfg = dephasing::DephasingConfig::new(sd.inner, 0.5 * t_final, 1).map_err(err)?;
    if nbath > 0 {
        cfg = cfg.mode(dephasing::FilterMode::Discrete(nbath));
    }
    dephasing::free_exponent(&cfg).map_err(err)
}

/// True when the flip train pumps this frequency instead of averaging it
/// away: tan^2(omega * interval / 2) > 1.
#[pyfunction]
fn in_enhancement_band(omega: f64, interval: f64) -> bool {
    dephasing::in_enhancement_band(omega, interval)
}

/// Pulse interval realizing eta = uv_cutoff * interval / pi.
#[pyfunction]
fn interval_for_eta(uv_cutoff: f64, eta: f64) -> f64 {
    pulses::interval_for_eta(uv_cutoff, eta)
}

/// Available figure preset names.
#[pyfunction]
fn preset_names() -> Vec<String> {
    scenario::PRESET_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Editable config text of a figure preset.
#[pyfunction]
fn preset_config(name: &str) -> PyResult<String> {
    Ok(scenario::print_config(&scenario::figure_presets(name).map_err(err)?))
}

/// Run a figure preset; returns (csv, warnings).
#[pyfunction]
fn run_preset(name: &str) -> PyResult<(String, Vec<String>)> {
    let artifact = scenario::run_scenario(&scenario::figure_presets(name).map_err(err)?).map_err(err)?;
    Ok((artifact.csv, artifact.warnings))
}

/// Run a scenario from config text (line-based key = value, or JSON when the
/// text starts with "{"); returns (csv, warnings).
#[pyfunction]
fn run_config(text: &str) -> PyResult<(String, Vec<String>)> {
    let artifact = scenario::run_scenario(&scenario::parse_config(text).map_err(err)?).map_err(err)?;
    Ok((artifact.csv, artifact.warnings))
}

#[pymodule]
fn esbm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("GHZ_PER_MK", esbm::GHZ_PER_MK)?;
    m.add_class::<PySpectralDensity>()?;
    m.add_class::<PyPulseTrain>()?;
    m.add_class::<PyEvolution>()?;
    m.add_function(wrap_pyfunction!(solve_evolution, m)?)?;
    m.add_function(wrap_pyfunction!(dephasing_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(free_dephasing_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(in_enhancement_band, m)?)?;
    m.add_function(wrap_pyfunction!(interval_for_eta, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
