//! Declarative simulation runs and their CSV artifacts.
//!
//! A Scenario bundles one sweep definition (axis, range, point count) with a
//! list of curves, each carrying its own environment, oscillator, and pulse
//! parameters. Running a scenario evaluates every curve at every sweep point
//! and emits one deterministic CSV table: a header row, the sweep value in
//! the first column, then the observable columns per curve. Repeated runs of
//! the same scenario are byte-identical.
//!
//! Sweep points evaluate in parallel, each reusing the per-curve kernel
//! table, which is possible because every axis keeps the grid spacing dt
//! fixed: time sweeps reuse one table across shorter marches, interval and
//! field sweeps share the full grid. Numerical failures at single points
//! (caustics, unphysical truncations) are reported as warnings and leave
//! `nan` cells; they never abort the sweep. Validation failures abort before
//! any point runs and name the offending key.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;
use rayon::prelude::*;

use crate::dephasing::{self, DephasingConfig, Exponent, FilterMode};
use crate::environment::{BathKernels, SamplingScheme, SpectralDensity};
use crate::propagator::{self, effective_params, KernelTable, SystemParams, TimeGrid};
use crate::pulses::{self, PulseTrain};
use crate::state::{self, GaussianMoments, InitialState, DEFAULT_LEVEL_CAP};
use crate::{Error, Result, GHZ_PER_MK};

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), reason: reason.into() }
}

/// What each curve reports at a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Squared phase-space uncertainty A^2 of the evolved vacuum.
    Uncertainty,
    /// Ground and first-excited occupations p0, p1.
    Populations,
    /// |rho01(t)| from the analytic dephasing filter, initial value 1/2.
    Coherence,
    /// Qubit-block Pauli expectations sx, sy, sz.
    Pauli,
    /// Weight escaped above the two-level block.
    Leakage,
    /// Decay exponent -ln p1 of the excited occupation.
    DecayFactor,
}

impl Observable {
    fn column_stems(&self) -> &'static [&'static str] {
        match self {
            Observable::Uncertainty => &["a2"],
            Observable::Populations => &["p0", "p1"],
            Observable::Coherence => &["coh"],
            Observable::Pauli => &["sx", "sy", "sz"],
            Observable::Leakage => &["leak"],
            Observable::DecayFactor => &["decay"],
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Observable::Uncertainty => "uncertainty",
            Observable::Populations => "populations",
            Observable::Coherence => "coherence",
            Observable::Pauli => "pauli",
            Observable::Leakage => "leakage",
            Observable::DecayFactor => "decay_factor",
        };
        f.write_str(s)
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uncertainty" => Observable::Uncertainty,
            "populations" => Observable::Populations,
            "coherence" => Observable::Coherence,
            "pauli" => Observable::Pauli,
            "leakage" => Observable::Leakage,
            "decay_factor" => Observable::DecayFactor,
            other => {
                return Err(config_err(
                    "observable",
                    format!(
                        "unknown observable `{other}` (expected uncertainty, populations, \
                         coherence, pauli, leakage, or decay_factor)"
                    ),
                ))
            }
        })
    }
}

/// Which quantity varies along the rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Rows are evolution times on the shared grid.
    Time,
    /// Rows are pulse speeds eta = Lambda_uv dt / pi; each curve converts
    /// eta to its own interval and snaps it to the grid.
    PulseInterval,
    /// Rows are constant field strengths V.
    FieldStrength,
    /// A single row at t_final.
    None,
}

impl SweepAxis {
    fn axis_column(&self) -> &'static str {
        match self {
            SweepAxis::Time | SweepAxis::None => "t",
            SweepAxis::PulseInterval => "eta",
            SweepAxis::FieldStrength => "field",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepAxis::Time => "time",
            SweepAxis::PulseInterval => "pulse-interval",
            SweepAxis::FieldStrength => "field-strength",
            SweepAxis::None => "none",
        };
        f.write_str(s)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "time" => SweepAxis::Time,
            "pulse-interval" => SweepAxis::PulseInterval,
            "field-strength" => SweepAxis::FieldStrength,
            "none" => SweepAxis::None,
            other => {
                return Err(config_err(
                    "sweep",
                    format!(
                        "unknown sweep axis `{other}` (expected time, pulse-interval, \
                         field-strength, or none)"
                    ),
                ))
            }
        })
    }
}

/// One plotted curve: an environment, an oscillator, and a pulse schedule.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Curve {
    /// Column label; lowercase letters, digits, and underscores.
    pub label: String,
    /// Spectral exponent nu (-1, 1, or 3 for the named environments).
    pub exponent: f64,
    pub gamma: f64,
    pub uv_cutoff: f64,
    pub ir_cutoff: f64,
    /// Bath temperature in millikelvin.
    pub temp_mk: f64,
    pub omega: f64,
    pub mass: f64,
    /// Constant field strength V (ignored on the field sweep axis).
    pub field: f64,
    pub counterterms: bool,
    /// Pulse interval dt_p; zero keeps this curve pulse-free, and any
    /// positive value marks it pulsed (interval sweeps override the number).
    pub pulse_interval: f64,
    pub kick_angle: f64,
    /// Number of sampled bath modes; zero means continuum kernels.
    pub nbath: usize,
}

impl Default for Curve {
    fn default() -> Self {
        Curve {
            label: "ohmic".to_string(),
            exponent: 1.0,
            gamma: 0.1,
            uv_cutoff: 10.0,
            ir_cutoff: 0.0,
            temp_mk: 0.0,
            omega: 1.0,
            mass: 1.0,
            field: 0.0,
            counterterms: false,
            pulse_interval: 0.0,
            kick_angle: std::f64::consts::PI,
            nbath: 0,
        }
    }
}

/// A complete run description. Serializes to flat `key = value` text and to
/// JSON; the two forms are interchangeable.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub observable: Observable,
    pub sweep: SweepAxis,
    /// Sweep range; leaving both bounds at zero picks an axis default.
    pub sweep_lo: f64,
    pub sweep_hi: f64,
    pub points: usize,
    pub tfinal: f64,
    pub steps: usize,
    pub initial: InitialState,
    /// Output path; empty writes the CSV to stdout.
    pub out: String,
    pub curves: Vec<Curve>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            observable: Observable::Uncertainty,
            sweep: SweepAxis::Time,
            sweep_lo: 0.0,
            sweep_hi: 0.0,
            points: 50,
            tfinal: 1.0,
            steps: 512,
            initial: InitialState::Ground,
            out: String::new(),
            curves: vec![Curve::default()],
        }
    }
}

/// Spectral exponent and infrared cutoff conventions of the named
/// environments, as (canonical label, exponent, ir_cutoff).
pub fn env_defaults(name: &str) -> Result<(&'static str, f64, f64)> {
    match name {
        "ohmic" => Ok(("ohmic", 1.0, 0.0)),
        "superohmic" | "super-ohmic" => Ok(("superohmic", 3.0, 0.0)),
        "oneoverf" | "one-over-f" | "1f" => Ok(("oneoverf", -1.0, 1.0)),
        other => Err(config_err(
            "env",
            format!("unknown environment `{other}` (expected ohmic, superohmic, or oneoverf)"),
        )),
    }
}

// ---------------------------------------------------------------------------
// Config codec
// ---------------------------------------------------------------------------

/// Prints the flat `key = value` form; floats use the shortest
/// representation that parses back to the same value.
pub fn print_config(s: &Scenario) -> String {
    use fmt::Write;
    let mut o = String::new();
    let _ = writeln!(o, "observable = {}", s.observable);
    let _ = writeln!(o, "sweep = {}", s.sweep);
    let _ = writeln!(o, "sweep_lo = {:?}", s.sweep_lo);
    let _ = writeln!(o, "sweep_hi = {:?}", s.sweep_hi);
    let _ = writeln!(o, "points = {}", s.points);
    let _ = writeln!(o, "tfinal = {:?}", s.tfinal);
    let _ = writeln!(o, "steps = {}", s.steps);
    let _ = writeln!(o, "initial = {}", s.initial);
    let _ = writeln!(o, "out = {}", s.out);
    let _ = writeln!(o, "curves = {}", s.curves.len());
    for (i, c) in s.curves.iter().enumerate() {
        let _ = writeln!(o, "curve{i}.label = {}", c.label);
        let _ = writeln!(o, "curve{i}.exponent = {:?}", c.exponent);
        let _ = writeln!(o, "curve{i}.gamma = {:?}", c.gamma);
        let _ = writeln!(o, "curve{i}.uv_cutoff = {:?}", c.uv_cutoff);
        let _ = writeln!(o, "curve{i}.ir_cutoff = {:?}", c.ir_cutoff);
        let _ = writeln!(o, "curve{i}.temp_mk = {:?}", c.temp_mk);
        let _ = writeln!(o, "curve{i}.omega = {:?}", c.omega);
        let _ = writeln!(o, "curve{i}.mass = {:?}", c.mass);
        let _ = writeln!(o, "curve{i}.field = {:?}", c.field);
        let _ = writeln!(o, "curve{i}.counterterms = {}", c.counterterms);
        let _ = writeln!(o, "curve{i}.pulse_interval = {:?}", c.pulse_interval);
        let _ = writeln!(o, "curve{i}.kick_angle = {:?}", c.kick_angle);
        let _ = writeln!(o, "curve{i}.nbath = {}", c.nbath);
    }
    o
}

/// Parses either the flat text form or JSON (detected by a leading brace).
pub fn parse_config(text: &str) -> Result<Scenario> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| config_err("json", e.to_string()));
    }
    let mut sc = Scenario::default();
    sc.curves.clear();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_err(
                &format!("line {}", idx + 1),
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        apply_key(&mut sc, key.trim(), value.trim())?;
    }
    if sc.curves.is_empty() {
        sc.curves.push(Curve::default());
    }
    Ok(sc)
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| config_err(key, format!("expected a number, got `{value}`")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| config_err(key, format!("expected a nonnegative integer, got `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(config_err(key, format!("expected true or false, got `{value}`"))),
    }
}

fn apply_key(sc: &mut Scenario, key: &str, value: &str) -> Result<()> {
    match key {
        "observable" => sc.observable = value.parse()?,
        "sweep" => sc.sweep = value.parse()?,
        "sweep_lo" => sc.sweep_lo = parse_f64(key, value)?,
        "sweep_hi" => sc.sweep_hi = parse_f64(key, value)?,
        "points" => sc.points = parse_usize(key, value)?,
        "tfinal" => sc.tfinal = parse_f64(key, value)?,
        "steps" => sc.steps = parse_usize(key, value)?,
        "initial" => sc.initial = value.parse()?,
        "out" => sc.out = value.to_string(),
        "curves" => {
            let n = parse_usize(key, value)?;
            if n > 256 {
                return Err(config_err(key, "more than 256 curves"));
            }
            sc.curves.resize(n, Curve::default());
        }
        _ if key.starts_with("curve") => apply_curve_key(sc, key, value)?,
        _ => return Err(config_err(key, "unknown key")),
    }
    Ok(())
}

fn apply_curve_key(sc: &mut Scenario, key: &str, value: &str) -> Result<()> {
    let rest = &key["curve".len()..];
    let Some((idx_s, attr)) = rest.split_once('.') else {
        return Err(config_err(key, "expected curveN.attribute"));
    };
    let idx: usize = idx_s
        .parse()
        .map_err(|_| config_err(key, "curve index must be a nonnegative integer"))?;
    if idx > 256 {
        return Err(config_err(key, "curve index too large"));
    }
    if idx >= sc.curves.len() {
        sc.curves.resize(idx + 1, Curve::default());
    }
    let c = &mut sc.curves[idx];
    match attr {
        "label" => c.label = value.to_string(),
        "exponent" => c.exponent = parse_f64(key, value)?,
        "gamma" => c.gamma = parse_f64(key, value)?,
        "uv_cutoff" => c.uv_cutoff = parse_f64(key, value)?,
        "ir_cutoff" => c.ir_cutoff = parse_f64(key, value)?,
        "temp_mk" => c.temp_mk = parse_f64(key, value)?,
        "omega" => c.omega = parse_f64(key, value)?,
        "mass" => c.mass = parse_f64(key, value)?,
        "field" => c.field = parse_f64(key, value)?,
        "counterterms" => c.counterterms = parse_bool(key, value)?,
        "pulse_interval" => c.pulse_interval = parse_f64(key, value)?,
        "kick_angle" => c.kick_angle = parse_f64(key, value)?,
        "nbath" => c.nbath = parse_usize(key, value)?,
        _ => return Err(config_err(key, "unknown curve attribute")),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Figure presets
// ---------------------------------------------------------------------------

pub const PRESET_NAMES: [&str; 6] = ["fig1a", "fig1b", "fig2", "fig3a", "fig3b", "fig4"];

/// Ready-made scenarios for the six reference figures.
pub fn figure_presets(name: &str) -> Result<Scenario> {
    let preset = match name {
        "fig1a" => fig1a(),
        "fig1b" => fig1b(),
        "fig2" => fig2(),
        "fig3a" => fig3a(),
        "fig3b" => fig3b(),
        "fig4" => fig4(),
        other => {
            return Err(config_err(
                "preset",
                format!("unknown preset `{other}` (available: {})", PRESET_NAMES.join(", ")),
            ))
        }
    };
    Ok(preset)
}

fn base_curve(label: &str, exponent: f64, gamma: f64, uv: f64, ir: f64, temp_mk: f64) -> Curve {
    Curve {
        label: label.to_string(),
        exponent,
        gamma,
        uv_cutoff: uv,
        ir_cutoff: ir,
        temp_mk,
        ..Curve::default()
    }
}

/// Uncertainty growth of the undriven vacuum in Ohmic and super-Ohmic baths.
fn fig1a() -> Scenario {
    Scenario {
        observable: Observable::Uncertainty,
        sweep: SweepAxis::Time,
        sweep_lo: 0.025,
        sweep_hi: 1.0,
        points: 40,
        tfinal: 1.0,
        steps: 1024,
        initial: InitialState::Ground,
        out: "fig1a.csv".to_string(),
        curves: vec![
            base_curve("ohmic", 1.0, 0.1, 10.0, 0.0, 14.5),
            base_curve("superohmic", 3.0, 0.1, 10.0, 0.0, 14.5),
        ],
    }
}

/// Uncertainty at fixed time versus pulse speed for the three environments.
fn fig1b() -> Scenario {
    let mut ohmic = base_curve("ohmic", 1.0, 0.1, 100.0, 0.0, 14.5);
    let mut superohmic = base_curve("superohmic", 3.0, 0.0002, 50.0, 0.0, 14.5);
    let mut oneoverf = base_curve("oneoverf", -1.0, 0.1, 100.0, 1.0, 0.0);
    for c in [&mut ohmic, &mut superohmic, &mut oneoverf] {
        c.pulse_interval = std::f64::consts::PI / c.uv_cutoff;
    }
    Scenario {
        observable: Observable::Uncertainty,
        sweep: SweepAxis::PulseInterval,
        sweep_lo: 0.2,
        sweep_hi: 3.0,
        points: 30,
        tfinal: 0.25,
        steps: 1024,
        initial: InitialState::Ground,
        out: "fig1b.csv".to_string(),
        curves: vec![ohmic, superohmic, oneoverf],
    }
}

/// Decay exponent of the excited level over time, pulsed against free, for
/// the three environments at zero temperature.
fn fig2() -> Scenario {
    let pulsed = |label: &str, exponent: f64, gamma: f64, uv: f64, ir: f64, eta: f64| {
        let mut c = base_curve(label, exponent, gamma, uv, ir, 0.0);
        c.pulse_interval = pulses::interval_for_eta(uv, eta);
        c
    };
    Scenario {
        observable: Observable::DecayFactor,
        sweep: SweepAxis::Time,
        sweep_lo: 0.01,
        sweep_hi: 0.3,
        points: 30,
        tfinal: 0.3,
        steps: 2048,
        initial: InitialState::Excited,
        out: "fig2.csv".to_string(),
        curves: vec![
            pulsed("ohmic_pulsed", 1.0, 0.1, 100.0, 0.0, 0.15),
            base_curve("ohmic_free", 1.0, 0.1, 100.0, 0.0, 0.0),
            pulsed("oneoverf_pulsed", -1.0, 0.5, 100.0, 1.0, 1.5),
            base_curve("oneoverf_free", -1.0, 0.5, 100.0, 1.0, 0.0),
            pulsed("superohmic_pulsed", 3.0, 0.01, 30.0, 0.0, 0.05),
            base_curve("superohmic_free", 3.0, 0.01, 30.0, 0.0, 0.0),
        ],
    }
}

/// Analytic dephasing coherence versus pulse speed; all three environments
/// share the ultraviolet and infrared cutoffs.
fn fig3a() -> Scenario {
    let mut oneoverf = base_curve("oneoverf", -1.0, 0.2, 100.0, 1.0, 0.0);
    let mut ohmic = base_curve("ohmic", 1.0, 0.125, 100.0, 1.0, 0.0);
    let mut superohmic = base_curve("superohmic", 3.0, 0.005, 100.0, 1.0, 0.0);
    for c in [&mut oneoverf, &mut ohmic, &mut superohmic] {
        c.pulse_interval = std::f64::consts::PI / c.uv_cutoff;
    }
    Scenario {
        observable: Observable::Coherence,
        sweep: SweepAxis::PulseInterval,
        sweep_lo: 0.2,
        sweep_hi: 3.0,
        points: 40,
        tfinal: 0.25,
        steps: 512,
        initial: InitialState::Superposition,
        out: "fig3a.csv".to_string(),
        curves: vec![oneoverf, ohmic, superohmic],
    }
}

/// Excited-level population versus pulse speed in the full oscillator
/// pipeline; no sharp resonance survives here.
fn fig3b() -> Scenario {
    let curve = |label: &str, exponent: f64, gamma: f64, uv: f64, ir: f64, omega: f64| {
        let mut c = base_curve(label, exponent, gamma, uv, ir, 0.0);
        c.omega = omega;
        c.pulse_interval = std::f64::consts::PI / uv;
        c
    };
    Scenario {
        observable: Observable::Populations,
        sweep: SweepAxis::PulseInterval,
        sweep_lo: 0.2,
        sweep_hi: 3.0,
        points: 40,
        tfinal: 0.15,
        steps: 1024,
        initial: InitialState::Excited,
        out: "fig3b.csv".to_string(),
        curves: vec![
            curve("ohmic", 1.0, 0.1, 100.0, 0.0, 10.0),
            curve("oneoverf", -1.0, 0.5, 100.0, 1.0, 15.0),
            curve("superohmic", 3.0, 0.01, 50.0, 0.0, 15.0),
        ],
    }
}

/// Excited-level survival versus constant field strength with counterterms.
fn fig4() -> Scenario {
    let curve = |label: &str, exponent: f64, gamma: f64, ir: f64| {
        let mut c = base_curve(label, exponent, gamma, 100.0, ir, 0.0);
        c.counterterms = true;
        c
    };
    Scenario {
        observable: Observable::Populations,
        sweep: SweepAxis::FieldStrength,
        sweep_lo: 0.0,
        sweep_hi: 100.0,
        points: 21,
        tfinal: 0.15,
        steps: 2048,
        initial: InitialState::Excited,
        out: "fig4.csv".to_string(),
        curves: vec![
            curve("ohmic", 1.0, 0.1, 0.0),
            curve("oneoverf", -1.0, 0.1, 1.0),
            curve("superohmic", 3.0, 0.001, 0.0),
        ],
    }
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// The rendered CSV plus any per-point numerical warnings.
#[derive(Debug, Clone)]
pub struct ScenarioArtifact {
    pub csv: String,
    pub warnings: Vec<String>,
}

struct CurveRuntime {
    curve: Curve,
    sd: SpectralDensity,
    kernels: BathKernels,
    table: Option<KernelTable>,
    /// Curve's own pulse interval snapped to the grid; zero means pulse-free.
    base_interval: f64,
}

impl CurveRuntime {
    fn build(c: &Curve, s: &Scenario, grid: &TimeGrid) -> Result<Self> {
        let key = format!("curve `{}`", c.label);
        let sd = SpectralDensity::new(
            c.exponent,
            c.gamma,
            c.uv_cutoff,
            c.ir_cutoff,
            c.mass,
            c.temp_mk * GHZ_PER_MK,
        )
        .map_err(|e| e.in_context(&key))?;
        let kernels = if c.nbath > 0 {
            let modes = sd
                .sample_modes(c.nbath, SamplingScheme::Linear)
                .map_err(|e| e.in_context(&key))?;
            BathKernels::Modes { modes, temperature: sd.temperature }
        } else {
            BathKernels::Continuum(sd)
        };
        let table = if s.observable == Observable::Coherence {
            None
        } else {
            Some(KernelTable::build(&kernels, grid).map_err(|e| e.in_context(&key))?)
        };
        let base_interval =
            if c.pulse_interval > 0.0 { grid.snap_interval(c.pulse_interval) } else { 0.0 };
        Ok(CurveRuntime { curve: c.clone(), sd, kernels, table, base_interval })
    }

    fn evaluate(&self, s: &Scenario, grid: &TimeGrid, x: f64) -> Result<Vec<f64>> {
        if s.observable == Observable::Coherence {
            return self.evaluate_coherence(s, x);
        }
        let dt = grid.dt();
        let (run_grid, interval, field) = match s.sweep {
            SweepAxis::Time => {
                let k = (x / dt).round().clamp(16.0, grid.steps as f64) as usize;
                (TimeGrid::new(k as f64 * dt, k)?, self.base_interval, self.curve.field)
            }
            SweepAxis::PulseInterval => {
                let snapped = if self.base_interval > 0.0 {
                    grid.snap_interval(pulses::interval_for_eta(self.sd.uv_cutoff, x))
                } else {
                    0.0
                };
                (*grid, snapped, self.curve.field)
            }
            SweepAxis::FieldStrength => (*grid, self.base_interval, x),
            SweepAxis::None => (*grid, self.base_interval, self.curve.field),
        };
        let train = if interval > 0.0 {
            PulseTrain::new(0.0, 0.0, interval, self.curve.kick_angle)?
        } else {
            PulseTrain::disabled()
        };
        let sys = SystemParams::new(self.curve.omega, self.curve.mass)?
            .with_counterterms(self.curve.counterterms)
            .with_constant_field(field);
        let eff = effective_params(&sys, &self.kernels)?;
        let table = self.table.as_ref().expect("kernel table built for oscillator observables");
        let sol = propagator::solve_with_table(&eff, table, &train, &run_grid)?;
        let map = sol.as_map();
        match s.observable {
            Observable::Uncertainty => {
                let (mean, cov) = map.apply(&Vector2::zeros(), &state::vacuum_cov(eff.ladder));
                let m = GaussianMoments::from_cov(mean, cov, eff.ladder)?;
                Ok(vec![m.uncertainty().a_squared()])
            }
            Observable::Populations => {
                let rho = state::evolve_initial(s.initial, &map, eff.ladder, DEFAULT_LEVEL_CAP)?;
                Ok(vec![rho.population(0), rho.population(1)])
            }
            Observable::Pauli => {
                let rho = state::evolve_initial(s.initial, &map, eff.ladder, DEFAULT_LEVEL_CAP)?;
                let (sx, sy, sz) = rho.pauli()?;
                Ok(vec![sx, sy, sz])
            }
            Observable::Leakage => {
                let rho = state::evolve_initial(s.initial, &map, eff.ladder, DEFAULT_LEVEL_CAP)?;
                Ok(vec![rho.leakage()?])
            }
            Observable::DecayFactor => {
                let rho = state::evolve_initial(s.initial, &map, eff.ladder, DEFAULT_LEVEL_CAP)?;
                Ok(vec![rho.decay_factor()?])
            }
            Observable::Coherence => unreachable!("handled above"),
        }
    }

    fn evaluate_coherence(&self, s: &Scenario, x: f64) -> Result<Vec<f64>> {
        let mode = if self.curve.nbath > 0 {
            FilterMode::Discrete(self.curve.nbath)
        } else {
            FilterMode::Continuum
        };
        let exponent = match s.sweep {
            SweepAxis::PulseInterval => {
                if self.curve.pulse_interval == 0.0 {
                    Exponent::Finite(self.free_exponent_at(s.tfinal, mode)?)
                } else {
                    let raw = pulses::interval_for_eta(self.sd.uv_cutoff, x);
                    let pairs = (s.tfinal / (2.0 * raw)).round().max(1.0);
                    let cfg = DephasingConfig::new(self.sd, s.tfinal / (2.0 * pairs), pairs as usize)?
                        .mode(mode);
                    dephasing::dephasing_exponent(&cfg)?
                }
            }
            SweepAxis::Time | SweepAxis::None => {
                let t = if s.sweep == SweepAxis::None { s.tfinal } else { x };
                if self.curve.pulse_interval == 0.0 {
                    Exponent::Finite(self.free_exponent_at(t, mode)?)
                } else {
                    let pairs = (t / (2.0 * self.curve.pulse_interval)).round().max(1.0) as usize;
                    let cfg =
                        DephasingConfig::new(self.sd, self.curve.pulse_interval, pairs)?.mode(mode);
                    dephasing::dephasing_exponent(&cfg)?
                }
            }
            SweepAxis::FieldStrength => {
                return Err(config_err("sweep", "coherence has no field dependence"))
            }
        };
        Ok(vec![match exponent {
            Exponent::Finite(d) => 0.5 * (-d).exp(),
            Exponent::Divergent { .. } => 0.0,
        }])
    }

    fn free_exponent_at(&self, t: f64, mode: FilterMode) -> Result<f64> {
        let cfg = DephasingConfig::new(self.sd, 0.5 * t, 1)?.mode(mode);
        dephasing::free_exponent(&cfg)
    }
}

fn validate(s: &Scenario) -> Result<()> {
    if s.curves.is_empty() {
        return Err(config_err("curves", "need at least one curve"));
    }
    for (i, c) in s.curves.iter().enumerate() {
        let label_key = format!("curve{i}.label");
        if c.label.is_empty() {
            return Err(config_err(&label_key, "label must not be empty"));
        }
        if !c.label.chars().all(|ch| ch.is_ascii_lowercase() || ch.is_ascii_digit() || ch == '_') {
            return Err(config_err(
                &label_key,
                format!("label `{}` may only use lowercase letters, digits, underscores", c.label),
            ));
        }
        if s.curves[..i].iter().any(|other| other.label == c.label) {
            return Err(config_err(&label_key, format!("duplicate label `{}`", c.label)));
        }
        let pulsed = c.pulse_interval > 0.0
            || (s.sweep == SweepAxis::PulseInterval && c.pulse_interval != 0.0);
        if s.observable != Observable::Coherence && pulsed {
            let probe = PulseTrain::new(0.0, 0.0, 1.0, c.kick_angle)?;
            if !probe.is_odd_pi() {
                return Err(config_err(
                    &format!("curve{i}.kick_angle"),
                    "the influence-functional path needs an odd multiple of pi",
                ));
            }
        }
        if c.pulse_interval < 0.0 {
            return Err(config_err(&format!("curve{i}.pulse_interval"), "must be nonnegative"));
        }
    }
    if s.points == 0 {
        return Err(config_err("points", "need at least one sweep point"));
    }
    if s.observable == Observable::Coherence && s.sweep == SweepAxis::FieldStrength {
        return Err(config_err("sweep", "coherence has no field dependence"));
    }
    if !(s.sweep_lo == 0.0 && s.sweep_hi == 0.0) {
        if !s.sweep_lo.is_finite() || !s.sweep_hi.is_finite() || s.sweep_hi < s.sweep_lo {
            return Err(config_err("sweep_hi", "sweep range must be finite with hi >= lo"));
        }
        if s.sweep_hi == s.sweep_lo && s.points > 1 {
            return Err(config_err("points", "degenerate sweep range needs points = 1"));
        }
        if s.sweep == SweepAxis::PulseInterval && s.sweep_lo <= 0.0 {
            return Err(config_err("sweep_lo", "pulse-interval sweeps need positive eta"));
        }
    }
    Ok(())
}

fn sweep_range(s: &Scenario, grid: &TimeGrid) -> (f64, f64) {
    if !(s.sweep_lo == 0.0 && s.sweep_hi == 0.0) {
        return (s.sweep_lo, s.sweep_hi);
    }
    match s.sweep {
        SweepAxis::Time => {
            let lo = (s.tfinal / s.points as f64).max(16.0 * grid.dt());
            (lo, s.tfinal)
        }
        SweepAxis::PulseInterval => (0.2, 3.0),
        SweepAxis::FieldStrength => (0.0, 100.0),
        SweepAxis::None => (s.tfinal, s.tfinal),
    }
}

fn sweep_points(s: &Scenario, lo: f64, hi: f64, grid: &TimeGrid) -> Vec<f64> {
    if s.sweep == SweepAxis::None {
        return vec![s.tfinal];
    }
    let n = s.points;
    let mut xs = Vec::with_capacity(n);
    if n == 1 {
        xs.push(lo);
    } else {
        for i in 0..n {
            xs.push(lo + (hi - lo) * i as f64 / (n - 1) as f64);
        }
    }
    if s.sweep == SweepAxis::Time {
        let dt = grid.dt();
        for x in xs.iter_mut() {
            let k = (*x / dt).round().clamp(16.0, grid.steps as f64);
            *x = k * dt;
        }
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * grid.t_final);
    }
    xs
}

fn fmt_cell(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.8e}")
    }
}

/// Runs every curve over the sweep and renders the CSV. Setup and validation
/// problems abort with an error naming the key; per-point numerical failures
/// leave `nan` cells and a warning.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioArtifact> {
    validate(s)?;
    let grid = TimeGrid::new(s.tfinal, s.steps)?;
    let (lo, hi) = sweep_range(s, &grid);
    if s.sweep == SweepAxis::PulseInterval && lo <= 0.0 {
        return Err(config_err("sweep_lo", "pulse-interval sweeps need positive eta"));
    }
    let xs = sweep_points(s, lo, hi, &grid);
    let runtimes = s
        .curves
        .iter()
        .map(|c| CurveRuntime::build(c, s, &grid))
        .collect::<Result<Vec<_>>>()?;

    let axis = s.sweep.axis_column();
    let evaluated: Vec<(Vec<Option<Vec<f64>>>, Vec<String>)> = xs
        .par_iter()
        .map(|&x| -> Result<(Vec<Option<Vec<f64>>>, Vec<String>)> {
            let mut cells = Vec::with_capacity(runtimes.len());
            let mut warns = Vec::new();
            for rt in &runtimes {
                match rt.evaluate(s, &grid, x) {
                    Ok(v) => cells.push(Some(v)),
                    Err(e) if e.exit_code() == 2 => {
                        warns.push(format!("{axis} = {x:.6e}, curve {}: {e}", rt.curve.label));
                        cells.push(None);
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok((cells, warns))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::new();
    csv.push_str(axis);
    for rt in &runtimes {
        for stem in s.observable.column_stems() {
            csv.push(',');
            csv.push_str(stem);
            csv.push('_');
            csv.push_str(&rt.curve.label);
        }
    }
    csv.push('\n');
    let width = s.observable.column_stems().len();
    let mut warnings = Vec::new();
    for (x, (cells, warns)) in xs.iter().zip(evaluated) {
        csv.push_str(&fmt_cell(*x));
        for cell in cells {
            match cell {
                Some(values) => {
                    for v in values {
                        csv.push(',');
                        csv.push_str(&fmt_cell(v));
                    }
                }
                None => {
                    for _ in 0..width {
                        csv.push_str(",nan");
                    }
                }
            }
        }
        csv.push('\n');
        warnings.extend(warns);
    }
    Ok(ScenarioArtifact { csv, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn parse_rows(csv: &str) -> (Vec<String>, Vec<Vec<f64>>) {
        let mut lines = csv.lines();
        let header = lines
            .next()
            .expect("header row")
            .split(',')
            .map(|s| s.to_string())
            .collect::<Vec<_>>();
        let rows = lines
            .map(|line| {
                line.split(',')
                    .map(|cell| if cell == "nan" { f64::NAN } else { cell.parse().unwrap() })
                    .collect::<Vec<f64>>()
            })
            .collect::<Vec<_>>();
        (header, rows)
    }

    fn cell_format_is_nine_significant_digits(csv: &str) {
        for line in csv.lines().skip(1) {
            for cell in line.split(',') {
                if cell == "nan" || cell == "inf" || cell == "-inf" {
                    continue;
                }
                let (mantissa, _exp) = cell.split_once('e').expect("scientific notation");
                let digits = mantissa.trim_start_matches('-');
                let (_, frac) = digits.split_once('.').expect("decimal point");
                assert_eq!(frac.len(), 8, "cell {cell} is not 9 significant digits");
            }
        }
    }

    #[test]
    fn presets_round_trip_through_text_and_json() {
        for name in PRESET_NAMES {
            let s = figure_presets(name).unwrap();
            let text = print_config(&s);
            assert_eq!(parse_config(&text).unwrap(), s, "text round trip for {name}");
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(parse_config(&json).unwrap(), s, "json round trip for {name}");
        }
        assert!(figure_presets("fig9").is_err());
    }

    #[test]
    fn preset_shapes_match_their_figures() {
        let f1a = figure_presets("fig1a").unwrap();
        assert_eq!(f1a.observable, Observable::Uncertainty);
        assert_eq!(f1a.sweep, SweepAxis::Time);
        assert_eq!(f1a.curves.len(), 2);
        assert_eq!(f1a.curves[0].uv_cutoff, 10.0);
        assert_eq!(f1a.curves[0].temp_mk, 14.5);

        let f1b = figure_presets("fig1b").unwrap();
        assert_eq!(f1b.sweep, SweepAxis::PulseInterval);
        assert_eq!(f1b.tfinal, 0.25);
        let uvs: Vec<f64> = f1b.curves.iter().map(|c| c.uv_cutoff).collect();
        assert_eq!(uvs, vec![100.0, 50.0, 100.0]);
        assert_eq!(f1b.curves[1].gamma, 0.0002);
        assert_eq!(f1b.curves[2].temp_mk, 0.0);

        let f2 = figure_presets("fig2").unwrap();
        assert_eq!(f2.observable, Observable::DecayFactor);
        assert_eq!(f2.curves.len(), 6);
        assert_eq!(f2.initial, InitialState::Excited);
        assert!(f2.curves.iter().all(|c| c.temp_mk == 0.0 && c.omega == 1.0));
        assert!(f2.curves[0].pulse_interval > 0.0 && f2.curves[1].pulse_interval == 0.0);
        assert_eq!(f2.curves[4].uv_cutoff, 30.0);

        let f3a = figure_presets("fig3a").unwrap();
        assert_eq!(f3a.observable, Observable::Coherence);
        assert!(f3a.curves.iter().all(|c| c.ir_cutoff == 1.0 && c.uv_cutoff == 100.0));
        let gammas: Vec<f64> = f3a.curves.iter().map(|c| c.gamma).collect();
        assert_eq!(gammas, vec![0.2, 0.125, 0.005]);

        let f3b = figure_presets("fig3b").unwrap();
        assert_eq!(f3b.tfinal, 0.15);
        let omegas: Vec<f64> = f3b.curves.iter().map(|c| c.omega).collect();
        assert_eq!(omegas, vec![10.0, 15.0, 15.0]);
        assert_eq!(f3b.curves[2].uv_cutoff, 50.0);

        let f4 = figure_presets("fig4").unwrap();
        assert_eq!(f4.sweep, SweepAxis::FieldStrength);
        assert!(f4.curves.iter().all(|c| c.counterterms && c.uv_cutoff == 100.0));
        assert_eq!(f4.initial, InitialState::Excited);
    }

    #[test]
    fn decoupled_bath_keeps_minimum_uncertainty() {
        let mut s = Scenario::default();
        s.curves[0].gamma = 0.0;
        s.curves[0].label = "free".to_string();
        s.tfinal = 0.5;
        s.steps = 64;
        s.points = 5;
        let artifact = run_scenario(&s).unwrap();
        let (header, rows) = parse_rows(&artifact.csv);
        assert_eq!(header, vec!["t", "a2_free"]);
        assert_eq!(rows.len(), 5);
        for row in &rows {
            assert_abs_diff_eq!(row[1], 0.25, epsilon = 1e-9);
        }
        assert!(artifact.warnings.is_empty());
        cell_format_is_nine_significant_digits(&artifact.csv);
    }

    #[test]
    fn identical_inputs_produce_identical_bytes() {
        let mut s = Scenario::default();
        s.curves[0].gamma = 0.05;
        s.curves[0].uv_cutoff = 5.0;
        s.curves[0].pulse_interval = 0.05;
        s.tfinal = 0.4;
        s.steps = 64;
        s.points = 4;
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a.csv, b.csv);
        assert!(a.csv.starts_with("t,a2_ohmic\n"));
    }

    #[test]
    fn caustic_points_fall_back_to_nan_rows() {
        let mut s = Scenario::default();
        s.curves[0].gamma = 0.0;
        s.curves[0].label = "free".to_string();
        s.tfinal = std::f64::consts::PI;
        s.steps = 512;
        s.points = 2;
        s.sweep_lo = std::f64::consts::FRAC_PI_2;
        s.sweep_hi = std::f64::consts::PI;
        let artifact = run_scenario(&s).unwrap();
        let (_, rows) = parse_rows(&artifact.csv);
        assert_eq!(rows.len(), 2);
        assert!(rows[0][1].is_finite());
        assert!(rows[1][1].is_nan());
        assert_eq!(artifact.warnings.len(), 1);
        assert!(artifact.warnings[0].contains("free"));
    }

    #[test]
    fn validation_errors_name_the_offending_key() {
        let mut dup = Scenario::default();
        dup.curves.push(dup.curves[0].clone());
        match run_scenario(&dup) {
            Err(Error::Config { key, .. }) => assert!(key.contains("label")),
            other => panic!("expected duplicate-label error, got {other:?}"),
        }

        let mut bad_axis = Scenario::default();
        bad_axis.observable = Observable::Coherence;
        bad_axis.sweep = SweepAxis::FieldStrength;
        assert!(matches!(run_scenario(&bad_axis), Err(Error::Config { key, .. }) if key == "sweep"));

        let mut bad_kick = Scenario::default();
        bad_kick.curves[0].pulse_interval = 0.05;
        bad_kick.curves[0].kick_angle = std::f64::consts::FRAC_PI_2;
        match run_scenario(&bad_kick) {
            Err(Error::Config { key, .. }) => assert!(key.contains("kick_angle")),
            other => panic!("expected kick-angle error, got {other:?}"),
        }

        let mut bad_steps = Scenario::default();
        bad_steps.steps = 8;
        assert!(run_scenario(&bad_steps).is_err());

        let mut bad_eta = Scenario::default();
        bad_eta.sweep = SweepAxis::PulseInterval;
        bad_eta.sweep_lo = -0.5;
        bad_eta.sweep_hi = 1.0;
        assert!(matches!(run_scenario(&bad_eta), Err(Error::Config { key, .. }) if key == "sweep_lo"));

        assert!(parse_config("nonsense_key = 3\n").is_err());
        assert!(parse_config("curve0.wavelength = 3\n").is_err());
        assert!(parse_config("steps\n").is_err());
    }

    #[test]
    fn dephasing_sweep_collapses_past_the_resonance() {
        let mut s = figure_presets("fig3a").unwrap();
        s.curves.truncate(1);
        s.points = 4;
        s.sweep_lo = 0.3;
        s.sweep_hi = 0.9;
        let artifact = run_scenario(&s).unwrap();
        let (header, rows) = parse_rows(&artifact.csv);
        assert_eq!(header, vec!["eta", "coh_oneoverf"]);
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert!(row[1] > 0.0 && row[1] <= 0.5, "coherence {} out of range", row[1]);
        }

        s.points = 1;
        s.sweep_lo = 1.2;
        s.sweep_hi = 1.2;
        let resonant = run_scenario(&s).unwrap();
        let (_, rows) = parse_rows(&resonant.csv);
        assert_eq!(rows[0][1], 0.0);
        assert!(resonant.warnings.is_empty());
    }

    #[test]
    fn interval_sweep_reports_populations_per_curve() {
        let mut s = Scenario::default();
        s.observable = Observable::Populations;
        s.sweep = SweepAxis::PulseInterval;
        s.sweep_lo = 0.3;
        s.sweep_hi = 0.8;
        s.points = 2;
        s.tfinal = 0.4;
        s.steps = 64;
        s.initial = InitialState::Excited;
        s.curves[0].uv_cutoff = 5.0;
        s.curves[0].pulse_interval = 0.1;
        let artifact = run_scenario(&s).unwrap();
        let (header, rows) = parse_rows(&artifact.csv);
        assert_eq!(header, vec!["eta", "p0_ohmic", "p1_ohmic"]);
        for row in &rows {
            assert!(row[1] >= -1e-9 && row[1] <= 1.0 + 1e-6);
            assert!(row[2] >= -1e-9 && row[2] <= 1.0 + 1e-6);
        }
        assert!(artifact.warnings.is_empty());
    }
}
