//! Bath spectral densities and their memory kernels.
//!
//! The bath couples to the oscillator coordinate with spectral density
//! I(omega) = 2 M gamma omega^nu exp(-omega/Lambda_uv), zero below a hard
//! infrared cutoff. nu = 1 is Ohmic, nu = 3 super-Ohmic, nu = -1 the 1/f
//! family (which only exists with a positive infrared cutoff).
//!
//! Two kernels drive the reduced dynamics: the dissipation kernel
//! mu(t) = -(1/pi) int I(omega) sin(omega t) domega and the noise kernel
//! nu(t) = (1/pi) int I(omega) coth(omega/2T) cos(omega t) domega. Both come
//! either from quadrature over the continuum or from a sum over sampled
//! discrete modes, so the exact finite-bath oracle and the influence-functional
//! solver can share one bath description.

use crate::quad::{self, Tolerance};
use crate::{invalid, Error, Result};

/// Hyperbolic cotangent, stable at small argument (x > 0).
pub fn coth(x: f64) -> f64 {
    if x < 1e-4 {
        1.0 / x + x / 3.0
    } else {
        1.0 / x.tanh()
    }
}

/// Continuum bath description. Frequencies in angular GHz, temperature in the
/// same units (k_B = hbar = 1).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectralDensity {
    /// Spectral exponent nu (-1 = 1/f, 1 = Ohmic, 3 = super-Ohmic).
    pub exponent: f64,
    /// Dimensionless coupling strength gamma.
    pub coupling: f64,
    /// Ultraviolet cutoff Lambda_uv of the exponential envelope.
    pub uv_cutoff: f64,
    /// Hard infrared cutoff; I(omega) = 0 below it.
    pub ir_cutoff: f64,
    /// System mass entering the I(omega) normalization.
    pub mass: f64,
    /// Bath temperature (0 is allowed and means the vacuum coth = 1).
    pub temperature: f64,
}

impl SpectralDensity {
    pub fn new(
        exponent: f64,
        coupling: f64,
        uv_cutoff: f64,
        ir_cutoff: f64,
        mass: f64,
        temperature: f64,
    ) -> Result<Self> {
        if !uv_cutoff.is_finite() || uv_cutoff <= 0.0 {
            return Err(invalid("uv_cutoff", "must be positive and finite"));
        }
        if !ir_cutoff.is_finite() || ir_cutoff < 0.0 || ir_cutoff >= uv_cutoff {
            return Err(invalid("ir_cutoff", "must satisfy 0 <= ir_cutoff < uv_cutoff"));
        }
        if !coupling.is_finite() || coupling < 0.0 {
            return Err(invalid("coupling", "must be nonnegative"));
        }
        if !mass.is_finite() || mass <= 0.0 {
            return Err(invalid("mass", "must be positive"));
        }
        if !temperature.is_finite() || temperature < 0.0 {
            return Err(invalid("temperature", "must be nonnegative"));
        }
        if !exponent.is_finite() {
            return Err(invalid("exponent", "must be finite"));
        }
        if exponent <= 0.0 && ir_cutoff == 0.0 {
            return Err(invalid(
                "ir_cutoff",
                format!("exponent {exponent} <= 0 needs a positive infrared cutoff"),
            ));
        }
        Ok(SpectralDensity { exponent, coupling, uv_cutoff, ir_cutoff, mass, temperature })
    }

    /// Ohmic bath (nu = 1) with no infrared cutoff.
    pub fn ohmic(coupling: f64, uv_cutoff: f64, mass: f64, temperature: f64) -> Result<Self> {
        Self::new(1.0, coupling, uv_cutoff, 0.0, mass, temperature)
    }

    /// Super-Ohmic bath (nu = 3) with no infrared cutoff.
    pub fn super_ohmic(coupling: f64, uv_cutoff: f64, mass: f64, temperature: f64) -> Result<Self> {
        Self::new(3.0, coupling, uv_cutoff, 0.0, mass, temperature)
    }

    /// 1/f bath (nu = -1); the infrared cutoff must be positive.
    pub fn one_over_f(
        coupling: f64,
        uv_cutoff: f64,
        ir_cutoff: f64,
        mass: f64,
        temperature: f64,
    ) -> Result<Self> {
        Self::new(-1.0, coupling, uv_cutoff, ir_cutoff, mass, temperature)
    }

    /// I(omega). Zero below the infrared cutoff; negative omega is rejected.
    pub fn value(&self, omega: f64) -> Result<f64> {
        if omega < 0.0 {
            return Err(invalid("omega", "spectral density is defined for omega >= 0"));
        }
        if omega < self.ir_cutoff || omega == 0.0 {
            return Ok(0.0);
        }
        Ok(2.0 * self.mass * self.coupling * omega.powf(self.exponent) * (-omega / self.uv_cutoff).exp())
    }

    /// Upper integration limit beyond which the envelope is below 1e-22
    /// relative to its peak for every exponent used here.
    fn omega_hi(&self) -> f64 {
        self.ir_cutoff.max(0.0) + 60.0 * self.uv_cutoff
    }

    fn thermal_factor(&self, omega: f64) -> f64 {
        if self.temperature == 0.0 {
            1.0
        } else {
            coth(omega / (2.0 * self.temperature))
        }
    }

    /// Dissipation kernel mu(t) = -(1/pi) int I(omega) sin(omega t) domega.
    /// Odd in t by construction.
    pub fn dissipation_kernel(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let at = t.abs();
        let lo = self.ir_cutoff;
        let hi = self.omega_hi();
        let edges = quad::oscillatory_edges(lo, hi, at);
        let v = quad::integrate_edges(
            |w| self.value(w).unwrap_or(0.0) * (w * at).sin(),
            &edges,
            Tolerance::default(),
        )
        .map_err(|e| e.in_context("dissipation kernel"))?;
        Ok(-t.signum() * v / std::f64::consts::PI)
    }

    /// Noise kernel nu(t) = (1/pi) int I(omega) coth(omega/2T) cos(omega t) domega.
    /// Even in t; at T = 0 the thermal factor is 1.
    pub fn noise_kernel(&self, t: f64) -> Result<f64> {
        let at = t.abs();
        let lo = self.ir_cutoff;
        let hi = self.omega_hi();
        let edges = quad::oscillatory_edges(lo, hi, at);
        let v = quad::integrate_edges(
            |w| {
                if w <= 0.0 {
                    return 0.0;
                }
                self.value(w).unwrap_or(0.0) * self.thermal_factor(w) * (w * at).cos()
            },
            &edges,
            Tolerance::default(),
        )
        .map_err(|e| e.in_context("noise kernel"))?;
        Ok(v / std::f64::consts::PI)
    }

    /// Frequency-squared counterterm dOmega^2 = (2/(pi M)) int I(omega)/omega domega.
    pub fn counterterm_frequency(&self) -> Result<f64> {
        if self.exponent <= 0.0 && self.ir_cutoff == 0.0 {
            return Err(Error::Divergent(format!(
                "counterterm integral I(omega)/omega with exponent {} and no infrared cutoff",
                self.exponent
            )));
        }
        let v = quad::integrate(
            |w| {
                if w <= 0.0 {
                    return 0.0;
                }
                self.value(w).unwrap_or(0.0) / w
            },
            self.ir_cutoff,
            self.omega_hi(),
            Tolerance::default(),
        )
        .map_err(|e| e.in_context("counterterm"))?;
        Ok(2.0 * v / (std::f64::consts::PI * self.mass))
    }

    /// Samples a finite bath whose mode sums reproduce the continuum kernels.
    ///
    /// Cells tile [max(ir_cutoff, floor), 40 Lambda_uv]; each mode sits at the
    /// cell midpoint with unit mass and c_n^2 = (2 m omega_n / pi) I(omega_n) dw_n.
    /// The wide span keeps the neglected envelope tail below 1e-13 of the
    /// kernels, so reconstruction error is pure cell-width discretization.
    pub fn sample_modes(&self, count: usize, scheme: SamplingScheme) -> Result<Vec<BathMode>> {
        if count == 0 {
            return Err(invalid("count", "need at least one bath mode"));
        }
        let hi = 40.0 * self.uv_cutoff;
        let lo = match scheme {
            SamplingScheme::Linear => self.ir_cutoff,
            SamplingScheme::Log => self.ir_cutoff.max(hi * 1e-4),
        };
        if lo >= hi {
            return Err(invalid("ir_cutoff", "no sampling room below 40 Lambda_uv"));
        }
        let n = count;
        let mut modes = Vec::with_capacity(n);
        for i in 0..n {
            let (e0, e1, node) = match scheme {
                SamplingScheme::Linear => {
                    let e0 = lo + (hi - lo) * (i as f64) / (n as f64);
                    let e1 = lo + (hi - lo) * ((i + 1) as f64) / (n as f64);
                    (e0, e1, 0.5 * (e0 + e1))
                }
                SamplingScheme::Log => {
                    let r = (hi / lo).powf(1.0 / n as f64);
                    let e0 = lo * r.powi(i as i32);
                    let e1 = lo * r.powi(i as i32 + 1);
                    (e0, e1, (e0 * e1).sqrt())
                }
            };
            let mass = 1.0;
            let c2 = 2.0 * mass * node / std::f64::consts::PI * self.value(node)? * (e1 - e0);
            modes.push(BathMode { frequency: node, mass, coupling: c2.sqrt() });
        }
        Ok(modes)
    }
}

/// Frequency-cell placement for [`SpectralDensity::sample_modes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SamplingScheme {
    Linear,
    Log,
}

/// One sampled bath oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathMode {
    pub frequency: f64,
    pub mass: f64,
    pub coupling: f64,
}

impl BathMode {
    pub fn new(frequency: f64, mass: f64, coupling: f64) -> Result<Self> {
        if !frequency.is_finite() || frequency <= 0.0 {
            return Err(invalid("frequency", "must be positive"));
        }
        if !mass.is_finite() || mass <= 0.0 {
            return Err(invalid("mass", "must be positive"));
        }
        if !coupling.is_finite() {
            return Err(invalid("coupling", "must be finite"));
        }
        Ok(BathMode { frequency, mass, coupling })
    }
}

/// Mode-sum dissipation kernel of a finite bath.
pub fn mode_sum_dissipation(modes: &[BathMode], t: f64) -> f64 {
    modes
        .iter()
        .map(|m| -m.coupling * m.coupling / (2.0 * m.mass * m.frequency) * (m.frequency * t).sin())
        .sum()
}

/// Mode-sum noise kernel of a finite bath at temperature T.
pub fn mode_sum_noise(modes: &[BathMode], temperature: f64, t: f64) -> f64 {
    modes
        .iter()
        .map(|m| {
            let th = if temperature == 0.0 { 1.0 } else { coth(m.frequency / (2.0 * temperature)) };
            m.coupling * m.coupling / (2.0 * m.mass * m.frequency) * th * (m.frequency * t).cos()
        })
        .sum()
}

/// Mode-sum counterterm sum_n c_n^2 / (M m_n omega_n^2).
pub fn mode_sum_counterterm(modes: &[BathMode], system_mass: f64) -> f64 {
    modes
        .iter()
        .map(|m| m.coupling * m.coupling / (system_mass * m.mass * m.frequency * m.frequency))
        .sum()
}

/// A bath seen only through its kernels: either the continuum (quadrature) or
/// a finite mode list (exact sums). The propagator takes this, so the
/// influence-functional solve and the discrete oracle can share modes.
#[derive(Debug, Clone)]
pub enum BathKernels {
    Continuum(SpectralDensity),
    Modes { modes: Vec<BathMode>, temperature: f64 },
}

impl BathKernels {
    pub fn dissipation(&self, t: f64) -> Result<f64> {
        match self {
            BathKernels::Continuum(sd) => sd.dissipation_kernel(t),
            BathKernels::Modes { modes, .. } => Ok(mode_sum_dissipation(modes, t)),
        }
    }

    pub fn noise(&self, t: f64) -> Result<f64> {
        match self {
            BathKernels::Continuum(sd) => sd.noise_kernel(t),
            BathKernels::Modes { modes, temperature } => Ok(mode_sum_noise(modes, *temperature, t)),
        }
    }

    pub fn counterterm(&self, system_mass: f64) -> Result<f64> {
        match self {
            BathKernels::Continuum(sd) => sd.counterterm_frequency(),
            BathKernels::Modes { modes, .. } => Ok(mode_sum_counterterm(modes, system_mass)),
        }
    }
}
