//! Bang-bang pulse schedule and kernel modulation.
//!
//! A train of strong pulse pairs rotates the system by +theta_kick at the start
//! of each period and back by -theta_kick halfway through, so the kick angle as
//! a function of time is a square wave: theta_kick on [0, dt_p), 0 on
//! [dt_p, 2 dt_p), repeating. In the strong-pulse limit the sole effect on the
//! reduced dynamics is the factor cos(theta(s)) dressing each kernel argument.
//! The exact Gaussian path requires odd-pi kicks, where the factor is a clean
//! sign flip.

use crate::{invalid, Result};

/// Periodic kick schedule. `strength` (V) and `duration` (tau) describe the
/// physical pulse realizing kick_angle = Omega V tau; the reduced dynamics
/// depends on them only through `kick_angle` and `interval`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PulseTrain {
    pub strength: f64,
    pub duration: f64,
    /// Half-period dt_p between successive kicks.
    pub interval: f64,
    pub kick_angle: f64,
    pub enabled: bool,
}

impl PulseTrain {
    pub fn new(strength: f64, duration: f64, interval: f64, kick_angle: f64) -> Result<Self> {
        if !interval.is_finite() || interval <= 0.0 {
            return Err(invalid("interval", "must be positive"));
        }
        if !kick_angle.is_finite() {
            return Err(invalid("kick_angle", "must be finite"));
        }
        Ok(PulseTrain { strength, duration, interval, kick_angle, enabled: true })
    }

    /// Idealized instantaneous pi-kick train.
    pub fn pi_train(interval: f64) -> Result<Self> {
        Self::new(0.0, 0.0, interval, std::f64::consts::PI)
    }

    /// No pulses; theta(t) = 0 everywhere.
    pub fn disabled() -> Self {
        PulseTrain { strength: 0.0, duration: 0.0, interval: 1.0, kick_angle: 0.0, enabled: false }
    }

    /// Kick angle at time t (square wave of period 2 * interval).
    pub fn theta_at(&self, t: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let phase = t.rem_euclid(2.0 * self.interval);
        if phase < self.interval {
            self.kick_angle
        } else {
            0.0
        }
    }

    /// cos(theta(t)); the factor dressing both kernels.
    pub fn modulation_at(&self, t: f64) -> f64 {
        self.theta_at(t).cos()
    }

    /// Kernel dressed with the kick schedule:
    /// k_mod(s, s') = cos(theta(s)) k(s - s') cos(theta(s')).
    pub fn modified_kernel<F: Fn(f64) -> Result<f64>>(&self, base: F, s: f64, s_prime: f64) -> Result<f64> {
        Ok(self.modulation_at(s) * base(s - s_prime)? * self.modulation_at(s_prime))
    }

    /// True when kick_angle is an odd multiple of pi (within 1e-9 of one).
    pub fn is_odd_pi(&self) -> bool {
        let k = self.kick_angle / std::f64::consts::PI;
        let r = k.round();
        (k - r).abs() < 1e-9 && (r as i64).rem_euclid(2) == 1
    }

    /// Rejects trains the exact Gaussian path cannot represent.
    pub fn check_influence_path(&self) -> Result<()> {
        if self.enabled && !self.is_odd_pi() {
            return Err(crate::Error::Pulse(format!(
                "kick angle {} is not an odd multiple of pi; only sign-flip kicks keep the path Gaussian",
                self.kick_angle
            )));
        }
        Ok(())
    }

    /// Dimensionless pulse rate eta = Lambda_uv * interval / pi. Decoupling
    /// needs eta well below 1 for smooth spectra; eta = 1 marks the crossover.
    pub fn eta(&self, uv_cutoff: f64) -> f64 {
        eta_parameter(uv_cutoff, self.interval)
    }
}

/// eta = Lambda_uv * interval / pi.
pub fn eta_parameter(uv_cutoff: f64, interval: f64) -> f64 {
    uv_cutoff * interval / std::f64::consts::PI
}

/// Pulse interval realizing a given eta at a given cutoff.
pub fn interval_for_eta(uv_cutoff: f64, eta: f64) -> f64 {
    eta * std::f64::consts::PI / uv_cutoff
}
