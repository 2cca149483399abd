//! Open-system dynamics of a harmonic oscillator qubit under bang-bang decoupling.
//!
//! The crate simulates a Brownian oscillator bilinearly coupled to a bath of
//! harmonic modes, with the lowest two Fock levels read out as a qubit. Strong
//! pulse pairs flip the coupling sign periodically; the reduced dynamics stays
//! Gaussian, so the exact propagator is a 2x2 linear map plus a noise matrix.
//!
//! Module map:
//! - [`environment`]: spectral densities (1/f, Ohmic, super-Ohmic), dissipation
//!   and noise kernels, discrete bath sampling, counterterm frequency.
//! - [`pulses`]: square-wave kick schedule and kernel modulation.
//! - [`propagator`]: nonlocal boundary-value solve for the Gaussian propagator
//!   and its exact finite-bath symplectic oracle.
//! - [`state`]: Gaussian moments, Fock matrix elements, qubit observables.
//! - [`dephasing`]: analytic pure-dephasing filter and Zeno/anti-Zeno scan.
//! - [`scenario`]: batch runner behind the CLI, figure presets, CSV output.
//!
//! Units: hbar = k_B = 1, angular frequencies in GHz, times in ns.

pub mod dephasing;
pub mod environment;
pub mod oracle;
pub mod propagator;
pub mod pulses;
pub mod quad;
pub mod scenario;
pub mod state;

use thiserror::Error;

/// Temperature conversion, k_B/hbar in angular GHz per mK.
pub const GHZ_PER_MK: f64 = 0.13092;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("quadrature did not converge (error estimate {estimate:.3e} over [{lo}, {hi}])")]
    Quadrature { estimate: f64, lo: f64, hi: f64 },
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("caustic at t = {t_final}: endpoint matrix is singular, the Gaussian propagator does not exist here")]
    Caustic { t_final: f64 },
    #[error("pulse train incompatible with the influence-functional path: {0}")]
    Pulse(String),
    #[error("unphysical state: {0}")]
    State(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an error with a short note saying which stage produced it.
    pub fn in_context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Exit code contract: 1 for validation problems, 2 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } | Error::Pulse(_) | Error::Config { .. } | Error::Io(_) => 1,
            Error::Quadrature { .. } | Error::Divergent(_) | Error::Caustic { .. } | Error::State(_) => 2,
            Error::Context { source, .. } => source.exit_code(),
        }
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(invalid("omega", "must be positive").exit_code(), 1);
        let q = Error::Quadrature { estimate: 1e-3, lo: 0.0, hi: 1.0 };
        assert_eq!(q.exit_code(), 2);
        assert_eq!(q.in_context("noise kernel").exit_code(), 2);
    }
}
