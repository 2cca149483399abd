//! Moments, Fock matrix elements, and qubit observables of the reduced state.
//!
//! Everything the propagator emits is Gaussian data: a mean vector and a
//! covariance over the (R, P) phase plane. This module turns that data into
//! readouts: the ladder moments <a^2> and <a a^dag>, the mixed-state
//! uncertainty measure A, Fock matrix elements rho_kl up to a level cap,
//! Pauli expectations of the lowest two levels, leakage out of that pair, and
//! the excited-level decay factor.
//!
//! The first excited level and the (|0> + |1>)/sqrt(2) superposition are not
//! Gaussian states, but both are derivatives of Gaussian families (a scaled
//! vacuum, a displaced vacuum), and differentiation commutes with any linear
//! channel. They propagate exactly through short finite-difference stencils
//! in the family parameter.
//!
//! Ladder convention: L = M Omega fixes a = sqrt(L/2) R + i P / sqrt(2L), so
//! the vacuum covariance is diag(1/(2L), L/2).

use crate::propagator::{check_covariance, AffineGaussianMap};
use crate::{invalid, Error, Result};
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

/// Fock level cap used by the qubit readouts unless a caller asks otherwise.
pub const DEFAULT_LEVEL_CAP: usize = 6;

/// Step for the family-parameter stencils (4-point centered differences).
const STENCIL_H: f64 = 1e-3;

/// Vacuum covariance of the readout oscillator, diag(1/(2L), L/2).
pub fn vacuum_cov(ladder: f64) -> Matrix2<f64> {
    Matrix2::new(0.5 / ladder, 0.0, 0.0, 0.5 * ladder)
}

/// Thermal covariance with mean occupation nbar: (2 nbar + 1) times vacuum.
pub fn thermal_cov(ladder: f64, nbar: f64) -> Matrix2<f64> {
    (2.0 * nbar + 1.0) * vacuum_cov(ladder)
}

/// First and second moments of the reduced state, with the ladder moments
/// <a^2> and <a a^dag> (anti-normal order, means included) they determine.
#[derive(Debug, Clone, Copy)]
pub struct GaussianMoments {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
    /// Ladder constant L = M Omega of the readout basis.
    pub ladder: f64,
    /// <a^2>, mean part included.
    pub m_aa: Complex64,
    /// <a a^dag>, mean part included; real for every state.
    pub m_aad: f64,
}

impl GaussianMoments {
    /// Validating constructor: the covariance must be symmetric with positive
    /// variances and obey the uncertainty bound det cov >= 1/4 (hbar = 1).
    pub fn from_cov(mean: Vector2<f64>, cov: Matrix2<f64>, ladder: f64) -> Result<Self> {
        if !ladder.is_finite() || ladder <= 0.0 {
            return Err(invalid("ladder", "must be positive"));
        }
        check_covariance(&cov)?;
        Ok(Self::unchecked(mean, cov, ladder))
    }

    /// Same derived moments, no physicality checks. The derivative families
    /// need this: their stencil members sit slightly below the uncertainty
    /// bound even though every combined result is a physical state.
    pub fn unchecked(mean: Vector2<f64>, cov: Matrix2<f64>, ladder: f64) -> Self {
        let srr = ladder * cov[(0, 0)];
        let spp = cov[(1, 1)] / ladder;
        let srp = 0.5 * (cov[(0, 1)] + cov[(1, 0)]);
        let alpha = mean_amplitude_of(&mean, ladder);
        let m_aa = alpha * alpha + Complex64::new(0.5 * (srr - spp), srp);
        let m_aad = alpha.norm_sqr() + 0.5 * (srr + spp) + 0.5;
        GaussianMoments { mean, cov, ladder, m_aa, m_aad }
    }

    /// Ladder-basis mean <a>.
    pub fn mean_amplitude(&self) -> Complex64 {
        mean_amplitude_of(&self.mean, self.ladder)
    }

    /// Central <da^2>.
    pub fn central_aa(&self) -> Complex64 {
        let alpha = self.mean_amplitude();
        self.m_aa - alpha * alpha
    }

    /// Central <da da^dag>.
    pub fn central_anti(&self) -> f64 {
        self.m_aad - self.mean_amplitude().norm_sqr()
    }

    /// Uncertainty measure and the central covariances behind it.
    pub fn uncertainty(&self) -> UncertaintyReport {
        let var_r = self.cov[(0, 0)];
        let var_p = self.cov[(1, 1)];
        let cov_rp = 0.5 * (self.cov[(0, 1)] + self.cov[(1, 0)]);
        let a_sq = var_r * var_p - cov_rp * cov_rp;
        UncertaintyReport { a: a_sq.max(0.0).sqrt(), var_r, var_p, cov_rp }
    }
}

fn mean_amplitude_of(mean: &Vector2<f64>, ladder: f64) -> Complex64 {
    Complex64::new((0.5 * ladder).sqrt() * mean[0], mean[1] / (2.0 * ladder).sqrt())
}

/// Mixed-state uncertainty A = sqrt(var_R var_P - cov_RP^2); exactly 1/2 for
/// any pure Gaussian state and larger otherwise (hbar = 1).
#[derive(Debug, Clone, Copy)]
pub struct UncertaintyReport {
    pub a: f64,
    pub var_r: f64,
    pub var_p: f64,
    pub cov_rp: f64,
}

impl UncertaintyReport {
    pub fn a_squared(&self) -> f64 {
        self.a * self.a
    }
}

/// Quadratic-form parameters of the matrix-element generating function: the
/// state's smoothed (coherent-state-diagonal) distribution, continued to the
/// holomorphic boundary pair u = (zbar, w), is scale * exp(u^T A u / 2 + c.u),
/// and derivatives at u = 0 enumerate rho_kl.
struct FockKernel {
    scale: f64,
    c1: Complex64,
    a11: Complex64,
    /// Cross coupling A12; real whenever the distribution is normalizable.
    a12: f64,
}

fn fock_kernel(m: &GaussianMoments) -> Result<FockKernel> {
    let alpha = m.mean_amplitude();
    let ca = m.central_aa();
    let anti = m.central_anti();
    // Smoothed-distribution covariance (Re z, Im z block), det = (anti^2 - |ca|^2)/4.
    let g_rr = 0.5 * (anti + ca.re);
    let g_pp = 0.5 * (anti - ca.re);
    let g_rp = 0.5 * ca.im;
    let det = g_rr * g_pp - g_rp * g_rp;
    if !(det > 0.0) || !(g_rr > 0.0) {
        return Err(Error::State(format!(
            "smoothed phase-space distribution is not normalizable (anti-normal spread {anti:.6e}, squeeze {:.6e})",
            ca.norm()
        )));
    }
    let i00 = g_pp / det;
    let i01 = -g_rp / det;
    let i11 = g_rr / det;
    let a11 = -Complex64::new(0.25 * (i00 - i11), 0.5 * i01);
    let a12 = 1.0 - 0.25 * (i00 + i11);
    let gm0 = i00 * alpha.re + i01 * alpha.im;
    let gm1 = i01 * alpha.re + i11 * alpha.im;
    let c1 = Complex64::new(0.5 * gm0, 0.5 * gm1);
    let scale = (-0.5 * (alpha.re * gm0 + alpha.im * gm1)).exp() / (2.0 * det.sqrt());
    Ok(FockKernel { scale, c1, a11, a12 })
}

/// Mixed derivatives B[k][l] of exp(u^T A u / 2 + c.u) at u = 0, by the
/// Gaussian moment recursion (differentiate once, then read off the chain).
fn moment_table(kern: &FockKernel, cap: usize) -> Vec<Vec<Complex64>> {
    let n = cap + 1;
    let c2 = kern.c1.conj();
    let a22 = kern.a11.conj();
    let mut b = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    b[0][0] = Complex64::new(1.0, 0.0);
    for l in 1..n {
        let mut v = c2 * b[0][l - 1];
        if l >= 2 {
            v += a22 * (l - 1) as f64 * b[0][l - 2];
        }
        b[0][l] = v;
    }
    for k in 1..n {
        for l in 0..n {
            let mut v = kern.c1 * b[k - 1][l];
            if k >= 2 {
                v += kern.a11 * (k - 1) as f64 * b[k - 2][l];
            }
            if l >= 1 {
                v += kern.a12 * l as f64 * b[k - 1][l - 1];
            }
            b[k][l] = v;
        }
    }
    b
}

fn factorials(cap: usize) -> Vec<f64> {
    let mut f = vec![1.0; cap + 1];
    for k in 1..=cap {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// Raw rho_kl table for a Gaussian state, row-major (cap+1)^2, no invariant
/// checks; the derivative families combine these before validation.
fn fock_elements_raw(m: &GaussianMoments, cap: usize) -> Result<Vec<Complex64>> {
    let kern = fock_kernel(m)?;
    let b = moment_table(&kern, cap);
    let fact = factorials(cap);
    let n = cap + 1;
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        for l in 0..n {
            out[k * n + l] = kern.scale * b[k][l] / (fact[k] * fact[l]).sqrt();
        }
    }
    Ok(out)
}

/// One Fock matrix element <k| rho |l> of a Gaussian state.
pub fn fock_element(m: &GaussianMoments, k: usize, l: usize) -> Result<Complex64> {
    let cap = k.max(l);
    let raw = fock_elements_raw(m, cap)?;
    Ok(raw[k * (cap + 1) + l])
}

/// Fock matrix of a Gaussian state at the default level cap.
pub fn fock_density(m: &GaussianMoments) -> Result<FockDensity> {
    fock_density_capped(m, DEFAULT_LEVEL_CAP)
}

/// Fock matrix of a Gaussian state at an explicit level cap.
pub fn fock_density_capped(m: &GaussianMoments, cap: usize) -> Result<FockDensity> {
    FockDensity::new(cap, fock_elements_raw(m, cap)?)
}

/// Reduced density matrix on the lowest Fock levels, 0..=cap.
#[derive(Debug, Clone)]
pub struct FockDensity {
    cap: usize,
    elements: Vec<Complex64>,
}

impl FockDensity {
    /// Accepts a row-major (cap+1)^2 element table after checking hermiticity
    /// (1e-10), the diagonal range [-1e-9, 1 + 1e-9], and trace <= 1 + 1e-6.
    pub fn new(cap: usize, elements: Vec<Complex64>) -> Result<Self> {
        let n = cap + 1;
        if elements.len() != n * n {
            return Err(invalid("elements", "length must be (cap + 1)^2"));
        }
        let rho = FockDensity { cap, elements };
        let mut trace = 0.0;
        for k in 0..=cap {
            for l in 0..=k {
                let gap = (rho.element(k, l) - rho.element(l, k).conj()).norm();
                if gap > 1e-10 {
                    return Err(Error::State(format!("matrix not hermitian at ({k}, {l}): gap {gap:.3e}")));
                }
            }
            let d = rho.element(k, k);
            if d.im.abs() > 1e-10 || d.re < -1e-9 || d.re > 1.0 + 1e-9 {
                return Err(Error::State(format!("population of level {k} out of range: {d}")));
            }
            trace += d.re;
        }
        if trace > 1.0 + 1e-6 {
            return Err(Error::State(format!("trace {trace} exceeds 1")));
        }
        Ok(rho)
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn element(&self, k: usize, l: usize) -> Complex64 {
        assert!(k <= self.cap && l <= self.cap, "level beyond the cap");
        self.elements[k * (self.cap + 1) + l]
    }

    pub fn population(&self, k: usize) -> f64 {
        self.element(k, k).re
    }

    pub fn trace(&self) -> f64 {
        (0..=self.cap).map(|k| self.population(k)).sum()
    }

    /// Weight the level cap fails to capture, 1 - trace.
    pub fn truncation_deficit(&self) -> f64 {
        1.0 - self.trace()
    }

    /// Pauli expectations of the two lowest levels:
    /// (rho01 + rho10, i(rho10 - rho01), rho11 - rho00).
    pub fn pauli(&self) -> Result<(f64, f64, f64)> {
        if self.cap < 1 {
            return Err(invalid("cap", "Pauli readout needs at least two levels"));
        }
        let r01 = self.element(0, 1);
        Ok((2.0 * r01.re, 2.0 * r01.im, self.population(1) - self.population(0)))
    }

    /// Population outside the qubit pair, 1 - rho00 - rho11, clamped to [0, 1].
    pub fn leakage(&self) -> Result<f64> {
        if self.cap < 2 {
            return Err(invalid("cap", "leakage needs at least three levels"));
        }
        Ok((1.0 - self.population(0) - self.population(1)).clamp(0.0, 1.0))
    }

    /// Decay factor of the first excited level, -ln rho11.
    pub fn decay_factor(&self) -> Result<f64> {
        if self.cap < 1 {
            return Err(invalid("cap", "decay factor needs the first excited level"));
        }
        let p1 = self.population(1);
        if p1 <= 0.0 {
            return Err(Error::State(format!("first excited population {p1:.3e} is not positive")));
        }
        Ok(-p1.ln())
    }
}

/// Initial conditions of the qubit runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    Ground,
    Excited,
    Superposition,
}

impl std::fmt::Display for InitialState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            InitialState::Ground => "ground",
            InitialState::Excited => "excited",
            InitialState::Superposition => "superposition",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for InitialState {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Ok(match s {
            "ground" => InitialState::Ground,
            "excited" => InitialState::Excited,
            "superposition" => InitialState::Superposition,
            other => {
                return Err(crate::Error::Config {
                    key: "initial".to_string(),
                    reason: format!(
                        "unknown initial state `{other}` (expected ground, excited, \
                         or superposition)"
                    ),
                })
            }
        })
    }
}

fn evolved_raw(
    map: &AffineGaussianMap,
    mean0: Vector2<f64>,
    cov0: Matrix2<f64>,
    ladder: f64,
    cap: usize,
) -> Result<Vec<Complex64>> {
    let (mean, cov) = map.apply(&mean0, &cov0);
    fock_elements_raw(&GaussianMoments::unchecked(mean, cov, ladder), cap)
}

fn axpy(acc: &mut [Complex64], weight: f64, part: &[Complex64]) {
    for (a, p) in acc.iter_mut().zip(part) {
        *a += weight * p;
    }
}

/// Evolves the chosen initial state through the reduced Gaussian channel and
/// returns its Fock matrix.
///
/// Ground is the ladder vacuum. The first excited level has Wigner function
/// G - 2 dG/dlambda at lambda = 1 within the scaled-vacuum family of
/// covariance vac/lambda, and the superposition adds the |0><1| + |1><0|
/// cross term, the epsilon-derivative at zero of a real-displaced vacuum.
/// Both derivatives commute with the channel, so each is evaluated by a
/// 4-point stencil after propagation.
pub fn evolve_initial(
    state: InitialState,
    map: &AffineGaussianMap,
    ladder: f64,
    cap: usize,
) -> Result<FockDensity> {
    let vac = vacuum_cov(ladder);
    let zero = Vector2::zeros();
    let h = STENCIL_H;
    match state {
        InitialState::Ground => FockDensity::new(cap, evolved_raw(map, zero, vac, ladder, cap)?),
        InitialState::Excited => {
            let mut acc = evolved_raw(map, zero, vac, ladder, cap)?;
            for (lam, w) in stencil_weights(h) {
                let part = evolved_raw(map, zero, vac / lam, ladder, cap)?;
                axpy(&mut acc, -2.0 * w, &part);
            }
            FockDensity::new(cap, acc)
        }
        InitialState::Superposition => {
            // Half of (ground + excited + cross term); the ground run feeds
            // both the diagonal part and the excited derivative family, so it
            // enters with weight two before the final halving.
            let ground = evolved_raw(map, zero, vac, ladder, cap)?;
            let mut acc = ground.clone();
            axpy(&mut acc, 1.0, &ground);
            for (lam, w) in stencil_weights(h) {
                let part = evolved_raw(map, zero, vac / lam, ladder, cap)?;
                axpy(&mut acc, -2.0 * w, &part);
            }
            // Cross term |0><1| + |1><0|: d/de at e = 0 of the coherent
            // family displaced by <R> = e sqrt(2/L).
            let dr = (2.0 / ladder).sqrt();
            for (lam, w) in stencil_weights(h) {
                let shift = Vector2::new((lam - 1.0) * dr, 0.0);
                let part = evolved_raw(map, shift, vac, ladder, cap)?;
                axpy(&mut acc, w, &part);
            }
            for v in acc.iter_mut() {
                *v *= 0.5;
            }
            FockDensity::new(cap, acc)
        }
    }
}

/// 4-point centered first-derivative stencil at parameter value 1:
/// f'(1) = (8 f(1+h) - 8 f(1-h) - f(1+2h) + f(1-2h)) / (12 h).
fn stencil_weights(h: f64) -> [(f64, f64); 4] {
    [
        (1.0 + h, 8.0 / (12.0 * h)),
        (1.0 - h, -8.0 / (12.0 * h)),
        (1.0 + 2.0 * h, -1.0 / (12.0 * h)),
        (1.0 - 2.0 * h, 1.0 / (12.0 * h)),
    ]
}

/// Transport/fluctuation split of the evolved ladder moments. The transport
/// part carries the initial state through the mean map alone (the anti-normal
/// 1/2 is booked here); the fluctuation part holds the induced noise. The two
/// sum to the directly computed moments.
#[derive(Debug, Clone, Copy)]
pub struct MomentSplit {
    pub transport_aa: Complex64,
    pub fluct_aa: Complex64,
    pub transport_aad: f64,
    pub fluct_aad: f64,
}

impl MomentSplit {
    pub fn total_aa(&self) -> Complex64 {
        self.transport_aa + self.fluct_aa
    }

    pub fn total_aad(&self) -> f64 {
        self.transport_aad + self.fluct_aad
    }
}

/// Splits the evolved <a^2> and <a a^dag> into transported and induced parts.
pub fn moment_split(
    map: &AffineGaussianMap,
    mean0: &Vector2<f64>,
    cov0: &Matrix2<f64>,
    ladder: f64,
) -> MomentSplit {
    let c = &map.transport;
    let transported = GaussianMoments::unchecked(c * mean0, c * cov0 * c.transpose(), ladder);
    let n01 = 0.5 * (map.noise[(0, 1)] + map.noise[(1, 0)]);
    let nrr = ladder * map.noise[(0, 0)];
    let npp = map.noise[(1, 1)] / ladder;
    MomentSplit {
        transport_aa: transported.m_aa,
        fluct_aa: Complex64::new(0.5 * (nrr - npp), n01),
        transport_aad: transported.m_aad,
        fluct_aad: 0.5 * (nrr + npp),
    }
}
