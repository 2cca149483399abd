//! Pure-dephasing exponent with pulse filtering.
//!
//! When the qubit-bath coupling commutes with the qubit Hamiltonian the
//! coherence decays as exp(-D) with D a weighted spectral integral. An
//! equally spaced train of sign flips (2 N flips over the run) multiplies
//! the free integrand by tan^2(omega dt / 2): the filter vanishes
//! quadratically at low frequency, so fast flipping averages slow noise
//! away, but it diverges at omega dt = pi and every odd multiple, where the
//! train is resonant with a bath band and decoherence accelerates instead.
//!
//! Resonances are located analytically before any quadrature runs: when a
//! singular frequency (2 j + 1) pi / dt lies inside the bath support the
//! exponent is reported as divergent rather than estimated. The crossover
//! scan sweeps the pulse-speed parameter eta = Lambda_uv dt / pi at fixed
//! total time and labels each interval as suppression or accentuation
//! relative to the pulse-free exponent.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use crate::environment::{self, BathMode, SpectralDensity};
use crate::pulses;
use crate::quad::{self, Tolerance};
use crate::{invalid, Result};

/// Default overall scale of the exponent (the squared coupling operator
/// matrix element absorbed into the integral).
pub const DEFAULT_PREFACTOR: f64 = std::f64::consts::FRAC_2_PI;

/// How the spectral integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// Adaptive quadrature over the continuum support.
    Continuum,
    /// Midpoint sum over this many equal frequency cells of the support.
    Discrete(usize),
}

/// One dephasing computation: a bath, a flip interval dt, and the number of
/// flip pairs N, so the total time is always t = 2 N dt.
#[derive(Debug, Clone)]
pub struct DephasingConfig {
    pub sd: SpectralDensity,
    /// Interval dt between consecutive sign flips.
    pub interval: f64,
    /// Number of flip pairs N; zero means no evolution at all.
    pub pair_count: usize,
    pub mode: FilterMode,
    /// Overall scale multiplying the spectral integral.
    pub prefactor: f64,
}

impl DephasingConfig {
    pub fn new(sd: SpectralDensity, interval: f64, pair_count: usize) -> Result<Self> {
        if !interval.is_finite() || interval <= 0.0 {
            return Err(invalid("interval", "must be positive and finite"));
        }
        Ok(DephasingConfig {
            sd,
            interval,
            pair_count,
            mode: FilterMode::Continuum,
            prefactor: DEFAULT_PREFACTOR,
        })
    }

    /// Build from a total time, which must be an even integer multiple of the
    /// interval so that the train closes on a whole number of flip pairs.
    pub fn with_t_final(sd: SpectralDensity, interval: f64, t_final: f64) -> Result<Self> {
        if !interval.is_finite() || interval <= 0.0 {
            return Err(invalid("interval", "must be positive and finite"));
        }
        if !t_final.is_finite() || t_final <= 0.0 {
            return Err(invalid("t_final", "must be positive and finite"));
        }
        let ratio = t_final / (2.0 * interval);
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
            return Err(invalid(
                "t_final",
                format!("must be 2 N x interval for a whole number of flip pairs, got ratio {ratio}"),
            ));
        }
        Self::new(sd, interval, rounded as usize)
    }

    pub fn mode(mut self, mode: FilterMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn prefactor(mut self, prefactor: f64) -> Result<Self> {
        if !prefactor.is_finite() || prefactor < 0.0 {
            return Err(invalid("prefactor", "must be nonnegative and finite"));
        }
        self.prefactor = prefactor;
        Ok(self)
    }

    /// Total evolution time 2 N dt.
    pub fn t_final(&self) -> f64 {
        2.0 * self.pair_count as f64 * self.interval
    }
}

/// Outcome of an exponent computation. Divergence is a reportable result,
/// not a failure: it marks a filter resonance inside the bath support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    /// The filter resonates with an in-band frequency; the exponent grows
    /// without bound as flip pairs accumulate.
    Divergent { pole: f64 },
}

impl Exponent {
    pub fn value(&self) -> Option<f64> {
        match self {
            Exponent::Finite(v) => Some(*v),
            Exponent::Divergent { .. } => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Exponent::Divergent { .. })
    }
}

/// Smallest filter singularity (2 j + 1) pi / interval inside [lo, hi].
/// Both endpoints count as inside, up to a 1e-12 relative slack.
fn first_pole_in(interval: f64, lo: f64, hi: f64) -> Option<f64> {
    let base = PI / interval;
    let tol = 1e-12;
    let mut j = ((lo * (1.0 - tol) / base - 1.0) / 2.0).ceil();
    if j < 0.0 {
        j = 0.0;
    }
    let pole = (2.0 * j + 1.0) * base;
    (pole <= hi * (1.0 + tol)).then_some(pole)
}

fn one_minus_cos(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        0.5 * x * x * (1.0 - x * x / 12.0)
    } else {
        1.0 - x.cos()
    }
}

fn thermal(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        1.0
    } else {
        environment::coth(omega / (2.0 * temperature))
    }
}

/// tan^2(omega dt / 2), the spectral weight of the flip train relative to
/// free evolution at the same total time.
fn filter_factor(omega: f64, interval: f64) -> f64 {
    let t = (0.5 * omega * interval).tan();
    t * t
}

/// Panel edges for the filtered integrand: one panel per oscillation period
/// of cos(omega t), plus the quarter-period breakpoints of the tan^2 factor
/// that fall strictly inside the support. Once the pole scan has passed, at
/// most a handful of those breakpoints can exist.
fn filtered_edges(lo: f64, hi: f64, t_final: f64, interval: f64) -> Vec<f64> {
    let mut edges = quad::oscillatory_edges(lo, hi, t_final);
    let step = FRAC_PI_2 / interval;
    let margin = 1e-9 * (hi - lo);
    let mut k = (lo / step).floor() + 1.0;
    while k * step < hi - margin {
        if k * step > lo + margin {
            edges.push(k * step);
        }
        k += 1.0;
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < margin);
    edges
}

fn midpoint_cells(sd: &SpectralDensity, count: usize) -> Result<Vec<(f64, f64)>> {
    if count == 0 {
        return Err(invalid("mode", "discrete cell count must be positive"));
    }
    let lo = sd.ir_cutoff;
    let hi = sd.uv_cutoff;
    let dw = (hi - lo) / count as f64;
    let mut cells = Vec::with_capacity(count);
    for k in 0..count {
        let omega = lo + (k as f64 + 0.5) * dw;
        cells.push((omega, sd.value(omega)? * dw));
    }
    Ok(cells)
}

/// Dephasing exponent D for the flip train described by `cfg`. Reports a
/// divergence when a filter singularity lies inside the bath support.
pub fn dephasing_exponent(cfg: &DephasingConfig) -> Result<Exponent> {
    if cfg.pair_count == 0 || cfg.sd.coupling == 0.0 || cfg.prefactor == 0.0 {
        return Ok(Exponent::Finite(0.0));
    }
    let lo = cfg.sd.ir_cutoff;
    let hi = cfg.sd.uv_cutoff;
    if let Some(pole) = first_pole_in(cfg.interval, lo, hi) {
        return Ok(Exponent::Divergent { pole });
    }
    let t = cfg.t_final();
    let dt = cfg.interval;
    match cfg.mode {
        FilterMode::Continuum => {
            let sd = cfg.sd;
            let pref = cfg.prefactor;
            let edges = filtered_edges(lo, hi, t, dt);
            let v = quad::integrate_edges(
                |w| {
                    pref * sd.value(w).unwrap_or(0.0) * thermal(w, sd.temperature)
                        * one_minus_cos(w * t) / (w * w)
                        * filter_factor(w, dt)
                },
                &edges,
                Tolerance::default(),
            )
            .map_err(|e| e.in_context("pulsed dephasing exponent"))?;
            Ok(Exponent::Finite(v))
        }
        FilterMode::Discrete(count) => {
            let mut total = 0.0;
            for (omega, weight) in midpoint_cells(&cfg.sd, count)? {
                total += cfg.prefactor * weight * thermal(omega, cfg.sd.temperature)
                    * one_minus_cos(omega * t) / (omega * omega)
                    * filter_factor(omega, dt);
            }
            Ok(Exponent::Finite(total))
        }
    }
}

/// Exponent of the same bath over the same total time with no flips at all.
pub fn free_exponent(cfg: &DephasingConfig) -> Result<f64> {
    free_value(&cfg.sd, cfg.t_final(), cfg.mode, cfg.prefactor)
}

fn free_value(sd: &SpectralDensity, t_final: f64, mode: FilterMode, prefactor: f64) -> Result<f64> {
    if t_final == 0.0 || sd.coupling == 0.0 || prefactor == 0.0 {
        return Ok(0.0);
    }
    let lo = sd.ir_cutoff;
    let hi = sd.uv_cutoff;
    match mode {
        FilterMode::Continuum => {
            let sd = *sd;
            let edges = quad::oscillatory_edges(lo, hi, t_final);
            quad::integrate_edges(
                |w| {
                    prefactor * sd.value(w).unwrap_or(0.0) * thermal(w, sd.temperature)
                        * one_minus_cos(w * t_final) / (w * w)
                },
                &edges,
                Tolerance::default(),
            )
            .map_err(|e| e.in_context("free dephasing exponent"))
        }
        FilterMode::Discrete(count) => {
            let mut total = 0.0;
            for (omega, weight) in midpoint_cells(sd, count)? {
                total += prefactor * weight * thermal(omega, sd.temperature)
                    * one_minus_cos(omega * t_final) / (omega * omega);
            }
            Ok(total)
        }
    }
}

/// Exponent for an explicit list of discrete modes, each weighted by
/// pi c^2 / (2 m omega), with the flip-train filter applied. A mode sitting
/// on a filter singularity is reported as divergent.
pub fn dephasing_exponent_modes(
    modes: &[BathMode],
    temperature: f64,
    interval: f64,
    pair_count: usize,
    prefactor: f64,
) -> Result<Exponent> {
    if !interval.is_finite() || interval <= 0.0 {
        return Err(invalid("interval", "must be positive and finite"));
    }
    if pair_count == 0 {
        return Ok(Exponent::Finite(0.0));
    }
    let t = 2.0 * pair_count as f64 * interval;
    let mut total = 0.0;
    for mode in modes {
        if (0.5 * mode.frequency * interval).cos().abs() < 1e-9 {
            return Ok(Exponent::Divergent { pole: mode.frequency });
        }
        let weight = PI * mode.coupling * mode.coupling / (2.0 * mode.mass * mode.frequency);
        total += prefactor * weight * thermal(mode.frequency, temperature)
            * one_minus_cos(mode.frequency * t) / (mode.frequency * mode.frequency)
            * filter_factor(mode.frequency, interval);
    }
    Ok(Exponent::Finite(total))
}

/// Flip-free exponent for an explicit list of discrete modes.
pub fn free_exponent_modes(
    modes: &[BathMode],
    temperature: f64,
    t_final: f64,
    prefactor: f64,
) -> f64 {
    let mut total = 0.0;
    for mode in modes {
        let weight = PI * mode.coupling * mode.coupling / (2.0 * mode.mass * mode.frequency);
        total += prefactor * weight * thermal(mode.frequency, temperature)
            * one_minus_cos(mode.frequency * t_final) / (mode.frequency * mode.frequency);
    }
    total
}

/// Off-diagonal qubit element after the run: rho01 exp(-D), and exactly zero
/// when the exponent diverges.
pub fn coherence(cfg: &DephasingConfig, rho01: num_complex::Complex64) -> Result<num_complex::Complex64> {
    Ok(match dephasing_exponent(cfg)? {
        Exponent::Finite(d) => rho01 * (-d).exp(),
        Exponent::Divergent { .. } => num_complex::Complex64::new(0.0, 0.0),
    })
}

/// True when the flips pump this frequency instead of averaging it away:
/// (4 l + 1) pi / 2 < omega dt < (4 l + 3) pi / 2 for some l >= 0. These are
/// exactly the frequencies where tan^2(omega dt / 2) exceeds one.
pub fn in_enhancement_band(omega: f64, interval: f64) -> bool {
    let frac = (omega * interval / PI - 0.5).rem_euclid(2.0);
    frac > 0.0 && frac < 1.0
}

/// Accentuated frequency windows clipped to [lo, hi], in ascending order.
pub fn enhancement_bands_between(interval: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if !(interval > 0.0) || !(hi > lo) {
        return out;
    }
    let mut l = 0.0;
    loop {
        let a = (4.0 * l + 1.0) * FRAC_PI_2 / interval;
        let b = (4.0 * l + 3.0) * FRAC_PI_2 / interval;
        if a >= hi {
            break;
        }
        if b > lo {
            out.push((a.max(lo), b.min(hi)));
        }
        l += 1.0;
    }
    out
}

/// Whether an interval suppresses or accentuates decoherence relative to
/// free evolution over the same total time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Suppression,
    Accentuation,
    Divergent,
}

#[derive(Debug, Clone)]
pub struct CrossoverRow {
    pub pair_count: usize,
    pub interval: f64,
    /// Pulse-speed parameter Lambda_uv dt / pi.
    pub eta: f64,
    pub exponent: Exponent,
    pub regime: Regime,
    /// Accentuated frequency windows inside the bath support at this interval.
    pub bands: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct CrossoverScan {
    pub t_final: f64,
    pub free_exponent: f64,
    /// Rows in ascending eta (descending pair count).
    pub rows: Vec<CrossoverRow>,
    /// eta of the first row, in ascending order, that fails to suppress.
    pub eta_star: Option<f64>,
}

/// Sweep the flip interval at fixed total time. Each pair count N maps to
/// dt = t_final / (2 N); suppression is judged non-strictly against the
/// flip-free exponent, so a decoupled bath never reports a crossover.
pub fn crossover_scan(
    sd: &SpectralDensity,
    t_final: f64,
    pair_counts: &[usize],
    mode: FilterMode,
    prefactor: f64,
) -> Result<CrossoverScan> {
    if !t_final.is_finite() || t_final <= 0.0 {
        return Err(invalid("t_final", "must be positive and finite"));
    }
    if pair_counts.is_empty() {
        return Err(invalid("pair_counts", "need at least one pair count"));
    }
    if pair_counts.contains(&0) {
        return Err(invalid("pair_counts", "pair counts must be positive"));
    }
    let free = free_value(sd, t_final, mode, prefactor)?;
    let mut rows = pair_counts
        .par_iter()
        .map(|&n| -> Result<CrossoverRow> {
            let interval = t_final / (2.0 * n as f64);
            let cfg = DephasingConfig {
                sd: *sd,
                interval,
                pair_count: n,
                mode,
                prefactor,
            };
            let exponent = dephasing_exponent(&cfg)?;
            let regime = match exponent {
                Exponent::Divergent { .. } => Regime::Divergent,
                Exponent::Finite(d) if d <= free => Regime::Suppression,
                Exponent::Finite(_) => Regime::Accentuation,
            };
            Ok(CrossoverRow {
                pair_count: n,
                interval,
                eta: pulses::eta_parameter(sd.uv_cutoff, interval),
                exponent,
                regime,
                bands: enhancement_bands_between(interval, sd.ir_cutoff, sd.uv_cutoff),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    let eta_star = rows
        .iter()
        .find(|r| r.regime != Regime::Suppression)
        .map(|r| r.eta);
    Ok(CrossoverScan {
        t_final,
        free_exponent: free,
        rows,
        eta_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ohmic(coupling: f64, uv: f64, temperature: f64) -> SpectralDensity {
        SpectralDensity::ohmic(coupling, uv, 1.0, temperature).unwrap()
    }

    #[test]
    fn zero_coupling_and_zero_pairs_give_zero() {
        let decoupled = DephasingConfig::new(ohmic(0.0, 10.0, 0.0), 0.05, 4).unwrap();
        assert_eq!(dephasing_exponent(&decoupled).unwrap(), Exponent::Finite(0.0));
        assert_eq!(free_exponent(&decoupled).unwrap(), 0.0);

        let idle = DephasingConfig::new(ohmic(0.1, 10.0, 0.0), 0.05, 0).unwrap();
        assert_eq!(dephasing_exponent(&idle).unwrap(), Exponent::Finite(0.0));
        assert_eq!(free_exponent(&idle).unwrap(), 0.0);
    }

    #[test]
    fn config_validation_names_the_offending_knob() {
        let sd = ohmic(0.1, 10.0, 0.0);
        assert!(DephasingConfig::new(sd, 0.0, 3).is_err());
        assert!(DephasingConfig::new(sd, -0.1, 3).is_err());

        let cfg = DephasingConfig::with_t_final(sd, 0.05, 0.3).unwrap();
        assert_eq!(cfg.pair_count, 3);
        assert_relative_eq!(cfg.t_final(), 0.3, max_relative = 1e-12);
        assert_relative_eq!(cfg.prefactor, DEFAULT_PREFACTOR, max_relative = 1e-15);

        assert!(DephasingConfig::with_t_final(sd, 0.06, 0.25).is_err());
        assert!(DephasingConfig::with_t_final(sd, 0.2, 0.2).is_err());
    }

    #[test]
    fn single_mode_filter_is_exactly_tan_squared() {
        let mode = BathMode::new(2.0, 1.3, 0.7).unwrap();
        let temperature = 0.8;
        let interval = 0.31;
        let pairs = 3;
        let t = 2.0 * pairs as f64 * interval;

        let pulsed = dephasing_exponent_modes(&[mode], temperature, interval, pairs, DEFAULT_PREFACTOR)
            .unwrap()
            .value()
            .unwrap();
        let free = free_exponent_modes(&[mode], temperature, t, DEFAULT_PREFACTOR);
        let half_angle: f64 = 0.5 * 2.0 * interval;
        assert_relative_eq!(pulsed / free, half_angle.tan().powi(2), max_relative = 1e-12);

        let weight = PI * 0.49 / (2.0 * 1.3 * 2.0);
        let expected_free = DEFAULT_PREFACTOR * weight * environment::coth(2.0 / 1.6)
            * (1.0 - (2.0 * t).cos()) / 4.0;
        assert_relative_eq!(free, expected_free, max_relative = 1e-12);
    }

    #[test]
    fn filter_grows_with_interval_below_the_first_band() {
        let mode = BathMode::new(1.0, 1.0, 0.5).unwrap();
        let t_final = 4.0;
        let mut last = 0.0;
        for pairs in [40usize, 20, 8, 4, 2] {
            let interval = t_final / (2.0 * pairs as f64);
            let d = dephasing_exponent_modes(&[mode], 0.0, interval, pairs, DEFAULT_PREFACTOR)
                .unwrap()
                .value()
                .unwrap();
            assert!(d > last, "expected growth, got {d} after {last} at dt = {interval}");
            last = d;
        }
    }

    #[test]
    fn enhancement_bands_follow_the_quarter_wave_rule() {
        assert!(!in_enhancement_band(0.4 * PI, 1.0));
        assert!(in_enhancement_band(0.6 * PI, 1.0));
        assert!(in_enhancement_band(1.4 * PI, 1.0));
        assert!(!in_enhancement_band(1.6 * PI, 1.0));
        assert!(!in_enhancement_band(2.4 * PI, 1.0));
        assert!(in_enhancement_band(2.6 * PI, 1.0));
        assert!(!in_enhancement_band(3.6 * PI, 1.0));

        let bands = enhancement_bands_between(1.0, 0.0, 3.0 * PI);
        assert_eq!(bands.len(), 2);
        assert_abs_diff_eq!(bands[0].0, FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(bands[0].1, 3.0 * FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(bands[1].0, 5.0 * FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(bands[1].1, 3.0 * PI, epsilon = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(0x0dd5);
        let mut checked = 0;
        while checked < 50 {
            let x: f64 = rng.gen_range(0.1..6.0);
            let near_pole = (x - 2.0 * (x / 2.0).round()).abs() < 0.05
                || ((x - 1.0) - 2.0 * ((x - 1.0) / 2.0).round()).abs() < 0.05;
            let near_edge = ((x - 0.5) - ((x - 0.5) / 1.0).round()).abs() < 0.02;
            let degenerate = (x - x.round()).abs() < 0.05;
            if near_pole || near_edge || degenerate {
                continue;
            }
            let interval = x * PI;
            let mode = BathMode::new(1.0, 1.0, 0.5).unwrap();
            let pulsed = dephasing_exponent_modes(&[mode], 0.3, interval, 1, DEFAULT_PREFACTOR)
                .unwrap()
                .value()
                .unwrap();
            let free = free_exponent_modes(&[mode], 0.3, 2.0 * interval, DEFAULT_PREFACTOR);
            assert_eq!(
                pulsed > free,
                in_enhancement_band(1.0, interval),
                "band rule failed at omega dt = {x} pi"
            );
            checked += 1;
        }
    }

    #[test]
    fn vanishing_interval_decouples_completely() {
        let cfg = DephasingConfig::new(ohmic(0.1, 10.0, 0.0), 1e-6, 125_000).unwrap();
        assert_relative_eq!(cfg.t_final(), 0.25, max_relative = 1e-12);
        let pulsed = dephasing_exponent(&cfg).unwrap().value().unwrap();
        let free = free_exponent(&cfg).unwrap();
        assert!(free > 1e-3, "free exponent unexpectedly small: {free}");
        assert!(pulsed > 0.0);
        assert!(pulsed < 1e-6 * free, "pulsed {pulsed} vs free {free}");
    }

    #[test]
    fn resonance_inside_the_support_is_flagged() {
        let sd = ohmic(0.1, 100.0, 0.0);

        let edge = DephasingConfig::new(sd, PI / 100.0, 8).unwrap();
        match dephasing_exponent(&edge).unwrap() {
            Exponent::Divergent { pole } => assert_relative_eq!(pole, 100.0, max_relative = 1e-9),
            Exponent::Finite(v) => panic!("expected divergence at the support edge, got {v}"),
        }
        let discrete = DephasingConfig::new(sd, PI / 100.0, 8)
            .unwrap()
            .mode(FilterMode::Discrete(64));
        assert!(dephasing_exponent(&discrete).unwrap().is_divergent());

        let just_outside = DephasingConfig::new(sd, PI / 101.0, 8).unwrap();
        let d = dephasing_exponent(&just_outside).unwrap().value().unwrap();
        assert!(d.is_finite() && d > 0.0);

        let one_over_f = SpectralDensity::one_over_f(0.5, 100.0, 1.0, 1.0, 0.0).unwrap();
        let cfg = DephasingConfig::new(one_over_f, 4.0 * PI, 2).unwrap();
        match dephasing_exponent(&cfg).unwrap() {
            Exponent::Divergent { pole } => assert_relative_eq!(pole, 1.25, max_relative = 1e-12),
            Exponent::Finite(v) => panic!("expected the j = 2 singularity in band, got {v}"),
        }
    }

    #[test]
    fn discrete_cells_converge_to_the_continuum() {
        let sd = ohmic(0.1, 10.0, 1.9);
        let base = DephasingConfig::new(sd, 0.02, 5).unwrap();
        let exact = dephasing_exponent(&base).unwrap().value().unwrap();
        assert!(exact > 0.0);
        let err = |count: usize| {
            let cfg = base.clone().mode(FilterMode::Discrete(count));
            (dephasing_exponent(&cfg).unwrap().value().unwrap() - exact).abs()
        };
        let (e64, e128, e256) = (err(64), err(128), err(256));
        assert!(e128 <= 0.5 * e64, "{e128} vs {e64}");
        assert!(e256 <= 0.5 * e128, "{e256} vs {e128}");
    }

    #[test]
    fn ohmic_crossover_sits_at_the_resonance_threshold() {
        let sd = ohmic(0.1, 100.0, 0.0);
        let counts = [2usize, 3, 4, 5, 6, 8, 10, 12, 16, 20];
        let scan = crossover_scan(&sd, 0.25, &counts, FilterMode::Continuum, DEFAULT_PREFACTOR)
            .unwrap();
        assert!(scan.free_exponent > 0.0);
        assert!(scan.rows.windows(2).all(|w| w[0].eta < w[1].eta));
        for row in &scan.rows {
            if row.eta > 1.0 + 1e-9 {
                assert_eq!(row.regime, Regime::Divergent, "eta = {}", row.eta);
            }
            if row.eta <= 0.5 {
                assert_eq!(row.regime, Regime::Suppression, "eta = {}", row.eta);
            }
            if let Exponent::Finite(d) = row.exponent {
                assert!(d >= 0.0);
            }
        }
        let eta_star = scan.eta_star.expect("crossover expected in this ladder");
        assert!(eta_star > 0.5 && eta_star < 1.4, "eta_star = {eta_star}");

        let decoupled = crossover_scan(
            &ohmic(0.0, 100.0, 0.0),
            0.25,
            &counts,
            FilterMode::Continuum,
            DEFAULT_PREFACTOR,
        )
        .unwrap();
        assert_eq!(decoupled.free_exponent, 0.0);
        assert!(decoupled.eta_star.is_none());
        assert!(decoupled.rows.iter().all(|r| r.regime == Regime::Suppression));
    }

    #[test]
    fn coherence_follows_the_exponent() {
        let cfg = DephasingConfig::new(ohmic(0.1, 10.0, 0.0), 0.01, 10).unwrap();
        let d = dephasing_exponent(&cfg).unwrap().value().unwrap();
        let rho01 = num_complex::Complex64::new(0.3, 0.4);
        let c = coherence(&cfg, rho01).unwrap();
        assert_relative_eq!(c.re, 0.3 * (-d).exp(), max_relative = 1e-12);
        assert_relative_eq!(c.im, 0.4 * (-d).exp(), max_relative = 1e-12);

        let resonant = DephasingConfig::new(ohmic(0.1, 100.0, 0.0), PI / 100.0, 4).unwrap();
        assert_eq!(coherence(&resonant, rho01).unwrap().norm(), 0.0);
    }
}
