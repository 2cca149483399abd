//! Exact finite-bath reference dynamics.
//!
//! A system oscillator bilinearly coupled to N discrete bath modes is a
//! quadratic Hamiltonian, so the full phase-space flow is the matrix
//! exponential of the symplectic generator and pulse kicks are instantaneous
//! system-block rotations. Tracing out a thermally populated bath leaves an
//! affine Gaussian channel on the system alone, which the influence-functional
//! propagator must reproduce as the mode count grows. Cost is polynomial in
//! the mode count and independent of the grid, making this the workhorse
//! cross-check for the quadrature-based solver.

use crate::environment::{coth, BathMode, BathKernels};
use crate::propagator::{effective_params, AffineGaussianMap, EffectiveParams, SystemParams};
use crate::pulses::PulseTrain;
use crate::{invalid, Result};
use nalgebra::{DMatrix, Matrix2, Vector2};

/// Phase-space generator for H = p^2/2M + K00 x^2/2 + sum_n [p_n^2/2m_n
/// + m_n w_n^2 q_n^2/2 + c_n x q_n], ordered (x, q_1..q_N, p, p_1..p_N).
fn generator(eff: &EffectiveParams, modes: &[BathMode]) -> DMatrix<f64> {
    let nb = modes.len();
    let d = 2 * (nb + 1);
    let half = nb + 1;
    let mut s = DMatrix::zeros(d, d);
    s[(0, half)] = 1.0 / eff.mass;
    for (k, m) in modes.iter().enumerate() {
        s[(1 + k, half + 1 + k)] = 1.0 / m.mass;
    }
    s[(half, 0)] = -eff.mass * eff.omega * eff.omega;
    for (k, m) in modes.iter().enumerate() {
        s[(half, 1 + k)] = -m.coupling;
        s[(half + 1 + k, 0)] = -m.coupling;
        s[(half + 1 + k, 1 + k)] = -m.mass * m.frequency * m.frequency;
    }
    s
}

/// System-block kick: rotation by `theta` in the (x, p) plane generated by
/// the dressed oscillator Hamiltonian, so the aspect ratio is M Omega of the
/// dressed dynamics (field-invariant).
fn kick_matrix(eff: &EffectiveParams, nb: usize, theta: f64) -> DMatrix<f64> {
    let d = 2 * (nb + 1);
    let half = nb + 1;
    let mw = eff.mass * eff.omega;
    let mut k = DMatrix::identity(d, d);
    k[(0, 0)] = theta.cos();
    k[(0, half)] = theta.sin() / mw;
    k[(half, 0)] = -mw * theta.sin();
    k[(half, half)] = theta.cos();
    k
}

/// Thermal covariance of the isolated bath, same phase-space ordering,
/// system block zero. T = 0 gives the vacuum of each mode.
fn bath_covariance(modes: &[BathMode], temperature: f64) -> DMatrix<f64> {
    let nb = modes.len();
    let d = 2 * (nb + 1);
    let half = nb + 1;
    let mut c = DMatrix::zeros(d, d);
    for (k, m) in modes.iter().enumerate() {
        let th = if temperature > 0.0 { coth(m.frequency / (2.0 * temperature)) } else { 1.0 };
        c[(1 + k, 1 + k)] = th / (2.0 * m.mass * m.frequency);
        c[(half + 1 + k, half + 1 + k)] = 0.5 * m.mass * m.frequency * th;
    }
    c
}

/// Full phase-space flow over [0, t_final]: free segments interleaved with
/// kicks of alternating sign at the start of every pulse interval.
fn total_flow(
    eff: &EffectiveParams,
    modes: &[BathMode],
    train: &PulseTrain,
    t_final: f64,
) -> Result<DMatrix<f64>> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(invalid("t_final", "must be positive"));
    }
    let s = generator(eff, modes);
    if !train.enabled {
        return Ok((s * t_final).exp());
    }
    let dt = train.interval;
    let seg = (s.clone() * dt).exp();
    let kick_plus = kick_matrix(eff, modes.len(), train.kick_angle);
    let kick_minus = kick_matrix(eff, modes.len(), -train.kick_angle);
    let d = 2 * (modes.len() + 1);
    let mut flow = DMatrix::identity(d, d);
    let mut t = 0.0;
    let mut k = 0usize;
    let eps = 1e-9 * dt;
    while t < t_final - eps {
        let kick = if k % 2 == 0 { &kick_plus } else { &kick_minus };
        let remain = t_final - t;
        if remain >= dt - eps {
            flow = &seg * (kick * flow);
            t += dt;
        } else {
            flow = (s.clone() * remain).exp() * (kick * flow);
            t = t_final;
        }
        k += 1;
    }
    Ok(flow)
}

/// Reduced Gaussian channel of the finite-bath model: transport block plus
/// the noise fed in by the thermally populated modes.
pub fn oracle_map(
    sys: &SystemParams,
    modes: &[BathMode],
    temperature: f64,
    train: &PulseTrain,
    t_final: f64,
) -> Result<AffineGaussianMap> {
    if temperature < 0.0 || !temperature.is_finite() {
        return Err(invalid("temperature", "must be finite and nonnegative"));
    }
    let bath = BathKernels::Modes { modes: modes.to_vec(), temperature };
    let eff = effective_params(sys, &bath)?;
    let flow = total_flow(&eff, modes, train, t_final)?;
    let nb = modes.len();
    let half = nb + 1;
    let transport = Matrix2::new(
        flow[(0, 0)],
        flow[(0, half)],
        flow[(half, 0)],
        flow[(half, half)],
    );
    let cov_b = bath_covariance(modes, temperature);
    let spread = &flow * cov_b * flow.transpose();
    let noise = Matrix2::new(
        spread[(0, 0)],
        spread[(0, half)],
        spread[(half, 0)],
        spread[(half, half)],
    );
    Ok(AffineGaussianMap { transport, noise })
}

/// Evolves a system Gaussian through the finite-bath model.
pub fn oracle_evolve(
    sys: &SystemParams,
    modes: &[BathMode],
    temperature: f64,
    train: &PulseTrain,
    t_final: f64,
    mean: &Vector2<f64>,
    cov: &Matrix2<f64>,
) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    crate::propagator::check_covariance(cov)?;
    Ok(oracle_map(sys, modes, temperature, train, t_final)?.apply(mean, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mode(frequency: f64, mass: f64, coupling: f64) -> BathMode {
        BathMode::new(frequency, mass, coupling).unwrap()
    }

    #[test]
    fn empty_bath_reduces_to_a_rotation() {
        let sys = SystemParams::new(1.7, 0.8).unwrap();
        let t = 0.63;
        let map = oracle_map(&sys, &[], 0.0, &PulseTrain::disabled(), t).unwrap();
        let (mw, w) = (0.8 * 1.7, 1.7);
        let expect = Matrix2::new(
            (w * t).cos(),
            (w * t).sin() / mw,
            -mw * (w * t).sin(),
            (w * t).cos(),
        );
        assert_abs_diff_eq!(map.transport, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(map.noise, Matrix2::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn single_mode_matches_normal_mode_diagonalization() {
        let sys = SystemParams::new(1.3, 0.9).unwrap();
        let bm = mode(2.1, 1.4, 0.35);
        let t = 0.77;

        let a00 = sys.omega * sys.omega;
        let a11 = bm.frequency * bm.frequency;
        let a01 = bm.coupling / (sys.mass * bm.mass).sqrt();
        let tr = a00 + a11;
        let disc = ((a00 - a11) * (a00 - a11) + 4.0 * a01 * a01).sqrt();
        let lam = [(tr + disc) / 2.0, (tr - disc) / 2.0];
        let phi = 0.5 * (2.0 * a01).atan2(a00 - a11);
        let (cp, sp) = (phi.cos(), phi.sin());
        let rot = [[cp, sp], [-sp, cp]];

        let dm = [sys.mass.sqrt(), bm.mass.sqrt()];
        let mut flow = [[0.0f64; 4]; 4];
        for i in 0..2 {
            for j in 0..2 {
                let mut xx = 0.0;
                let mut xp = 0.0;
                let mut px = 0.0;
                let mut pp = 0.0;
                for n in 0..2 {
                    let w = lam[n].sqrt();
                    xx += rot[n][i] * rot[n][j] * (w * t).cos();
                    xp += rot[n][i] * rot[n][j] * (w * t).sin() / w;
                    px += rot[n][i] * rot[n][j] * (-w) * (w * t).sin();
                    pp += rot[n][i] * rot[n][j] * (w * t).cos();
                }
                flow[i][j] = xx * dm[j] / dm[i];
                flow[i][2 + j] = xp / (dm[i] * dm[j]);
                flow[2 + i][j] = px * dm[i] * dm[j];
                flow[2 + i][2 + j] = pp * dm[i] / dm[j];
            }
        }

        let map = oracle_map(&sys, &[bm], 0.0, &PulseTrain::disabled(), t).unwrap();
        assert_abs_diff_eq!(map.transport[(0, 0)], flow[0][0], epsilon = 1e-10);
        assert_abs_diff_eq!(map.transport[(0, 1)], flow[0][2], epsilon = 1e-10);
        assert_abs_diff_eq!(map.transport[(1, 0)], flow[2][0], epsilon = 1e-10);
        assert_abs_diff_eq!(map.transport[(1, 1)], flow[2][2], epsilon = 1e-10);

        let th = 1.0;
        let qq = th / (2.0 * bm.mass * bm.frequency);
        let pp = 0.5 * bm.mass * bm.frequency * th;
        let n00 = flow[0][1] * flow[0][1] * qq + flow[0][3] * flow[0][3] * pp;
        let n01 = flow[0][1] * flow[2][1] * qq + flow[0][3] * flow[2][3] * pp;
        let n11 = flow[2][1] * flow[2][1] * qq + flow[2][3] * flow[2][3] * pp;
        assert_abs_diff_eq!(map.noise[(0, 0)], n00, epsilon = 1e-10);
        assert_abs_diff_eq!(map.noise[(0, 1)], n01, epsilon = 1e-10);
        assert_abs_diff_eq!(map.noise[(1, 1)], n11, epsilon = 1e-10);
    }

    #[test]
    fn symplectic_form_is_preserved() {
        let sys = SystemParams::new(1.0, 1.0).unwrap();
        let modes = vec![mode(3.0, 1.0, 0.4), mode(5.5, 0.7, 0.9), mode(8.0, 1.3, 0.2)];
        let bath = BathKernels::Modes { modes: modes.clone(), temperature: 0.0 };
        let eff = effective_params(&sys, &bath).unwrap();
        let train = PulseTrain::pi_train(0.05).unwrap();
        let flow = total_flow(&eff, &modes, &train, 0.4).unwrap();
        let d = flow.nrows();
        let half = d / 2;
        let mut j = DMatrix::zeros(d, d);
        for i in 0..half {
            j[(i, half + i)] = 1.0;
            j[(half + i, i)] = -1.0;
        }
        let resid = (&flow * &j * flow.transpose() - &j).abs().max();
        assert!(resid < 1e-9, "symplectic residual {resid}");
    }

    #[test]
    fn pi_kicks_keep_the_vacuum_purer_than_free_coupling() {
        let sys = SystemParams::new(1.0, 1.0).unwrap();
        let modes = vec![mode(20.0, 1.0, 2.0), mode(34.0, 1.0, 3.0)];
        let t = 0.5;
        let vac = Matrix2::new(0.5, 0.0, 0.0, 0.5);
        let free = oracle_map(&sys, &modes, 0.0, &PulseTrain::disabled(), t).unwrap();
        let train = PulseTrain::pi_train(0.01).unwrap();
        let pulsed = oracle_map(&sys, &modes, 0.0, &train, t).unwrap();
        let cov_free = free.transport * vac * free.transport.transpose() + free.noise;
        let cov_pulsed = pulsed.transport * vac * pulsed.transport.transpose() + pulsed.noise;
        let purity_loss_free = cov_free.determinant() - 0.25;
        let purity_loss_pulsed = cov_pulsed.determinant() - 0.25;
        assert!(purity_loss_free > 0.0);
        assert!(
            purity_loss_pulsed < 0.2 * purity_loss_free,
            "pulsed purity loss {purity_loss_pulsed} vs free {purity_loss_free}"
        );
    }

    #[test]
    fn thermal_bath_covariance_entries() {
        let m = mode(2.0, 1.5, 0.1);
        let cov = bath_covariance(&[m], 1.0);
        let th = coth(1.0);
        assert_abs_diff_eq!(cov[(1, 1)], th / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cov[(3, 3)], 1.5 * th, epsilon = 1e-14);
        let cold = bath_covariance(&[mode(2.0, 1.5, 0.1)], 0.0);
        assert_abs_diff_eq!(cold[(1, 1)], 1.0 / 6.0, epsilon = 1e-14);
    }
}
