//! Exact Gaussian propagator of the pulsed Brownian oscillator.
//!
//! The reduced evolution of Gaussian states is fixed by four homogeneous
//! solutions of the nonlocal Euler-Lagrange equation
//!
//! ```text
//! M u''(s) + M Omega^2 u(s) + 2 int_0^s mu_mod(s, s') u(s') ds' = 0
//! ```
//!
//! with mu_mod(s, s') = cos(theta(s)) mu(s - s') cos(theta(s')). u1, u2 carry
//! unit position at the endpoints; v1, v2 solve the advanced-kernel adjoint,
//! which after time reversal is the same retarded equation with the pulse
//! pattern flipped end for end, so one marching routine serves all four.
//!
//! The march is RK4 with a trapezoid memory sum over the past (O(steps^2));
//! kernels are tabulated once on the half-step difference grid. Endpoint
//! slopes come from 4-point one-sided stencils, and boundary solutions are
//! superpositions of the two initial-value marches, which fails (a caustic)
//! when the unit-velocity march vanishes at the final time.

use crate::environment::BathKernels;
use crate::pulses::PulseTrain;
use crate::{invalid, Error, Result};
use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

/// Oscillator parameters and the two optional dressings: the frequency
/// counterterm and the constant-field boost V multiplying the system
/// Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SystemParams {
    pub omega: f64,
    pub mass: f64,
    pub counterterms_enabled: bool,
    /// Constant field strength V; H_S -> (1 + V) H_S.
    pub constant_field: f64,
}

impl SystemParams {
    pub fn new(omega: f64, mass: f64) -> Result<Self> {
        if !omega.is_finite() || omega <= 0.0 {
            return Err(invalid("omega", "must be positive"));
        }
        if !mass.is_finite() || mass <= 0.0 {
            return Err(invalid("mass", "must be positive"));
        }
        Ok(SystemParams { omega, mass, counterterms_enabled: false, constant_field: 0.0 })
    }

    pub fn with_counterterms(mut self, enabled: bool) -> Self {
        self.counterterms_enabled = enabled;
        self
    }

    pub fn with_constant_field(mut self, v: f64) -> Self {
        self.constant_field = v;
        self
    }
}

/// Folds the constant field into the oscillator parameters: the boosted
/// Hamiltonian (1 + V) H_S is again harmonic with M -> M/(1+V) and
/// Omega -> Omega (1+V); the product M Omega, and with it the ladder basis,
/// stays put. The returned params have the field consumed (set to zero).
pub fn constant_field_transform(sys: &SystemParams) -> Result<SystemParams> {
    let scale = 1.0 + sys.constant_field;
    if !scale.is_finite() || scale <= 0.0 {
        return Err(invalid("constant_field", "must exceed -1"));
    }
    Ok(SystemParams {
        omega: sys.omega * scale,
        mass: sys.mass / scale,
        counterterms_enabled: sys.counterterms_enabled,
        constant_field: 0.0,
    })
}

/// Dynamics parameters after counterterm and field, plus the readout ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams {
    /// Mass in the equation of motion (field-scaled).
    pub mass: f64,
    /// Frequency in the equation of motion (counterterm, then field).
    pub omega: f64,
    /// Counterterm-shifted frequency before the field boost.
    pub omega_ct: f64,
    /// M Omega_ct product fixing the Fock readout basis; field-invariant.
    pub ladder: f64,
}

/// Applies the counterterm (if enabled) and then the constant field.
/// The counterterm is added to Omega^2 first, so the field boosts the
/// renormalized oscillator and the readout basis uses Omega_ct.
pub fn effective_params(sys: &SystemParams, bath: &BathKernels) -> Result<EffectiveParams> {
    let omega_ct_sq = if sys.counterterms_enabled {
        sys.omega * sys.omega + bath.counterterm(sys.mass)?
    } else {
        sys.omega * sys.omega
    };
    let omega_ct = omega_ct_sq.sqrt();
    let dressed = SystemParams { omega: omega_ct, ..*sys };
    let boosted = constant_field_transform(&dressed)?;
    Ok(EffectiveParams {
        mass: boosted.mass,
        omega: boosted.omega,
        omega_ct,
        ladder: sys.mass * omega_ct,
    })
}

/// Uniform simulation grid. With pulses enabled the interval must sit on the
/// grid: interval = k dt for an integer k (within 1e-9 relative).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !t_final.is_finite() || t_final <= 0.0 {
            return Err(invalid("t_final", "must be positive"));
        }
        if steps < 16 {
            return Err(invalid("steps", "need at least 16 steps"));
        }
        Ok(TimeGrid { t_final, steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    /// Checks the pulse interval lands on grid points.
    pub fn check_pulse_alignment(&self, train: &PulseTrain) -> Result<()> {
        if !train.enabled {
            return Ok(());
        }
        let ratio = train.interval / self.dt();
        if ratio < 1.0 - 1e-9 {
            return Err(invalid("interval", "pulse interval is below one grid step"));
        }
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(invalid(
                "interval",
                format!("pulse interval must be an integer multiple of dt (interval/dt = {ratio})"),
            ));
        }
        Ok(())
    }

    /// Snaps an interval onto the grid (nearest positive multiple of dt).
    pub fn snap_interval(&self, interval: f64) -> f64 {
        let k = (interval / self.dt()).round().max(1.0);
        k * self.dt()
    }
}

/// Dissipation and noise kernels tabulated on the half-step difference grid:
/// entry k holds the kernel at lag k dt/2. Immutable after construction and
/// shared by reference; a table built for a long grid serves any shorter
/// solve with the same dt.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub dt_half: f64,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

impl KernelTable {
    pub fn build(bath: &BathKernels, grid: &TimeGrid) -> Result<Self> {
        Self::build_entries(bath, 0.5 * grid.dt(), 2 * grid.steps + 1)
    }

    /// Tabulates `entries` lags spaced dt_half apart, in parallel.
    pub fn build_entries(bath: &BathKernels, dt_half: f64, entries: usize) -> Result<Self> {
        let ks: Vec<usize> = (0..entries).collect();
        let pairs: Result<Vec<(f64, f64)>> = ks
            .par_iter()
            .map(|&k| {
                let t = k as f64 * dt_half;
                Ok((bath.dissipation(t)?, bath.noise(t)?))
            })
            .collect();
        let pairs = pairs?;
        Ok(KernelTable {
            dt_half,
            mu: pairs.iter().map(|p| p.0).collect(),
            nu: pairs.iter().map(|p| p.1).collect(),
        })
    }

    fn require(&self, entries: usize, dt_half: f64) -> Result<()> {
        if (self.dt_half - dt_half).abs() > 1e-12 * dt_half.max(1e-300) {
            return Err(invalid("kernel table", "table spacing does not match the grid"));
        }
        if self.mu.len() < entries || self.nu.len() < entries {
            return Err(invalid("kernel table", "table shorter than the grid needs"));
        }
        Ok(())
    }
}

/// Everything the boundary-value solve produces: the four homogeneous
/// solutions on the grid and the assembled endpoint matrices.
#[derive(Debug, Clone)]
pub struct PropagatorSolution {
    pub grid: TimeGrid,
    pub params: EffectiveParams,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    /// Endpoint-slope matrix, M * [[-u1'(0), u1'(t)], [-u2'(0), u2'(t)]].
    pub u_matrix: Matrix2<f64>,
    /// Noise quadratic forms a_kl = int int v_k nu_mod v_l.
    pub a: Matrix2<f64>,
    /// Mean transport matrix in the pulse toggling frame.
    pub c: Matrix2<f64>,
    /// Noise matrix; the covariance gains sigma/2.
    pub sigma: Matrix2<f64>,
    /// cos(theta) of the final grid cell: +1 when the kicks applied in
    /// [0, t_final) have even count, -1 when odd. The lab-frame map folds
    /// this into the transport, since each odd-pi kick is a phase-space
    /// inversion and an odd tally leaves one uncompensated.
    pub end_modulation: f64,
}

/// Reduced Gaussian channel: mean -> transport * mean,
/// cov -> transport cov transport^T + noise.
#[derive(Debug, Clone, Copy)]
pub struct AffineGaussianMap {
    pub transport: Matrix2<f64>,
    pub noise: Matrix2<f64>,
}

impl AffineGaussianMap {
    pub fn apply(&self, mean: &Vector2<f64>, cov: &Matrix2<f64>) -> (Vector2<f64>, Matrix2<f64>) {
        let m = self.transport * mean;
        let mut c = self.transport * cov * self.transport.transpose() + self.noise;
        let off = 0.5 * (c[(0, 1)] + c[(1, 0)]);
        c[(0, 1)] = off;
        c[(1, 0)] = off;
        (m, c)
    }
}

impl PropagatorSolution {
    /// Lab-frame Gaussian channel (kick parity folded in).
    pub fn as_map(&self) -> AffineGaussianMap {
        AffineGaussianMap { transport: self.end_modulation * self.c, noise: 0.5 * self.sigma }
    }
}

/// Per-cell cos(theta) values on the marching grid.
fn cell_modulations(train: &PulseTrain, dt: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|i| train.modulation_at((i as f64 + 0.5) * dt)).collect()
}

/// One retarded initial-value march: RK4 in time, trapezoid over the memory.
///
/// `cells` holds the modulation constant on each grid cell (already oriented;
/// the adjoint solves pass it reversed). Returns positions on the grid.
fn march(
    omega_sq: f64,
    mass: f64,
    table: &KernelTable,
    cells: &[f64],
    steps: usize,
    dt: f64,
    x0: f64,
    v0: f64,
) -> Vec<f64> {
    let two_over_m = 2.0 / mass;
    let mut xs = Vec::with_capacity(steps + 1);
    let mut x = x0;
    let mut v = v0;
    xs.push(x);
    // wpts[j] multiplies mu(s - t_j) in the trapezoid of int_0^{t_i}; the
    // newest point enters with half weight until its cell completes.
    let mut wpts: Vec<f64> = Vec::with_capacity(steps + 1);
    wpts.push(0.0);
    let mu = &table.mu;
    for i in 0..steps {
        let mi = cells[i];
        let p0 = 2 * i;
        let hist = |p: usize| -> f64 {
            let mut s = 0.0;
            for (j, w) in wpts.iter().enumerate() {
                s += w * mu[p - 2 * j];
            }
            s
        };
        let h1 = hist(p0);
        let h2 = hist(p0 + 1) + 0.25 * dt * mi * mu[1] * x;
        let h4 = hist(p0 + 2) + 0.5 * dt * mi * mu[2] * x;
        let g1 = two_over_m * mi * h1;
        let g2 = two_over_m * mi * h2;
        let g4 = two_over_m * mi * h4;

        let k1x = v;
        let k1v = -omega_sq * x - g1;
        let k2x = v + 0.5 * dt * k1v;
        let k2v = -omega_sq * (x + 0.5 * dt * k1x) - g2;
        let k3x = v + 0.5 * dt * k2v;
        let k3v = -omega_sq * (x + 0.5 * dt * k2x) - g2;
        let k4x = v + dt * k3v;
        let k4v = -omega_sq * (x + dt * k3x) - g4;

        let xn = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        let vn = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);

        let half = 0.5 * dt * mi;
        *wpts.last_mut().unwrap() += half * x;
        wpts.push(half * xn);
        x = xn;
        v = vn;
        xs.push(x);
    }
    xs
}

/// 4-point one-sided slopes at both ends of a grid function.
fn endpoint_slopes(y: &[f64], dt: f64) -> (f64, f64) {
    let n = y.len() - 1;
    let d0 = (-11.0 * y[0] + 18.0 * y[1] - 9.0 * y[2] + 2.0 * y[3]) / (6.0 * dt);
    let dn = (11.0 * y[n] - 18.0 * y[n - 1] + 9.0 * y[n - 2] - 2.0 * y[n - 3]) / (6.0 * dt);
    (d0, dn)
}

fn caustic_check(yb: &[f64], t_final: f64) -> Result<()> {
    let n = yb.len() - 1;
    let scale = yb.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);
    if yb[n].abs() < 1e-8 * scale {
        return Err(Error::Caustic { t_final });
    }
    Ok(())
}

/// Solves the boundary-value problems and assembles the endpoint data.
/// `table` must cover lags up to t_final on this grid's half-step spacing.
pub fn solve_with_table(
    params: &EffectiveParams,
    table: &KernelTable,
    train: &PulseTrain,
    grid: &TimeGrid,
) -> Result<PropagatorSolution> {
    grid.check_pulse_alignment(train)?;
    train.check_influence_path()?;
    let steps = grid.steps;
    let dt = grid.dt();
    table.require(2 * steps + 1, 0.5 * dt)?;

    let omega_sq = params.omega * params.omega;
    let mass = params.mass;
    let cells = cell_modulations(train, dt, steps);
    let rcells: Vec<f64> = cells.iter().rev().copied().collect();

    let ((ya, yb), (wa, wb)) = rayon::join(
        || {
            rayon::join(
                || march(omega_sq, mass, table, &cells, steps, dt, 1.0, 0.0),
                || march(omega_sq, mass, table, &cells, steps, dt, 0.0, 1.0),
            )
        },
        || {
            if train.enabled {
                rayon::join(
                    || march(omega_sq, mass, table, &rcells, steps, dt, 1.0, 0.0),
                    || march(omega_sq, mass, table, &rcells, steps, dt, 0.0, 1.0),
                )
            } else {
                (Vec::new(), Vec::new())
            }
        },
    );
    let (wa, wb) = if train.enabled { (wa, wb) } else { (ya.clone(), yb.clone()) };

    caustic_check(&yb, grid.t_final)?;
    caustic_check(&wb, grid.t_final)?;

    let n = steps;
    let combine = |a: &[f64], b: &[f64], ca: f64, cb: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
    };
    // u1: u(0) = 1, u(t) = 0. u2: u(0) = 0, u(t) = 1.
    let u1 = combine(&ya, &yb, 1.0, -ya[n] / yb[n]);
    let u2 = combine(&yb, &yb, 0.0, 1.0 / yb[n]);
    // Adjoint solutions arrive time-reversed: w(0) = 0, w(t) = 1 reverses
    // into v1 with v1(0) = 1, v1(t) = 0, and w(0) = 1, w(t) = 0 into v2.
    let w1 = combine(&wb, &wb, 0.0, 1.0 / wb[n]);
    let w2 = combine(&wa, &wb, 1.0, -wa[n] / wb[n]);
    let v1: Vec<f64> = w1.iter().rev().copied().collect();
    let v2: Vec<f64> = w2.iter().rev().copied().collect();

    let (du1_0, du1_t) = endpoint_slopes(&u1, dt);
    let (du2_0, du2_t) = endpoint_slopes(&u2, dt);
    let u_matrix = Matrix2::new(-mass * du1_0, mass * du1_t, -mass * du2_0, mass * du2_t);

    let a = noise_quadratic_forms(&v1, &v2, &cells, table, dt);

    let (u11, u12, u21, u22) = (u_matrix[(0, 0)], u_matrix[(0, 1)], u_matrix[(1, 0)], u_matrix[(1, 1)]);
    let det_u = u11 * u22 - u12 * u21;
    let c = Matrix2::new(u11, 1.0, det_u, u22) * (-1.0 / u21);
    let (a11, a12, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 1)]);
    let s11 = a11;
    let s12 = a11 * u22 - a12 * u21;
    let s22 = a11 * u22 * u22 - 2.0 * a12 * u21 * u22 + a22 * u21 * u21;
    let sigma = Matrix2::new(s11, s12, s12, s22) * (2.0 / (u21 * u21));

    let end_modulation = cells[steps - 1];
    Ok(PropagatorSolution {
        grid: *grid,
        params: *params,
        u1,
        u2,
        v1,
        v2,
        u_matrix,
        a,
        c,
        sigma,
        end_modulation,
    })
}

/// a_kl = int_0^t int_0^t v_k(s) nu_mod(s, s') v_l(s') ds ds' by the 2-D
/// trapezoid rule, with one-sided modulation on each side of every cell
/// boundary so pulse flips inside the domain cost no accuracy.
fn noise_quadratic_forms(
    v1: &[f64],
    v2: &[f64],
    cells: &[f64],
    table: &KernelTable,
    dt: f64,
) -> Matrix2<f64> {
    let n = v1.len() - 1;
    let weight = |p: usize| -> f64 {
        let mut w = 0.0;
        if p < n {
            w += cells[p];
        }
        if p > 0 {
            w += cells[p - 1];
        }
        0.5 * dt * w
    };
    let a1: Vec<f64> = (0..=n).map(|p| weight(p) * v1[p]).collect();
    let a2: Vec<f64> = (0..=n).map(|p| weight(p) * v2[p]).collect();
    let nu = &table.nu;
    let mut s11 = 0.0;
    let mut s12 = 0.0;
    let mut s22 = 0.0;
    for p in 0..=n {
        let w0 = nu[0];
        s11 += w0 * a1[p] * a1[p];
        s12 += w0 * a1[p] * a2[p];
        s22 += w0 * a2[p] * a2[p];
        for q in (p + 1)..=n {
            let w = nu[2 * (q - p)];
            s11 += 2.0 * w * a1[p] * a1[q];
            s12 += w * (a1[p] * a2[q] + a1[q] * a2[p]);
            s22 += 2.0 * w * a2[p] * a2[q];
        }
    }
    Matrix2::new(s11, s12, s12, s22)
}

/// Full pipeline: effective parameters, kernel tabulation, boundary solve.
pub fn solve(
    sys: &SystemParams,
    bath: &BathKernels,
    train: &PulseTrain,
    grid: &TimeGrid,
) -> Result<PropagatorSolution> {
    let params = effective_params(sys, bath)?;
    let table = KernelTable::build(bath, grid)?;
    solve_with_table(&params, &table, train, grid)
}

/// Pushes a Gaussian state through the solved propagator.
pub fn propagate_gaussian(
    mean: &Vector2<f64>,
    cov: &Matrix2<f64>,
    sol: &PropagatorSolution,
) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    check_covariance(cov)?;
    Ok(sol.as_map().apply(mean, cov))
}

/// Validates a physical covariance matrix (symmetric, positive variances,
/// uncertainty product at or above the Heisenberg floor).
pub fn check_covariance(cov: &Matrix2<f64>) -> Result<()> {
    let (rr, pp, rp, pr) = (cov[(0, 0)], cov[(1, 1)], cov[(0, 1)], cov[(1, 0)]);
    if (rp - pr).abs() > 1e-9 * (rr.abs() + pp.abs()).max(1.0) {
        return Err(Error::State("covariance matrix is not symmetric".into()));
    }
    if rr <= 0.0 || pp <= 0.0 {
        return Err(Error::State("covariance diagonal must be positive".into()));
    }
    let det = rr * pp - rp * pr;
    if det < 0.25 * (1.0 - 1e-9) {
        return Err(Error::State(format!(
            "uncertainty product {det:.6e} is below the Heisenberg floor 1/4"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::SpectralDensity;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn free_bath() -> BathKernels {
        BathKernels::Continuum(SpectralDensity::ohmic(0.0, 10.0, 1.0, 0.0).unwrap())
    }

    fn sys11() -> SystemParams {
        SystemParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 64).is_err());
        assert!(TimeGrid::new(1.0, 8).is_err());
        let g = TimeGrid::new(1.0, 64).unwrap();
        let p = PulseTrain::pi_train(1.0 / 16.0).unwrap();
        assert!(g.check_pulse_alignment(&p).is_ok());
        let bad = PulseTrain::pi_train(0.013).unwrap();
        assert!(g.check_pulse_alignment(&bad).is_err());
        assert_relative_eq!(g.snap_interval(0.013), 1.0 / 64.0, max_relative = 1e-12);
    }

    #[test]
    fn free_solutions_match_sine_ratios() {
        let grid = TimeGrid::new(1.0, 2048).unwrap();
        let sol = solve(&sys11(), &free_bath(), &PulseTrain::disabled(), &grid).unwrap();
        let t = 1.0f64;
        for k in (0..=2048).step_by(97) {
            let s = k as f64 * grid.dt();
            let u1_exact = (t - s).sin() / t.sin();
            let u2_exact = s.sin() / t.sin();
            assert_abs_diff_eq!(sol.u1[k], u1_exact, epsilon = 1e-6);
            assert_abs_diff_eq!(sol.u2[k], u2_exact, epsilon = 1e-6);
            assert_abs_diff_eq!(sol.v1[k], u1_exact, epsilon = 1e-6);
            assert_abs_diff_eq!(sol.v2[k], u2_exact, epsilon = 1e-6);
        }
        assert!((sol.u1[0] - 1.0).abs() < 1e-8 && sol.u1[2048].abs() < 1e-8);
        assert!(sol.u2[0].abs() < 1e-8 && (sol.u2[2048] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn free_propagator_is_a_rotation() {
        let grid = TimeGrid::new(std::f64::consts::FRAC_PI_2, 2048).unwrap();
        let sol = solve(&sys11(), &free_bath(), &PulseTrain::disabled(), &grid).unwrap();
        let expect = Matrix2::new(0.0, 1.0, -1.0, 0.0);
        assert_abs_diff_eq!(sol.c, expect, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.a, Matrix2::zeros(), epsilon = 1e-12);
        assert_abs_diff_eq!(sol.sigma, Matrix2::zeros(), epsilon = 1e-10);
    }

    #[test]
    fn free_rotation_with_general_mass_and_frequency() {
        let sys = SystemParams::new(2.5, 0.7).unwrap();
        let t = 0.9;
        let grid = TimeGrid::new(t, 2048).unwrap();
        let bath = BathKernels::Continuum(SpectralDensity::ohmic(0.0, 10.0, 0.7, 0.0).unwrap());
        let sol = solve(&sys, &bath, &PulseTrain::disabled(), &grid).unwrap();
        let (mw, w) = (0.7 * 2.5, 2.5);
        let expect = Matrix2::new(
            (w * t).cos(),
            (w * t).sin() / mw,
            -mw * (w * t).sin(),
            (w * t).cos(),
        );
        assert_abs_diff_eq!(sol.c, expect, epsilon = 1e-6);
        assert_relative_eq!(sol.c.determinant(), 1.0, max_relative = 1e-8);
    }

    #[test]
    fn caustic_detected_at_half_period() {
        let grid = TimeGrid::new(std::f64::consts::PI, 2048).unwrap();
        let r = solve(&sys11(), &free_bath(), &PulseTrain::disabled(), &grid);
        assert!(matches!(r, Err(Error::Caustic { .. })));
    }

    #[test]
    fn vacuum_stays_vacuum_under_free_evolution() {
        let grid = TimeGrid::new(0.8, 512).unwrap();
        let sol = solve(&sys11(), &free_bath(), &PulseTrain::disabled(), &grid).unwrap();
        let vac = Matrix2::new(0.5, 0.0, 0.0, 0.5);
        let (m, c) = propagate_gaussian(&Vector2::zeros(), &vac, &sol).unwrap();
        assert_abs_diff_eq!(m, Vector2::zeros(), epsilon = 1e-12);
        assert_abs_diff_eq!(c, vac, epsilon = 1e-7);
        assert!(propagate_gaussian(&Vector2::zeros(), &Matrix2::new(0.1, 0.0, 0.0, 0.1), &sol).is_err());
    }

    #[test]
    fn disabled_train_equals_pulse_free_path() {
        let sd = SpectralDensity::ohmic(0.1, 10.0, 1.0, 0.0).unwrap();
        let bath = BathKernels::Continuum(sd);
        let grid = TimeGrid::new(0.5, 256).unwrap();
        let a = solve(&sys11(), &bath, &PulseTrain::disabled(), &grid).unwrap();
        let mut off = PulseTrain::pi_train(0.1).unwrap();
        off.enabled = false;
        let b = solve(&sys11(), &bath, &off, &grid).unwrap();
        assert_eq!(a.c, b.c);
        assert_eq!(a.sigma, b.sigma);
    }

    #[test]
    fn even_pi_kicks_are_rejected() {
        let grid = TimeGrid::new(0.5, 256).unwrap();
        let train = PulseTrain::new(0.0, 0.0, 0.125, 2.0 * std::f64::consts::PI).unwrap();
        let r = solve(&sys11(), &free_bath(), &train, &grid);
        assert!(matches!(r, Err(Error::Pulse(_))));
    }

    #[test]
    fn field_transform_examples() {
        let sys = sys11().with_constant_field(1.0);
        let t = constant_field_transform(&sys).unwrap();
        assert_relative_eq!(t.mass, 0.5, max_relative = 1e-14);
        assert_relative_eq!(t.omega, 2.0, max_relative = 1e-14);
        assert_eq!(t.constant_field, 0.0);
        let id = constant_field_transform(&sys11()).unwrap();
        assert_eq!(id.omega, 1.0);
        assert_eq!(id.mass, 1.0);
        assert!(constant_field_transform(&sys11().with_constant_field(-1.0)).is_err());
    }

    #[test]
    fn effective_params_compose_counterterm_then_field() {
        let sd = SpectralDensity::ohmic(0.1, 10.0, 1.0, 0.0).unwrap();
        let bath = BathKernels::Continuum(sd);
        let sys = sys11().with_counterterms(true).with_constant_field(3.0);
        let eff = effective_params(&sys, &bath).unwrap();
        let omega_ct = (1.0 + 4.0 / std::f64::consts::PI).sqrt();
        assert_relative_eq!(eff.omega_ct, omega_ct, max_relative = 1e-10);
        assert_relative_eq!(eff.omega, 4.0 * omega_ct, max_relative = 1e-10);
        assert_relative_eq!(eff.mass, 0.25, max_relative = 1e-14);
        assert_relative_eq!(eff.ladder, omega_ct, max_relative = 1e-10);
        let plain = effective_params(&sys11(), &bath).unwrap();
        assert_eq!(plain.omega, 1.0);
        assert_eq!(plain.ladder, 1.0);
    }

    #[test]
    fn damped_covariance_growth_is_positive() {
        let sd = SpectralDensity::ohmic(0.1, 10.0, 1.0, 0.0).unwrap();
        let bath = BathKernels::Continuum(sd);
        let grid = TimeGrid::new(1.0, 1024).unwrap();
        let sol = solve(&sys11(), &bath, &PulseTrain::disabled(), &grid).unwrap();
        let s = sol.sigma;
        assert!(s[(0, 0)] >= 0.0 && s[(1, 1)] >= 0.0);
        assert!(s.determinant() >= -1e-12 * s[(0, 0)].max(s[(1, 1)]).powi(2));
        assert_relative_eq!(s[(0, 1)], s[(1, 0)], max_relative = 1e-12);
        let vac = Matrix2::new(0.5, 0.0, 0.0, 0.5);
        let (_, c) = propagate_gaussian(&Vector2::zeros(), &vac, &sol).unwrap();
        assert!(c.determinant() >= 0.25 - 1e-9);
    }
}
