//! Adaptive Gauss-Kronrod quadrature (7-15 pair).
//!
//! Every continuum kernel in this crate reduces to one-dimensional integrals
//! over frequency with a smooth envelope times an oscillatory factor. A 15-point
//! Kronrod rule with its embedded 7-point Gauss rule gives the error estimate;
//! the worst panel is bisected until the global estimate meets tolerance.
//! Oscillatory integrands should be pre-split with [`oscillatory_edges`] so the
//! initial panels resolve roughly one period each.

use crate::{Error, Result};

/// Absolute/relative tolerance pair for the adaptive loop.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-10, rel: 1e-8 }
    }
}

const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Kronrod evaluation over [a, b]: returns (integral, error estimate).
fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut ik = WGK[7] * fc;
    let mut ig = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        ik += WGK[j] * s;
        if j % 2 == 1 {
            ig += WG[j / 2] * s;
        }
    }
    ik *= h;
    ig *= h;
    // |K15 - G7| overestimates the Kronrod error, which just means a few
    // extra bisections; cheap insurance against optimistic estimates.
    (ik, (ik - ig).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Integrates f over the panels defined by `edges` (ascending), refining
/// adaptively until the summed error estimate meets `tol`.
pub fn integrate_edges<F: Fn(f64) -> f64>(f: F, edges: &[f64], tol: Tolerance) -> Result<f64> {
    assert!(edges.len() >= 2, "need at least one panel");
    let mut panels: Vec<Panel> = Vec::with_capacity(edges.len() + 64);
    for w in edges.windows(2) {
        let (v, e) = kronrod(&f, w[0], w[1]);
        panels.push(Panel { a: w[0], b: w[1], value: v, error: e });
    }
    let max_panels = 20_000.max(4 * panels.len());
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature {
                estimate: f64::INFINITY,
                lo: edges[0],
                hi: *edges.last().unwrap(),
            });
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        if panels.len() >= max_panels {
            return Err(Error::Quadrature { estimate: err, lo: edges[0], hi: *edges.last().unwrap() });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let Panel { a, b, .. } = panels[worst];
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            // Panel narrowed to machine resolution; accept what we have.
            let err_left: f64 = panels.iter().map(|p| p.error).sum();
            return Err(Error::Quadrature { estimate: err_left, lo: edges[0], hi: *edges.last().unwrap() });
        }
        let (v1, e1) = kronrod(&f, a, m);
        let (v2, e2) = kronrod(&f, m, b);
        panels[worst] = Panel { a, b: m, value: v1, error: e1 };
        panels.push(Panel { a: m, b, value: v2, error: e2 });
    }
}

/// Integrates f over [a, b] with a single starting panel.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    integrate_edges(f, &[a, b], tol)
}

/// Legendre polynomial P_n(x) and its slope, by the three-term recurrence.
fn legendre_with_slope(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Gauss-Legendre nodes and weights on [-1, 1], exact through degree 2n - 1.
/// Roots found by Newton from the cosine initial guess; the rule backs the
/// tensor-product plane integrals used to cross-check Fock matrix elements.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut slope = 1.0;
        for _ in 0..60 {
            let (p, d) = legendre_with_slope(n, x);
            slope = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * slope * slope);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Panel edges over [a, b] sized so each panel spans about one period of a
/// factor oscillating at angular frequency `freq` (>= 1 panel always).
pub fn oscillatory_edges(a: f64, b: f64, freq: f64) -> Vec<f64> {
    let span = b - a;
    let period = if freq.abs() > 1e-300 { 2.0 * std::f64::consts::PI / freq.abs() } else { f64::INFINITY };
    let n = if period.is_finite() { (span / period).ceil() as usize } else { 1 };
    let n = n.clamp(1, 8192);
    let mut edges = Vec::with_capacity(n + 1);
    for i in 0..=n {
        edges.push(a + span * (i as f64) / (n as f64));
    }
    edges
}
