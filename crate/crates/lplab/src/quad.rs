//! Quadrature kernels: fixed Gauss-Legendre rules and an adaptive Gauss-Kronrod
//! (7/15) integrator for real and complex integrands.

use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{LabError, Result};

/// Values that can be accumulated by the integrators.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Builds the n-point rule by Newton iteration on the Legendre polynomial.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_eval(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_eval(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }

    /// Integrates `f` over [a, b].
    pub fn integrate<T: QuadValue>(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> T) -> T {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(c + h * x) * (w * h);
        }
        acc
    }

    /// Integrates over consecutive panels given by sorted breakpoints.
    pub fn integrate_panels<T: QuadValue>(&self, breaks: &[f64], mut f: impl FnMut(f64) -> T) -> T {
        let mut acc = T::zero();
        for w in breaks.windows(2) {
            acc = acc + self.integrate(w[0], w[1], &mut f);
        }
        acc
    }

    /// Appends mapped nodes and weights for [a, b] to the given buffers.
    pub fn push_nodes(&self, a: f64, b: f64, xs: &mut Vec<f64>, ws: &mut Vec<f64>) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            xs.push(c + h * x);
            ws.push(w * h);
        }
    }
}

fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 16-point rule.
pub fn gl16() -> &'static GaussRule {
    static R: OnceLock<GaussRule> = OnceLock::new();
    R.get_or_init(|| GaussRule::legendre(16))
}

/// Shared 32-point rule.
pub fn gl32() -> &'static GaussRule {
    static R: OnceLock<GaussRule> = OnceLock::new();
    R.get_or_init(|| GaussRule::legendre(32))
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: QuadValue>(a: f64, b: f64, f: &mut impl FnMut(f64) -> T) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron = kron + s * WGK[i];
        if i % 2 == 1 {
            gauss = gauss + s * WG[i / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).magnitude())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
}

/// Adaptive Gauss-Kronrod integration over [a, b] to absolute tolerance `tol`.
///
/// Subdivides the panel with the largest error estimate until the summed estimate
/// drops below `tol` or `max_panels` is reached, in which case a convergence error
/// carrying the residual estimate is returned.
pub fn adaptive<T: QuadValue>(
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
    mut f: impl FnMut(f64) -> T,
) -> Result<QuadResult<T>> {
    let r = adaptive_best_effort(a, b, tol, max_panels, &mut f);
    if r.error > tol {
        return Err(LabError::Convergence {
            what: format!("adaptive quadrature on [{a}, {b}]"),
            residual: r.error,
        });
    }
    Ok(r)
}

/// Like [`adaptive`] but always returns the best estimate found.
pub fn adaptive_best_effort<T: QuadValue>(
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
    mut f: impl FnMut(f64) -> T,
) -> QuadResult<T> {
    if a == b {
        return QuadResult { value: T::zero(), error: 0.0, panels: 0 };
    }
    let (v, e) = gk15(a, b, &mut f);
    let mut segs: Vec<(f64, f64, T, f64)> = vec![(a, b, v, e)];
    let mut total_err = e;
    while total_err > tol && segs.len() < max_panels.max(1) {
        let (idx, _) = segs
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, s)| if s.3 > best.1 { (i, s.3) } else { best });
        let (lo, hi, _, _) = segs.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v1, e1) = gk15(lo, mid, &mut f);
        let (v2, e2) = gk15(mid, hi, &mut f);
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
        total_err = segs.iter().map(|s| s.3).sum();
    }
    let mut value = T::zero();
    for s in &segs {
        value = value + s.2;
    }
    QuadResult { value, error: total_err, panels: segs.len() }
}

/// Integrates over consecutive intervals given by sorted breakpoints, adaptively on each.
pub fn adaptive_panels<T: QuadValue>(
    breaks: &[f64],
    tol: f64,
    max_panels: usize,
    mut f: impl FnMut(f64) -> T,
) -> Result<QuadResult<T>> {
    let n = (breaks.len().saturating_sub(1)).max(1) as f64;
    let mut value = T::zero();
    let mut error = 0.0;
    let mut panels = 0;
    for w in breaks.windows(2) {
        let r = adaptive(w[0], w[1], tol / n, max_panels, &mut f)?;
        value = value + r.value;
        error += r.error;
        panels += r.panels;
    }
    Ok(QuadResult { value, error, panels })
}

/// Geometric breakpoints `a, a*r, a*r^2, ..., b` for positive a < b.
pub fn geometric_breaks(a: f64, b: f64, ratio: f64) -> Vec<f64> {
    let mut v = vec![a];
    let mut x = a;
    loop {
        x *= ratio;
        if x >= b {
            break;
        }
        v.push(x);
    }
    v.push(b);
    v
}

/// Uniform breakpoints with panel width at most `width`.
pub fn uniform_breaks(a: f64, b: f64, width: f64) -> Vec<f64> {
    let n = (((b - a) / width).ceil() as usize).max(1);
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}
