//! `K_∞(x) = E K(X_1 + x)` and its derivatives by Fourier inversion:
//! `K_∞(x) = (1/π) Re ∫₀^∞ K̂(u) φ(u) e^{iux} du`.

use num_complex::Complex64;

use super::charfn::ProcessCharFn;
use super::sim::{map_replicates, simulate_replicate, Convolver};
use super::ProcessSpec;
use crate::error::{LabError, Result};
use crate::kernel::FunctionalK;
use crate::quad;

/// Highest derivative of `K_∞` kept at the origin.
pub const MAX_DERIV: usize = 8;

/// Half-width of the tabulated range of `K_∞`.
pub const TABLE_X_MAX: f64 = 64.0;
const TABLE_STEPS_PER_UNIT: usize = 64;

/// Quadrature nodes on `[0, U]` with the weighted values `w K̂(u) φ(u) / π`.
#[derive(Debug, Clone)]
pub struct FourierGrid {
    pub u: Vec<f64>,
    pub g: Vec<Complex64>,
    x_max: f64,
}

impl FourierGrid {
    /// Grid accurate for `|x| ≤ x_max`.
    pub fn new(phi: &ProcessCharFn, k: &FunctionalK, x_max: f64) -> Result<Self> {
        let rule = quad::gl16();
        let width = (8.0 / x_max.max(1.0)).min(0.25);
        let scale = k.l1_norm().max(1e-300);
        let cutoff = k.hat_cutoff(1e-17);
        let u_cap = cutoff.unwrap_or(4000.0);
        let mut u = Vec::new();
        let mut w = Vec::new();
        let mut lo = width * 2f64.powi(-40);
        rule.push_nodes(0.0, lo, &mut u, &mut w);
        while lo < width {
            rule.push_nodes(lo, 2.0 * lo, &mut u, &mut w);
            lo *= 2.0;
        }
        let mut a = width;
        let mut small_run = 0;
        let mut last_mag = 0.0;
        while a < u_cap {
            let b = (a + width).min(u_cap);
            rule.push_nodes(a, b, &mut u, &mut w);
            last_mag = (k.hat(b) * phi.eval(b)).norm();
            if last_mag < 1e-17 * scale {
                small_run += 1;
                if small_run >= 3 {
                    break;
                }
            } else {
                small_run = 0;
            }
            a = b;
        }
        if cutoff.is_none() && small_run < 3 && last_mag > 1e-8 * scale {
            return Err(LabError::Convergence {
                what: "Fourier grid for K_∞ (transform decays too slowly)".into(),
                residual: last_mag,
            });
        }
        let g = u
            .iter()
            .zip(&w)
            .map(|(&ui, &wi)| k.hat(ui) * phi.eval(ui) * (wi / std::f64::consts::PI))
            .collect();
        Ok(FourierGrid { u, g, x_max })
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `K_∞^{(order)}(x)`.
    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        let mut acc = 0.0;
        for (&u, &g) in self.u.iter().zip(&self.g) {
            let e = Complex64::new(0.0, u * x).exp();
            acc += (g * Complex64::new(0.0, u).powu(order as u32) * e).re;
        }
        acc
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }
}

/// Tabulated `K_∞` with its derivatives at the origin.
#[derive(Debug, Clone)]
pub struct KInf {
    k: FunctionalK,
    grid: FourierGrid,
    values: Vec<f64>,
    slopes: Vec<f64>,
    derivs0: [f64; MAX_DERIV + 1],
    right_tail: (f64, f64),
    left_tail: (f64, f64),
}

impl KInf {
    pub fn new(spec: &ProcessSpec, k: &FunctionalK) -> Result<Self> {
        let phi = ProcessCharFn::new(spec);
        let grid = FourierGrid::new(&phi, k, TABLE_X_MAX)?;
        let npts = 2 * TABLE_STEPS_PER_UNIT * TABLE_X_MAX as usize + 1;
        let dx = 1.0 / TABLE_STEPS_PER_UNIT as f64;
        let mut values = vec![0.0; npts];
        let mut slopes = vec![0.0; npts];
        for (&u, &g) in grid.u.iter().zip(&grid.g) {
            let step = Complex64::new(0.0, u * dx).exp();
            let mut rot = Complex64::new(0.0, -u * TABLE_X_MAX).exp();
            let gd = g * Complex64::new(0.0, u);
            for m in 0..npts {
                values[m] += (g * rot).re;
                slopes[m] += (gd * rot).re;
                rot *= step;
                if m % 512 == 511 {
                    // Re-anchor to keep rounding from accumulating.
                    rot = Complex64::new(0.0, u * (-TABLE_X_MAX + (m + 1) as f64 * dx)).exp();
                }
            }
        }
        let mut derivs0 = [0.0; MAX_DERIV + 1];
        for (order, d) in derivs0.iter_mut().enumerate() {
            *d = grid.derivative(0.0, order);
        }
        let alpha = spec.alpha();
        let tail = |edge: f64, inner: f64| -> (f64, f64) {
            let p = if edge != 0.0 && inner != 0.0 && edge.signum() == inner.signum() {
                (inner / edge).ln() / (4.0f64 / 3.0).ln()
            } else {
                f64::NAN
            };
            let p = if p.is_finite() && (1.0..=10.0).contains(&p) { p } else { alpha + 1.0 };
            (edge, p)
        };
        let q = (npts - 1) / 8;
        let right_tail = tail(values[npts - 1], values[npts - 1 - q]);
        let left_tail = tail(values[0], values[q]);
        Ok(KInf { k: *k, grid, values, slopes, derivs0, right_tail, left_tail })
    }

    pub fn kernel(&self) -> &FunctionalK {
        &self.k
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    /// `E K(X_1)`.
    pub fn expect(&self) -> f64 {
        self.derivs0[0]
    }

    /// `K_∞'(0)`.
    pub fn prime_zero(&self) -> f64 {
        self.derivs0[1]
    }

    /// `K_∞^{(k)}(0)` for `k ≤ 8`.
    pub fn derivatives_at_zero(&self) -> &[f64; MAX_DERIV + 1] {
        &self.derivs0
    }

    /// Direct Fourier evaluation, valid for `|x| ≤ 64`.
    pub fn direct(&self, x: f64) -> f64 {
        self.grid.value(x)
    }

    /// Table lookup with cubic Hermite interpolation and power-law tails.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let pos = (x + TABLE_X_MAX) * TABLE_STEPS_PER_UNIT as f64;
        let last = self.values.len() - 1;
        if pos >= 0.0 && pos < last as f64 {
            let i = pos as usize;
            let t = pos - i as f64;
            let h = 1.0 / TABLE_STEPS_PER_UNIT as f64;
            let (y0, y1) = (self.values[i], self.values[i + 1]);
            let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
            let t2 = t * t;
            let t3 = t2 * t;
            return (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                + (t3 - 2.0 * t2 + t) * m0
                + (-2.0 * t3 + 3.0 * t2) * y1
                + (t3 - t2) * m1;
        }
        if x.is_nan() {
            return f64::NAN;
        }
        let (edge, p) = if x > 0.0 { self.right_tail } else { self.left_tail };
        edge * (TABLE_X_MAX / x.abs()).powf(p)
    }
}

/// `E K(X_1)` by Fourier quadrature.
pub fn expect_k(spec: &ProcessSpec, k: &FunctionalK) -> Result<f64> {
    let grid = FourierGrid::new(&ProcessCharFn::new(spec), k, 1.0)?;
    Ok(grid.value(0.0))
}

/// `K_∞(x)` by Fourier quadrature.
pub fn k_infinity(spec: &ProcessSpec, k: &FunctionalK, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(LabError::domain("x must be finite"));
    }
    let grid = FourierGrid::new(&ProcessCharFn::new(spec), k, x.abs().max(1.0))?;
    Ok(grid.value(x))
}

/// `K_∞'(0) = (1/2π) ∫ iu K̂(u) φ(u) du`.
pub fn k_infinity_prime_zero(spec: &ProcessSpec, k: &FunctionalK) -> Result<f64> {
    let grid = FourierGrid::new(&ProcessCharFn::new(spec), k, 1.0)?;
    Ok(grid.derivative(0.0, 1))
}

/// Monte Carlo estimate of `E K(X_1)` with its standard error, from the means of
/// `replicates` simulated paths of length `n`.
pub fn expect_k_mc(spec: &ProcessSpec, k: &FunctionalK, replicates: usize, n: usize, seed: u64) -> Result<(f64, f64)> {
    if replicates < 2 {
        return Err(LabError::domain("need at least two replicates"));
    }
    let conv = Convolver::new(spec.coeffs());
    let means = map_replicates(replicates, |r| {
        let rep = simulate_replicate(spec, &conv, n, seed, r as u64)?;
        Ok(rep.path.iter().map(|&x| k.eval(x)).sum::<f64>() / n as f64)
    })?;
    let m = replicates as f64;
    let mean = means.iter().sum::<f64>() / m;
    let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok((mean, (var / m).sqrt()))
}
