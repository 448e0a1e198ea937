//! Innovations in the domain of attraction of an α-stable law.
//!
//! The law is a three-part mixture: Pareto-type tails `P(ε > x) = σ₂ x^{-α} h(x)` and
//! `P(ε ≤ -x) = σ₁ x^{-α} h(x)` that are exact beyond the cutoff `x₀`, and a uniform
//! core on `(-x₀, x₀)` carrying the remaining mass. A centring shift removes the mean
//! when α > 1.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quad;
use crate::regvar::SlowVary;

/// How the innovations are centred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    Symmetric,
    MeanZero,
    None,
}

/// Serializable description of an innovation law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnovationSpec {
    pub alpha: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    #[serde(default = "default_h")]
    pub h: SlowVary,
    #[serde(default = "default_x0")]
    pub x0: f64,
    pub centering: Centering,
}

fn default_h() -> SlowVary {
    SlowVary::constant(1.0).expect("constant 1 is valid")
}

fn default_x0() -> f64 {
    1.0
}

/// A validated innovation law with its derived constants.
#[derive(Debug, Clone)]
pub struct InnovationModel {
    spec: InnovationSpec,
    p_minus: f64,
    p_plus: f64,
    m0: f64,
    shift: f64,
    tail_table: Option<Arc<TailIntegral>>,
}

impl InnovationModel {
    pub fn new(spec: InnovationSpec) -> Result<Self> {
        let InnovationSpec { alpha, sigma1, sigma2, ref h, x0, centering } = spec;
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(LabError::model(format!("alpha must lie in (0, 2], got {alpha}")));
        }
        if !(sigma1 >= 0.0 && sigma2 >= 0.0 && sigma1 + sigma2 > 0.0 && (sigma1 + sigma2).is_finite()) {
            return Err(LabError::model("need σ₁, σ₂ ≥ 0 with σ₁ + σ₂ > 0"));
        }
        if !(x0.is_finite() && x0 >= 1.0) {
            return Err(LabError::model(format!("cutoff x₀ must be ≥ 1, got {x0}")));
        }
        match centering {
            Centering::Symmetric if sigma1 != sigma2 => {
                return Err(LabError::model("symmetric centring needs σ₁ = σ₂"));
            }
            Centering::Symmetric => {}
            _ if alpha == 1.0 => return Err(LabError::model("α = 1 requires symmetric innovations")),
            Centering::MeanZero if alpha <= 1.0 => {
                return Err(LabError::model("mean-zero centring needs α > 1 (the mean does not exist)"));
            }
            Centering::None if alpha > 1.0 => {
                return Err(LabError::model("α ∈ (1, 2] requires centred innovations"));
            }
            _ => {}
        }
        let max_eta = max_log_derivative(h, x0);
        if max_eta >= alpha {
            return Err(LabError::model(format!(
                "x^-α h(x) must decrease beyond x₀ (max log-derivative of h is {max_eta:.3} ≥ α)"
            )));
        }
        let s0 = x0.powf(-alpha) * h.value(x0);
        let p_minus = sigma1 * s0;
        let p_plus = sigma2 * s0;
        let m0 = 1.0 - p_minus - p_plus;
        if m0 < -1e-12 {
            return Err(LabError::model(format!(
                "tail mass (σ₁+σ₂)x₀^-α h(x₀) = {} exceeds one; raise x₀",
                p_minus + p_plus
            )));
        }
        let m0 = m0.max(0.0);
        let mut model = InnovationModel { spec, p_minus, p_plus, m0, shift: 0.0, tail_table: None };
        if model.spec.alpha > 1.0 && centering == Centering::MeanZero {
            model.shift = model.raw_mean()?;
        }
        if model.spec.h.as_constant().is_some() {
            model.tail_table = Some(Arc::new(TailIntegral::new(alpha)));
        }
        Ok(model)
    }

    pub fn spec(&self) -> &InnovationSpec {
        &self.spec
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    /// Mass of the uniform core.
    pub fn core_mass(&self) -> f64 {
        self.m0
    }

    /// Probabilities of the left and right tail components.
    pub fn tail_masses(&self) -> (f64, f64) {
        (self.p_minus, self.p_plus)
    }

    /// Shift subtracted from the raw mixture variable.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `x^{-α} h(x)`.
    #[inline]
    fn tail_fn(&self, x: f64) -> f64 {
        x.powf(-self.spec.alpha) * self.spec.h.value(x)
    }

    /// Mean of the uncentred mixture (α > 1).
    pub fn raw_mean(&self) -> Result<f64> {
        let a = self.spec.alpha;
        if a <= 1.0 {
            return Err(LabError::domain("the mean exists only for α > 1"));
        }
        let x0 = self.spec.x0;
        let b = if let Some(c) = self.spec.h.as_constant() {
            c * x0.powf(1.0 - a) * a / (a - 1.0)
        } else {
            let v0 = x0.ln();
            let span = 60.0 / (a - 1.0);
            let r = quad::adaptive(v0, v0 + span, 1e-13, 4000, |v: f64| {
                let x = v.exp();
                x * self.tail_fn(x)
            })?;
            x0 * self.tail_fn(x0) + r.value
        };
        Ok((self.spec.sigma2 - self.spec.sigma1) * b)
    }

    /// Density of the uncentred mixture.
    pub fn raw_density(&self, y: f64) -> f64 {
        let x0 = self.spec.x0;
        let ay = y.abs();
        if ay < x0 {
            return if self.m0 > 0.0 { self.m0 / (2.0 * x0) } else { 0.0 };
        }
        let a = self.spec.alpha;
        let w = if y > 0.0 { self.spec.sigma2 } else { self.spec.sigma1 };
        w * ay.powf(-a - 1.0) * self.spec.h.value(ay) * (a - self.spec.h.log_derivative(ay))
    }

    /// Density of the centred innovation.
    pub fn density(&self, x: f64) -> f64 {
        self.raw_density(x + self.shift)
    }

    /// `P(raw > y)`.
    pub fn raw_survival(&self, y: f64) -> f64 {
        let x0 = self.spec.x0;
        if y >= x0 {
            self.spec.sigma2 * self.tail_fn(y)
        } else if y > -x0 {
            self.p_plus + self.m0 * (x0 - y) / (2.0 * x0)
        } else {
            1.0 - self.spec.sigma1 * self.tail_fn(-y)
        }
    }

    /// `(P(ε > x), P(ε ≤ -x))` for the centred innovation.
    pub fn tail_probs(&self, x: f64) -> (f64, f64) {
        let right = self.raw_survival(x + self.shift);
        let left = 1.0 - self.raw_survival(-x + self.shift);
        (right, left)
    }

    /// Solves `x^{-α} h(x) = v · x₀^{-α} h(x₀)` for `x ≥ x₀`.
    pub fn tail_inverse(&self, v: f64) -> f64 {
        let a = self.spec.alpha;
        let x0 = self.spec.x0;
        if self.spec.h.as_constant().is_some() {
            return x0 * v.powf(-1.0 / a);
        }
        let target = v.ln() + self.tail_fn(x0).ln();
        let g = |t: f64| self.tail_fn(t.exp()).ln() - target;
        let v0 = x0.ln();
        let mut lo = v0;
        let mut hi = v0 - v.ln() / a + 1.0;
        while g(hi) > 0.0 {
            hi += (hi - v0).max(1.0);
        }
        let mut t = (v0 - v.ln() / a).clamp(lo, hi);
        for _ in 0..200 {
            let gt = g(t);
            if gt > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let slope = -a + self.spec.h.log_derivative(t.exp());
            let mut next = t - gt / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-15 * t.abs().max(1.0) || hi - lo <= 1e-15 * hi.abs().max(1.0) {
                t = next;
                break;
            }
            t = next;
        }
        t.exp()
    }

    /// One centred draw.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w = 1.0 - rng.random::<f64>();
        let raw = if w <= self.p_minus {
            -self.tail_inverse((w / self.p_minus).max(f64::MIN_POSITIVE))
        } else if w <= self.p_minus + self.p_plus {
            self.tail_inverse(((w - self.p_minus) / self.p_plus).max(f64::MIN_POSITIVE))
        } else {
            self.spec.x0 * (2.0 * rng.random::<f64>() - 1.0)
        };
        raw - self.shift
    }

    /// Fills `out` with centred draws.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.sample(rng);
        }
    }

    /// Small-argument scale σ in `ln φ_ε(u) ≈ -σ|u|^α H(1/|u|)(1 - iD sgn u)`.
    pub fn stable_sigma(&self) -> f64 {
        let a = self.spec.alpha;
        let s = self.spec.sigma1 + self.spec.sigma2;
        if a == 1.0 {
            s * PI / 2.0
        } else if a == 2.0 {
            s / 2.0
        } else {
            s * statrs::function::gamma::gamma(1.0 - a) * (PI * a / 2.0).cos()
        }
    }

    /// Skewness parameter D of the attracting stable law.
    pub fn stable_d(&self) -> f64 {
        let a = self.spec.alpha;
        if a == 1.0 || a == 2.0 {
            return 0.0;
        }
        let (s1, s2) = (self.spec.sigma1, self.spec.sigma2);
        (s2 - s1) / (s1 + s2) * (PI * a / 2.0).tan()
    }

    /// `1 - φ_raw(u)` for the uncentred mixture.
    pub fn one_minus_char_raw(&self, u: f64) -> Complex64 {
        if u == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        match &self.tail_table {
            Some(t) => self.one_minus_char_raw_fast(t, u),
            None => self.one_minus_char_raw_quad(u).unwrap_or_else(|_| Complex64::new(f64::NAN, f64::NAN)),
        }
    }

    fn core_part(&self, u: f64) -> f64 {
        let z = u * self.spec.x0;
        let one_minus_sinc = if z.abs() < 1e-4 {
            z * z / 6.0 - z.powi(4) / 120.0
        } else {
            1.0 - z.sin() / z
        };
        self.m0 * one_minus_sinc
    }

    fn one_minus_char_raw_fast(&self, t: &TailIntegral, u: f64) -> Complex64 {
        let a = self.spec.alpha;
        let c = self.spec.h.as_constant().unwrap_or(1.0);
        let au = u.abs();
        let q = t.q(au * self.spec.x0);
        let tails = (q * self.spec.sigma2 + q.conj() * self.spec.sigma1) * (a * c * au.powf(a));
        let v = tails + self.core_part(au);
        if u < 0.0 {
            v.conj()
        } else {
            v
        }
    }

    /// Quadrature route for `1 - φ_raw(u)`, valid for every admissible `h`.
    pub fn one_minus_char_raw_quad(&self, u: f64) -> Result<Complex64> {
        if u == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let au = u.abs();
        let x0 = self.spec.x0;
        // Right tail: (1 - e^{iux₀}) S(x₀) - iu ∫_{x₀}^∞ e^{iux} S(x) dx with S = x^-α h.
        let osc = oscillatory_tail(|x| self.tail_fn(x), x0, au)?;
        let bound = Complex64::new(1.0 - (au * x0).cos(), -(au * x0).sin()) * self.tail_fn(x0);
        let base = bound - Complex64::new(0.0, au) * osc;
        let v = base * self.spec.sigma2 + base.conj() * self.spec.sigma1 + self.core_part(au);
        Ok(if u < 0.0 { v.conj() } else { v })
    }

    /// `φ_ε(u)` of the centred innovation.
    pub fn char_fn(&self, u: f64) -> Complex64 {
        let w = self.one_minus_char_raw(u);
        let rot = Complex64::new(0.0, -u * self.shift).exp();
        rot * (Complex64::new(1.0, 0.0) - w)
    }

    /// `1 - φ_ε(u)` of the centred innovation, without cancellation at small `u`.
    pub fn one_minus_char(&self, u: f64) -> Complex64 {
        let w = self.one_minus_char_raw(u);
        if self.shift == 0.0 {
            return w;
        }
        let z = -u * self.shift;
        // 1 - e^{iz}(1 - w) = (1 - e^{iz}) + e^{iz} w
        let one_minus_rot = Complex64::new(2.0 * (z / 2.0).sin().powi(2), -z.sin());
        one_minus_rot + Complex64::new(z.cos(), z.sin()) * w
    }

    /// `ln φ_ε(u)`, accurate when φ_ε(u) is close to one.
    pub fn ln_char(&self, u: f64) -> Complex64 {
        ln_one_minus(self.one_minus_char(u))
    }
}

/// `ln(1 - w)` without loss of precision for small `w`.
pub fn ln_one_minus(w: Complex64) -> Complex64 {
    let re = 0.5 * (-2.0 * w.re + w.re * w.re + w.im * w.im).ln_1p();
    let im = (-w.im).atan2(1.0 - w.re);
    Complex64::new(re, im)
}

/// Checked `φ_ε(u)` by quadrature of the exact density.
pub fn innovation_char_fn(model: &InnovationModel, u: f64) -> Result<Complex64> {
    if !u.is_finite() {
        return Err(LabError::domain("u must be finite"));
    }
    let w = model.one_minus_char_raw_quad(u)?;
    let rot = Complex64::new(0.0, -u * model.shift).exp();
    Ok(rot * (Complex64::new(1.0, 0.0) - w))
}

/// `n` centred draws from `model`.
pub fn sample_innovations<R: Rng + ?Sized>(model: &InnovationModel, n: usize, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; n];
    model.sample_into(rng, &mut out);
    out
}

fn max_log_derivative(h: &SlowVary, x0: f64) -> f64 {
    use crate::regvar::SlowKind;
    let start = x0.max(h.floor()) * (1.0 + 1e-12);
    match h.kind() {
        SlowKind::Constant(_) | SlowKind::NegLogPower(_) => 0.0,
        SlowKind::LogPower(k) | SlowKind::LogLogPower(k) if *k <= 0.0 => 0.0,
        SlowKind::LogPower(_) | SlowKind::LogLogPower(_) => h.log_derivative(start),
        SlowKind::Tabulated { x, .. } => {
            let mut m: f64 = 0.0;
            for w in x.windows(2) {
                if w[1] > x0 {
                    m = m.max(h.log_derivative((w[0] * w[1]).sqrt().max(start)));
                }
            }
            m
        }
    }
}

/// `∫_{x₀}^∞ e^{iux} S(x) dx` for `u > 0` and decreasing `S`, by half-period
/// summation with repeated averaging of the alternating partial sums.
fn oscillatory_tail(s: impl Fn(f64) -> f64, x0: f64, u: f64) -> Result<Complex64> {
    let half = PI / u;
    let f = |x: f64| Complex64::new((u * x).cos(), (u * x).sin()) * s(x);
    let mut head = Complex64::new(0.0, 0.0);
    let mut start = x0;
    if half > 4.0 * x0 {
        // Long first stretch: integrate in log x.
        let end = half;
        let r = quad::adaptive(x0.ln(), end.ln(), 1e-12, 5000, |v: f64| f(v.exp()) * v.exp())?;
        head = r.value;
        start = end;
    }
    const TERMS: usize = 48;
    let mut partial = Vec::with_capacity(TERMS);
    let mut acc = head;
    for k in 0..TERMS {
        let a = start + k as f64 * half;
        acc += quad::gl32().integrate(a, a + half, f);
        partial.push(acc);
    }
    while partial.len() > 1 {
        partial = partial.windows(2).map(|w| (w[0] + w[1]) * 0.5).collect();
    }
    let v = partial[0];
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(LabError::numeric("oscillatory tail integral is not finite"));
    }
    Ok(v)
}

/// `Q(z) = ∫_z^∞ (1 - e^{iy}) y^{-α-1} dy` for constant-h tails.
#[derive(Debug, Clone)]
pub struct TailIntegral {
    alpha: f64,
    anchors: Vec<Complex64>,
    q1: Complex64,
}

const ANCHOR_MAX: usize = 40;

impl TailIntegral {
    pub fn new(alpha: f64) -> Self {
        let s = alpha + 1.0;
        let mut anchors = vec![Complex64::new(0.0, 0.0); ANCHOR_MAX + 1];
        anchors[ANCHOR_MAX] = j_asymptotic(s, ANCHOR_MAX as f64);
        for m in (1..ANCHOR_MAX).rev() {
            let seg = quad::gl32().integrate(m as f64, m as f64 + 1.0, |y| {
                Complex64::new(y.cos(), y.sin()) * y.powf(-s)
            });
            anchors[m] = anchors[m + 1] + seg;
        }
        let q1 = Complex64::new(1.0 / alpha, 0.0) - anchors[1];
        TailIntegral { alpha, anchors, q1 }
    }

    /// `J(z) = ∫_z^∞ e^{iy} y^{-α-1} dy` for `z ≥ 1`.
    pub fn j(&self, z: f64) -> Complex64 {
        let s = self.alpha + 1.0;
        if z >= ANCHOR_MAX as f64 {
            return j_asymptotic(s, z);
        }
        let m = z.ceil().max(1.0);
        let seg = if m > z {
            quad::gl16().integrate(z, m, |y| Complex64::new(y.cos(), y.sin()) * y.powf(-s))
        } else {
            Complex64::new(0.0, 0.0)
        };
        self.anchors[m as usize] + seg
    }

    pub fn q(&self, z: f64) -> Complex64 {
        let a = self.alpha;
        if z >= 1.0 {
            return Complex64::new(z.powf(-a) / a, 0.0) - self.j(z);
        }
        // ∫_z^1 (1 - e^{iy}) y^{-α-1} dy = -Σ_{k≥1} i^k/k! ∫_z^1 y^{k-α-1} dy
        let lnz = z.ln();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut ik = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for k in 1..40 {
            ik *= Complex64::new(0.0, 1.0);
            fact *= k as f64;
            let e = k as f64 - a;
            let integral = if e.abs() < 1e-14 { -lnz } else { -(e * lnz).exp_m1() / e };
            let term = ik * (integral / fact);
            acc -= term;
            if term.norm() < 1e-18 * acc.norm().max(1e-300) && k > 3 {
                break;
            }
        }
        acc + self.q1
    }
}

fn j_asymptotic(s: f64, z: f64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut acc = term;
    let step = Complex64::new(0.0, -1.0 / z);
    let mut prev = f64::INFINITY;
    for k in 0..200 {
        term = term * step * (s + k as f64);
        let m = term.norm();
        if m > prev || m < 1e-18 {
            break;
        }
        acc += term;
        prev = m;
    }
    Complex64::new(0.0, 1.0) * Complex64::new(z.cos(), z.sin()) * z.powf(-s) * acc
}

/// Outcome of the empirical tail check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// One grid point of the tail check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailRow {
    pub x: f64,
    pub right_exceedances: usize,
    pub left_exceedances: usize,
    pub right_ratio: f64,
    pub left_ratio: f64,
}

/// Empirical `x^α P(ε > x)/h(x)` against σ₂ (and the left analogue against σ₁).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    pub rows: Vec<TailRow>,
    pub status: CheckStatus,
    pub right_error: Option<f64>,
    pub left_error: Option<f64>,
}

/// Minimum exceedances for a grid point to count.
pub const MIN_EXCEEDANCES: usize = 500;

/// Compares empirical tails with the declared law on a geometric grid.
pub fn tail_calibration_check(model: &InnovationModel, samples: &[f64]) -> Result<TailReport> {
    if samples.len() < 100_000 {
        return Err(LabError::domain("tail check needs at least 1e5 samples"));
    }
    let spec = model.spec();
    let n = samples.len() as f64;
    let mut sorted_pos: Vec<f64> = samples.iter().filter(|v| **v > 0.0).cloned().collect();
    let mut sorted_neg: Vec<f64> = samples.iter().filter(|v| **v < 0.0).map(|v| -v).collect();
    sorted_pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted_neg.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let count_above = |v: &[f64], x: f64| v.len() - v.partition_point(|y| *y <= x);
    let mut rows = Vec::new();
    let mut x = spec.x0.max(1.0) * 2.0;
    while x < 1e12 {
        let r = count_above(&sorted_pos, x);
        let l = count_above(&sorted_neg, x);
        if r == 0 && l == 0 {
            break;
        }
        let norm = x.powf(spec.alpha) / (spec.h.value(x) * n);
        rows.push(TailRow { x, right_exceedances: r, left_exceedances: l, right_ratio: r as f64 * norm, left_ratio: l as f64 * norm });
        x *= 2.0;
    }
    let pick = |exc: fn(&TailRow) -> usize, ratio: fn(&TailRow) -> f64, target: f64| -> Option<f64> {
        if target == 0.0 {
            return None;
        }
        rows.iter().rfind(|r| exc(r) >= MIN_EXCEEDANCES).map(|r| (ratio(r) / target - 1.0).abs())
    };
    let right_error = pick(|r| r.right_exceedances, |r| r.right_ratio, spec.sigma2);
    let left_error = pick(|r| r.left_exceedances, |r| r.left_ratio, spec.sigma1);
    let needed_right = spec.sigma2 > 0.0;
    let needed_left = spec.sigma1 > 0.0;
    let status = if (needed_right && right_error.is_none()) || (needed_left && left_error.is_none()) {
        CheckStatus::Inconclusive
    } else if right_error.unwrap_or(0.0) <= 0.1 && left_error.unwrap_or(0.0) <= 0.1 {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(TailReport { rows, status, right_error, left_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn pareto15() -> InnovationModel {
        InnovationModel::new(InnovationSpec {
            alpha: 1.5,
            sigma1: 0.5,
            sigma2: 0.5,
            h: default_h(),
            x0: 1.0,
            centering: Centering::Symmetric,
        })
        .unwrap()
    }

    fn spec(alpha: f64, s1: f64, s2: f64, h: SlowVary, x0: f64, c: Centering) -> InnovationSpec {
        InnovationSpec { alpha, sigma1: s1, sigma2: s2, h, x0, centering: c }
    }

    #[test]
    fn validation_rules() {
        let one = default_h();
        assert!(InnovationModel::new(spec(1.0, 0.3, 0.7, one.clone(), 1.0, Centering::None)).is_err());
        assert!(InnovationModel::new(spec(0.8, 0.3, 0.7, one.clone(), 1.0, Centering::MeanZero)).is_err());
        assert!(InnovationModel::new(spec(1.5, 0.3, 0.7, one.clone(), 1.0, Centering::None)).is_err());
        assert!(InnovationModel::new(spec(1.5, 0.3, 0.7, one.clone(), 1.0, Centering::Symmetric)).is_err());
        assert!(InnovationModel::new(spec(1.5, 1.0, 1.0, one.clone(), 1.0, Centering::Symmetric)).is_err());
        assert!(InnovationModel::new(spec(1.5, 0.0, 0.0, one.clone(), 1.0, Centering::Symmetric)).is_err());
        assert!(InnovationModel::new(spec(0.8, 0.3, 0.7, one, 1.0, Centering::None)).is_ok());
        // (ln x)^3 at x₀ = 2 has log-derivative 3/ln 2 > α.
        assert!(InnovationModel::new(spec(1.5, 0.5, 0.5, SlowVary::log_power(3.0).unwrap(), 2.0, Centering::Symmetric)).is_err());
    }

    #[test]
    fn pareto_tail_frequency() {
        let m = pareto15();
        assert_eq!(m.core_mass(), 0.0);
        let mut r = rng::stream(11, rng::domain::CHECKS, 0);
        let xs = sample_innovations(&m, 1_000_000, &mut r);
        let freq = xs.iter().filter(|x| x.abs() > 2.0).count() as f64 / xs.len() as f64;
        assert!((freq - 2f64.powf(-1.5)).abs() < 0.003, "{freq}");
    }

    #[test]
    fn symmetric_mean_within_three_standard_errors() {
        let m = InnovationModel::new(spec(1.0, 0.25, 0.25, default_h(), 1.0, Centering::Symmetric)).unwrap();
        let mut r = rng::stream(12, rng::domain::CHECKS, 0);
        let xs = sample_innovations(&m, 1_000_000, &mut r);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 3.0 * (var / n).sqrt(), "{mean}");
        let m2 = pareto15();
        let ys = sample_innovations(&m2, 1_000_000, &mut r);
        let mean = ys.iter().sum::<f64>() / n;
        let var = ys.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 3.0 * (var / n).sqrt(), "{mean}");
    }

    #[test]
    fn char_fn_basic_properties() {
        let m = pareto15();
        let one = m.char_fn(0.0);
        assert_eq!(one, Complex64::new(1.0, 0.0));
        for u in [-30.0, -1.0, 0.01, 0.3, 2.0, 17.0, 800.0] {
            let p = m.char_fn(u);
            assert!(p.im.abs() <= 1e-9, "u={u} {p}");
            assert!(p.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn fast_and_quadrature_routes_agree() {
        let models = [
            pareto15(),
            InnovationModel::new(spec(1.5, 0.2, 0.6, SlowVary::constant(0.5).unwrap(), 1.5, Centering::MeanZero)).unwrap(),
            InnovationModel::new(spec(1.0, 0.25, 0.25, default_h(), 1.0, Centering::Symmetric)).unwrap(),
            InnovationModel::new(spec(2.0, 0.5, 0.5, default_h(), 1.0, Centering::Symmetric)).unwrap(),
            InnovationModel::new(spec(0.7, 0.1, 0.3, default_h(), 1.0, Centering::None)).unwrap(),
        ];
        for m in &models {
            for u in [1e-6, 1e-3, 0.05, 0.5, 0.999, 1.0, 3.7, 39.5, 41.0, 250.0, -2.2] {
                let fast = m.one_minus_char_raw(u);
                let slow = m.one_minus_char_raw_quad(u).unwrap();
                assert!((fast - slow).norm() < 1e-9, "α={} u={u}: {fast} vs {slow}", m.alpha());
            }
        }
    }

    #[test]
    fn small_u_scale_matches_stable_sigma() {
        let m = pareto15();
        let u: f64 = 1e-3;
        let ratio = (1.0 - m.char_fn(u).re) / u.powf(1.5);
        // Independent oracle: α ∫_0^∞ (1 - cos y) y^{-α-1} dy by quadrature, times σ₁+σ₂ = 1.
        let a = 1.5;
        let mut breaks = crate::quad::geometric_breaks(1e-12, 8.0, 2.0);
        breaks.pop();
        breaks.extend(crate::quad::uniform_breaks(8.0, 1e4, 2.0));
        let head = crate::quad::adaptive_panels(&breaks, 1e-8, 200, |y: f64| (2.0 * (0.5 * y).sin().powi(2)) * y.powf(-a - 1.0)).unwrap().value;
        // Tail beyond 1e4: ∫ y^{-α-1} dy minus an oscillatory remainder below 1e-9.
        let tail = 1e4f64.powf(-a) / a;
        let oracle = a * (head + tail);
        assert!((m.stable_sigma() - oracle).abs() < 1e-6 * oracle, "{} vs {oracle}", m.stable_sigma());
        assert!((ratio / oracle - 1.0).abs() < 0.05, "{ratio} vs {oracle}");
    }

    #[test]
    fn skewness_sign_matches_char_fn() {
        let m = InnovationModel::new(spec(1.5, 0.1, 0.9, default_h(), 1.0, Centering::MeanZero)).unwrap();
        let u = 1e-4;
        let l = -m.ln_char(u);
        let d_emp = -l.im / l.re;
        assert!((d_emp - m.stable_d()).abs() < 0.05, "{d_emp} vs {}", m.stable_d());
    }

    #[test]
    fn mean_is_removed() {
        let h = SlowVary::log_power(0.5).unwrap();
        let m = InnovationModel::new(spec(1.6, 0.2, 0.7, h, 2.0, Centering::MeanZero)).unwrap();
        // Oracle: ∫ y f(y) dy by quadrature of the exact density.
        let x0: f64 = 2.0;
        let core = 0.0; // the uniform core is symmetric
        let right = crate::quad::adaptive(x0.ln(), x0.ln() + 120.0, 1e-12, 5000, |v: f64| {
            let y = v.exp();
            y * y * m.raw_density(y)
        })
        .unwrap()
        .value;
        let left = crate::quad::adaptive(x0.ln(), x0.ln() + 120.0, 1e-12, 5000, |v: f64| {
            let y = v.exp();
            y * y * m.raw_density(-y)
        })
        .unwrap()
        .value;
        assert!((core + right - left - m.shift()).abs() < 1e-10, "{} vs {}", right - left, m.shift());
    }

    #[test]
    fn density_integrates_to_one() {
        let h = SlowVary::log_log_power(1.0).unwrap();
        let m = InnovationModel::new(spec(1.2, 0.1, 0.2, h, 9.0, Centering::MeanZero)).unwrap();
        let core = m.core_mass();
        let tail = |sgn: f64| {
            crate::quad::adaptive(9f64.ln(), 9f64.ln() + 200.0, 1e-12, 5000, |v: f64| {
                let y = v.exp();
                y * m.raw_density(sgn * y)
            })
            .unwrap()
            .value
        };
        assert!((core + tail(1.0) + tail(-1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tail_inverse_residual() {
        let h = SlowVary::log_power(0.7).unwrap();
        let m = InnovationModel::new(spec(1.3, 0.3, 0.3, h, 3.0, Centering::Symmetric)).unwrap();
        for v in [1e-12, 1e-6, 0.01, 0.5, 0.999, 1.0] {
            let x = m.tail_inverse(v);
            let p = m.tail_fn(x) / m.tail_fn(3.0);
            assert!((p - v).abs() <= 1e-10, "v={v} x={x} p={p}");
        }
    }

    #[test]
    fn alpha_two_truncated_second_moment_trend() {
        let m = InnovationModel::new(spec(2.0, 0.5, 0.5, default_h(), 1.0, Centering::Symmetric)).unwrap();
        let mut r = rng::stream(13, rng::domain::CHECKS, 0);
        let xs = sample_innovations(&m, 1_000_000, &mut r);
        let n = xs.len() as f64;
        // Returns the ratio and its standard error.
        let ratio = |t: f64| {
            let (s2, s4) = xs.iter().filter(|x| x.abs() <= t).fold((0.0, 0.0), |(a, b), x| (a + x * x, b + x.powi(4)));
            let mean = s2 / n;
            let se = ((s4 / n - mean * mean) / n).sqrt();
            (mean / (2.0 * t.ln()), se / (2.0 * t.ln()))
        };
        // Exact density: E[ε² 1{|ε| ≤ t}] = 2 ln t for the unit Pareto(2) tail pair.
        let oracle = |t: f64| {
            crate::quad::adaptive(0.0, t.ln(), 1e-12, 200, |v: f64| {
                let y = v.exp();
                2.0 * y * y * y * m.raw_density(y)
            })
            .unwrap()
            .value
                / (2.0 * t.ln())
        };
        for t in [10.0, 100.0, 1000.0] {
            assert!((oracle(t) - 1.0).abs() < 1e-9);
            let (r, se) = ratio(t);
            assert!((r - 1.0).abs() < 4.0 * se, "t={t}: {r} ± {se}");
        }
    }

    #[test]
    fn tail_check_outcomes() {
        let m = pareto15();
        let mut r = rng::stream(14, rng::domain::CHECKS, 0);
        let xs = sample_innovations(&m, 1_000_000, &mut r);
        assert_eq!(tail_calibration_check(&m, &xs).unwrap().status, CheckStatus::Pass);
        use rand_distr::{Distribution, StandardNormal};
        let g: Vec<f64> = (0..1_000_000).map(|_| StandardNormal.sample(&mut r)).collect();
        assert_eq!(tail_calibration_check(&m, &g).unwrap().status, CheckStatus::Fail);
        let tiny: Vec<f64> = vec![0.1; 200_000];
        assert_eq!(tail_calibration_check(&m, &tiny).unwrap().status, CheckStatus::Inconclusive);
        assert!(tail_calibration_check(&m, &xs[..10]).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = pareto15();
        let a = sample_innovations(&m, 1000, &mut rng::stream(5, 1, 2));
        let b = sample_innovations(&m, 1000, &mut rng::stream(5, 1, 2));
        assert_eq!(a, b);
    }

    #[test]
    fn decay_condition_holds() {
        let m = InnovationModel::new(spec(1.5, 0.3, 0.3, default_h(), 2.0, Centering::Symmetric)).unwrap();
        let mut worst: f64 = 0.0;
        let mut u = -1000.0;
        while u <= 1000.0 {
            worst = worst.max(m.char_fn(u).norm() * (1.0 + u.abs()));
            u += 0.37;
        }
        assert!(worst < 10.0, "{worst}");
    }
}
