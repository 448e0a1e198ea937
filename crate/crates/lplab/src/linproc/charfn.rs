//! Characteristic function `φ(u) = Π_j φ_ε(a_j u)` of `X_1`.

use num_complex::Complex64;

use super::ProcessSpec;
use crate::error::{LabError, Result};
use crate::quad;

/// Indices summed term by term before the smooth remainder takes over.
const DIRECT_TERMS: usize = 128;
/// Terms with `a_j |u|` above this are always summed directly.
const DIRECT_ARG: f64 = 0.2;
/// `ln |φ|` below this counts as zero.
const LN_TINY: f64 = -690.0;

/// `Π_{j≤J} φ_ε(a_j u)` by the plain product, stopping once the modulus drops
/// below 1e-300.
pub fn process_char_fn(spec: &ProcessSpec, u: f64) -> Result<Complex64> {
    if !u.is_finite() {
        return Err(LabError::domain("u must be finite"));
    }
    let j = spec.horizon().ok_or_else(|| LabError::domain("the plain product needs a finite horizon"))?;
    let model = spec.model();
    let mut acc = Complex64::new(1.0, 0.0);
    for i in 1..=j {
        acc *= model.char_fn(spec.coefficient(i) * u);
        if acc.norm() < 1e-300 {
            return Ok(Complex64::new(0.0, 0.0));
        }
    }
    Ok(acc)
}

/// Fast evaluator of `ln φ(u)`: leading terms exactly, the smooth remainder
/// `Σ_{j≥j₀} ln φ_ε(a(j) u)` by Euler-Maclaurin with one derivative correction.
#[derive(Debug, Clone)]
pub struct ProcessCharFn {
    spec: ProcessSpec,
}

impl ProcessCharFn {
    pub fn new(spec: &ProcessSpec) -> Self {
        ProcessCharFn { spec: spec.clone() }
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn eval(&self, u: f64) -> Complex64 {
        let l = self.ln_eval(u);
        if l.re < LN_TINY {
            Complex64::new(0.0, 0.0)
        } else {
            l.exp()
        }
    }

    pub fn ln_eval(&self, u: f64) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        if u == 0.0 {
            return zero;
        }
        let spec = &self.spec;
        let model = spec.model();
        let au = u.abs();
        let horizon = spec.horizon();
        let last = horizon.unwrap_or(usize::MAX);
        let mut acc = zero;
        if spec.is_explicit() {
            for j in 1..=last {
                acc += model.ln_char(spec.coefficient(j) * u);
                if acc.re < LN_TINY {
                    return Complex64::new(f64::NEG_INFINITY, 0.0);
                }
            }
            return acc;
        }
        let mut j = 1usize;
        while j <= last && (j < DIRECT_TERMS.max(spec.monotone_from()) || spec.coefficient(j) * au > DIRECT_ARG) {
            acc += model.ln_char(spec.coefficient(j) * u);
            if acc.re < LN_TINY {
                return Complex64::new(f64::NEG_INFINITY, 0.0);
            }
            j += 1;
        }
        if j > last {
            return acc;
        }
        let f = |t: f64| model.ln_char(spec.coefficient_at(t) * u);
        let df = |t: f64| {
            let h = 1e-3 * t;
            (f(t + h) - f(t - h)) / (2.0 * h)
        };
        let a = j as f64;
        acc += f(a) * 0.5 - df(a) / 12.0;
        match horizon {
            Some(end) => {
                let b = end as f64;
                if b > a {
                    acc += log_integral(&f, a, b);
                    acc += f(b) * 0.5 + df(b) / 12.0;
                } else {
                    acc += f(b) * 0.5 + df(b) / 12.0;
                }
            }
            None => acc += log_integral_to_infinity(&f, a),
        }
        acc
    }
}

/// `∫_a^b f(t) dt` on unit panels in `ln t`.
fn log_integral(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> Complex64 {
    let breaks = quad::uniform_breaks(a.ln(), b.ln(), 0.5);
    quad::gl16().integrate_panels(&breaks, |s| {
        let t = s.exp();
        f(t) * t
    })
}

/// `∫_a^∞ f(t) dt` for an integrand decaying like a power of `t`.
fn log_integral_to_infinity(f: &impl Fn(f64) -> Complex64, a: f64) -> Complex64 {
    let rule = quad::gl16();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut s = a.ln();
    let s_max = 1e300f64.ln();
    while s < s_max {
        let panel = rule.integrate(s, s + 1.0, |v| {
            let t = v.exp();
            f(t) * t
        });
        acc += panel;
        s += 1.0;
        if panel.norm() < 1e-18 * acc.norm().max(1e-300) {
            break;
        }
    }
    acc
}
