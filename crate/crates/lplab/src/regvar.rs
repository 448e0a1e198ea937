//! Slowly and regularly varying functions.
//!
//! A closed family of slowly varying functions (constants, powers of `ln x` and
//! `ln ln x`, and log-log interpolated tables) together with the derived objects the
//! scaling theory needs: coefficient partial sums `L`, the truncated second moment
//! `H`, de Bruijn style conjugates, the inverse of `s^{1/β} ℓ^{1/β}(s^{1/β})` and the
//! integrated memory function `H̄`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quad;

/// Default lower clamp for evaluation.
pub const DEFAULT_FLOOR: f64 = 2.0;

/// The functional form of a slowly varying function.
#[derive(Debug, Clone, PartialEq)]
pub enum SlowKind {
    Constant(f64),
    /// `(ln x)^κ`
    LogPower(f64),
    /// `(ln ln x)^κ`
    LogLogPower(f64),
    /// `(ln x)^{-κ}`
    NegLogPower(f64),
    /// Log-log linear interpolation through `(x_i, y_i)`, constant outside the grid.
    Tabulated { x: Vec<f64>, y: Vec<f64> },
}

/// Asymptotic class `(ln x)^log · (ln ln x)^loglog` of a slowly varying function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogClass {
    pub log: f64,
    pub loglog: f64,
}

/// A slowly varying function, evaluated as `ℓ(max(x, floor))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SlowVarySpec", into = "SlowVarySpec")]
pub struct SlowVary {
    kind: SlowKind,
    floor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlowVarySpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    floor: Option<f64>,
}

impl TryFrom<SlowVarySpec> for SlowVary {
    type Error = LabError;

    fn try_from(s: SlowVarySpec) -> Result<Self> {
        let kappa = || s.kappa.ok_or_else(|| LabError::config(format!("{} needs 'kappa'", s.kind)));
        let base = match s.kind.as_str() {
            "constant" => SlowVary::constant(s.c.unwrap_or(1.0))?,
            "log_power" => SlowVary::log_power(kappa()?)?,
            "log_log_power" => SlowVary::log_log_power(kappa()?)?,
            "neg_log_power" => SlowVary::neg_log_power(kappa()?)?,
            "tabulated" => SlowVary::tabulated(
                s.x.clone().ok_or_else(|| LabError::config("tabulated needs 'x'"))?,
                s.y.clone().ok_or_else(|| LabError::config("tabulated needs 'y'"))?,
            )?,
            other => return Err(LabError::config(format!("unknown slowly varying kind '{other}'"))),
        };
        match s.floor {
            Some(f) => base.with_floor(f),
            None => Ok(base),
        }
    }
}

impl From<SlowVary> for SlowVarySpec {
    fn from(s: SlowVary) -> Self {
        let mut out = SlowVarySpec { kind: String::new(), c: None, kappa: None, x: None, y: None, floor: Some(s.floor) };
        match s.kind {
            SlowKind::Constant(c) => {
                out.kind = "constant".into();
                out.c = Some(c);
            }
            SlowKind::LogPower(k) => {
                out.kind = "log_power".into();
                out.kappa = Some(k);
            }
            SlowKind::LogLogPower(k) => {
                out.kind = "log_log_power".into();
                out.kappa = Some(k);
            }
            SlowKind::NegLogPower(k) => {
                out.kind = "neg_log_power".into();
                out.kappa = Some(k);
            }
            SlowKind::Tabulated { x, y } => {
                out.kind = "tabulated".into();
                out.x = Some(x);
                out.y = Some(y);
            }
        }
        out
    }
}

impl SlowVary {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(LabError::model(format!("constant must be positive, got {c}")));
        }
        Ok(SlowVary { kind: SlowKind::Constant(c), floor: DEFAULT_FLOOR })
    }

    /// `(ln x)^κ`.
    pub fn log_power(kappa: f64) -> Result<Self> {
        check_exponent(kappa)?;
        Ok(SlowVary { kind: SlowKind::LogPower(kappa), floor: DEFAULT_FLOOR })
    }

    /// `(ln ln x)^κ`; the default floor is `e²` so that `ln ln x > 0`.
    pub fn log_log_power(kappa: f64) -> Result<Self> {
        check_exponent(kappa)?;
        Ok(SlowVary { kind: SlowKind::LogLogPower(kappa), floor: std::f64::consts::E.powi(2) })
    }

    /// `(ln x)^{-κ}`.
    pub fn neg_log_power(kappa: f64) -> Result<Self> {
        check_exponent(kappa)?;
        Ok(SlowVary { kind: SlowKind::NegLogPower(kappa), floor: DEFAULT_FLOOR })
    }

    pub fn tabulated(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != y.len() {
            return Err(LabError::model("tabulated grid needs at least two (x, y) pairs of equal length"));
        }
        if x.iter().any(|v| !(v.is_finite() && *v >= 1.0)) || y.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(LabError::model("tabulated grid needs x ≥ 1 and y > 0"));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::model("tabulated x must be strictly increasing"));
        }
        Ok(SlowVary { kind: SlowKind::Tabulated { x, y }, floor: DEFAULT_FLOOR })
    }

    /// Replaces the evaluation floor.
    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor.is_finite() && floor > 1.0) {
            return Err(LabError::model(format!("domain floor must exceed 1, got {floor}")));
        }
        if let SlowKind::LogLogPower(_) = self.kind {
            if floor <= std::f64::consts::E {
                return Err(LabError::model("log-log power needs a floor above e"));
            }
        }
        self.floor = floor;
        Ok(self)
    }

    pub fn kind(&self) -> &SlowKind {
        &self.kind
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// The constant value if this is `Constant(c)`.
    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            SlowKind::Constant(c) => Some(c),
            _ => None,
        }
    }

    /// Checked evaluation.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(LabError::domain(format!("slowly varying argument must be finite, got {x}")));
        }
        if x < 1.0 {
            return Err(LabError::domain(format!("slowly varying argument must be ≥ 1, got {x}")));
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation at `max(x, floor)`.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let x = if x > self.floor { x } else { self.floor };
        match &self.kind {
            SlowKind::Constant(c) => *c,
            SlowKind::LogPower(k) => x.ln().powf(*k),
            SlowKind::LogLogPower(k) => x.ln().ln().powf(*k),
            SlowKind::NegLogPower(k) => x.ln().powf(-*k),
            SlowKind::Tabulated { x: xs, y: ys } => tab_eval(xs, ys, x),
        }
    }

    /// `x ℓ'(x) / ℓ(x)`, zero below the floor.
    pub fn log_derivative(&self, x: f64) -> f64 {
        if x <= self.floor {
            return 0.0;
        }
        match &self.kind {
            SlowKind::Constant(_) => 0.0,
            SlowKind::LogPower(k) => k / x.ln(),
            SlowKind::LogLogPower(k) => k / (x.ln() * x.ln().ln()),
            SlowKind::NegLogPower(k) => -k / x.ln(),
            SlowKind::Tabulated { x: xs, y: ys } => tab_slope(xs, ys, x),
        }
    }

    /// `ℓ'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        self.log_derivative(x) * self.value(x) / x
    }

    /// Asymptotic class; tables count as eventually constant.
    pub fn log_class(&self) -> LogClass {
        match self.kind {
            SlowKind::Constant(_) | SlowKind::Tabulated { .. } => LogClass { log: 0.0, loglog: 0.0 },
            SlowKind::LogPower(k) => LogClass { log: k, loglog: 0.0 },
            SlowKind::LogLogPower(k) => LogClass { log: 0.0, loglog: k },
            SlowKind::NegLogPower(k) => LogClass { log: -k, loglog: 0.0 },
        }
    }

    /// Smallest `u ≥ floor` beyond which `1 + η(v)/β > 0` for all `v ≥ u`.
    pub fn increasing_threshold(&self, beta: f64) -> f64 {
        let f = self.floor;
        match &self.kind {
            SlowKind::Constant(_) => f,
            SlowKind::LogPower(k) | SlowKind::NegLogPower(k) => {
                let k = if let SlowKind::NegLogPower(_) = self.kind { -k } else { *k };
                if k >= 0.0 {
                    f
                } else {
                    f.max((-k / beta).exp() * (1.0 + 1e-9))
                }
            }
            SlowKind::LogLogPower(k) => {
                if *k >= 0.0 {
                    return f;
                }
                let need = -k / beta;
                let g = |u: f64| u.ln() * u.ln().ln() - need;
                if g(f) > 0.0 {
                    return f;
                }
                let (mut lo, mut hi) = (f, f * 2.0);
                while g(hi) <= 0.0 {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid) > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
            SlowKind::Tabulated { x, y } => {
                let mut thr = f;
                for i in 0..x.len() - 1 {
                    let s = (y[i + 1] / y[i]).ln() / (x[i + 1] / x[i]).ln();
                    if 1.0 + s / beta <= 0.0 {
                        thr = thr.max(x[i + 1]);
                    }
                }
                thr
            }
        }
    }
}

fn check_exponent(k: f64) -> Result<()> {
    if k.is_finite() {
        Ok(())
    } else {
        Err(LabError::model("exponent must be finite"))
    }
}

fn tab_segment(xs: &[f64], x: f64) -> Option<usize> {
    if x <= xs[0] || x >= xs[xs.len() - 1] {
        return None;
    }
    let i = xs.partition_point(|v| *v <= x);
    Some(i - 1)
}

fn tab_eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match tab_segment(xs, x) {
        None if x <= xs[0] => ys[0],
        None => ys[ys.len() - 1],
        Some(i) => {
            let t = (x / xs[i]).ln() / (xs[i + 1] / xs[i]).ln();
            (ys[i].ln() + t * (ys[i + 1] / ys[i]).ln()).exp()
        }
    }
}

fn tab_slope(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match tab_segment(xs, x) {
        None => 0.0,
        Some(i) => (ys[i + 1] / ys[i]).ln() / (xs[i + 1] / xs[i]).ln(),
    }
}

/// Composition rule of a regularly varying function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Composition {
    Plain,
    InnerPower(f64),
}

/// `x^{index} G^{index}(x)` or `x^{index} G^{index}(x^{1/κ})`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegVary {
    pub index: f64,
    pub sv: SlowVary,
    pub composition: Composition,
}

impl RegVary {
    pub fn eval(&self, x: f64) -> f64 {
        let inner = match self.composition {
            Composition::Plain => x,
            Composition::InnerPower(k) => x.powf(1.0 / k),
        };
        x.powf(self.index) * self.sv.value(inner).powf(self.index)
    }

    /// Point beyond which the function is strictly increasing (for positive index).
    pub fn monotone_threshold(&self) -> f64 {
        match self.composition {
            Composition::Plain => self.sv.increasing_threshold(1.0),
            Composition::InnerPower(k) => self.sv.increasing_threshold(k).powf(k),
        }
    }

    /// Verifies strict monotonicity on a geometric grid past the threshold.
    pub fn check_monotone(&self, upto: f64) -> bool {
        let mut x = self.monotone_threshold().max(1.0);
        let mut prev = self.eval(x);
        while x < upto {
            x *= 1.25;
            let v = self.eval(x);
            if v <= prev {
                return false;
            }
            prev = v;
        }
        true
    }
}

/// Checked evaluation of a slowly varying function.
pub fn eval_slowvary(sv: &SlowVary, x: f64) -> Result<f64> {
    sv.eval(x)
}

/// Number of coefficients summed exactly before switching to Euler-Maclaurin.
const EXACT_TERMS: usize = 1 << 16;

/// `L(N) = Σ_{j≤N} j^{-1} ℓ(j)` with linear interpolation between integers.
#[derive(Debug, Clone)]
pub struct PartialSumL {
    ell: SlowVary,
    prefix: Vec<f64>,
}

impl PartialSumL {
    pub fn new(ell: &SlowVary) -> Self {
        let mut prefix = Vec::with_capacity(EXACT_TERMS + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for j in 1..=EXACT_TERMS {
            acc += ell.value(j as f64) / j as f64;
            prefix.push(acc);
        }
        PartialSumL { ell: ell.clone(), prefix }
    }

    pub fn ell(&self) -> &SlowVary {
        &self.ell
    }

    /// `L(n)` for integer `n ≥ 0`.
    pub fn at(&self, n: u64) -> f64 {
        if (n as usize) < self.prefix.len() {
            return self.prefix[n as usize];
        }
        self.continued(n as f64)
    }

    /// Euler-Maclaurin continuation past the exact prefix.
    fn continued(&self, n: f64) -> f64 {
        let n0 = EXACT_TERMS as f64;
        let f = |t: f64| self.ell.value(t) / t;
        let df = |t: f64| self.ell.value(t) * (self.ell.log_derivative(t) - 1.0) / (t * t);
        let integral = self.log_integral(n0, n);
        self.prefix[EXACT_TERMS] + integral + 0.5 * (f(n) - f(n0)) + (df(n) - df(n0)) / 12.0
    }

    /// `∫_a^b ℓ(t)/t dt`.
    fn log_integral(&self, a: f64, b: f64) -> f64 {
        if let Some(c) = self.ell.as_constant() {
            return c * (b / a).ln();
        }
        let (va, vb) = (a.ln(), b.ln());
        let breaks = quad::uniform_breaks(va, vb, 2.0);
        quad::gl32().integrate_panels(&breaks, |v| self.ell.value(v.exp()))
    }

    /// `L(x)` for real `x ≥ 0`, linear between integers.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 9.0e15 {
            return self.continued(x);
        }
        let k = x.floor();
        let frac = x - k;
        let lo = self.at(k as u64);
        if frac == 0.0 {
            return lo;
        }
        let next = k + 1.0;
        lo + frac * self.ell.value(next) / next
    }
}

/// `Σ_{j=1}^{N} j^{-1} ℓ(j)`, interpolated linearly for non-integer `N`.
pub fn partial_sum_l(ell: &SlowVary, n: f64) -> Result<f64> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(LabError::domain(format!("partial sum needs N ≥ 1, got {n}")));
    }
    Ok(PartialSumL::new(ell).eval(n))
}

/// The truncated second-moment function `H` built from `h`.
///
/// For `α < 2` this is `h` itself; for `α = 2` it is `∫_{floor}^t (2 − η(s)) h(s)/s ds`
/// where `η` is the log-derivative of `h`, which equals `−∫ s² d(h(s)/s²)`.
#[derive(Debug, Clone)]
pub struct TailH {
    pub h: SlowVary,
    pub alpha: f64,
}

impl TailH {
    pub fn new(h: &SlowVary, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(LabError::domain(format!("alpha must lie in (0, 2], got {alpha}")));
        }
        Ok(TailH { h: h.clone(), alpha })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.alpha < 2.0 {
            return self.h.value(t);
        }
        let f = self.h.floor();
        if t <= f {
            return 0.0;
        }
        if let Some(c) = self.h.as_constant() {
            return 2.0 * c * (t / f).ln();
        }
        let breaks = quad::uniform_breaks(f.ln(), t.ln(), 2.0);
        quad::gl32().integrate_panels(&breaks, |v| {
            let s = v.exp();
            (2.0 - self.h.log_derivative(s)) * self.h.value(s)
        })
    }

    /// Asymptotic class of `H`.
    pub fn log_class(&self) -> LogClass {
        let c = self.h.log_class();
        if self.alpha < 2.0 {
            c
        } else {
            integrate_class(c)
        }
    }
}

/// `H(t)` from `h`, checked.
pub fn h_from_h(h: &SlowVary, alpha: f64, t: f64) -> Result<f64> {
    let th = TailH::new(h, alpha)?;
    if !(t.is_finite() && t >= h.floor()) {
        return Err(LabError::domain(format!("t must be ≥ the domain floor, got {t}")));
    }
    Ok(th.eval(t))
}

/// Class of `∫^x ℓ(t)/t dt`; `None` marks a bounded integral.
pub fn integrate_class_opt(c: LogClass) -> Option<LogClass> {
    if c.log > -1.0 {
        Some(LogClass { log: c.log + 1.0, loglog: c.loglog })
    } else if c.log == -1.0 {
        if c.loglog > -1.0 {
            Some(LogClass { log: 0.0, loglog: c.loglog + 1.0 })
        } else if c.loglog == -1.0 {
            // ln ln ln growth: unbounded but slower than any power of ln ln.
            Some(LogClass { log: 0.0, loglog: 0.0 })
        } else {
            None
        }
    } else {
        None
    }
}

fn integrate_class(c: LogClass) -> LogClass {
    integrate_class_opt(c).unwrap_or(LogClass { log: 0.0, loglog: 0.0 })
}

/// True when `Σ_j j^{-1} (ln j)^p (ln ln j)^q` diverges.
pub fn log_series_diverges(c: LogClass) -> bool {
    c.log > -1.0 || (c.log == -1.0 && c.loglog >= -1.0)
}

/// Solves `y = G(N^{1/p} y^{1/p})` by fixed-point iteration.
pub fn conjugate_slowvary(g: &dyn Fn(f64) -> f64, p: f64, n: f64, tol: f64) -> Result<f64> {
    if !(p > 0.0 && n.is_finite() && n > 0.0) {
        return Err(LabError::domain("conjugate needs p > 0 and finite N > 0"));
    }
    let np = n.powf(1.0 / p);
    let map = |y: f64| g(np * y.powf(1.0 / p));
    let mut y = map(1.0);
    let mut resid = f64::INFINITY;
    for it in 0..200 {
        if !(y.is_finite() && y > 0.0) {
            return Err(LabError::numeric(format!("conjugate iterate left (0, ∞): {y}")));
        }
        let next = map(y);
        resid = (next - y).abs();
        if resid <= tol * y.max(1.0) {
            return Ok(y);
        }
        y = if it < 50 { next } else { 0.5 * (y + next) };
    }
    Err(LabError::Convergence { what: "conjugate fixed point".into(), residual: resid })
}

/// `s ↦ s^{1/β} ℓ^{1/β}(s^{1/β})` and its inverse.
#[derive(Debug, Clone)]
pub struct RInverse {
    beta: f64,
    ell: SlowVary,
    s_a: f64,
    r_a: f64,
}

impl RInverse {
    pub fn new(beta: f64, ell: &SlowVary) -> Result<Self> {
        if !(beta >= 1.0 && beta.is_finite()) {
            return Err(LabError::domain(format!("beta must be ≥ 1, got {beta}")));
        }
        let u = ell.increasing_threshold(beta);
        let s_a = if u > ell.floor() { u.powf(beta) } else { 0.0 };
        let mut r = RInverse { beta, ell: ell.clone(), s_a, r_a: 0.0 };
        r.r_a = r.forward(s_a);
        Ok(r)
    }

    pub fn forward(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let u = s.powf(1.0 / self.beta);
        u * self.ell.value(u).powf(1.0 / self.beta)
    }

    /// Start of the strictly increasing branch and its image.
    pub fn threshold(&self) -> (f64, f64) {
        (self.s_a, self.r_a)
    }

    pub fn inverse(&self, x: f64) -> Result<f64> {
        if !(x.is_finite() && x > 0.0) {
            return Err(LabError::domain(format!("R inverse needs finite x > 0, got {x}")));
        }
        if self.s_a > 0.0 && x < self.r_a {
            return Err(LabError::domain(format!(
                "x = {x} lies below the monotone threshold image {}",
                self.r_a
            )));
        }
        if let Some(c) = self.ell.as_constant() {
            return Ok(x.powf(self.beta) / c);
        }
        let mut lo = if self.s_a > 0.0 { self.s_a.ln() } else { (x.powf(self.beta) * 1e-30).ln().min(0.0) };
        let mut hi = (x.powf(self.beta)).ln().max(lo + 1.0);
        while self.forward(hi.exp()) < x {
            hi = lo.max(hi) + 2.0 * (hi - lo).max(1.0);
        }
        while self.forward(lo.exp()) > x && self.s_a == 0.0 {
            lo -= 10.0;
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.forward(mid.exp()) < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = hi.exp();
        let resid = (self.forward(s) - x).abs();
        if resid > 1e-10 * x {
            return Err(LabError::Convergence { what: "R inverse bisection".into(), residual: resid });
        }
        Ok(s)
    }

    /// Generalised inverse `inf{s ≥ s_A : R(s) ≥ x}`.
    pub fn inverse_clamped(&self, x: f64) -> f64 {
        if x <= self.r_a {
            return self.s_a;
        }
        self.inverse(x).unwrap_or(self.s_a)
    }
}

/// Inverse of `s ↦ s^{1/β} ℓ^{1/β}(s^{1/β})`.
pub fn r_inverse(beta: f64, ell: &SlowVary, x: f64) -> Result<f64> {
    RInverse::new(beta, ell)?.inverse(x)
}

/// `H̄(x) = ∫_{floor}^x t h(R^←(t)) / R^←(t)^α dt` on the curve `αβ = 2`.
#[derive(Debug, Clone)]
pub struct Hbar {
    alpha: f64,
    h: SlowVary,
    rinv: RInverse,
    floor: f64,
}

impl Hbar {
    pub fn new(beta: f64, alpha: f64, ell: &SlowVary, h: &SlowVary) -> Result<Self> {
        if (alpha * beta - 2.0).abs() > 1e-12 {
            return Err(LabError::domain(format!("H̄ needs αβ = 2, got {}", alpha * beta)));
        }
        Ok(Hbar { alpha, h: h.clone(), rinv: RInverse::new(beta, ell)?, floor: ell.floor().max(h.floor()) })
    }

    fn integrand_log(&self, v: f64) -> f64 {
        let t = v.exp();
        let s = self.rinv.inverse_clamped(t).max(1.0);
        t * t * self.h.value(s) / s.powf(self.alpha)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.floor {
            return 0.0;
        }
        let breaks = quad::uniform_breaks(self.floor.ln(), x.ln(), 2.0);
        quad::gl16().integrate_panels(&breaks, |v| self.integrand_log(v))
    }
}

/// Checked `H̄(x)`.
pub fn hbar(beta: f64, alpha: f64, ell: &SlowVary, h: &SlowVary, x: f64) -> Result<f64> {
    let hb = Hbar::new(beta, alpha, ell, h)?;
    if !(x.is_finite() && x >= hb.floor) {
        return Err(LabError::domain(format!("x must be ≥ the domain floor, got {x}")));
    }
    Ok(hb.eval(x))
}

/// Numerical limits of the growth ratios at `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct T2Limits {
    pub g_l: f64,
    pub g_h: f64,
    pub spread_l: f64,
    pub spread_h: f64,
}

/// Spread tolerance for the ratio sequences.
pub const T2_SPREAD_TOL: f64 = 1e-2;

/// Estimates `lim L(e^{λx})/L(e^x)` and `lim h(e^{λx})/h(e^x)`.
///
/// Ratios are taken at `e^x = 2^k` for `k = 20..=40`; the estimate is the last value
/// and the spread is the range over the last five.
pub fn t2_limits(l_like: &dyn Fn(f64) -> f64, h: &dyn Fn(f64) -> f64, lambda: f64) -> Result<T2Limits> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(LabError::domain(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let ratios = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        (20..=40)
            .map(|k| {
                let x = k as f64 * std::f64::consts::LN_2;
                f((lambda * x).exp()) / f(x.exp())
            })
            .collect()
    };
    let spread = |r: &[f64]| {
        let tail = &r[r.len() - 5..];
        tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tail.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let rl = ratios(l_like);
    let rh = ratios(h);
    let out = T2Limits {
        g_l: *rl.last().unwrap(),
        g_h: *rh.last().unwrap(),
        spread_l: spread(&rl),
        spread_h: spread(&rh),
    };
    if !(out.spread_l <= T2_SPREAD_TOL && out.spread_h <= T2_SPREAD_TOL) {
        return Err(LabError::Regularity(format!(
            "T2 fails: ratios do not stabilise (spreads {:.3e}, {:.3e})",
            out.spread_l, out.spread_h
        )));
    }
    if out.g_l >= 1.0 - T2_SPREAD_TOL {
        return Err(LabError::Regularity(format!("T2 fails: g_L({lambda}) = {} is not below 1", out.g_l)));
    }
    if out.g_h <= 0.0 {
        return Err(LabError::Regularity(format!("T2 fails: g_h({lambda}) = {} is not positive", out.g_h)));
    }
    Ok(out)
}

/// Exponent `p` with `g(λ) = λ^p`, read off an asymptotic class.
pub fn growth_exponent(c: LogClass) -> f64 {
    c.log
}

/// Exponent of `g_L` for `L` built from `ℓ`; `None` when `L` grows too slowly for T2.
pub fn l_growth_exponent(ell: &SlowVary) -> Option<f64> {
    match integrate_class_opt(ell.log_class()) {
        Some(c) if c.log > 0.0 => Some(c.log),
        _ => None,
    }
}

/// `c_{L,h} = ∫_0^{1/2} (1 − g_L)² g_h / ∫_0^{1/2} g_h`.
pub fn c_lh(g_l: &dyn Fn(f64) -> f64, g_h: &dyn Fn(f64) -> f64) -> Result<f64> {
    let num = quad::adaptive(0.0, 0.5, 1e-10, 2000, |y: f64| {
        let d = 1.0 - g_l(y);
        d * d * g_h(y)
    })?;
    let den = quad::adaptive(0.0, 0.5, 1e-10, 2000, |y: f64| g_h(y))?;
    if den.value <= 0.0 {
        return Err(LabError::numeric("c_Lh denominator is not positive"));
    }
    Ok(num.value / den.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn evaluator_examples() {
        assert_eq!(SlowVary::constant(1.0).unwrap().eval(1e6).unwrap(), 1.0);
        assert_relative_eq!(SlowVary::log_power(1.0).unwrap().eval(3f64.exp()).unwrap(), 3.0, epsilon = 1e-12);
        let e2 = std::f64::consts::E.powi(2);
        assert_relative_eq!(SlowVary::log_log_power(1.0).unwrap().eval(e2.exp()).unwrap(), 2.0, epsilon = 1e-12);
        assert!(SlowVary::constant(1.0).unwrap().eval(f64::NAN).is_err());
        assert!(SlowVary::constant(1.0).unwrap().eval(0.5).is_err());
    }

    #[test]
    fn floor_clamps() {
        let l = SlowVary::log_power(1.0).unwrap();
        assert_eq!(l.value(1.0), 2f64.ln());
        assert_eq!(l.value(1.5), l.value(2.0));
    }

    #[test]
    fn tabulated_interpolates_in_log_log() {
        let t = SlowVary::tabulated(vec![2.0, 200.0], vec![1.0, 4.0]).unwrap();
        assert_relative_eq!(t.value(20.0), 2.0, epsilon = 1e-12);
        assert_eq!(t.value(1e9), 4.0);
        assert_relative_eq!(t.log_derivative(20.0), 4f64.ln() / 100f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn serde_round_trip() {
        let l = SlowVary::neg_log_power(3.0).unwrap();
        let s = serde_json::to_string(&l).unwrap();
        let back: SlowVary = serde_json::from_str(&s).unwrap();
        assert_eq!(l, back);
        assert!(serde_json::from_str::<SlowVary>(r#"{"kind":"constant","c":1,"bogus":2}"#).is_err());
        assert!(serde_json::from_str::<SlowVary>(r#"{"kind":"wavy"}"#).is_err());
    }

    #[test]
    fn partial_sum_examples() {
        let one = SlowVary::constant(1.0).unwrap();
        assert_eq!(partial_sum_l(&one, 1.0).unwrap(), 1.0);
        assert_relative_eq!(partial_sum_l(&one, 10.0).unwrap(), 2.928968254, epsilon = 1e-9);
        assert_relative_eq!(partial_sum_l(&one, 2.5).unwrap(), 1.5 + 0.5 / 3.0, epsilon = 1e-15);
        assert!(partial_sum_l(&one, 0.5).is_err());
        let lp = SlowVary::log_power(1.0).unwrap();
        let v = partial_sum_l(&lp, 1e4).unwrap();
        let target = 1e4f64.ln().powi(2) / 2.0;
        assert!((v / target - 1.0).abs() < 0.02, "{v} vs {target}");
    }

    #[test]
    fn partial_sum_keeps_growing_past_integer_range() {
        let l = PartialSumL::new(&SlowVary::constant(1.0).unwrap());
        for x in [1e16, 1e20, 1e32, 1e100] {
            assert!((l.eval(x) - x.ln() - 0.5772156649015329).abs() < 1e-9, "{x}");
        }
    }

    #[test]
    fn euler_maclaurin_continuation_matches_direct_sum() {
        for ell in [SlowVary::constant(1.0).unwrap(), SlowVary::log_power(1.5).unwrap(), SlowVary::neg_log_power(0.5).unwrap()] {
            let p = PartialSumL::new(&ell);
            let n = (EXACT_TERMS as u64) * 3 + 17;
            let direct: f64 = (1..=n).map(|j| ell.value(j as f64) / j as f64).sum();
            assert_relative_eq!(p.at(n), direct, max_relative = 1e-13);
        }
    }

    #[test]
    fn h_for_alpha_below_two_is_h() {
        assert_eq!(h_from_h(&SlowVary::constant(1.0).unwrap(), 1.5, 50.0).unwrap(), 1.0);
        assert!(h_from_h(&SlowVary::constant(1.0).unwrap(), 2.5, 50.0).is_err());
    }

    #[test]
    fn h_for_alpha_two() {
        let c = SlowVary::constant(1.0).unwrap();
        let d = h_from_h(&c, 2.0, 1e6).unwrap() - h_from_h(&c, 2.0, 10.0).unwrap();
        assert!((d - 2.0 * 1e5f64.ln()).abs() < 1e-8);
        let lp = SlowVary::log_power(1.0).unwrap();
        let off = |t: f64| h_from_h(&lp, 2.0, t).unwrap() - (t.ln().powi(2) - t.ln());
        let base = off(10.0);
        for t in [1e2, 1e4, 1e8, 1e15] {
            assert!(((off(t) - base) / h_from_h(&lp, 2.0, t).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn conjugate_examples() {
        let one = |_: f64| 1.0;
        assert_eq!(conjugate_slowvary(&one, 1.5, 1e9, 1e-12).unwrap(), 1.0);
        let ln = |t: f64| t.ln();
        let n = 20f64.exp();
        let y = conjugate_slowvary(&ln, 2.0, n, 1e-12).unwrap();
        // Newton on y - 10 - ln(y)/2 = 0.
        let mut z = 11.0f64;
        for _ in 0..50 {
            z -= (z - 10.0 - 0.5 * z.ln()) / (1.0 - 0.5 / z);
        }
        assert!((y - z).abs() < 1e-9, "{y} vs {z}");
        assert!(((n.sqrt() * y.sqrt()).ln() - y).abs() / y <= 1e-8);
    }

    #[test]
    fn r_inverse_examples() {
        let one = SlowVary::constant(1.0).unwrap();
        assert_relative_eq!(r_inverse(2.0, &one, 10.0).unwrap(), 100.0, max_relative = 1e-12);
        assert_relative_eq!(r_inverse(1.0, &one, 7.0).unwrap(), 7.0, max_relative = 1e-12);
        let nl = SlowVary::neg_log_power(3.0).unwrap();
        let ri = RInverse::new(2.0, &nl).unwrap();
        let s = ri.inverse(1e3).unwrap();
        assert!((ri.forward(s) - 1e3).abs() <= 1e-10 * 1e3);
        assert!(ri.inverse(ri.threshold().1 * 0.99).is_err());
    }

    #[test]
    fn r_inverse_asymptote_ratio_drifts_toward_one() {
        // s / (x^β ℓ^{-1}(x)) for ℓ = (ln)^{-3}, β = 2 tends to one only logarithmically.
        let nl = SlowVary::neg_log_power(3.0).unwrap();
        let ri = RInverse::new(2.0, &nl).unwrap();
        let ratio = |x: f64| ri.inverse(x).unwrap() / (x * x / nl.value(x));
        let rs: Vec<f64> = [1e6, 1e12, 1e24, 1e48, 1e96].iter().map(|&x| ratio(x)).collect();
        assert!(rs.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()), "{rs:?}");
        assert!((rs[4] - 1.0).abs() < 0.15, "{rs:?}");
    }

    #[test]
    fn hbar_grows_like_log() {
        let one = SlowVary::constant(1.0).unwrap();
        for (beta, alpha) in [(2.0, 1.0), (1.0, 2.0)] {
            let off = |x: f64| hbar(beta, alpha, &one, &one, x).unwrap() - x.ln();
            let base = off(10.0);
            for x in [1e3, 1e6, 1e12] {
                assert!(((off(x) - base) / x.ln()).abs() < 1e-6);
            }
        }
        assert!(hbar(1.5, 1.0, &one, &one, 10.0).is_err());
    }

    #[test]
    fn t2_examples() {
        let ln = |t: f64| t.ln();
        let one = |_: f64| 1.0;
        let r = t2_limits(&ln, &one, 0.25).unwrap();
        assert!((r.g_l - 0.25).abs() < 1e-3);
        let r = t2_limits(&ln, &one, 0.7).unwrap();
        assert_eq!(r.g_h, 1.0);
        let lnln = |t: f64| t.ln().ln();
        assert!(matches!(t2_limits(&lnln, &one, 0.25), Err(LabError::Regularity(_))));
    }

    #[test]
    fn symbolic_growth_exponents() {
        assert_eq!(l_growth_exponent(&SlowVary::constant(1.0).unwrap()), Some(1.0));
        assert_eq!(l_growth_exponent(&SlowVary::log_power(1.0).unwrap()), Some(2.0));
        assert_eq!(l_growth_exponent(&SlowVary::neg_log_power(1.0).unwrap()), None);
        assert_eq!(l_growth_exponent(&SlowVary::neg_log_power(3.0).unwrap()), None);
    }

    #[test]
    fn c_lh_examples() {
        let id = |y: f64| y;
        let one = |_: f64| 1.0;
        let zero = |_: f64| 0.0;
        assert!((c_lh(&id, &one).unwrap() - 7.0 / 12.0).abs() < 1e-10);
        assert!(c_lh(&one, &id).unwrap().abs() < 1e-14);
        assert!((c_lh(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
        assert!(c_lh(&id, &zero).is_err());
    }

    #[test]
    fn series_divergence_rule() {
        assert!(log_series_diverges(LogClass { log: 0.0, loglog: 0.0 }));
        assert!(!log_series_diverges(LogClass { log: -1.5, loglog: 0.0 }));
        assert!(log_series_diverges(LogClass { log: -1.0, loglog: -1.0 }));
        assert!(!log_series_diverges(LogClass { log: -1.0, loglog: -1.5 }));
    }

    #[test]
    fn regvary_is_monotone_past_threshold() {
        let r = RegVary { index: 0.5, sv: SlowVary::neg_log_power(3.0).unwrap(), composition: Composition::InnerPower(2.0) };
        assert!(r.monotone_threshold() > 4.0);
        assert!(r.check_monotone(1e30));
    }
}
