//! Surrogate sums: `T_N`, `T̃_N = Σ η_K(ε_n)` and the truncated sums `S_{N,l}`.
//!
//! All sums are regrouped by innovation. For a fixed innovation value `x`, the
//! terms `K_∞(a_j x) - E K_∞(a_j ε)` are summed directly while `a_j |x| ≥ 0.1`
//! and through the Taylor series of `K_∞` at 0 (to eighth order) with
//! precomputed tail sums of `a_j^k` beyond that.

use std::sync::Arc;

use super::kinf::{expect_k, KInf, MAX_DERIV, TABLE_X_MAX};
use super::sim::{map_replicates, Convolver, Replicate};
use super::ProcessSpec;
use crate::error::{LabError, Result};
use crate::innovations::InnovationModel;
use crate::kernel::FunctionalK;
use crate::quad;

/// Terms with `a_j |x|` below this use the Taylor expansion.
const TAYLOR_ARG: f64 = 0.1;
/// Centres `E K_∞(a_j ε)` computed by direct quadrature for `j` up to this.
const EXACT_CENTRES: usize = 256;
/// Dyadic blocks shrinking slower than this count as non-summable.
const DIVERGENT_RATIO: f64 = 0.99;
/// Table points per unit of `ln a`.
const CTABLE_DENSITY: f64 = 32.0;

/// `E K_∞(a ε) - K_∞(0)` by quadrature against the exact innovation density.
///
/// For α > 1 the mean-zero linear term `K_∞'(0) a ε` is subtracted inside the
/// integral, which leaves an integrand decaying like `|x|^{-α-1} a²x²` near the
/// origin and like `|x|^{-α}` at infinity.
pub fn centred_expectation(kinf: &KInf, model: &InnovationModel, a: f64) -> f64 {
    let spec = model.spec();
    let alpha = spec.alpha;
    let x0 = spec.x0;
    let s = model.shift();
    let k0 = kinf.expect();
    let k1 = if alpha > 1.0 { kinf.prime_zero() } else { 0.0 };
    let g = |x: f64| kinf.eval(a * x) - k0 - k1 * a * x;
    let rule = quad::gl16();
    let mut acc = 0.0;
    if model.core_mass() > 0.0 {
        let width = (0.25 / a).min(0.25 * x0);
        let dens = model.core_mass() / (2.0 * x0);
        acc += dens * rule.integrate_panels(&quad::uniform_breaks(-x0, x0, width), |y| g(y - s));
    }
    let y_max = (1e8 / a).max(10.0 * x0);
    let v_max = (y_max / x0).ln();
    let breaks = quad::uniform_breaks(0.0, v_max, 0.125);
    acc += rule.integrate_panels(&breaks, |v| {
        let y = x0 * v.exp();
        y * (g(y - s) * model.raw_density(y) + g(-y - s) * model.raw_density(-y))
    });
    // Beyond ±y_max, K_∞(a x) is negligible and the rest is in closed form.
    let right = model.raw_survival(y_max);
    let left = 1.0 - model.raw_survival(-y_max);
    let m = y_max * alpha / (alpha - 1.0);
    acc -= k0 * (right + left);
    if k1 != 0.0 {
        acc -= k1 * a * (right * (m - s) - left * (m + s));
    }
    acc
}

/// `a ↦ E K_∞(a ε) - K_∞(0)` interpolated in `ln a`.
#[derive(Debug, Clone)]
pub struct CentreTable {
    s0: f64,
    ds: f64,
    values: Vec<f64>,
}

impl CentreTable {
    pub fn new(kinf: &KInf, model: &InnovationModel, a_min: f64, a_max: f64) -> Result<Self> {
        if !(a_min > 0.0 && a_max >= a_min) {
            return Err(LabError::domain("centre table needs 0 < a_min ≤ a_max"));
        }
        let s0 = a_min.ln() - 2.0 / CTABLE_DENSITY;
        let s1 = a_max.ln() + 2.0 / CTABLE_DENSITY;
        let n = ((s1 - s0) * CTABLE_DENSITY).ceil() as usize + 1;
        let ds = (s1 - s0) / (n - 1) as f64;
        let values = map_replicates(n, |i| Ok(centred_expectation(kinf, model, (s0 + i as f64 * ds).exp())))?;
        Ok(CentreTable { s0, ds, values })
    }

    /// Four-point Lagrange interpolation in `ln a`; power-law extrapolation below the table.
    pub fn eval(&self, a: f64) -> f64 {
        let pos = (a.ln() - self.s0) / self.ds;
        let n = self.values.len();
        if pos < 1.0 {
            let (v1, v2) = (self.values[1], self.values[2]);
            if v1 != 0.0 && v2 != 0.0 && v1.signum() == v2.signum() {
                let p = (v2 / v1).ln() / self.ds;
                return v1 * ((pos - 1.0) * self.ds * p).exp();
            }
            return v1;
        }
        let i = (pos.floor() as usize).clamp(1, n - 3);
        let t = pos - i as f64;
        let (f0, f1, f2, f3) = (self.values[i - 1], self.values[i], self.values[i + 1], self.values[i + 2]);
        -t * (t - 1.0) * (t - 2.0) / 6.0 * f0 + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * f1
            - (t + 1.0) * t * (t - 2.0) / 2.0 * f2
            + (t + 1.0) * t * (t - 1.0) / 6.0 * f3
    }
}

/// Precomputed sums over the coefficients of a finite-horizon process.
#[derive(Debug, Clone)]
pub struct SurrogateEngine {
    kinf: Arc<KInf>,
    coeffs: Vec<f64>,
    centres: Vec<f64>,
    /// `pow_tail[j-1][k-1] = Σ_{i ≥ j} a_i^k`, with a trailing row of zeros.
    pow_tail: Vec<[f64; MAX_DERIV]>,
    centre_tail: Vec<f64>,
    taylor: [f64; MAX_DERIV + 1],
    mono_from: usize,
}

impl SurrogateEngine {
    pub fn new(spec: &ProcessSpec, kinf: Arc<KInf>) -> Result<Self> {
        let horizon = spec.horizon().ok_or_else(|| LabError::domain("surrogate sums need a finite horizon"))?;
        let coeffs: Vec<f64> = (1..=horizon).map(|j| spec.coefficient(j)).collect();
        let model = spec.model();
        let positive: Vec<f64> = coeffs.iter().copied().filter(|&a| a > 0.0).collect();
        let table = if coeffs.len() > EXACT_CENTRES && !positive.is_empty() {
            let a_min = positive.iter().copied().fold(f64::INFINITY, f64::min);
            let a_max = coeffs[EXACT_CENTRES..].iter().copied().fold(0.0, f64::max).max(a_min);
            Some(CentreTable::new(&kinf, model, a_min, a_max)?)
        } else {
            None
        };
        let exact = map_replicates(coeffs.len().min(EXACT_CENTRES), |i| {
            let a = coeffs[i];
            Ok(if a == 0.0 { 0.0 } else { centred_expectation(&kinf, model, a.abs()) })
        })?;
        let mut centres = exact;
        for &a in &coeffs[centres.len()..] {
            centres.push(match (&table, a) {
                (_, 0.0) => 0.0,
                (Some(t), a) => t.eval(a.abs()),
                (None, a) => centred_expectation(&kinf, model, a.abs()),
            });
        }
        if coeffs.iter().any(|&a| a < 0.0) {
            // E K_∞(aε) for a < 0 is E K_∞(|a|(-ε)); only symmetric laws are handled.
            if model.spec().sigma1 != model.spec().sigma2 {
                return Err(LabError::domain("negative coefficients need symmetric innovations"));
            }
        }
        let n = coeffs.len();
        let mut pow_tail = vec![[0.0; MAX_DERIV]; n + 1];
        let mut centre_tail = vec![0.0; n + 1];
        for j in (0..n).rev() {
            let a = coeffs[j];
            let mut p = 1.0;
            let mut row = pow_tail[j + 1];
            for v in row.iter_mut() {
                p *= a;
                *v += p;
            }
            pow_tail[j] = row;
            centre_tail[j] = centre_tail[j + 1] + centres[j];
        }
        let d = kinf.derivatives_at_zero();
        let mut taylor = [0.0; MAX_DERIV + 1];
        let mut fact = 1.0;
        for k in 0..=MAX_DERIV {
            if k > 0 {
                fact *= k as f64;
            }
            taylor[k] = d[k] / fact;
        }
        let mono_from = if spec.is_explicit() { n + 1 } else { spec.monotone_from() };
        Ok(SurrogateEngine { kinf, coeffs, centres, pow_tail, centre_tail, taylor, mono_from })
    }

    pub fn kinf(&self) -> &KInf {
        &self.kinf
    }

    pub fn horizon(&self) -> usize {
        self.coeffs.len()
    }

    /// `E K_∞(a_j ε) - K_∞(0)` for `j = 1..J`.
    pub fn centres(&self) -> &[f64] {
        &self.centres
    }

    /// `Σ_{j=lo}^{hi} (K_∞(a_j x) - E K_∞(a_j ε) - [linear] K_∞'(0) a_j x)`.
    pub fn group_sum(&self, x: f64, lo: usize, hi: usize, linear: bool) -> f64 {
        let n = self.coeffs.len();
        let hi = hi.min(n);
        if lo > hi || lo == 0 {
            return 0.0;
        }
        let k0 = self.taylor[0];
        let k1 = self.taylor[1];
        let ax = x.abs();
        let split = self.split_index(ax).max(lo);
        let mut acc = 0.0;
        for j in lo..split.min(hi + 1) {
            let a = self.coeffs[j - 1];
            let mut t = self.kinf.eval(a * x) - k0 - self.centres[j - 1];
            if linear {
                t -= k1 * a * x;
            }
            acc += t;
        }
        if split <= hi {
            let (from, to) = (split - 1, hi);
            let mut xp = 1.0;
            for k in 1..=MAX_DERIV {
                xp *= x;
                if k == 1 && linear {
                    continue;
                }
                let s = self.pow_tail[from][k - 1] - self.pow_tail[to][k - 1];
                acc += self.taylor[k] * xp * s;
            }
            acc -= self.centre_tail[from] - self.centre_tail[to];
        }
        acc
    }

    /// First index `j` with `a_i |x| < 0.1` for every `i ≥ j`.
    fn split_index(&self, ax: f64) -> usize {
        let n = self.coeffs.len();
        let start = self.mono_from.min(n + 1);
        if start > n {
            return n + 1;
        }
        if ax == 0.0 {
            return start;
        }
        let (mut lo, mut hi) = (start, n + 1);
        if self.coeffs[start - 1].abs() * ax < TAYLOR_ARG {
            return start;
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.coeffs[mid - 1].abs() * ax < TAYLOR_ARG {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// `T_N = Σ_{n=1}^{N} Σ_{j≤J} (K_∞(a_j ε_{n-j}) - E K_∞(a_j ε))` from the
    /// innovation record `ε_{1-J}, …, ε_N`.
    pub fn t_n(&self, record: &[f64], n: usize) -> Result<f64> {
        let jh = self.horizon();
        check_record(record, n, jh)?;
        let mut acc = 0.0;
        for (i, &x) in record[..n + jh - 1].iter().enumerate() {
            let m = i as i64 + 1 - jh as i64;
            let lo = (1 - m).max(1) as usize;
            let hi = ((n as i64 - m) as usize).min(jh);
            acc += self.group_sum(x, lo, hi, false);
        }
        Ok(acc)
    }

    /// `T̃_N = Σ_{n=1}^{N} η_K(ε_n)` with the horizon-`J` version of `η_K`; the
    /// linear-corrected form subtracts `K_∞'(0) a_j ε_n` from every term.
    pub fn t_tilde(&self, record: &[f64], n: usize, linear: bool) -> Result<f64> {
        let jh = self.horizon();
        check_record(record, n, jh)?;
        Ok(record[jh..].iter().map(|&x| self.group_sum(x, 1, jh, linear)).sum())
    }

    /// `η_K(x)` truncated at the horizon.
    pub fn eta(&self, x: f64, linear: bool) -> f64 {
        self.group_sum(x, 1, self.horizon(), linear)
    }
}

fn check_record(record: &[f64], n: usize, horizon: usize) -> Result<()> {
    if record.len() != n + horizon {
        return Err(LabError::domain(format!(
            "innovation record has {} entries, expected N + J = {}",
            record.len(),
            n + horizon
        )));
    }
    Ok(())
}

/// `S_{N,l}` for several truncation lags on a shared innovation record.
#[derive(Debug)]
pub struct TruncatedSums {
    kernel: FunctionalK,
    lags: Vec<usize>,
    convolvers: Vec<Convolver>,
    centres: Vec<f64>,
}

impl TruncatedSums {
    pub fn new(spec: &ProcessSpec, k: &FunctionalK, lags: &[usize]) -> Result<Self> {
        let mut convolvers = Vec::with_capacity(lags.len());
        let mut centres = Vec::with_capacity(lags.len());
        for &l in lags {
            let t = spec.truncated(l)?;
            convolvers.push(Convolver::new(t.coeffs()));
            centres.push(expect_k(&t, k)?);
        }
        Ok(TruncatedSums { kernel: *k, lags: lags.to_vec(), convolvers, centres })
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    /// `E K(X_{n,l})` per lag.
    pub fn centres(&self) -> &[f64] {
        &self.centres
    }

    /// `S_{N,l}` per lag from a record `ε_{1-J}, …, ε_N`.
    pub fn eval(&self, record: &[f64], n: usize, horizon: usize) -> Result<Vec<f64>> {
        check_record(record, n, horizon)?;
        let mut out = Vec::with_capacity(self.lags.len());
        let mut path = vec![0.0; n];
        for ((&l, conv), &c) in self.lags.iter().zip(&self.convolvers).zip(&self.centres) {
            if l > horizon {
                return Err(LabError::domain(format!("lag {l} exceeds the horizon {horizon}")));
            }
            let start = horizon - l;
            conv.convolve_valid(&record[start..start + n + l - 1], &mut path);
            out.push(path.iter().map(|&x| self.kernel.eval(x) - c).sum());
        }
        Ok(out)
    }
}

/// The three surrogate sums for one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateSums {
    pub t_n: f64,
    pub t_tilde: f64,
    pub s_nl: f64,
}

impl SurrogateSums {
    /// Computes `(T_N, T̃_N, S_{N,l})` on the innovation record that produced
    /// `rep.path`.
    pub fn compute(spec: &ProcessSpec, engine: &SurrogateEngine, k: &FunctionalK, rep: &Replicate, l: usize) -> Result<Self> {
        let horizon = engine.horizon();
        let n = rep.path.len();
        if l > horizon {
            return Err(LabError::domain(format!("lag {l} exceeds the horizon {horizon}")));
        }
        let trunc = TruncatedSums::new(spec, k, &[l])?;
        Ok(SurrogateSums {
            t_n: engine.t_n(&rep.innovations, n)?,
            t_tilde: engine.t_tilde(&rep.innovations, n, false)?,
            s_nl: trunc.eval(&rep.innovations, n, horizon)?[0],
        })
    }
}

/// `η_K(x)` over the first `J_tail` terms with a dyadic-block tail estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaResult {
    pub value: f64,
    pub partial: f64,
    pub tail_estimate: f64,
    /// Sums over `[2^k, 2^{k+1})`.
    pub blocks: Vec<f64>,
}

/// Evaluates `η_K` (or its linear-corrected form) on a possibly infinite horizon.
#[derive(Debug, Clone)]
pub struct EtaEvaluator {
    spec: ProcessSpec,
    kinf: Arc<KInf>,
    table: CentreTable,
    j_tail: usize,
}

impl EtaEvaluator {
    /// `j_tail` is rounded down to `2^p - 1` so the blocks are complete.
    pub fn new(spec: &ProcessSpec, kinf: Arc<KInf>, j_tail: usize) -> Result<Self> {
        let cap = spec.horizon().map_or(j_tail, |h| j_tail.min(h));
        if cap < 15 {
            return Err(LabError::domain("η_K needs at least four dyadic blocks"));
        }
        let p = usize::BITS - 1 - (cap + 1).leading_zeros();
        let j_tail = (1usize << p) - 1;
        let a_min = (1..=j_tail).rev().take(64).map(|j| spec.coefficient(j)).fold(f64::INFINITY, f64::min);
        let a_max = (1..=j_tail.min(1 << 12)).map(|j| spec.coefficient(j)).fold(0.0, f64::max);
        let table = CentreTable::new(&kinf, spec.model(), a_min, a_max)?;
        Ok(EtaEvaluator { spec: spec.clone(), kinf, table, j_tail })
    }

    pub fn j_tail(&self) -> usize {
        self.j_tail
    }

    pub fn eval(&self, x: f64, linear: bool) -> Result<EtaResult> {
        let k0 = self.kinf.expect();
        let k1 = self.kinf.prime_zero();
        let mut blocks = Vec::new();
        let mut lo = 1usize;
        while lo <= self.j_tail {
            let hi = (2 * lo - 1).min(self.j_tail);
            let mut b = 0.0;
            for j in lo..=hi {
                let a = self.spec.coefficient(j);
                let mut t = self.kinf.eval(a * x) - k0 - self.table.eval(a);
                if linear {
                    t -= k1 * a * x;
                }
                b += t;
            }
            blocks.push(b);
            lo *= 2;
        }
        let partial: f64 = blocks.iter().sum();
        let nb = blocks.len();
        let (b1, b2, b3) = (blocks[nb - 3].abs(), blocks[nb - 2].abs(), blocks[nb - 1].abs());
        if b3 >= DIVERGENT_RATIO * b2 && b2 >= DIVERGENT_RATIO * b1 && b3 > 1e-12 * partial.abs().max(1e-300) {
            return Err(LabError::Convergence { what: "η_K dyadic blocks do not decay".into(), residual: b3 });
        }
        let last = blocks[nb - 1];
        let prev = blocks[nb - 2];
        let tail_estimate = if self.spec.horizon().is_some_and(|h| h <= self.j_tail) || prev == 0.0 {
            0.0
        } else {
            let r = last / prev;
            if r.abs() < 1.0 {
                last * r / (1.0 - r)
            } else {
                0.0
            }
        };
        Ok(EtaResult { value: partial + tail_estimate, partial, tail_estimate, blocks })
    }
}

/// `η_K(x) = Σ_j (K_∞(a_j x) - E K_∞(a_j ε_1))` summed to `j_tail` plus the
/// dyadic tail estimate.
pub fn eta_k(spec: &ProcessSpec, k: &FunctionalK, x: f64, j_tail: usize) -> Result<EtaResult> {
    let kinf = Arc::new(KInf::new(spec, k)?);
    EtaEvaluator::new(spec, kinf, j_tail)?.eval(x, false)
}

/// Largest argument at which `K_∞` is tabulated rather than extrapolated.
pub fn tabulated_range() -> f64 {
    TABLE_X_MAX
}
