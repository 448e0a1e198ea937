//! Region classification, scaling factors `A_N` and limit constants.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::kernel::FunctionalK;
use crate::linproc::sim::map_replicates;
use crate::linproc::surrogate::TruncatedSums;
use crate::linproc::{KInf, ProcessSpec};
use crate::quad;
use crate::regvar::{
    c_lh, conjugate_slowvary, l_growth_exponent, log_series_diverges, t2_limits, Hbar, LogClass, PartialSumL,
    SlowVary, TailH,
};
use crate::rng;
use crate::stable::StableLaw;

/// Relative threshold on `|K_∞'(0)| / ∫|K|` below which the derivative counts as zero.
pub const DERIV_ZERO_TOL: f64 = 1e-6;

/// Which limit theorem governs the partial sums.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// α ∈ (1, 2), β = 1: stable limit.
    RegionI,
    /// αβ = 2, β > 1, long memory: Brownian limit with `γ` from `C^±_K`.
    CurveLong,
    /// α = 2, β = 1 with `K_∞'(0) = 0`.
    PointLongDeriv0,
    /// α = 2, β = 1 with `K_∞'(0) ≠ 0`.
    PointLong,
    /// αβ = 2, short memory: Brownian limit with variance `θ²`.
    CurveShort,
    OutOfScope { reason: String },
}

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::RegionI => "region_i",
            Region::CurveLong => "curve_long",
            Region::PointLongDeriv0 => "point_long_deriv0",
            Region::PointLong => "point_long",
            Region::CurveShort => "curve_short",
            Region::OutOfScope { .. } => "out_of_scope",
        }
    }

    pub fn is_long_memory(&self) -> bool {
        matches!(self, Region::RegionI | Region::CurveLong | Region::PointLongDeriv0 | Region::PointLong)
    }
}

/// How `A_N` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingRule {
    /// `inf{x > 0 : x - N_{α,H_α}(L(N) - L(x)) ≥ 0}`.
    ImplicitRoot,
    /// `N^{1/2} H̄₂(N)^{1/2}`.
    SqrtNHbar2,
    /// `N^{1/2} H₂(N)^{1/2} L(N)`.
    SqrtNH2L,
    /// `N^{1/2}`.
    SqrtN,
}

impl ScalingRule {
    pub fn formula(&self) -> &'static str {
        match self {
            ScalingRule::ImplicitRoot => "inf{x > 0 : x - N^(1/a) H_a(N)^(1/a) (L(N) - L(x)) >= 0}",
            ScalingRule::SqrtNHbar2 => "N^(1/2) Hbar_2(N)^(1/2)",
            ScalingRule::SqrtNH2L => "N^(1/2) H_2(N)^(1/2) L(N)",
            ScalingRule::SqrtN => "N^(1/2)",
        }
    }
}

/// The limit process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Limit {
    /// `multiplier · Z^α` with `E e^{iuZ_t} = exp(-tσ|u|^α(1 - iD sgn u))`.
    Stable { alpha: f64, sigma: f64, d: f64, multiplier: f64 },
    /// `γ W`.
    BrownianMotion { gamma: f64 },
}

/// Region, scaling rule, limit law and the named constants behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSpec {
    pub region: Region,
    pub scaling: Option<ScalingRule>,
    pub formula: Option<String>,
    pub limit: Option<Limit>,
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl LimitSpec {
    fn bare(region: Region) -> Self {
        let scaling = scaling_rule(&region);
        LimitSpec {
            region,
            scaling,
            formula: scaling.map(|s| s.formula().to_string()),
            limit: None,
            constants: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }

    /// Law of the limit at time `t`.
    pub fn target_law(&self, t: f64) -> Result<StableLaw> {
        match self.limit {
            Some(Limit::Stable { alpha, sigma, d, multiplier }) => {
                StableLaw::new(alpha, sigma, d, t)?.scaled(multiplier)
            }
            Some(Limit::BrownianMotion { gamma }) => {
                if gamma <= 0.0 {
                    return Err(LabError::Model("degenerate Brownian limit (γ = 0)".into()));
                }
                StableLaw::gaussian(gamma * gamma * t)
            }
            None => Err(LabError::Model("no limit law for this region".into())),
        }
    }
}

/// `A_N` rule for a region.
pub fn scaling_rule(region: &Region) -> Option<ScalingRule> {
    match region {
        Region::RegionI => Some(ScalingRule::ImplicitRoot),
        Region::CurveLong | Region::PointLongDeriv0 => Some(ScalingRule::SqrtNHbar2),
        Region::PointLong => Some(ScalingRule::SqrtNH2L),
        Region::CurveShort => Some(ScalingRule::SqrtN),
        Region::OutOfScope { .. } => None,
    }
}

fn scale_class(c: LogClass, s: f64) -> LogClass {
    LogClass { log: c.log * s, loglog: c.loglog * s }
}

fn add_class(a: LogClass, b: LogClass) -> LogClass {
    LogClass { log: a.log + b.log, loglog: a.loglog + b.loglog }
}

/// Class of the memory-criterion summand `j · a_j^{α/2} H^{1/2}(a_j^{-1})`.
pub fn memory_summand_class(alpha: f64, ell: &SlowVary, h: &SlowVary) -> Result<LogClass> {
    let hc = TailH::new(h, alpha)?.log_class();
    Ok(add_class(scale_class(ell.log_class(), alpha / 2.0), scale_class(hc, 0.5)))
}

/// True when `Σ_j a_j^{α/2} H^{1/2}(a_j^{-1})` diverges on the curve αβ = 2.
pub fn is_long_memory(alpha: f64, ell: &SlowVary, h: &SlowVary) -> Result<bool> {
    Ok(log_series_diverges(memory_summand_class(alpha, ell, h)?))
}

/// Class of `x · d H̄/dx = ℓ^α(x) h(x^β/ℓ(x))` (up to constants).
fn hbar_density_class(alpha: f64, ell: &SlowVary, h: &SlowVary) -> LogClass {
    add_class(scale_class(ell.log_class(), alpha), h.log_class())
}

fn on_curve(alpha: f64, beta: f64) -> bool {
    (alpha * beta - 2.0).abs() < 1e-12
}

/// Assigns the limit theorem for `(spec, K)`.
pub fn classify(spec: &ProcessSpec, k: &FunctionalK) -> Result<Region> {
    if spec.is_explicit() {
        return Err(LabError::domain("classification needs coefficients of the form j^-β ℓ(j)"));
    }
    let alpha = spec.alpha();
    let beta = spec.beta();
    let ab = alpha * beta;
    if ab <= 1.0 {
        return Err(LabError::Nonexistence(format!("αβ = {ab} must exceed 1")));
    }
    if alpha > 1.0 && alpha < 2.0 && beta == 1.0 {
        return Ok(Region::RegionI);
    }
    if !on_curve(alpha, beta) {
        let reason = if ab < 2.0 {
            "1 < αβ < 2: long-memory stable limits covered by prior work (KS01, Hon09, sur02, LXX)"
        } else {
            "αβ > 2: short memory, Brownian limit with √N scaling covered by prior work (Hsing, PT03)"
        };
        return Ok(Region::OutOfScope { reason: reason.into() });
    }
    let h = spec.model().spec().h.clone();
    if !is_long_memory(alpha, spec.ell(), &h)? {
        return Ok(Region::CurveShort);
    }
    if alpha == 2.0 && beta == 1.0 {
        let kinf = KInf::new(spec, k)?;
        if kinf.prime_zero().abs() <= DERIV_ZERO_TOL * k.l1_norm() {
            return hbar_or_out(alpha, spec.ell(), &h, Region::PointLongDeriv0);
        }
        if l_growth_exponent(spec.ell()).is_none() {
            return Ok(Region::OutOfScope {
                reason: "α = 2, β = 1 but L(e^{λx})/L(e^x) has no limit below 1 (condition T2 fails)".into(),
            });
        }
        return Ok(Region::PointLong);
    }
    hbar_or_out(alpha, spec.ell(), &h, Region::CurveLong)
}

fn hbar_or_out(alpha: f64, ell: &SlowVary, h: &SlowVary, region: Region) -> Result<Region> {
    if log_series_diverges(hbar_density_class(alpha, ell, h)) {
        Ok(region)
    } else {
        Ok(Region::OutOfScope { reason: "long memory but H̄ stays bounded, so the Brownian limit theorem does not apply".into() })
    }
}

/// `N_{α,H_α} = N^{1/α} H_α^{1/α}(N)`.
pub fn conjugate_scale(alpha: f64, h: &SlowVary, n: f64) -> Result<f64> {
    let th = TailH::new(h, alpha)?;
    let g = |t: f64| th.eval(t);
    let ha = conjugate_slowvary(&g, alpha, n, 1e-13)?;
    Ok(n.powf(1.0 / alpha) * ha.powf(1.0 / alpha))
}

/// Region I root with the bracket `N_α(L(N) - L(A)) ≤ A < N_α(L(N) - L(A-1)) + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionIRoot {
    pub a_n: f64,
    pub n_alpha: f64,
    pub l_n: f64,
    pub l_a: f64,
    pub l_a_minus_1: f64,
}

impl RegionIRoot {
    pub fn bracket_holds(&self) -> bool {
        self.n_alpha * (self.l_n - self.l_a) <= self.a_n && self.a_n < self.n_alpha * (self.l_n - self.l_a_minus_1) + 1.0
    }
}

/// Solves the Region I scaling equation by bisection on the interpolated `L`.
pub fn region_one_root(n_alpha: f64, l: &PartialSumL, n: f64) -> Result<RegionIRoot> {
    let l_n = l.eval(n);
    let f = |x: f64| x - n_alpha * (l_n - l.eval(x));
    let mut lo = 1.0;
    let mut hi = n_alpha * l_n + 1.0;
    if f(lo) >= 0.0 {
        hi = lo;
    } else if f(hi) < 0.0 {
        return Err(LabError::numeric("Region I bracket [1, N_α L(N) + 1] does not contain the root"));
    } else {
        for _ in 0..200 {
            if hi - lo <= 1e-9 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if f(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    Ok(RegionIRoot { a_n: hi, n_alpha, l_n, l_a: l.eval(hi), l_a_minus_1: l.eval(hi - 1.0) })
}

/// `A_N` for a classified region.
pub fn scaling_factor(region: &Region, spec: &ProcessSpec, n: f64) -> Result<f64> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(LabError::domain(format!("N must be ≥ 1, got {n}")));
    }
    let alpha = spec.alpha();
    let h = &spec.model().spec().h;
    match scaling_rule(region) {
        None => Err(LabError::Model("no scaling factor outside the covered regions".into())),
        Some(ScalingRule::SqrtN) => Ok(n.sqrt()),
        Some(ScalingRule::ImplicitRoot) => {
            let n_alpha = conjugate_scale(alpha, h, n)?;
            Ok(region_one_root(n_alpha, &PartialSumL::new(spec.ell()), n)?.a_n)
        }
        Some(ScalingRule::SqrtNHbar2) => {
            let hb = Hbar::new(spec.beta(), alpha, spec.ell(), h)?;
            let g = |x: f64| hb.eval(x);
            let h2 = conjugate_slowvary(&g, 2.0, n, 1e-13)?;
            if h2 <= 0.0 {
                return Err(LabError::numeric("H̄₂(N) is not positive; N is too small"));
            }
            Ok((n * h2).sqrt())
        }
        Some(ScalingRule::SqrtNH2L) => {
            let n2 = conjugate_scale(2.0, h, n)?;
            Ok(n2 * PartialSumL::new(spec.ell()).eval(n))
        }
    }
}

/// Monte Carlo settings for `θ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaConfig {
    pub lags: Vec<usize>,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        ThetaConfig { lags: (4..=12).map(|k| 1usize << k).collect(), n: 1 << 14, replicates: 1000, seed: 0 }
    }
}

/// `θ_l² = Var(S_{N,l})/N` along the lag grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    /// Monte Carlo standard error of each value.
    pub mc_se: Vec<f64>,
    /// `|θ²_{l_{i+1}} - θ²_{l_i}|`.
    pub gaps: Vec<f64>,
    /// Standard error of each paired difference.
    pub gap_se: Vec<f64>,
    pub estimate: f64,
    pub uncertainty: f64,
}

impl ThetaEstimate {
    /// The last three gaps shrink, or sit within two standard errors of zero.
    pub fn is_cauchy(&self) -> bool {
        let g = &self.gaps;
        if g.len() < 3 {
            return false;
        }
        let n = g.len();
        let settled = |i: usize| g[i] <= 2.0 * self.gap_se[i];
        (n - 3..n - 1).all(|i| g[i + 1] < g[i] || settled(i + 1))
    }
}

/// Estimates `θ_l²` on coupled innovations (the same record for every lag).
pub fn estimate_theta2(spec: &ProcessSpec, k: &FunctionalK, cfg: &ThetaConfig) -> Result<ThetaEstimate> {
    if cfg.lags.len() < 2 || cfg.lags.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::config("θ² lags must be strictly increasing with at least two entries"));
    }
    if cfg.replicates < 2 || cfg.n == 0 {
        return Err(LabError::config("θ² needs N ≥ 1 and at least two replicates"));
    }
    let lmax = *cfg.lags.last().unwrap();
    let trunc = TruncatedSums::new(spec, k, &cfg.lags)?;
    let model = spec.model();
    let rows = map_replicates(cfg.replicates, |r| {
        let mut stream = rng::stream(cfg.seed, rng::domain::THETA, r as u64);
        let mut record = vec![0.0; cfg.n + lmax];
        model.sample_into(&mut stream, &mut record);
        trunc.eval(&record, cfg.n, lmax)
    })?;
    let m = cfg.replicates as f64;
    let nf = cfg.n as f64;
    let nl = cfg.lags.len();
    let means: Vec<f64> = (0..nl).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / m).collect();
    let sq = |r: &Vec<f64>, i: usize| (r[i] - means[i]).powi(2);
    let mut values = Vec::with_capacity(nl);
    let mut mc_se = Vec::with_capacity(nl);
    for i in 0..nl {
        let v = rows.iter().map(|r| sq(r, i)).sum::<f64>() / (m - 1.0);
        let s2 = rows.iter().map(|r| (sq(r, i) - v).powi(2)).sum::<f64>() / (m - 1.0);
        values.push(v / nf);
        mc_se.push((s2 / m).sqrt() / nf);
    }
    let mut gaps = Vec::with_capacity(nl - 1);
    let mut gap_se = Vec::with_capacity(nl - 1);
    for i in 0..nl - 1 {
        gaps.push((values[i + 1] - values[i]).abs());
        let d: Vec<f64> = rows.iter().map(|r| sq(r, i + 1) - sq(r, i)).collect();
        let dm = d.iter().sum::<f64>() / m;
        let dv = d.iter().map(|x| (x - dm).powi(2)).sum::<f64>() / (m - 1.0);
        gap_se.push((dv / m).sqrt() / nf);
    }
    Ok(ThetaEstimate {
        lags: cfg.lags.clone(),
        estimate: values[nl - 1],
        uncertainty: gaps[nl - 2],
        values,
        mc_se,
        gaps,
        gap_se,
    })
}

/// `C^±_K = ∫_0^∞ (K_∞(±t^{-β}) - K_∞(0)) dt`.
pub fn c_k(kinf: &KInf, beta: f64, sign: f64) -> Result<f64> {
    if beta < 1.0 {
        return Err(LabError::domain("C_K needs β ≥ 1"));
    }
    let k0 = kinf.expect();
    let rule = quad::gl16();
    // t ∈ (0, 1]: s = t^{-β} ∈ [1, ∞), dt = s^{-1/β-1} ds / β.
    let s_max: f64 = 1e12;
    let inner = rule.integrate_panels(&quad::uniform_breaks(0.0, s_max.ln(), 0.25), |v| {
        (kinf.eval(sign * v.exp()) - k0) * (-v / beta).exp() / beta
    });
    let inner_tail = -k0 * s_max.powf(-1.0 / beta);
    // t ∈ [1, T] with T^{-β} = 0.05, then the Taylor series of K_∞ at 0.
    let x_t: f64 = 0.05;
    let w_max = -x_t.ln() / beta;
    let outer = rule.integrate_panels(&quad::uniform_breaks(0.0, w_max, 0.125), |w| {
        (kinf.eval(sign * (-beta * w).exp()) - k0) * w.exp()
    });
    let t_end = w_max.exp();
    let d = kinf.derivatives_at_zero();
    let mut tail = 0.0;
    let mut fact = 1.0;
    for (kk, dk) in d.iter().enumerate().skip(1) {
        fact *= kk as f64;
        let p = kk as f64 * beta;
        let coef = dk * sign.powi(kk as i32) / fact;
        if p <= 1.0 {
            if coef.abs() > DERIV_ZERO_TOL * kinf.kernel().l1_norm() {
                return Err(LabError::Nonexistence("C_K diverges: K_∞'(0) ≠ 0 with β = 1".into()));
            }
            continue;
        }
        tail += coef * t_end.powf(1.0 - p) / (p - 1.0);
    }
    Ok(inner + inner_tail + outer + tail)
}

/// `(γ₁, γ₂)` from `C^±_K`.
pub fn gammas(c_plus: f64, c_minus: f64, sigma1: f64, sigma2: f64) -> (f64, f64) {
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    let g1 = sigma2 * c_plus * c_plus * ind(c_plus < 0.0) + sigma1 * c_minus * c_minus * ind(c_minus < 0.0);
    let g2 = sigma2 * c_plus * c_plus * ind(c_plus > 0.0) + sigma1 * c_minus * c_minus * ind(c_minus > 0.0);
    (g1, g2)
}

/// `c_{L,h}` from the growth exponents of `L` and `h`, after checking T2 numerically.
pub fn c_lh_for(ell: &SlowVary, h: &SlowVary) -> Result<(f64, f64, f64)> {
    let p = l_growth_exponent(ell)
        .ok_or_else(|| LabError::Regularity("L grows too slowly for T2".into()))?;
    let q = h.log_class().log;
    let l = PartialSumL::new(ell);
    let hh = h.clone();
    for lambda in [0.25, 0.5, 0.75] {
        let lim = t2_limits(&|x| l.eval(x), &|x| hh.value(x), lambda)?;
        if (lim.g_l - lambda.powf(p)).abs() > 0.05 || (lim.g_h - lambda.powf(q)).abs() > 0.05 {
            return Err(LabError::Regularity(format!(
                "T2 limits at λ = {lambda} ({}, {}) disagree with λ^{p}, λ^{q}",
                lim.g_l, lim.g_h
            )));
        }
    }
    let c = c_lh(&|y| y.powf(p), &|y| if y == 0.0 && q > 0.0 { 0.0 } else { y.powf(q) })?;
    Ok((c, p, q))
}

/// The Brownian limit `θ W` from a `θ²` estimate, whether or not it passed the Cauchy check.
pub fn curve_short_limit(th: &ThetaEstimate) -> LimitSpec {
    let mut out = LimitSpec::bare(Region::CurveShort);
    out.constants.insert("theta2".into(), th.estimate);
    out.constants.insert("theta2_gap".into(), th.uncertainty);
    out.constants.insert("theta2_mc_se".into(), *th.mc_se.last().unwrap_or(&f64::NAN));
    out.limit = Some(Limit::BrownianMotion { gamma: th.estimate.max(0.0).sqrt() });
    out
}

/// Options for [`limit_constants`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantsOptions {
    pub theta: ThetaConfig,
}

/// Fills in the limit law and constants of a classified region.
///
/// `spec` should be the untruncated process; `θ²` is estimated on its truncations.
pub fn limit_constants(region: &Region, spec: &ProcessSpec, k: &FunctionalK, opts: &ConstantsOptions) -> Result<LimitSpec> {
    let mut out = LimitSpec::bare(region.clone());
    let inn = spec.model().spec().clone();
    let (s1, s2) = (inn.sigma1, inn.sigma2);
    match region {
        Region::OutOfScope { .. } => {}
        Region::RegionI => {
            let kinf = KInf::new(spec, k)?;
            let m = spec.model();
            let sigma = m.stable_sigma();
            let d = m.stable_d();
            let kp = kinf.prime_zero();
            out.constants.insert("sigma".into(), sigma);
            out.constants.insert("D".into(), d);
            out.constants.insert("K_inf_prime_0".into(), kp);
            out.limit = Some(Limit::Stable { alpha: spec.alpha(), sigma, d, multiplier: kp });
        }
        Region::CurveLong | Region::PointLongDeriv0 => {
            let kinf = KInf::new(spec, k)?;
            let cp = c_k(&kinf, spec.beta(), 1.0)?;
            let cm = c_k(&kinf, spec.beta(), -1.0)?;
            let (g1, g2) = gammas(cp, cm, s1, s2);
            let gamma = (2.0 * (g1 + g2)).sqrt();
            out.constants.insert("C_plus".into(), cp);
            out.constants.insert("C_minus".into(), cm);
            out.constants.insert("gamma_1".into(), g1);
            out.constants.insert("gamma_2".into(), g2);
            out.constants.insert("gamma".into(), gamma);
            out.constants.insert("K_inf_prime_0".into(), kinf.prime_zero());
            out.limit = Some(Limit::BrownianMotion { gamma });
        }
        Region::PointLong => {
            let kinf = KInf::new(spec, k)?;
            let (c, p, q) = c_lh_for(spec.ell(), &inn.h)?;
            let kp = kinf.prime_zero();
            let gamma = (c * (s1 + s2)).sqrt() * kp.abs();
            out.constants.insert("c_Lh".into(), c);
            out.constants.insert("g_L_exponent".into(), p);
            out.constants.insert("g_h_exponent".into(), q);
            out.constants.insert("K_inf_prime_0".into(), kp);
            out.constants.insert("gamma".into(), gamma);
            out.limit = Some(Limit::BrownianMotion { gamma });
        }
        Region::CurveShort => {
            let th = estimate_theta2(spec, k, &opts.theta)?;
            if !th.is_cauchy() {
                return Err(LabError::Estimation(format!(
                    "θ_l² gaps do not shrink over the last three dyads: {:?}",
                    th.gaps
                )));
            }
            return Ok(curve_short_limit(&th));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovations::{Centering, InnovationModel, InnovationSpec};

    fn model(alpha: f64, c: Centering) -> InnovationModel {
        InnovationModel::new(InnovationSpec {
            alpha,
            sigma1: 0.5,
            sigma2: 0.5,
            h: SlowVary::constant(1.0).unwrap(),
            x0: 1.0,
            centering: c,
        })
        .unwrap()
    }

    fn inf(alpha: f64, beta: f64, ell: SlowVary, c: Centering) -> ProcessSpec {
        ProcessSpec::infinite(beta, ell, model(alpha, c)).unwrap()
    }

    fn one() -> SlowVary {
        SlowVary::constant(1.0).unwrap()
    }

    #[test]
    fn classification_examples() {
        let gb = FunctionalK::gauss_bump();
        let ob = FunctionalK::odd_bump();
        assert_eq!(classify(&inf(1.5, 1.0, one(), Centering::MeanZero), &ob).unwrap(), Region::RegionI);
        assert_eq!(classify(&inf(1.0, 2.0, one(), Centering::Symmetric), &gb).unwrap(), Region::CurveLong);
        let nl3 = SlowVary::neg_log_power(3.0).unwrap();
        assert_eq!(classify(&inf(1.0, 2.0, nl3, Centering::Symmetric), &gb).unwrap(), Region::CurveShort);
        assert_eq!(classify(&inf(2.0, 1.0, one(), Centering::Symmetric), &ob).unwrap(), Region::PointLong);
        assert_eq!(classify(&inf(2.0, 1.0, one(), Centering::Symmetric), &gb).unwrap(), Region::PointLongDeriv0);
        assert!(matches!(classify(&inf(1.5, 0.9, one(), Centering::MeanZero), &gb).unwrap(), Region::OutOfScope { .. }));
        assert!(matches!(classify(&inf(1.5, 2.0, one(), Centering::MeanZero), &gb).unwrap(), Region::OutOfScope { .. }));
    }

    #[test]
    fn region_one_example_matches_scalar_equation() {
        let spec = inf(1.5, 1.0, one(), Centering::MeanZero);
        let a = scaling_factor(&Region::RegionI, &spec, 1e6).unwrap();
        // Oracle: x = 10^4 (ln 10^6 - ln x), solved by Newton.
        let mut x: f64 = 3e4;
        for _ in 0..50 {
            let f = x - 1e4 * (1e6f64.ln() - x.ln());
            x -= f / (1.0 + 1e4 / x);
        }
        assert!((a / x - 1.0).abs() < 2e-3, "{a} vs {x}");
        assert!((a / 3.39e4 - 1.0).abs() < 0.01);
        let n_alpha = conjugate_scale(1.5, &one(), 1e6).unwrap();
        assert!((n_alpha - 1e4).abs() < 1e-6);
        let root = region_one_root(n_alpha, &PartialSumL::new(&one()), 1e6).unwrap();
        assert!(root.bracket_holds());
        let resid = (root.a_n - n_alpha * (root.l_n - root.l_a)).abs();
        assert!(resid <= 1e-9 * root.a_n * 10.0, "{resid}");
    }

    #[test]
    fn short_memory_scaling_is_sqrt_n() {
        let spec = inf(1.0, 2.0, SlowVary::neg_log_power(3.0).unwrap(), Centering::Symmetric);
        assert_eq!(scaling_factor(&Region::CurveShort, &spec, 1e6).unwrap(), 1000.0);
        assert!(scaling_factor(&Region::OutOfScope { reason: String::new() }, &spec, 10.0).is_err());
    }

    #[test]
    fn scaling_factors_grow_with_n() {
        let cases = [
            (Region::RegionI, inf(1.5, 1.0, one(), Centering::MeanZero)),
            (Region::RegionI, inf(1.5, 1.0, SlowVary::log_power(1.0).unwrap(), Centering::MeanZero)),
            (Region::CurveLong, inf(1.0, 2.0, one(), Centering::Symmetric)),
            (Region::PointLong, inf(2.0, 1.0, one(), Centering::Symmetric)),
            (Region::PointLongDeriv0, inf(2.0, 1.0, one(), Centering::Symmetric)),
        ];
        for (region, spec) in cases {
            let mut prev = 0.0;
            let mut prev_ratio = 0.0;
            for k in 10..=20 {
                let n = (1u64 << k) as f64;
                let a = scaling_factor(&region, &spec, n).unwrap();
                assert!(a > prev, "{region:?} N=2^{k}");
                // √N = o(A_N) in long memory.
                let ratio = a / n.sqrt();
                assert!(ratio > prev_ratio, "{region:?} N=2^{k}: {ratio}");
                prev = a;
                prev_ratio = ratio;
            }
        }
    }

    #[test]
    fn curve_long_sqrt_n_hbar2_for_unit_functions() {
        // ℓ = h = 1, α = 1, β = 2: H̄(x) = ln(x/2), so H̄₂ solves y = ln(√(N y)/2).
        let spec = inf(1.0, 2.0, one(), Centering::Symmetric);
        let n: f64 = 1e8;
        let mut y: f64 = 1.0;
        for _ in 0..200 {
            y = ((n * y).sqrt() / 2.0).ln();
        }
        let a = scaling_factor(&Region::CurveLong, &spec, n).unwrap();
        assert!((a / (n * y).sqrt() - 1.0).abs() < 1e-6, "{a}");
    }

    #[test]
    fn point_long_constant_is_seven_twelfths() {
        let (c, p, q) = c_lh_for(&one(), &one()).unwrap();
        assert_eq!((p, q), (1.0, 0.0));
        assert!((c - 7.0 / 12.0).abs() < 1e-9, "{c}");
    }

    #[test]
    fn c_k_matches_direct_quadrature() {
        let spec = inf(1.0, 2.0, one(), Centering::Symmetric);
        let k = FunctionalK::gauss_bump();
        let kinf = KInf::new(&spec, &k).unwrap();
        let cp = c_k(&kinf, 2.0, 1.0).unwrap();
        let cm = c_k(&kinf, 2.0, -1.0).unwrap();
        assert!((cp - cm).abs() < 1e-8);
        // Oracle: adaptive quadrature of the raw integrand with a fresh Fourier grid
        // valid to x = 2500; below t = 0.02 only -K_∞(0) survives, and beyond t = 200
        // the Taylor term K''(0)/2 t^-4 does.
        let k0 = kinf.expect();
        let grid = crate::linproc::FourierGrid::new(&crate::linproc::ProcessCharFn::new(&spec), &k, 2500.0).unwrap();
        let f = |t: f64| grid.value(t.powf(-2.0)) - k0;
        let head = quad::adaptive(0.02, 1.0, 1e-9, 4000, f).unwrap();
        let body = quad::adaptive(1.0, 200.0, 1e-10, 4000, f).unwrap();
        let d2 = kinf.derivatives_at_zero()[2];
        let oracle = -k0 * 0.02 + head.value + body.value + d2 / 2.0 * 200f64.powi(-3) / 3.0;
        assert!((cp - oracle).abs() < 1e-5, "{cp} vs {oracle}");
        let (g1, g2) = gammas(cp, cm, 0.5, 0.5);
        let gamma = (2.0 * (g1 + g2)).sqrt();
        assert!((gamma - 2f64.sqrt() * cp.abs() * 1f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn constants_scale_with_kernel() {
        let spec = inf(1.0, 2.0, one(), Centering::Symmetric);
        let k = FunctionalK::gauss_bump();
        let opts = ConstantsOptions::default();
        let a = limit_constants(&Region::CurveLong, &spec, &k, &opts).unwrap();
        let b = limit_constants(&Region::CurveLong, &spec, &k.scaled(-3.0).unwrap(), &opts).unwrap();
        let (ga, gb) = (a.constant("gamma").unwrap(), b.constant("gamma").unwrap());
        assert!((gb / ga - 3.0).abs() < 1e-6);
        let spec = inf(2.0, 1.0, one(), Centering::Symmetric);
        let k = FunctionalK::odd_bump();
        let a = limit_constants(&Region::PointLong, &spec, &k, &opts).unwrap();
        let b = limit_constants(&Region::PointLong, &spec, &k.scaled(2.0).unwrap(), &opts).unwrap();
        assert!((b.constant("gamma").unwrap() / a.constant("gamma").unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn symmetric_tails_give_zero_skew() {
        let spec = inf(1.5, 1.0, one(), Centering::MeanZero);
        let l = limit_constants(&Region::RegionI, &spec, &FunctionalK::odd_bump(), &ConstantsOptions::default()).unwrap();
        assert_eq!(l.constant("D"), Some(0.0));
        let law = l.target_law(1.0).unwrap();
        assert!(law.sigma > 0.0);
        assert!(matches!(l.limit, Some(Limit::Stable { .. })));
    }

    #[test]
    fn theta_is_cauchy_on_short_memory_example() {
        let spec = inf(1.0, 2.0, SlowVary::neg_log_power(3.0).unwrap(), Centering::Symmetric);
        let k = FunctionalK::gauss_bump();
        let cfg = ThetaConfig { lags: vec![4, 8, 16, 32, 64, 128], n: 2048, replicates: 200, seed: 3 };
        let th = estimate_theta2(&spec, &k, &cfg).unwrap();
        assert!(th.values.iter().all(|&v| v > 0.0));
        assert!(th.gaps.len() == 5);
        let th2 = estimate_theta2(&spec, &k.scaled(2.0).unwrap(), &cfg).unwrap();
        assert!((th2.estimate / th.estimate - 4.0).abs() < 1e-9);
    }
}
