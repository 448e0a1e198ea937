//! Running one experiment: classification, constants, Monte Carlo and verdicts.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{hex, ExperimentConfig, SCHEMA_VERSION};
use crate::error::{LabError, Result};
use crate::linproc::cache::{read_cache, write_cache};
use crate::linproc::sim::map_replicates;
use crate::linproc::surrogate::TruncatedSums;
use crate::linproc::{
    expect_k, partial_sums, simulate_paths, simulate_replicate, Convolver, KInf, PathBatch, ProcessSpec,
    SurrogateEngine, TruncationInfo,
};
use crate::regvar::PartialSumL;
use crate::rng;
use crate::scaling::{
    classify, conjugate_scale, curve_short_limit, estimate_theta2, limit_constants, region_one_root, scaling_factor,
    ConstantsOptions, Limit, LimitSpec, Region, ThetaEstimate,
};
use crate::stable::{ks_distance, normal_cdf, CdfTable, StableLaw};

/// Outcome of a report or summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    OutOfScope,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::OutOfScope => "OUT_OF_SCOPE",
        }
    }
}

/// A named check with the property it tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub invariant: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, invariant: &str, passed: bool, detail: String) -> Self {
        Verdict { name: name.into(), invariant: invariant.into(), passed, detail }
    }
}

/// Results at one `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub n: usize,
    pub horizon: usize,
    pub a_n: f64,
    pub center: f64,
    /// KS distance of `S_N / A_N` to the limit at `t = 1`.
    pub ks_t1: f64,
    /// KS distance of `S_{[Nt]} / A_N` to the limit at the first grid time.
    pub ks_t05: f64,
    /// KS distance of the rescaled increment over `(t, 1]`.
    pub ks_increment: f64,
    pub corr_incr: f64,
    /// Sample variance of `S_N / A_N` over the limit variance (Brownian limits).
    pub var_ratio: Option<f64>,
    /// Mean of `(S_N - T_N)² / A_N²`, or `(S_N - S_{N,l})² / N` under short memory.
    pub surrogate_gap: Option<f64>,
    pub bracket_holds: Option<bool>,
    pub truncation: TruncationInfo,
}

/// The fully specified target law at `t = 1` in sampler terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetInfo {
    pub alpha: f64,
    pub sigma: f64,
    pub d: f64,
    /// `D / tan(πα/2)`.
    pub skew: f64,
    /// `(tσ)^{1/α}`.
    pub scale: f64,
    pub variance: Option<f64>,
}

impl From<&StableLaw> for TargetInfo {
    fn from(l: &StableLaw) -> Self {
        let v = l.variance();
        TargetInfo { alpha: l.alpha, sigma: l.sigma, d: l.d, skew: l.skew(), scale: l.scale(), variance: v.is_finite().then_some(v) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config_id: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub region: Region,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    pub limit: Option<LimitSpec>,
    pub target: Option<TargetInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaEstimate>,
    pub rows: Vec<GridRow>,
    pub verdicts: Vec<Verdict>,
    pub overall: Status,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        match v.get("schema_version").and_then(|s| s.as_u64()) {
            Some(s) if s == SCHEMA_VERSION as u64 => Ok(serde_json::from_value(v)?),
            other => Err(LabError::Format(format!("report schema_version {other:?} is not {SCHEMA_VERSION}"))),
        }
    }

    /// SHA-256 of the JSON report.
    pub fn hash_hex(&self) -> Result<String> {
        use sha2::{Digest, Sha256};
        Ok(hex(&Sha256::digest(self.to_json()?.as_bytes())))
    }

    pub fn failing(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.passed).collect()
    }
}

/// Wall-clock seconds, kept out of the report so that it stays reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub config_id: String,
    pub constants_secs: f64,
    pub per_n_secs: Vec<(usize, f64)>,
    pub total_secs: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub timing: Timing,
}

/// Cache file for one grid point.
pub fn cache_file(dir: &Path, cfg: &ExperimentConfig, n: usize) -> PathBuf {
    dir.join(format!("{}_N{}.bin", cfg.id, n))
}

/// Seed of the replicate streams at grid point `n`.
pub fn grid_seed(cfg: &ExperimentConfig, n: usize) -> u64 {
    rng::derive_seed(cfg.seed, n as u64)
}

/// Simulates every grid point and writes the path caches.
pub fn simulate_to_cache(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for &n in &cfg.n_grid {
        let spec = cfg.process.build(n)?;
        let batch = simulate_paths(&spec, n, cfg.replicates, grid_seed(cfg, n), true)?;
        let file = cache_file(dir, cfg, n);
        write_cache(&file, &cfg.path_hash(n), &batch)?;
        out.push(file);
    }
    Ok(out)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_experiment_with_cache(cfg, None)
}

/// Runs the experiment, reading paths from `cache_dir` where a matching cache exists.
pub fn run_experiment_with_cache(cfg: &ExperimentConfig, cache_dir: Option<&Path>) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let k = cfg.kernel;
    let spec_inf = cfg.process.build_infinite()?;
    let region = classify(&spec_inf, &k)?;
    let mut report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config_id: cfg.id.clone(),
        config_hash: cfg.hash_hex(),
        config: cfg.clone(),
        region: region.clone(),
        explanation: None,
        limit: None,
        target: None,
        theta: None,
        rows: Vec::new(),
        verdicts: Vec::new(),
        overall: Status::Pass,
    };
    let mut timing = Timing { config_id: cfg.id.clone(), constants_secs: 0.0, per_n_secs: Vec::new(), total_secs: 0.0 };
    if let Region::OutOfScope { reason } = &region {
        report.explanation = Some(format!("no limit theorem implemented for this configuration: {reason}"));
        report.overall = Status::OutOfScope;
        timing.total_secs = start.elapsed().as_secs_f64();
        return Ok(RunOutput { report, timing });
    }

    let mut verdicts = Vec::new();
    let limit = if region == Region::CurveShort {
        let th = estimate_theta2(&spec_inf, &k, &cfg.theta_config())?;
        verdicts.push(Verdict::new(
            "theta_cauchy",
            "θ_l² is a Cauchy sequence in l: the last dyadic gaps shrink (or vanish within Monte Carlo error)",
            th.is_cauchy(),
            format!("gaps {:?}", th.gaps),
        ));
        let l = curve_short_limit(&th);
        report.theta = Some(th);
        l
    } else {
        limit_constants(&region, &spec_inf, &k, &ConstantsOptions { theta: cfg.theta_config() })?
    };
    timing.constants_secs = start.elapsed().as_secs_f64();
    let t1 = cfg.t_grid[0];
    let targets = Targets::new(&limit, t1)?;
    report.target = Some(TargetInfo::from(&targets.laws[0]));

    let cache_ok = |n: usize| -> Result<Option<PathBatch>> {
        match cache_dir {
            Some(d) if cache_file(d, cfg, n).exists() => read_cache(&cache_file(d, cfg, n), &cfg.path_hash(n)),
            _ => Ok(None),
        }
    };
    for &n in &cfg.n_grid {
        let t0 = Instant::now();
        let cached = cache_ok(n)?;
        let row = grid_point(cfg, &region, &limit, &spec_inf, &targets, n, cached.as_ref())?;
        timing.per_n_secs.push((n, t0.elapsed().as_secs_f64()));
        report.rows.push(row);
    }
    verdicts.extend(grid_verdicts(cfg, &region, &report.rows));
    report.overall = if verdicts.iter().all(|v| v.passed) { Status::Pass } else { Status::Fail };
    report.verdicts = verdicts;
    report.limit = Some(limit);
    timing.total_secs = start.elapsed().as_secs_f64();
    Ok(RunOutput { report, timing })
}

/// Target CDFs at `t = 1`, `t = t₁` and for the increment over `(t₁, 1]`.
struct Targets {
    laws: [StableLaw; 3],
    tables: Option<[CdfTable; 3]>,
}

impl Targets {
    fn new(limit: &LimitSpec, t1: f64) -> Result<Self> {
        let laws = [limit.target_law(1.0)?, limit.target_law(t1)?, limit.target_law(1.0 - t1)?];
        let tables = match limit.limit {
            Some(Limit::Stable { .. }) => {
                Some([laws[0].cdf_table()?, laws[1].cdf_table()?, laws[2].cdf_table()?])
            }
            _ => None,
        };
        Ok(Targets { laws, tables })
    }

    fn ks(&self, which: usize, samples: &[f64]) -> f64 {
        match &self.tables {
            Some(t) => ks_distance(samples, |x| t[which].eval(x)),
            None => {
                let sd = self.laws[which].variance().sqrt();
                ks_distance(samples, |x| normal_cdf(x / sd))
            }
        }
    }
}

/// Surrogate sums evaluated next to the simulated paths.
enum Surrogate {
    Long(SurrogateEngine),
    Short(TruncatedSums),
}

struct RepOut {
    s_t1: f64,
    s_1: f64,
    gap: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn grid_point(
    cfg: &ExperimentConfig,
    region: &Region,
    limit: &LimitSpec,
    spec_inf: &ProcessSpec,
    targets: &Targets,
    n: usize,
    cached: Option<&PathBatch>,
) -> Result<GridRow> {
    let k = cfg.kernel;
    let spec = cfg.process.build(n)?;
    let horizon = spec.horizon().expect("finite horizon");
    let x0 = cfg.process.innovations.x0;
    let truncation = spec.check_truncation(cfg.truncation_tol * x0)?;
    let center = expect_k(&spec, &k)?;
    let (a_n, bracket_holds) = if *region == Region::RegionI {
        let h = &spec_inf.model().spec().h;
        let root = region_one_root(conjugate_scale(spec_inf.alpha(), h, n as f64)?, &PartialSumL::new(spec_inf.ell()), n as f64)?;
        (root.a_n, Some(root.bracket_holds()))
    } else {
        (scaling_factor(region, spec_inf, n as f64)?, None)
    };
    let n_sur = cfg.surrogate_count();
    let surrogate = if region.is_long_memory() {
        Surrogate::Long(SurrogateEngine::new(&spec, Arc::new(KInf::new(&spec, &k)?))?)
    } else {
        let l = cfg.theta_config().lags.last().copied().unwrap_or(horizon).min(horizon);
        Surrogate::Short(TruncatedSums::new(&spec, &k, &[l])?)
    };
    let conv = Convolver::new(spec.coeffs());
    let seed = grid_seed(cfg, n);
    let t1 = cfg.t_grid[0];
    let outs = map_replicates(cfg.replicates, |r| {
        let rep = match cached {
            Some(b) => b.replicate(r).ok_or_else(|| LabError::Format("cache lacks innovation records".into()))?,
            None => simulate_replicate(&spec, &conv, n, seed, r as u64)?,
        };
        let s = partial_sums(&rep.path, &k, center, &[t1, 1.0])?;
        let gap = if r < n_sur {
            Some(match &surrogate {
                Surrogate::Long(engine) => {
                    let t = engine.t_n(&rep.innovations, n)?;
                    ((s[1] - t) / a_n).powi(2)
                }
                Surrogate::Short(trunc) => {
                    let sl = trunc.eval(&rep.innovations, n, horizon)?[0];
                    (s[1] - sl).powi(2) / n as f64
                }
            })
        } else {
            None
        };
        Ok(RepOut { s_t1: s[0], s_1: s[1], gap })
    })?;
    let x: Vec<f64> = outs.iter().map(|o| o.s_1 / a_n).collect();
    let y: Vec<f64> = outs.iter().map(|o| o.s_t1 / a_n).collect();
    let z: Vec<f64> = outs.iter().map(|o| (o.s_1 - o.s_t1) / a_n).collect();
    let gaps: Vec<f64> = outs.iter().filter_map(|o| o.gap).collect();
    let var_ratio = match limit.limit {
        Some(Limit::BrownianMotion { .. }) => Some(sample_variance(&x) / targets.laws[0].variance()),
        _ => None,
    };
    Ok(GridRow {
        n,
        horizon,
        a_n,
        center,
        ks_t1: targets.ks(0, &x),
        ks_t05: targets.ks(1, &y),
        ks_increment: targets.ks(2, &z),
        corr_incr: pearson(&y, &z),
        var_ratio,
        surrogate_gap: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
        bracket_holds,
        truncation,
    })
}

fn grid_verdicts(cfg: &ExperimentConfig, region: &Region, rows: &[GridRow]) -> Vec<Verdict> {
    let mut v = Vec::new();
    let last = rows.last().expect("non-empty grid");
    let thr = cfg.ks_threshold;
    let ks: Vec<f64> = rows.iter().map(|r| r.ks_t1).collect();
    v.push(Verdict::new(
        "ks_t1_decreasing",
        "KS distance between A_N^-1 S_N and the limit law decreases along the N grid",
        ks.windows(2).all(|w| w[1] < w[0]),
        format!("{ks:?}"),
    ));
    v.push(Verdict::new(
        "ks_t1_final",
        "KS distance to the limit law at the largest N is below the threshold",
        last.ks_t1 <= thr,
        format!("{:.4} vs {thr}", last.ks_t1),
    ));
    let bound = 3.0 / (cfg.replicates as f64).sqrt();
    v.push(Verdict::new(
        "increment_correlation",
        "rescaled increments over [0, t] and (t, 1] are uncorrelated (independent increments of the limit)",
        last.corr_incr.abs() <= bound,
        format!("|{:.4}| vs {:.4}", last.corr_incr, bound),
    ));
    v.push(Verdict::new(
        "increment_marginals",
        "each rescaled increment matches its marginal limit law",
        last.ks_t05 <= thr && last.ks_increment <= thr,
        format!("KS {:.4}, {:.4} vs {thr}", last.ks_t05, last.ks_increment),
    ));
    let band = cfg.var_ratio_band.or(match region {
        Region::CurveShort => Some([0.75, 1.25]),
        Region::PointLong => Some([0.7, 1.3]),
        _ => None,
    });
    if let (Some([lo, hi]), Some(r)) = (band, last.var_ratio) {
        v.push(Verdict::new(
            "var_ratio_band",
            "Var(A_N^-1 S_N) over the limit variance lies in the band at the largest N",
            (lo..=hi).contains(&r),
            format!("{r:.4} vs [{lo}, {hi}]"),
        ));
    }
    if *region == Region::RegionI {
        v.push(Verdict::new(
            "bracket",
            "N_a(L(N) - L(A_N)) <= A_N < N_a(L(N) - L(A_N - 1)) + 1 at every N",
            rows.iter().all(|r| r.bracket_holds == Some(true)),
            String::new(),
        ));
    }
    if region.is_long_memory() {
        let g: Vec<f64> = rows.iter().filter_map(|r| r.surrogate_gap).collect();
        v.push(Verdict::new(
            "surrogate_gap_decreasing",
            "E|S_N - T_N|^2 / A_N^2 decreases along the N grid",
            g.len() == rows.len() && g.windows(2).all(|w| w[1] < w[0]),
            format!("{g:?}"),
        ));
    }
    v
}

fn sample_variance(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labcli::config::tests::SAMPLE;

    fn small() -> ExperimentConfig {
        ExperimentConfig::from_json(SAMPLE).unwrap()
    }

    #[test]
    fn same_seed_gives_identical_report() {
        let cfg = small();
        let a = run_experiment(&cfg).unwrap().report;
        let b = run_experiment(&cfg).unwrap().report;
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.region, Region::RegionI);
        assert_eq!(a.rows.len(), 2);
        assert!(a.rows.iter().all(|r| r.bracket_holds == Some(true) && r.surrogate_gap.is_some()));
        assert!(a.verdicts.iter().all(|v| !v.invariant.is_empty()));
        let back = ExperimentReport::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back.to_json().unwrap(), a.to_json().unwrap());
    }

    #[test]
    fn cached_paths_reproduce_the_report() {
        let cfg = small();
        let dir = std::env::temp_dir().join(format!("lplab-exp-{}", std::process::id()));
        simulate_to_cache(&cfg, &dir).unwrap();
        let cached = run_experiment_with_cache(&cfg, Some(&dir)).unwrap().report;
        let fresh = run_experiment(&cfg).unwrap().report;
        assert_eq!(cached.to_json().unwrap(), fresh.to_json().unwrap());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn thread_count_does_not_change_the_report() {
        let cfg = small();
        let run = |t: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
            pool.install(|| run_experiment(&cfg).unwrap().report.to_json().unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn out_of_scope_is_explained() {
        let mut cfg = small();
        cfg.process.beta = 0.9;
        let out = run_experiment(&cfg).unwrap().report;
        assert_eq!(out.overall, Status::OutOfScope);
        assert!(out.explanation.is_some() && out.rows.is_empty());
    }

    #[test]
    fn pearson_matches_hand_values() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]) + 0.5).abs() < 1e-12);
    }
}
