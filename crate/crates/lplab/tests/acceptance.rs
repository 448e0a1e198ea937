//! Acceptance suite: prints one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). A criterion that does not hold is
//! reported as FAIL with its measured values; the process only exits non-zero when
//! a criterion cannot be evaluated at all.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use lplab::innovations::{tail_calibration_check, Centering, CheckStatus, InnovationModel, InnovationSpec};
use lplab::kernel::FunctionalK;
use lplab::labcli::{run_experiment, ExperimentConfig, ExperimentReport};
use lplab::linproc::surrogate::EtaEvaluator;
use lplab::linproc::{direct_convolution, simulate_replicate, Convolver, KInf, ProcessSpec};
use lplab::regvar::{conjugate_slowvary, PartialSumL, RInverse, SlowVary};
use lplab::rng;
use lplab::scaling::{c_k, c_lh_for};
use lplab::stable::{ks_distance_sorted, StableLaw};
use lplab::Result;

struct Outcome {
    passed: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { passed: true, detail: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.passed &= ok;
        self.detail.push(format!("[{}] {what}", if ok { "ok" } else { "x" }));
    }
}

fn model(alpha: f64, s1: f64, s2: f64) -> Result<InnovationModel> {
    let centering = if s1 == s2 { Centering::Symmetric } else { Centering::MeanZero };
    InnovationModel::new(InnovationSpec {
        alpha,
        sigma1: s1,
        sigma2: s2,
        h: SlowVary::constant(1.0)?,
        x0: 1.0,
        centering,
    })
}

fn config(name: &str) -> Result<ExperimentConfig> {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"));
    ExperimentConfig::load(&p)
}

fn verdict(r: &ExperimentReport, name: &str) -> Option<bool> {
    r.verdicts.iter().find(|v| v.name == name).map(|v| v.passed)
}

fn add_verdict(o: &mut Outcome, r: &ExperimentReport, name: &str) {
    let d = r.verdicts.iter().find(|v| v.name == name).map(|v| v.detail.clone()).unwrap_or_default();
    o.check(verdict(r, name) == Some(true), format!("{} {name}: {d}", r.config_id));
}

fn criterion_1() -> Result<Outcome> {
    let mut o = Outcome::new();
    let start = Instant::now();
    let spec = ProcessSpec::new(1.0, SlowVary::constant(1.0)?, model(1.5, 0.5, 0.5)?, 4096)?;
    let conv = Convolver::new(spec.coeffs());
    let rep = simulate_replicate(&spec, &conv, 4096, 11, 0)?;
    let fast_secs = start.elapsed().as_secs_f64();
    let direct = direct_convolution(spec.coeffs(), &rep.innovations[..4096 + 4096 - 1]);
    let err = rep.path.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    o.check(err <= 1e-8, format!("max |fft - direct| = {err:.3e}"));
    o.check(fast_secs <= 5.0, format!("fast simulation {fast_secs:.3} s"));
    Ok(o)
}

fn criterion_2() -> Result<Outcome> {
    let mut o = Outcome::new();
    let half_tan = |a: f64| 0.5 * (std::f64::consts::PI * a / 2.0).tan();
    for (i, (alpha, d)) in [(1.3, 0.0), (1.5, half_tan(1.5)), (1.9, half_tan(1.9))].into_iter().enumerate() {
        let law = StableLaw::new(alpha, 1.0, d, 1.0)?;
        let table = law.cdf_table()?;
        let mut s = rng::stream(2024, rng::domain::CHECKS, i as u64);
        let mut x = (0..100_000).map(|_| law.sample(&mut s)).collect::<Result<Vec<_>>>()?;
        x.sort_by(f64::total_cmp);
        let ks = ks_distance_sorted(&x, |v| table.eval(v));
        o.check(ks <= 0.015, format!("alpha {alpha}, D {d:.4}: KS {ks:.4}"));
    }
    for (i, (s1, s2)) in [(0.5, 0.5), (0.3, 0.7)].into_iter().enumerate() {
        let m = model(1.5, s1, s2)?;
        let mut s = rng::stream(2024, rng::domain::CHECKS, 10 + i as u64);
        let mut draws = vec![0.0; 1_000_000];
        m.sample_into(&mut s, &mut draws);
        let rep = tail_calibration_check(&m, &draws)?;
        o.check(
            rep.status == CheckStatus::Pass,
            format!("tails sigma1 {s1}, sigma2 {s2}: errors {:?} / {:?}", rep.left_error, rep.right_error),
        );
    }
    Ok(o)
}

fn desk_criterion(r: &ExperimentReport, names: &[&str]) -> Outcome {
    let mut o = Outcome::new();
    for n in names {
        add_verdict(&mut o, r, n);
    }
    o
}

fn criterion_7(region_i: &ExperimentReport) -> Result<Outcome> {
    let mut o = Outcome::new();
    let one = SlowVary::constant(1.0)?;

    let mut worst: f64 = 0.0;
    let gs: [fn(f64) -> f64; 3] = [|_| 1.0, |t| t.ln(), |t| t.ln().powi(2)];
    for g in gs {
        for p in [1.0, 1.5, 2.0] {
            for n in [1e3, 1e6, 1e9, 1e12] {
                let y = conjugate_slowvary(&g, p, n, 1e-12)?;
                worst = worst.max((g((n * y).powf(1.0 / p)) - y).abs() / y);
            }
        }
    }
    o.check(worst <= 1e-8, format!("conjugate residual max {worst:.2e}"));
    let ri = RInverse::new(2.0, &SlowVary::neg_log_power(3.0)?)?;
    let s = ri.inverse(1e3)?;
    let res = (ri.forward(s) - 1e3).abs() / 1e3;
    o.check(res <= 1e-10, format!("R inverse round trip {res:.2e}"));

    for (name, ell) in [("constant", one.clone()), ("log_power(1)", SlowVary::log_power(1.0)?), ("log_power(2)", SlowVary::log_power(2.0)?)] {
        let l = PartialSumL::new(&ell);
        let r: Vec<f64> = [1e6, 1e7, 1e8, 1e9].iter().map(|&n| ell.value(n) / l.eval(n)).collect();
        let ok = r.windows(2).all(|w| w[1] < w[0]) && r.iter().all(|v| *v < 0.05);
        o.check(ok, format!("Karamata {name}: l/L at 1e6..1e9 = {r:.4?}"));
    }

    for (name, ell) in [
        ("constant", one.clone()),
        ("log_log_power(1)", SlowVary::log_log_power(1.0)?),
        ("log_power(1)", SlowVary::log_power(1.0)?),
        ("neg_log_power(3)", SlowVary::neg_log_power(3.0)?),
    ] {
        let mut vals = Vec::new();
        let mut ok = true;
        for a in [-1.0, 0.0, 1.0] {
            let r: Vec<f64> = [1e8, 1e16, 1e32]
                .iter()
                .map(|&x| ell.value(x * ell.value(x).powf(a)) / ell.value(x))
                .collect();
            ok &= r.iter().all(|v| (0.9..=1.1).contains(v));
            ok &= r.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs());
            vals.push(r);
        }
        o.check(ok, format!("slow variation under l-power rescaling {name}: a=-1,0,1 at 1e8,1e16,1e32 = {vals:.4?}"));
    }

    for (name, ell) in [("constant", one.clone()), ("log_power(1)", SlowVary::log_power(1.0)?)] {
        let l = PartialSumL::new(&ell);
        let r: Vec<f64> = [1e8, 1e16, 1e32].iter().map(|&x| l.eval(x * l.eval(x)) / l.eval(x)).collect();
        let ok = r.iter().all(|v| (0.95..=1.2).contains(v)) && r.windows(2).all(|w| w[1] < w[0]);
        o.check(ok, format!("L under L rescaling {name}: L(xL)/L at 1e8,1e16,1e32 = {r:.4?}"));
    }

    let spec = ProcessSpec::infinite(1.0, one.clone(), model(1.5, 0.5, 0.5)?)?;
    let kinf = KInf::new(&spec, &FunctionalK::odd_bump())?;
    let delta = 1e-3;
    let fd = (kinf.direct(delta) - kinf.direct(-delta)) / (2.0 * delta);
    let rel = (kinf.prime_zero() / fd - 1.0).abs();
    o.check(rel <= 0.02, format!("K_inf'(0) {:.6e} vs difference {fd:.6e}: rel {rel:.2e}", kinf.prime_zero()));

    let spec = ProcessSpec::infinite(2.0, one.clone(), model(1.0, 0.5, 0.5)?)?;
    let kinf = Arc::new(KInf::new(&spec, &FunctionalK::gauss_bump())?);
    let cp = c_k(&kinf, 2.0, 1.0)?;
    let ev = EtaEvaluator::new(&spec, kinf, 1 << 16)?;
    let r: Vec<f64> = [1e3, 1e4, 1e5].iter().map(|&x| Ok(ev.eval(x, false)?.value / x.sqrt() / cp)).collect::<Result<_>>()?;
    o.check((r[2] - 1.0).abs() <= 0.1, format!("eta_K(x)/(sqrt(x) C+) at 1e3,1e4,1e5 = {r:.4?}"));

    let spec = ProcessSpec::infinite(1.0, one.clone(), model(2.0, 0.5, 0.5)?)?;
    let kinf = Arc::new(KInf::new(&spec, &FunctionalK::odd_bump())?);
    let kp = kinf.prime_zero();
    let ev = EtaEvaluator::new(&spec, kinf, 1 << 16)?;
    let l = PartialSumL::new(&one);
    let r: Vec<f64> =
        [1e3, 1e4, 1e5].iter().map(|&x| Ok(ev.eval(x, true)?.value / (x * l.eval(x)) / -kp)).collect::<Result<_>>()?;
    o.check((r[2] - 1.0).abs() <= 0.1, format!("linear-corrected eta/(-x L(x) K_inf'(0)) at 1e3,1e4,1e5 = {r:.4?}"));

    add_verdict(&mut o, region_i, "surrogate_gap_decreasing");
    Ok(o)
}

fn print(i: usize, title: &str, o: &Result<Outcome>) -> bool {
    match o {
        Ok(o) => {
            println!("criterion {i}: {} ({title})", if o.passed { "PASS" } else { "FAIL" });
            for d in &o.detail {
                println!("    {d}");
            }
            true
        }
        Err(e) => {
            println!("criterion {i}: FAIL ({title}) could not be evaluated: {e}");
            false
        }
    }
}

fn main() {
    let mut evaluated = true;
    evaluated &= print(1, "convolution oracle", &criterion_1());
    evaluated &= print(2, "sampler fidelity", &criterion_2());

    let mut reports = Vec::new();
    let mut secs = Vec::new();
    for name in ["region_i", "curve_long", "curve_short", "point_long"] {
        let t0 = Instant::now();
        match config(name).and_then(|c| run_experiment(&c)) {
            Ok(out) => {
                reports.push(out.report);
                secs.push(t0.elapsed().as_secs_f64());
            }
            Err(e) => {
                println!("desk run {name} failed: {e}");
                std::process::exit(2);
            }
        }
    }
    let [region_i, curve_long, curve_short, point_long] = [&reports[0], &reports[1], &reports[2], &reports[3]];

    let mut c3 = desk_criterion(region_i, &["ks_t1_decreasing", "ks_t1_final", "bracket"]);
    c3.check(secs[0] <= 600.0, format!("runtime {:.1} s", secs[0]));
    evaluated &= print(3, "Region I desk run", &Ok(c3));
    evaluated &= print(4, "curve long-memory desk run", &Ok(desk_criterion(curve_long, &["ks_t1_decreasing", "ks_t1_final"])));
    evaluated &= print(5, "short-memory desk run", &Ok(desk_criterion(curve_short, &["theta_cauchy", "var_ratio_band", "ks_t1_final"])));

    let c6 = (|| {
        let one = SlowVary::constant(1.0)?;
        let (c, _, _) = c_lh_for(&one, &one)?;
        let mut o = desk_criterion(point_long, &["var_ratio_band", "ks_t1_decreasing"]);
        o.check((c - 7.0 / 12.0).abs() <= 1e-6, format!("c_Lh = {c:.12} vs 7/12"));
        Ok(o)
    })();
    evaluated &= print(6, "point long-memory desk run", &c6);
    evaluated &= print(7, "invariant suites", &criterion_7(region_i));

    let mut c8 = Outcome::new();
    for r in &reports {
        add_verdict(&mut c8, r, "increment_correlation");
        add_verdict(&mut c8, r, "increment_marginals");
    }
    evaluated &= print(8, "finite-dimensional increments", &Ok(c8));
    if !evaluated {
        std::process::exit(2);
    }
}
