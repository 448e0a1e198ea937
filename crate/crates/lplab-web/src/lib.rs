//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers or JSON text and returns JSON text.

use lplab::innovations::{tail_calibration_check, InnovationModel, InnovationSpec};
use lplab::kernel::FunctionalK;
use lplab::linproc::ProcessConfig;
use lplab::rng;
use lplab::scaling::{classify, scaling_factor, Region};
use lplab::stable::{ks_distance_sorted, StableLaw};
use lplab::{LabError, Result};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn parse<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| LabError::config(format!("{what}: {e}")))
}

/// Region and `A_N` for `N = 2^lo, …, 2^hi`.
pub fn scaling_curve_json(process: &str, kernel: &str, lo: u32, hi: u32) -> Result<String> {
    let cfg: ProcessConfig = parse("process", process)?;
    let k: FunctionalK = parse("kernel", kernel)?;
    if lo > hi || hi > 40 {
        return Err(LabError::config("need lo ≤ hi ≤ 40"));
    }
    let spec = cfg.build_infinite()?;
    let region = classify(&spec, &k)?;
    let mut points = Vec::new();
    if !matches!(region, Region::OutOfScope { .. }) {
        for p in lo..=hi {
            let n = (1u64 << p) as f64;
            let a = scaling_factor(&region, &spec, n)?;
            points.push(json!({ "n": n, "a_n": a, "a_n_over_sqrt_n": a / n.sqrt() }));
        }
    }
    Ok(json!({ "region": region, "points": points }).to_string())
}

/// Draws `n` innovations and compares their tails with the declared law.
pub fn innovation_tails_json(spec: &str, n: usize, seed: u64) -> Result<String> {
    let spec: InnovationSpec = parse("innovations", spec)?;
    let model = InnovationModel::new(spec)?;
    let mut s = rng::stream(seed, rng::domain::SAMPLER, 0);
    let mut draws = vec![0.0; n];
    model.sample_into(&mut s, &mut draws);
    Ok(serde_json::to_string(&tail_calibration_check(&model, &draws)?)?)
}

/// Stable CDF on a grid next to the ECDF of `n` draws, with their KS distance.
pub fn stable_vs_ecdf_json(alpha: f64, sigma: f64, d: f64, n: usize, seed: u64) -> Result<String> {
    let law = StableLaw::new(alpha, sigma, d, 1.0)?;
    let table = law.cdf_table()?;
    let mut s = rng::stream(seed, rng::domain::SAMPLER, 1);
    let mut draws = (0..n).map(|_| law.sample(&mut s)).collect::<Result<Vec<_>>>()?;
    draws.sort_by(f64::total_cmp);
    let ks = ks_distance_sorted(&draws, |x| table.eval(x));
    let lo = draws[n / 100];
    let hi = draws[n - 1 - n / 100];
    let xs: Vec<f64> = (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).collect();
    let cdf: Vec<f64> = xs.iter().map(|&x| table.eval(x)).collect();
    let ecdf: Vec<f64> = xs.iter().map(|&x| draws.partition_point(|v| *v <= x) as f64 / n as f64).collect();
    Ok(json!({ "x": xs, "cdf": cdf, "ecdf": ecdf, "ks": ks, "skew": law.skew(), "scale": law.scale() }).to_string())
}

fn js(r: Result<String>) -> std::result::Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn scaling_curve(process: &str, kernel: &str, lo: u32, hi: u32) -> std::result::Result<String, JsValue> {
    js(scaling_curve_json(process, kernel, lo, hi))
}

#[wasm_bindgen]
pub fn innovation_tails(spec: &str, n: usize, seed: u64) -> std::result::Result<String, JsValue> {
    js(innovation_tails_json(spec, n, seed))
}

#[wasm_bindgen]
pub fn stable_vs_ecdf(alpha: f64, sigma: f64, d: f64, n: usize, seed: u64) -> std::result::Result<String, JsValue> {
    js(stable_vs_ecdf_json(alpha, sigma, d, n, seed))
}
