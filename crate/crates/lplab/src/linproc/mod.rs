//! The linear process `X_n = Σ_j a_j ε_{n-j}` with `a_j = j^{-β} ℓ(j)`, its
//! simulation, the smoothed functional `K_∞`, and the surrogate sums.

pub mod cache;
pub mod charfn;
pub mod kinf;
pub mod sim;
pub mod surrogate;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::innovations::{InnovationModel, InnovationSpec};
use crate::kernel::FunctionalK;
use crate::regvar::SlowVary;

pub use charfn::{process_char_fn, ProcessCharFn};
pub use kinf::{expect_k, expect_k_mc, k_infinity, k_infinity_prime_zero, FourierGrid, KInf};
pub use sim::{direct_convolution, simulate_paths, simulate_replicate, Convolver, PathBatch, Replicate};
pub use surrogate::{eta_k, EtaResult, SurrogateEngine, SurrogateSums};

/// Smallest default horizon.
pub const MIN_HORIZON: usize = 1 << 12;

/// Coefficients kept in memory for an infinite-horizon spec.
const INFINITE_PREFIX: usize = 1 << 12;

/// Serializable process description; the horizon defaults to `max(N, 4096)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessConfig {
    pub beta: f64,
    #[serde(default = "unit_ell")]
    pub ell: SlowVary,
    pub innovations: InnovationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
}

fn unit_ell() -> SlowVary {
    SlowVary::constant(1.0).expect("constant 1 is valid")
}

impl ProcessConfig {
    /// Horizon used for paths of length `n`.
    pub fn horizon_for(&self, n: usize) -> usize {
        self.truncation.unwrap_or_else(|| n.max(MIN_HORIZON))
    }

    pub fn model(&self) -> Result<InnovationModel> {
        InnovationModel::new(self.innovations.clone())
    }

    /// Finite-horizon spec for paths of length `n`.
    pub fn build(&self, n: usize) -> Result<ProcessSpec> {
        ProcessSpec::new(self.beta, self.ell.clone(), self.model()?, self.horizon_for(n))
    }

    /// The untruncated process.
    pub fn build_infinite(&self) -> Result<ProcessSpec> {
        ProcessSpec::infinite(self.beta, self.ell.clone(), self.model()?)
    }
}

/// Truncation bookkeeping for a finite horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationInfo {
    pub horizon: usize,
    /// `a_J J / (β - 1)`, a bound on `Σ_{j>J} a_j` when β > 1.
    pub l1_tail_bound: Option<f64>,
    /// `(Σ_{j>J} a_j^α)^{1/α}`, the scale of the neglected part relative to one innovation.
    pub alpha_tail: f64,
}

/// Coefficients, innovations and horizon of a linear process.
#[derive(Debug, Clone)]
pub struct ProcessSpec {
    beta: f64,
    ell: SlowVary,
    model: InnovationModel,
    horizon: Option<usize>,
    coeffs: Arc<Vec<f64>>,
    explicit: bool,
    mono_from: usize,
}

impl ProcessSpec {
    /// `a_j = j^{-β} ℓ(j)` for `1 ≤ j ≤ horizon`.
    pub fn new(beta: f64, ell: SlowVary, model: InnovationModel, horizon: usize) -> Result<Self> {
        check_existence(beta, model.alpha())?;
        if horizon == 0 {
            return Err(LabError::domain("horizon J must be at least 1"));
        }
        Ok(Self::regular(beta, ell, model, Some(horizon), horizon))
    }

    /// The infinite-order process, used for limit constants.
    pub fn infinite(beta: f64, ell: SlowVary, model: InnovationModel) -> Result<Self> {
        check_existence(beta, model.alpha())?;
        Ok(Self::regular(beta, ell, model, None, INFINITE_PREFIX))
    }

    fn regular(beta: f64, ell: SlowVary, model: InnovationModel, horizon: Option<usize>, len: usize) -> Self {
        let coeffs: Vec<f64> = (1..=len).map(|j| coefficient_formula(beta, &ell, j as f64)).collect();
        let mono_from = monotone_start(&coeffs, beta, &ell);
        ProcessSpec { beta, ell, model, horizon, coeffs: Arc::new(coeffs), explicit: false, mono_from }
    }

    /// A process with arbitrary finite coefficients `a_1, …, a_J`.
    pub fn from_coefficients(model: InnovationModel, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|a| !a.is_finite()) {
            return Err(LabError::domain("explicit coefficients must be finite and non-empty"));
        }
        let mono_from = coeffs.len() + 1;
        Ok(ProcessSpec {
            beta: f64::NAN,
            ell: unit_ell(),
            horizon: Some(coeffs.len()),
            model,
            coeffs: Arc::new(coeffs),
            explicit: true,
            mono_from,
        })
    }

    /// The same process truncated at `l` terms.
    pub fn truncated(&self, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(LabError::domain("truncation lag must be at least 1"));
        }
        if let Some(j) = self.horizon {
            if l > j {
                return Err(LabError::domain(format!("truncation lag {l} exceeds the horizon {j}")));
            }
        }
        if self.explicit {
            return ProcessSpec::from_coefficients(self.model.clone(), self.coeffs[..l].to_vec());
        }
        ProcessSpec::new(self.beta, self.ell.clone(), self.model.clone(), l)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.model.alpha()
    }

    pub fn ell(&self) -> &SlowVary {
        &self.ell
    }

    pub fn model(&self) -> &InnovationModel {
        &self.model
    }

    /// `Some(J)` for a finite horizon.
    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    pub fn is_explicit(&self) -> bool {
        self.explicit
    }

    /// Stored coefficients `a_1, a_2, …` (the full set for a finite horizon).
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// First index from which the coefficients never increase.
    pub fn monotone_from(&self) -> usize {
        self.mono_from
    }

    /// `a_j` for `j ≥ 1`; zero beyond a finite horizon.
    pub fn coefficient(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        if let Some(h) = self.horizon {
            if j > h {
                return 0.0;
            }
        }
        if j <= self.coeffs.len() {
            self.coeffs[j - 1]
        } else if self.explicit {
            0.0
        } else {
            coefficient_formula(self.beta, &self.ell, j as f64)
        }
    }

    /// `a(t) = t^{-β} ℓ(t)` for real `t`.
    pub fn coefficient_at(&self, t: f64) -> f64 {
        coefficient_formula(self.beta, &self.ell, t)
    }

    pub fn truncation(&self) -> Result<TruncationInfo> {
        let j = self.horizon.ok_or_else(|| LabError::domain("an infinite horizon has no truncation"))?;
        if self.explicit {
            return Ok(TruncationInfo { horizon: j, l1_tail_bound: Some(0.0), alpha_tail: 0.0 });
        }
        let a_j = self.coefficient(j);
        let jf = j as f64;
        let l1_tail_bound = (self.beta > 1.0).then(|| a_j * jf / (self.beta - 1.0));
        let ab = self.alpha() * self.beta;
        let alpha_tail = (a_j.powf(self.alpha()) * jf / (ab - 1.0)).powf(1.0 / self.alpha());
        Ok(TruncationInfo { horizon: j, l1_tail_bound, alpha_tail })
    }

    /// Fails with a configuration error when the ℓ1 tail bound exceeds `tol`.
    /// For β ≤ 1 the bound is infinite and the check is skipped.
    pub fn check_truncation(&self, tol: f64) -> Result<TruncationInfo> {
        let t = self.truncation()?;
        if let Some(b) = t.l1_tail_bound {
            if b > tol {
                return Err(LabError::config(format!(
                    "horizon J = {} leaves a coefficient tail of {b:.3e}, above the tolerance {tol:.1e}",
                    t.horizon
                )));
            }
        }
        Ok(t)
    }
}

fn check_existence(beta: f64, alpha: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(LabError::domain(format!("β must be positive, got {beta}")));
    }
    if alpha * beta <= 1.0 {
        return Err(LabError::Nonexistence(format!("αβ = {} must exceed 1", alpha * beta)));
    }
    Ok(())
}

#[inline]
fn coefficient_formula(beta: f64, ell: &SlowVary, t: f64) -> f64 {
    t.powf(-beta) * ell.value(t)
}

fn monotone_start(coeffs: &[f64], beta: f64, ell: &SlowVary) -> usize {
    let mut start = 1;
    for j in (1..coeffs.len()).rev() {
        if coeffs[j] > coeffs[j - 1] {
            start = j + 1;
            break;
        }
    }
    let n = coeffs.len() as f64;
    if ell.log_derivative(n) >= beta {
        // Still rising at the end of the stored block; find where it turns.
        let mut t = n;
        while ell.log_derivative(t) >= beta && t < 1e300 {
            t *= 2.0;
        }
        return t as usize;
    }
    start
}

/// `a_1, …, a_J`.
pub fn coefficients(spec: &ProcessSpec) -> Result<Vec<f64>> {
    let j = spec.horizon().ok_or_else(|| LabError::domain("coefficients need a finite horizon"))?;
    Ok(spec.coeffs()[..j].to_vec())
}

/// `S(t) = Σ_{n=1}^{[N t]} (K(X_n) - center)` for each `t` in `t_grid`.
pub fn partial_sums(path: &[f64], k: &FunctionalK, center: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    let n = path.len();
    let mut idx = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(0.0..=1.0).contains(&t) {
            return Err(LabError::domain(format!("t must lie in [0, 1], got {t}")));
        }
        idx.push((n as f64 * t).floor() as usize);
    }
    let max = idx.iter().copied().max().unwrap_or(0);
    let mut cum = Vec::with_capacity(max + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    for &x in &path[..max] {
        acc += k.eval(x) - center;
        cum.push(acc);
    }
    Ok(idx.into_iter().map(|i| cum[i]).collect())
}

/// [`partial_sums`] for every path of a batch.
pub fn partial_sum_process(
    batch: &PathBatch,
    k: &FunctionalK,
    center: f64,
    t_grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    (0..batch.replicates).map(|r| partial_sums(batch.path(r), k, center, t_grid)).collect()
}
