//! Path simulation by overlap-save FFT convolution.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::ProcessSpec;
use crate::error::{LabError, Result};
use crate::rng;

/// Linear convolution with a fixed real kernel, returning only the fully
/// overlapped ("valid") outputs.
pub struct Convolver {
    klen: usize,
    fft_len: usize,
    kernel_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver").field("klen", &self.klen).field("fft_len", &self.fft_len).finish()
    }
}

impl Convolver {
    pub fn new(kernel: &[f64]) -> Self {
        let klen = kernel.len().max(1);
        let fft_len = (2 * klen).next_power_of_two().max(1024);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let mut kernel_hat = vec![Complex64::new(0.0, 0.0); fft_len];
        for (dst, &a) in kernel_hat.iter_mut().zip(kernel) {
            *dst = Complex64::new(a / fft_len as f64, 0.0);
        }
        forward.process(&mut kernel_hat);
        Convolver { klen, fft_len, kernel_hat, forward, inverse }
    }

    pub fn kernel_len(&self) -> usize {
        self.klen
    }

    /// `out[t] = Σ_i kernel[i] · input[t + klen - 1 - i]`; needs
    /// `input.len() == out.len() + klen - 1`.
    pub fn convolve_valid(&self, input: &[f64], out: &mut [f64]) {
        assert_eq!(input.len(), out.len() + self.klen - 1, "input length must be output + kernel - 1");
        let p = self.klen;
        let lf = self.fft_len;
        let step = lf - p + 1;
        let nblocks = out.len().div_ceil(step);
        let mut buf = vec![Complex64::new(0.0, 0.0); lf];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        let fetch = |start: usize, i: usize| input.get(start + i).copied().unwrap_or(0.0);
        // Two real blocks share one complex transform: real part and imaginary part.
        let mut b = 0;
        while b < nblocks {
            let s0 = b * step;
            let s1 = (b + 1) * step;
            let pair = b + 1 < nblocks;
            for (i, z) in buf.iter_mut().enumerate() {
                let im = if pair { fetch(s1, i) } else { 0.0 };
                *z = Complex64::new(fetch(s0, i), im);
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            for (z, k) in buf.iter_mut().zip(&self.kernel_hat) {
                *z *= k;
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            for (k, z) in buf[(p - 1)..lf].iter().enumerate() {
                if let Some(o) = out.get_mut(s0 + k) {
                    *o = z.re;
                }
                if pair {
                    if let Some(o) = out.get_mut(s1 + k) {
                        *o = z.im;
                    }
                }
            }
            b += 2;
        }
    }
}

/// `O(N·J)` reference for [`Convolver::convolve_valid`].
pub fn direct_convolution(kernel: &[f64], input: &[f64]) -> Vec<f64> {
    let p = kernel.len();
    let n = input.len() + 1 - p;
    (0..n)
        .map(|t| kernel.iter().enumerate().map(|(i, a)| a * input[t + p - 1 - i]).sum())
        .collect()
}

/// One simulated replicate: the innovation record `ε_{1-J}, …, ε_N` and the path
/// `X_1, …, X_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub innovations: Vec<f64>,
    pub path: Vec<f64>,
}

impl Replicate {
    /// `ε_m` for `1 - J ≤ m ≤ N`.
    pub fn innovation(&self, m: i64, horizon: usize) -> f64 {
        self.innovations[(m + horizon as i64 - 1) as usize]
    }
}

/// Replicate `r` of paths of length `n` from the master `seed`.
pub fn simulate_replicate(spec: &ProcessSpec, conv: &Convolver, n: usize, seed: u64, r: u64) -> Result<Replicate> {
    let j = spec.horizon().ok_or_else(|| LabError::domain("simulation needs a finite horizon"))?;
    if conv.kernel_len() != j {
        return Err(LabError::domain("convolver kernel length differs from the horizon"));
    }
    if n == 0 {
        return Err(LabError::domain("path length N must be at least 1"));
    }
    let mut stream = rng::stream(seed, rng::domain::PATHS, r);
    let mut innovations = vec![0.0; n + j];
    spec.model().sample_into(&mut stream, &mut innovations);
    let mut path = vec![0.0; n];
    conv.convolve_valid(&innovations[..n + j - 1], &mut path);
    Ok(Replicate { innovations, path })
}

/// Paths stored row-major, `replicates × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub n: usize,
    pub horizon: usize,
    pub replicates: usize,
    pub seed: u64,
    pub paths: Vec<f64>,
    /// Innovation records, `replicates × (n + horizon)`, when kept.
    pub innovations: Option<Vec<f64>>,
}

impl PathBatch {
    pub fn path(&self, r: usize) -> &[f64] {
        &self.paths[r * self.n..(r + 1) * self.n]
    }

    pub fn innovation_record(&self, r: usize) -> Option<&[f64]> {
        let w = self.n + self.horizon;
        self.innovations.as_ref().map(|v| &v[r * w..(r + 1) * w])
    }

    pub fn replicate(&self, r: usize) -> Option<Replicate> {
        Some(Replicate { innovations: self.innovation_record(r)?.to_vec(), path: self.path(r).to_vec() })
    }
}

/// Simulates `replicates` independent paths of length `n`, keeping the innovations
/// when `keep_innovations` is set.
pub fn simulate_paths(
    spec: &ProcessSpec,
    n: usize,
    replicates: usize,
    seed: u64,
    keep_innovations: bool,
) -> Result<PathBatch> {
    let j = spec.horizon().ok_or_else(|| LabError::domain("simulation needs a finite horizon"))?;
    let conv = Convolver::new(spec.coeffs());
    let reps: Vec<Replicate> = map_replicates(replicates, |r| simulate_replicate(spec, &conv, n, seed, r as u64))?;
    let mut paths = Vec::with_capacity(n * replicates);
    let mut innov = keep_innovations.then(|| Vec::with_capacity((n + j) * replicates));
    for rep in reps {
        paths.extend_from_slice(&rep.path);
        if let Some(v) = innov.as_mut() {
            v.extend_from_slice(&rep.innovations);
        }
    }
    Ok(PathBatch { n, horizon: j, replicates, seed, paths, innovations: innov })
}

/// Runs `f` over replicate indices `0..m`, in parallel when enabled, returning the
/// results in index order.
pub fn map_replicates<T: Send>(m: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..m).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..m).map(f).collect()
    }
}
