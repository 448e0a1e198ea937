//! Binary cache of simulated paths.
//!
//! Layout (little endian): magic `LPLB`, format version `u32`, 32-byte SHA-256 of
//! the config, then `N`, `J`, replicate count and seed as `u64`, then for each
//! replicate its `N + J` innovations followed by its `N` path values as `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::sim::PathBatch;
use crate::error::{LabError, Result};

const MAGIC: &[u8; 4] = b"LPLB";
pub const CACHE_VERSION: u32 = 1;

pub fn write_cache(path: &Path, spec_hash: &[u8; 32], batch: &PathBatch) -> Result<()> {
    let innov = batch
        .innovations
        .as_ref()
        .ok_or_else(|| LabError::domain("cache needs the innovation records"))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(spec_hash)?;
    for v in [batch.n as u64, batch.horizon as u64, batch.replicates as u64, batch.seed] {
        w.write_all(&v.to_le_bytes())?;
    }
    let width = batch.n + batch.horizon;
    for r in 0..batch.replicates {
        for x in &innov[r * width..(r + 1) * width] {
            w.write_all(&x.to_le_bytes())?;
        }
        for x in batch.path(r) {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a cache, returning `None` when the stored hash differs from `spec_hash`.
pub fn read_cache(path: &Path, spec_hash: &[u8; 32]) -> Result<Option<PathBatch>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(LabError::Format("not a path cache (bad magic)".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != CACHE_VERSION {
        return Err(LabError::Format(format!("unsupported cache version {version}")));
    }
    let mut hash = [0u8; 32];
    r.read_exact(&mut hash)?;
    if &hash != spec_hash {
        return Ok(None);
    }
    let mut header = [0u64; 4];
    let mut b8 = [0u8; 8];
    for h in header.iter_mut() {
        r.read_exact(&mut b8)?;
        *h = u64::from_le_bytes(b8);
    }
    let [n, horizon, replicates, seed] = header.map(|v| v as usize);
    let width = n + horizon;
    let mut read_f64s = |count: usize, dst: &mut Vec<f64>| -> Result<()> {
        for _ in 0..count {
            r.read_exact(&mut b8)?;
            dst.push(f64::from_le_bytes(b8));
        }
        Ok(())
    };
    let mut innovations = Vec::with_capacity(width * replicates);
    let mut paths = Vec::with_capacity(n * replicates);
    for _ in 0..replicates {
        read_f64s(width, &mut innovations)?;
        read_f64s(n, &mut paths)?;
    }
    Ok(Some(PathBatch { n, horizon, replicates, seed: seed as u64, paths, innovations: Some(innovations) }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovations::Centering;
    use crate::linproc::tests::pareto;
    use crate::linproc::{simulate_paths, ProcessSpec};
    use crate::regvar::SlowVary;

    #[test]
    fn round_trip_and_hash_mismatch() {
        let spec = ProcessSpec::new(1.0, SlowVary::constant(1.0).unwrap(), pareto(1.5, Centering::Symmetric), 64).unwrap();
        let batch = simulate_paths(&spec, 100, 3, 21, true).unwrap();
        let dir = std::env::temp_dir().join(format!("lplab-cache-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("paths.bin");
        let hash = [7u8; 32];
        write_cache(&file, &hash, &batch).unwrap();
        assert_eq!(read_cache(&file, &hash).unwrap(), Some(batch));
        assert_eq!(read_cache(&file, &[0u8; 32]).unwrap(), None);
        std::fs::write(&file, b"nope").unwrap();
        assert!(read_cache(&file, &hash).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
