//! On-disk cache of target values on a grid.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sampling::Grid;
use crate::test_functions::Target;

const MAGIC: &[u8; 8] = b"HDPTGT01";

/// Hex SHA-256 over the target id, dimension and grid contents.
pub fn cache_key(target: &Target, grid: &Grid) -> String {
    let mut h = Sha256::new();
    h.update(target.id().as_bytes());
    h.update([0u8]);
    h.update((target.dim() as u64).to_le_bytes());
    h.update([grid.measure().tag()]);
    h.update((grid.dim() as u64).to_le_bytes());
    h.update((grid.len() as u64).to_le_bytes());
    for x in grid.raw() {
        h.update(x.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cache_path(dir: &Path, target: &Target, grid: &Grid) -> PathBuf {
    dir.join(format!("target-{}.bin", cache_key(target, grid)))
}

/// Target values on `grid`, read from `dir` when a matching file exists and
/// written there otherwise. Unreadable or mismatched files are recomputed.
pub fn target_values(target: &Target, grid: &Grid, dir: Option<&Path>) -> Result<Vec<f64>> {
    let Some(dir) = dir else {
        return target.eval_grid(grid);
    };
    let path = cache_path(dir, target, grid);
    if let Ok(values) = read_values(&path, grid.len()) {
        return Ok(values);
    }
    let values = target.eval_grid(grid)?;
    write_values(&path, &values)?;
    Ok(values)
}

fn read_values(path: &Path, len: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() != 16 + 8 * len || &bytes[..8] != MAGIC {
        return Err(Error::Format(format!("{} is not a cache file for {len} values", path.display())));
    }
    let stored = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    if stored != len as u64 {
        return Err(Error::Format("cached length mismatch".into()));
    }
    Ok(bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

/// Writes through a temporary file and a rename so readers never see a
/// partial file.
fn write_values(path: &Path, values: &[f64]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
        f.write_all(MAGIC)?;
        f.write_all(&(values.len() as u64).to_le_bytes())?;
        for v in values {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
