//! Two-file persistence: a TOML sidecar and raw little-endian `f64` values.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FieldSample, GridSpec, KernelSpec};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    format_version: u32,
    grid: GridSpec,
    kernel: KernelSpec,
    seed: u64,
    negated: bool,
    layer_count: u32,
    nx: usize,
    ny: usize,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("toml"), stem.with_extension("f64"))
}

/// Write `<stem>.toml` and `<stem>.f64`.
pub fn write_sample(sample: &FieldSample, stem: &Path) -> Result<()> {
    let (meta_path, data_path) = paths(stem);
    let (nx, ny) = sample.grid.refined_dims();
    let meta = Meta {
        format_version: FORMAT_VERSION,
        grid: sample.grid,
        kernel: sample.kernel,
        seed: sample.seed,
        negated: sample.negated,
        layer_count: sample.layer_count(),
        nx,
        ny,
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(meta_path, text)?;
    let bytes: Vec<u8> = sample.values().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(data_path, bytes)?;
    Ok(())
}

pub fn read_sample(stem: &Path) -> Result<FieldSample> {
    let (meta_path, data_path) = paths(stem);
    let meta: Meta = toml::from_str(&fs::read_to_string(meta_path)?).map_err(|e| Error::Parse(e.to_string()))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported format version {}", meta.format_version)));
    }
    if meta.grid.refined_dims() != (meta.nx, meta.ny) {
        return Err(Error::Parse("sidecar dimensions disagree with the grid".into()));
    }
    let bytes = fs::read(data_path)?;
    if bytes.len() != 8 * meta.nx * meta.ny {
        return Err(Error::Parse(format!("expected {} bytes, found {}", 8 * meta.nx * meta.ny, bytes.len())));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let mut s = FieldSample::from_values(meta.grid, meta.kernel, meta.seed, values)?;
    s.negated = meta.negated;
    Ok(s)
}
