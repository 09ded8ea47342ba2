//! Field snapshots: raw little-endian `(re, im)` f64 pairs plus a JSON sidecar.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::schrodinger::field::WaveField;
use crate::schrodinger::grid::{FrequencyWindow, Grid};

pub const SNAPSHOT_FORMAT: &str = "complex-f64-le-row-major";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotMeta {
    pub format: String,
    pub dim: usize,
    pub side: f64,
    pub points: usize,
    pub time: f64,
    pub window: FrequencyWindow,
    pub data_file: String,
}

fn sidecar_path(stem: &Path) -> PathBuf {
    stem.with_extension("json")
}

fn data_path(stem: &Path) -> PathBuf {
    stem.with_extension("bin")
}

/// Writes `<stem>.bin` and `<stem>.json`; returns the sidecar path.
pub fn write_snapshot(u: &WaveField, stem: &Path) -> io::Result<PathBuf> {
    let mut bytes = Vec::with_capacity(u.values().len() * 16);
    for z in u.values() {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    let data = data_path(stem);
    fs::write(&data, bytes)?;
    let meta = SnapshotMeta {
        format: SNAPSHOT_FORMAT.into(),
        dim: u.grid().dim(),
        side: u.grid().side(),
        points: u.grid().points(),
        time: u.time(),
        window: u.window().clone(),
        data_file: data
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let sidecar = sidecar_path(stem);
    fs::write(&sidecar, serde_json::to_string_pretty(&meta)?)?;
    Ok(sidecar)
}

pub fn read_snapshot(sidecar: &Path) -> io::Result<WaveField> {
    let invalid = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let meta: SnapshotMeta = serde_json::from_slice(&fs::read(sidecar)?)?;
    if meta.format != SNAPSHOT_FORMAT {
        return Err(invalid(format!("unknown snapshot format {}", meta.format)));
    }
    let dir = sidecar.parent().unwrap_or(Path::new("."));
    let bytes = fs::read(dir.join(&meta.data_file))?;
    if bytes.len() % 16 != 0 {
        return Err(invalid("truncated snapshot data".into()));
    }
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    let grid = Grid::new(meta.dim, meta.side, meta.points).map_err(|e| invalid(e.to_string()))?;
    WaveField::new(grid, values, meta.window, meta.time).map_err(|e| invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schrodinger::field::{make_band_limited, Profile};

    #[test]
    fn snapshot_round_trip() {
        let g = Grid::new(2, 8.0, 16).unwrap();
        let u = make_band_limited(&g, &FrequencyWindow::unit(2), Profile::RandomPhase, 9)
            .unwrap()
            .with_time(0.5);
        let dir = std::env::temp_dir().join(format!("snapshot-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let sidecar = write_snapshot(&u, &dir.join("field")).unwrap();
        let back = read_snapshot(&sidecar).unwrap();
        assert_eq!(back, u);
        fs::remove_dir_all(&dir).unwrap();
    }
}
