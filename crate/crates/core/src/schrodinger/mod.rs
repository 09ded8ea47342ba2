//! Free Schrödinger evolution `i∂_t u + Δu = 0` on a periodic grid.

pub mod field;
pub mod grid;
pub mod snapshot;
pub mod symmetry;

use thiserror::Error;

pub use field::{intensity, make_band_limited, mass, propagate, Profile, WaveField};
pub use grid::{FrequencyWindow, Grid};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotMeta};
pub use symmetry::{galilean_rescale, Direction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchrodingerError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resolution loss: {lost:.3e} of the spectral energy falls outside the target grid")]
    Resolution { lost: f64 },
}
