//! Weighted Lipschitz tubes built from a layered flow of lattice mass weights,
//! with pointwise-domination and efficiency checks.

pub mod decomposition;
pub mod export;
pub mod slice;
pub mod tube;
pub mod verify;

use thiserror::Error;

use crate::lattice_flow::FlowError;
use crate::mu_kernel::MuError;
use crate::schrodinger::SchrodingerError;

pub use decomposition::{
    decompose, effective_scale, from_ensemble, layer_count, scaled_decompose, DecomposeOptions,
    Frame, Provenance, TubeDecomposition,
};
pub use export::{tubes_to_csv, write_tubes_csv};
pub use slice::{segment_product, CoverSlice};
pub use tube::{torus_delta, torus_distance, Tube};
pub use verify::{
    verify_domination, verify_efficiency, DominationReport, DominationSpec, EfficiencyReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TubeError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("flow construction failed (time step too large for finite speed?): {0}")]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Kernel(#[from] MuError),
    #[error(transparent)]
    Field(#[from] SchrodingerError),
    #[error("time {t} outside the decomposition range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("domination fails at x = {x:?}, t = {t}: intensity {intensity:.3e} but no tube covers the point")]
    Domination { x: Vec<f64>, t: f64, intensity: f64 },
}
