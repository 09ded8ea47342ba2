//! The locally-constant kernel `μ`, lattice mass weights, and numerical checks
//! of the locally-constant and finite-speed inequalities.

pub mod kernel;
pub mod lemmas;
pub mod verify;
pub mod weights;

use thiserror::Error;

use crate::lattice_flow::FlowError;
use crate::schrodinger::SchrodingerError;

pub use kernel::{build_mu, MuKernel};
pub use lemmas::{verify_kernel_lemmas, KernelLemmaReport};
pub use verify::{calibrate_tau, verify_fs, verify_lc, Calibration, FsOptions, FsReport};
pub use weights::{mass_weights, site_masses, MassWeights};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MuError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("layer {layer} total drifted by {drift:.3e} from the conserved value")]
    Integrity { layer: usize, drift: f64 },
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error(transparent)]
    Field(#[from] SchrodingerError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}
