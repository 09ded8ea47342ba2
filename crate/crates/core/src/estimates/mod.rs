//! Desk-scale checks of the bilinear and multilinear estimates: frequency
//! coverings of the unit annulus, tube intersection volumes, the bilinear
//! ratio sweep with its tube-side sandwich, and the multilinear overlap
//! integrand.

pub mod bilinear;
pub mod covering;
pub mod intersection;
pub mod multilinear;

use thiserror::Error;

use crate::schrodinger::SchrodingerError;
use crate::tubes::TubeError;

pub use bilinear::{
    annulus_field, bilinear_ratio, bilinear_sweep, bilinear_via_tubes, default_time_steps,
    BilinearMeasurement, BilinearSweep, BilinearSweepConfig, BilinearTubeReport, PairRecord,
    PieceSummary, SweepRow, TubeSideOptions,
};
pub use covering::{annulus_covering, FrequencyCovering, Piece};
pub use intersection::{
    intersection_record, monte_carlo_volume, slice_overlap, tube_intersection_volume,
    IntersectionRecord,
};
pub use multilinear::{
    loglog_slope, multilinear_overlap, synthetic_families, wedge, CurveTube, OverlapOptions,
    OverlapReport, TubeFamily,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("families are not transverse: wedge {wedge:.3e} below {nu:.3e}")]
    Transversality { wedge: f64, nu: f64 },
    #[error(transparent)]
    Tube(#[from] TubeError),
    #[error(transparent)]
    Field(#[from] SchrodingerError),
}
