//! Exact layered flows on a periodic lattice and the path measures they induce.

pub mod conservation;
pub mod ensemble;
pub mod graph;
pub mod io;
pub mod layered;
pub mod network;
pub mod weights;

use thiserror::Error;

pub use conservation::{verify_local_conservation, ConservationMode, ConservationReport};
pub use ensemble::{enumerate_paths, path_ensemble, PathEnsemble, WeightedPath};
pub use graph::{h_offsets, Adjacency, LatticeGraph};
pub use layered::{
    conservation_sides, layered_decomposition, one_layer_flow, LayerFlow, LayeredFlow,
    LayeredOptions, SlackEvent,
};
pub use network::{build_flow_network, max_flow, CapacityEdge, FlowNetwork, MaxFlow};
pub use weights::{QuantizationReport, WeightLayers, DEFAULT_DENOMINATOR};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("structural error: {0}")]
    Structure(String),
    #[error("layer {layer} total {found} differs from {expected}")]
    NotConserved {
        layer: usize,
        expected: u128,
        found: u128,
    },
    #[error("transition {layer} infeasible: set {set:?} carries {lhs} but its neighborhood only {rhs}")]
    Infeasible {
        layer: usize,
        set: Vec<usize>,
        lhs: u128,
        rhs: u128,
    },
    #[error("transition {layer}: {side}-marginal mismatch")]
    Marginal { layer: usize, side: &'static str },
    #[error("path enumeration exceeded cap of {cap} paths")]
    PathExplosion { cap: usize },
}

impl FlowError {
    /// Shifts the layer index of a single-transition error to transition `i`.
    pub fn at_layer(self, i: usize) -> Self {
        match self {
            FlowError::NotConserved {
                layer,
                expected,
                found,
            } => FlowError::NotConserved {
                layer: layer + i,
                expected,
                found,
            },
            FlowError::Infeasible {
                layer,
                set,
                lhs,
                rhs,
            } => FlowError::Infeasible {
                layer: layer + i,
                set,
                lhs,
                rhs,
            },
            FlowError::Marginal { layer, side } => FlowError::Marginal {
                layer: layer + i,
                side,
            },
            other => other,
        }
    }
}
