//! Lipschitz tube decompositions of frequency-localized free Schrödinger
//! waves on periodic grids, together with numerical checks of the estimates
//! that such decompositions support.

pub mod estimates;
pub mod fft;
pub mod lattice_flow;
pub mod mu_kernel;
pub mod schrodinger;
pub mod tubes;
