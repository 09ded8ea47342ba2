use serde::{Deserialize, Serialize};

use crate::fft;
use crate::lattice_flow::graph::Adjacency;
use crate::lattice_flow::weights::{QuantizationReport, WeightLayers};
use crate::mu_kernel::kernel::MuKernel;
use crate::mu_kernel::MuError;
use crate::schrodinger::field::{intensity, mass, Evolution, WaveField};

/// Largest relative drift of a layer total from `|H|·mass` before the
/// quadrature is considered broken.
pub const MAX_DRIFT: f64 = 1e-6;

/// `m(a, t_j) = ∫|u_{t_j}|² μ_{a+H}` on layers `t_j = (j - N/2)τ`, both as
/// computed and after renormalization and quantization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassWeights {
    pub tau: f64,
    pub mass: f64,
    /// Layer times, `(j - N/2)τ`.
    pub times: Vec<f64>,
    /// Computed weights before renormalization.
    pub raw: Vec<Vec<f64>>,
    /// Totals of the raw layers.
    pub raw_totals: Vec<f64>,
    pub layers: WeightLayers,
    pub quantization: QuantizationReport,
}

impl MassWeights {
    pub fn num_layers(&self) -> usize {
        self.times.len()
    }

    /// Largest relative deviation of a raw layer total from `|H|·mass`.
    pub fn max_drift(&self, stencil: usize) -> f64 {
        let target = stencil as f64 * self.mass;
        if target == 0.0 {
            return 0.0;
        }
        self.raw_totals
            .iter()
            .map(|t| (t - target).abs() / target)
            .fold(0.0, f64::max)
    }
}

/// `∫|u|² μ_a` for every lattice site `a`.
pub fn site_masses(u: &WaveField, mu: &MuKernel) -> Vec<f64> {
    site_masses_from_intensity(&intensity(u), mu)
}

pub(crate) fn site_masses_from_intensity(density: &[f64], mu: &MuKernel) -> Vec<f64> {
    let grid = mu.grid();
    let conv = fft::convolve_real(density, mu.values(), grid.dim(), grid.points(), grid.cell_volume());
    (0..mu.num_sites())
        .map(|a| conv[mu.site_grid_index(a)].max(0.0))
        .collect()
}

/// `Σ_{h∈H} c(a+h)`.
pub fn stencil_sum<G: Adjacency + ?Sized>(c: &[f64], g: &G) -> Vec<f64> {
    (0..g.num_sites())
        .map(|a| g.out_neighbors(a).iter().map(|&b| c[b]).sum())
        .collect()
}

pub fn mass_weights(
    u0: &WaveField,
    mu: &MuKernel,
    tau: f64,
    n_layers: usize,
    denominator: u64,
) -> Result<MassWeights, MuError> {
    if u0.grid() != mu.grid() {
        return Err(MuError::Config("field and kernel live on different grids".into()));
    }
    if n_layers < 2 || n_layers % 2 != 0 {
        return Err(MuError::Config(format!("layer count {n_layers} must be even and ≥ 2")));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(MuError::Config(format!("time step {tau} must be positive")));
    }
    let g = mu.lattice();
    let m0 = mass(u0);
    let evolution = Evolution::new(u0);
    let half = (n_layers / 2) as f64;
    let times: Vec<f64> = (0..n_layers)
        .map(|j| u0.time() + (j as f64 - half) * tau)
        .collect();
    let raw: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        times
            .par_iter()
            .map(|&t| {
                let c = site_masses_from_intensity(&evolution.intensity_at(t), mu);
                stencil_sum(&c, &g)
            })
            .collect()
    };
    let raw_totals: Vec<f64> = raw.iter().map(|l| l.iter().sum()).collect();
    let target = g.stencil_size() as f64 * m0;
    for (j, &t) in raw_totals.iter().enumerate() {
        let drift = if target > 0.0 { (t - target).abs() / target } else { t.abs() };
        if drift > MAX_DRIFT {
            return Err(MuError::Integrity { layer: j, drift });
        }
    }
    let renormalized: Vec<Vec<f64>> = raw
        .iter()
        .zip(&raw_totals)
        .map(|(l, &t)| {
            if t > 0.0 {
                l.iter().map(|w| w * target / t).collect()
            } else {
                l.clone()
            }
        })
        .collect();
    let target_num = (target * denominator as f64).round() as u64;
    let (layers, quantization) = WeightLayers::quantize(&renormalized, denominator, target_num)?;
    Ok(MassWeights {
        tau,
        mass: m0,
        times,
        raw,
        raw_totals,
        layers,
        quantization,
    })
}
