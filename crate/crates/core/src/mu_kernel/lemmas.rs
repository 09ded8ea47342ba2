//! Measured constants for the auxiliary kernel bounds: the boundary bound on
//! `∂_j μ_A`, the convolution bound `|K∗μ_B| ≲ μ_B`, and the translation bound
//! `μ(x-y) ≤ C(1+|y|^{10d}) μ(x)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fft;
use crate::lattice_flow::graph::Adjacency;
use crate::mu_kernel::kernel::{displacement, MuKernel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConstant {
    pub set_size: usize,
    pub boundary_size: usize,
    /// `max |∂_j μ_A| / μ_{∂A}`; for empty boundaries, `max |∂_j μ_A|` itself.
    pub constant: f64,
    pub finite: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionConstant {
    pub kernel: usize,
    pub set_size: usize,
    /// `∫|K|(1+|y|^{10d})`.
    pub weight: f64,
    pub constant: f64,
    pub finite: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelLemmaReport {
    pub boundary: Vec<BoundaryConstant>,
    pub convolution: Vec<ConvolutionConstant>,
    pub translation: f64,
}

impl KernelLemmaReport {
    pub fn all_finite(&self) -> bool {
        self.boundary.iter().all(|b| b.finite)
            && self.convolution.iter().all(|c| c.finite)
            && self.translation.is_finite()
    }
}

/// Partial derivative along `axis`, computed spectrally.
pub fn spectral_derivative(f: &[f64], mu: &MuKernel, axis: usize) -> Vec<f64> {
    let grid = mu.grid();
    let mut c: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft::forward(&mut c, grid.dim(), grid.points());
    let m = grid.points();
    for (k, z) in c.iter_mut().enumerate() {
        let idx = grid.axis_indices(k)[axis];
        // the Nyquist mode has no consistent real derivative
        if 2 * idx == m {
            *z = Complex64::default();
            continue;
        }
        *z *= Complex64::new(0.0, grid.frequency(k)[axis]);
    }
    fft::inverse(&mut c, grid.dim(), m);
    c.iter().map(|z| z.re).collect()
}

fn weight_exponent(d: usize) -> i32 {
    10 * d as i32
}

pub fn verify_kernel_lemmas(
    mu: &MuKernel,
    sets: &[Vec<usize>],
    kernels: &[Vec<f64>],
) -> KernelLemmaReport {
    let g = mu.lattice();
    let grid = mu.grid();
    let d = grid.dim();

    let boundary = sets
        .par_iter()
        .map(|set| {
            let hood = g.expand(set);
            let mut inside = vec![false; g.num_sites()];
            for &a in set {
                inside[a] = true;
            }
            let bdry: Vec<usize> = hood.into_iter().filter(|&b| !inside[b]).collect();
            let mu_a = mu.set_function(set);
            let mu_b = mu.set_function(&bdry);
            let mut constant: f64 = 0.0;
            for axis in 0..d {
                let grad = spectral_derivative(&mu_a, mu, axis);
                for (x, gx) in grad.iter().enumerate() {
                    let r = if bdry.is_empty() { gx.abs() } else { gx.abs() / mu_b[x] };
                    constant = constant.max(r);
                }
            }
            let finite = if bdry.is_empty() { constant < 1e-8 } else { constant.is_finite() };
            BoundaryConstant {
                set_size: set.len(),
                boundary_size: bdry.len(),
                constant,
                finite,
            }
        })
        .collect();

    let p = weight_exponent(d);
    let mut convolution = Vec::new();
    for (ki, k) in kernels.iter().enumerate() {
        let weight: f64 = k
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let y2: f64 = displacement(grid, j).iter().map(|c| c * c).sum();
                v.abs() * (1.0 + y2.sqrt().powi(p))
            })
            .sum::<f64>()
            * grid.cell_volume();
        for set in sets.iter().filter(|s| !s.is_empty()) {
            let mu_b = mu.set_function(set);
            let conv = fft::convolve_real(k, &mu_b, d, grid.points(), grid.cell_volume());
            let constant = conv
                .iter()
                .zip(&mu_b)
                .map(|(c, m)| c.abs() / (m * weight))
                .fold(0.0, f64::max);
            convolution.push(ConvolutionConstant {
                kernel: ki,
                set_size: set.len(),
                weight,
                constant,
                finite: constant.is_finite(),
            });
        }
    }

    // sample y on a stride so the pair count stays manageable
    let n = grid.len();
    let stride = (n * n).div_ceil(1 << 24).max(1);
    let m = grid.points();
    let values = mu.values();
    let translation = (0..n)
        .into_par_iter()
        .map(|x| {
            let xi = grid.axis_indices(x);
            let mut best: f64 = 0.0;
            for y in (0..n).step_by(stride) {
                let yi = grid.axis_indices(y);
                let diff = (0..d).fold(0, |acc, a| acc * m + (xi[a] + m - yi[a]) % m);
                let y_norm = displacement(grid, y).iter().map(|c| c * c).sum::<f64>().sqrt();
                best = best.max(values[diff] / ((1.0 + y_norm.powi(p)) * values[x]));
            }
            best
        })
        .reduce(|| 0.0, f64::max);

    KernelLemmaReport {
        boundary,
        convolution,
        translation,
    }
}
