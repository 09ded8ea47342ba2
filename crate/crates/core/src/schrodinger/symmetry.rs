//! Galilean boost combined with parabolic rescaling.
//!
//! For a solution `u` with spectrum in `B_ρ(ξ)`, the forward map is
//! `u'(x, t') = e^{-i(ξ·x/ρ + |ξ|² t'/ρ²)} u(x/ρ + 2ξ t'/ρ², t'/ρ²)`,
//! again a solution, with spectrum in `B_1(0)`. A field of side `L` at time `s`
//! becomes a field of side `ρL` at time `ρ² s`. On the grid the map is an exact
//! shift of Fourier indices, `k' = k - k_ξ`, so `ξ` must lie on the frequency
//! lattice of the input torus.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fft::{signed_index, unsigned_index};
use crate::schrodinger::field::WaveField;
use crate::schrodinger::grid::{FrequencyWindow, Grid};
use crate::schrodinger::SchrodingerError;

/// Largest share of spectral energy that may fall off the target grid.
pub const MAX_LOST_ENERGY: f64 = 1e-20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `B_ρ(ξ) → B_1(0)`.
    Forward,
    /// `B_1(0) → B_ρ(ξ)`.
    Inverse,
}

fn lattice_index(xi: &[f64], side: f64) -> Result<Vec<i64>, SchrodingerError> {
    xi.iter()
        .map(|&x| {
            let k = x * side / std::f64::consts::TAU;
            let r = k.round();
            if (k - r).abs() > 1e-9 * r.abs().max(1.0) {
                Err(SchrodingerError::Config(format!(
                    "boost {x} is not a multiple of the frequency step {:.6}",
                    std::f64::consts::TAU / side
                )))
            } else {
                Ok(r as i64)
            }
        })
        .collect()
}

pub fn galilean_rescale(
    u: &WaveField,
    xi: &[f64],
    rho: f64,
    direction: Direction,
) -> Result<WaveField, SchrodingerError> {
    let grid = u.grid();
    let d = grid.dim();
    if xi.len() != d {
        return Err(SchrodingerError::Config("boost dimension differs from grid".into()));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(SchrodingerError::Config(format!("scale {rho} must be positive")));
    }
    if rho == 1.0 && xi.iter().all(|&x| x == 0.0) {
        return Ok(u.clone());
    }
    let m = grid.points();
    let (out_side, sign, out_time) = match direction {
        Direction::Forward => (grid.side() * rho, -1, u.time() * rho * rho),
        Direction::Inverse => (grid.side() / rho, 1, u.time() / (rho * rho)),
    };
    let out_grid = Grid::new(d, out_side, m)?;
    // the boost lives on the lattice of the unscaled torus
    let unscaled_side = match direction {
        Direction::Forward => grid.side(),
        Direction::Inverse => out_side,
    };
    let k_xi = lattice_index(xi, unscaled_side)?;
    let xi_sq: f64 = xi.iter().map(|x| x * x).sum();
    // time of the unscaled solution
    let s = match direction {
        Direction::Forward => u.time(),
        Direction::Inverse => out_time,
    };
    let step = std::f64::consts::TAU / unscaled_side;

    let spec = u.spectrum();
    let mut out = vec![Complex64::default(); spec.len()];
    let mut total = 0.0;
    let mut lost = 0.0;
    for (flat, c) in spec.iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        if e == 0.0 {
            continue;
        }
        let idx = grid.axis_indices(flat);
        let mut target = 0usize;
        let mut representable = true;
        // frequency index of the unscaled solution, for the phase
        let mut kappa_dot_xi = 0.0;
        for a in 0..d {
            let k = signed_index(idx[a], m);
            let k_new = k + sign * k_xi[a];
            let k_unscaled = if sign < 0 { k } else { k_new };
            kappa_dot_xi += k_unscaled as f64 * step * xi[a];
            match unsigned_index(k_new, m) {
                Some(i) => target = target * m + i,
                None => representable = false,
            }
        }
        if !representable {
            lost += e;
            continue;
        }
        let phase = (2.0 * kappa_dot_xi * s - xi_sq * s) * -(sign as f64);
        out[target] = c * Complex64::from_polar(1.0, phase);
    }
    if total > 0.0 && lost / total > MAX_LOST_ENERGY {
        return Err(SchrodingerError::Resolution { lost: lost / total });
    }
    let w = u.window();
    let window = match direction {
        Direction::Forward => FrequencyWindow {
            center: w.center.iter().zip(xi).map(|(c, x)| (c - x) / rho).collect(),
            radius: w.radius / rho,
        },
        Direction::Inverse => FrequencyWindow {
            center: w.center.iter().zip(xi).map(|(c, x)| c * rho + x).collect(),
            radius: w.radius * rho,
        },
    };
    if !out_grid.resolves(&window) {
        return Err(SchrodingerError::Config(format!(
            "target window {:?} radius {} not resolved on side {}",
            window.center, window.radius, out_side
        )));
    }
    WaveField::from_spectrum(out_grid, out, window, out_time)
}
