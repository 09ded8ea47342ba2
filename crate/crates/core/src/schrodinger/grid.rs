use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fft::signed_index;
use crate::schrodinger::SchrodingerError;

/// Square periodic grid: `M` points per axis on a torus of side `L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    side: f64,
    points: usize,
}

impl Grid {
    pub fn new(dim: usize, side: f64, points: usize) -> Result<Self, SchrodingerError> {
        if !(1..=2).contains(&dim) {
            return Err(SchrodingerError::Config(format!("dimension {dim} not in {{1, 2}}")));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(SchrodingerError::Config(format!("side length {side} must be positive")));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(SchrodingerError::Config(format!(
                "points per axis {points} must be a power of two ≥ 16"
            )));
        }
        Ok(Self { dim, side, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.points as f64
    }

    /// `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Spacing of the frequency lattice, `2π/L`.
    pub fn frequency_step(&self) -> f64 {
        2.0 * PI / self.side
    }

    pub fn nyquist(&self) -> f64 {
        PI * self.points as f64 / self.side
    }

    /// Per-axis indices of a flat row-major index.
    pub fn axis_indices(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.points, flat % self.points],
        }
    }

    pub fn position(&self, flat: usize) -> Vec<f64> {
        let idx = self.axis_indices(flat);
        (0..self.dim).map(|a| idx[a] as f64 * self.spacing()).collect()
    }

    /// Signed integer frequency vector of a flat index.
    pub fn frequency_index(&self, flat: usize) -> Vec<i64> {
        let idx = self.axis_indices(flat);
        (0..self.dim).map(|a| signed_index(idx[a], self.points)).collect()
    }

    pub fn frequency(&self, flat: usize) -> Vec<f64> {
        let step = self.frequency_step();
        self.frequency_index(flat).into_iter().map(|k| k as f64 * step).collect()
    }

    pub fn frequency_norm_sq(&self, flat: usize) -> f64 {
        self.frequency(flat).iter().map(|k| k * k).sum()
    }

    /// Whether the window is resolved with room for the products formed from
    /// it: the Nyquist frequency must exceed twice its outermost frequency.
    pub fn resolves(&self, w: &FrequencyWindow) -> bool {
        w.center.len() == self.dim && self.nyquist() > 2.0 * (w.center_norm() + w.radius)
    }
}

/// Ball `B_ρ(ξ)` in frequency space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyWindow {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl FrequencyWindow {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self, SchrodingerError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(SchrodingerError::Config(format!("window radius {radius} must be positive")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(SchrodingerError::Config("window center must be finite".into()));
        }
        Ok(Self { center, radius })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            center: vec![0.0; dim],
            radius: 1.0,
        }
    }

    pub fn center_norm(&self) -> f64 {
        self.center.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn distance(&self, freq: &[f64]) -> f64 {
        freq.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, freq: &[f64]) -> bool {
        self.distance(freq) <= self.radius
    }
}
