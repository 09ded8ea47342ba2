use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::estimates::EstimateError;
use crate::schrodinger::{FrequencyWindow, WaveField};

/// Share of the ball radius used when laying out centers, so that every point
/// of the annulus sits strictly inside some ball and the bumps below are
/// positive there.
const LAYOUT_MARGIN: f64 = 0.9;

/// Centers `ξ_i ∈ A₁ = {1/2 ≤ |ξ| ≤ 2}` whose balls of radius `radius` cover
/// `A₁`, with the smooth partition of unity `χ_i = ψ_i / Σ_j ψ_j`,
/// `ψ_i(ξ) = φ(|ξ - ξ_i| / radius)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyCovering {
    pub dim: usize,
    pub speed: f64,
    pub radius: f64,
    pub centers: Vec<Vec<f64>>,
}

/// A covering piece `u_i` of a field localized to `A_N`, with its frequency
/// ball snapped to the frequency lattice of the torus.
#[derive(Clone, Debug)]
pub struct Piece {
    pub index: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub field: WaveField,
}

fn bump(s: f64) -> f64 {
    if s < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// Balls of radius `1/(10V)` (capped at `1/4` so they stay inside
/// `A*₁ = {1/4 ≤ |ξ| ≤ 4}`). One dimension uses evenly spaced centers on each
/// half-line; two dimensions use rings of annular sectors.
pub fn annulus_covering(dim: usize, speed: f64) -> Result<FrequencyCovering, EstimateError> {
    if !(speed.is_finite() && speed > 0.0) {
        return Err(EstimateError::Config(format!("speed {speed} must be positive")));
    }
    let radius = (0.1 / speed).min(0.25);
    let reach = LAYOUT_MARGIN * radius;
    let mut centers = Vec::new();
    match dim {
        1 => {
            let n = (1.5 / (2.0 * reach)).ceil() as usize;
            let step = 1.5 / n as f64;
            for sign in [-1.0, 1.0] {
                for k in 0..n {
                    centers.push(vec![sign * (0.5 + (k as f64 + 0.5) * step)]);
                }
            }
        }
        2 => {
            // a sector of radial width Δ and outer arc s lies within
            // sqrt((Δ/2)² + (s/2)²) of its center point
            let side = std::f64::consts::SQRT_2 * reach;
            let rings = (1.5 / side).ceil() as usize;
            let dr = 1.5 / rings as f64;
            for k in 0..rings {
                let r = 0.5 + (k as f64 + 0.5) * dr;
                let outer = r + dr / 2.0;
                let m = (std::f64::consts::TAU * outer / side).ceil() as usize;
                let offset = if k % 2 == 0 { 0.0 } else { 0.5 };
                for j in 0..m {
                    let a = std::f64::consts::TAU * (j as f64 + offset) / m as f64;
                    centers.push(vec![r * a.cos(), r * a.sin()]);
                }
            }
        }
        _ => return Err(EstimateError::Config(format!("dimension {dim} not supported"))),
    }
    Ok(FrequencyCovering {
        dim,
        speed,
        radius,
        centers,
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

impl FrequencyCovering {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// `(100V)^d`.
    pub fn count_bound(&self) -> f64 {
        (100.0 * self.speed).powi(self.dim as i32)
    }

    /// Distance from `xi` to the nearest center, in units of the radius.
    pub fn coverage(&self, xi: &[f64]) -> f64 {
        self.centers
            .iter()
            .map(|c| dist(c, xi))
            .fold(f64::INFINITY, f64::min)
            / self.radius
    }

    /// Whether every ball lies in `A*₁`.
    pub fn contained(&self) -> bool {
        self.centers.iter().all(|c| {
            let r = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            r - self.radius >= 0.25 - 1e-12 && r + self.radius <= 4.0 + 1e-12
        })
    }

    /// Largest coverage value over a regular scan of `A₁` with `samples`
    /// points per unit length; below one means the scan is covered.
    pub fn scan(&self, samples: usize) -> f64 {
        let h = 1.0 / samples.max(1) as f64;
        let n = (4.0 / h).round() as i64;
        let mut worst: f64 = 0.0;
        let in_annulus = |x: &[f64]| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            (0.5..=2.0).contains(&r)
        };
        match self.dim {
            1 => {
                for i in -n..=n {
                    let x = [i as f64 * h];
                    if in_annulus(&x) {
                        worst = worst.max(self.coverage(&x));
                    }
                }
            }
            _ => {
                for i in -n..=n {
                    for j in -n..=n {
                        let x = [i as f64 * h, j as f64 * h];
                        if in_annulus(&x) {
                            worst = worst.max(self.coverage(&x));
                        }
                    }
                }
            }
        }
        worst
    }

    /// `χ_i(ξ)` for every center; all zeros outside the union of the balls.
    pub fn partition(&self, xi: &[f64]) -> Vec<f64> {
        let psi: Vec<f64> = self
            .centers
            .iter()
            .map(|c| bump(dist(c, xi) / self.radius))
            .collect();
        let total: f64 = psi.iter().sum();
        if total == 0.0 {
            return psi;
        }
        psi.into_iter().map(|p| p / total).collect()
    }

    /// Splits a field with spectrum in `A_N` into `u_i` with `û_i(κ) =
    /// χ_i(κ/N) û(κ)`. Pieces without energy are dropped. Each piece's ball is
    /// `B_{N r}(N ξ_i)` with the center rounded to the frequency lattice and
    /// the radius grown by the rounding error.
    pub fn split(&self, u: &WaveField, scale: f64) -> Result<Vec<Piece>, EstimateError> {
        let grid = u.grid();
        if grid.dim() != self.dim {
            return Err(EstimateError::Config("covering and field dimensions differ".into()));
        }
        if !(scale > 0.0) {
            return Err(EstimateError::Config(format!("scale {scale} must be positive")));
        }
        let spec = u.spectrum();
        let mut pieces = vec![vec![Complex64::default(); spec.len()]; self.len()];
        let mut energy = vec![0.0; self.len()];
        for (k, c) in spec.iter().enumerate() {
            if *c == Complex64::default() {
                continue;
            }
            let xi: Vec<f64> = grid.frequency(k).iter().map(|f| f / scale).collect();
            for (i, chi) in self.partition(&xi).into_iter().enumerate() {
                if chi > 0.0 {
                    pieces[i][k] = c * chi;
                    energy[i] += (c * chi).norm_sqr();
                }
            }
        }
        let step = grid.frequency_step();
        let snap = 0.5 * step * (self.dim as f64).sqrt();
        let mut out = Vec::new();
        for (i, coeffs) in pieces.into_iter().enumerate() {
            if energy[i] == 0.0 {
                continue;
            }
            let center: Vec<f64> = self.centers[i]
                .iter()
                .map(|&x| (scale * x / step).round() * step)
                .collect();
            let radius = scale * self.radius + snap;
            let window = FrequencyWindow::new(center.clone(), radius)?;
            let field = WaveField::from_spectrum(grid.clone(), coeffs, window, u.time())?;
            out.push(Piece {
                index: i,
                center,
                radius,
                field,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_layout() {
        let c = annulus_covering(1, 1.0).unwrap();
        assert!(c.len() as f64 <= c.count_bound());
        assert!(c.contained());
        assert!(c.scan(2000) < LAYOUT_MARGIN + 1e-9);
        let mut pos: Vec<f64> = c.centers.iter().map(|x| x[0]).filter(|&x| x > 0.0).collect();
        pos.sort_by(f64::total_cmp);
        for w in pos.windows(2) {
            assert!(w[1] - w[0] <= 0.2 + 1e-12);
        }
    }

    #[test]
    fn two_dimensional_layout() {
        for v in [0.5, 1.0, 2.0] {
            let c = annulus_covering(2, v).unwrap();
            assert!(c.len() as f64 <= c.count_bound());
            assert!(c.contained());
            assert!(c.scan(100) < LAYOUT_MARGIN + 1e-9, "V = {v}");
        }
    }

    #[test]
    fn partition_sums_to_one_on_the_annulus() {
        let c = annulus_covering(2, 0.5).unwrap();
        for k in 0..500 {
            let r = 0.5 + 1.5 * (k as f64 / 499.0);
            let a = 0.37 * k as f64;
            let s: f64 = c.partition(&[r * a.cos(), r * a.sin()]).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_speeds_keep_containment() {
        let c = annulus_covering(1, 0.1).unwrap();
        assert_eq!(c.radius, 0.25);
        assert!(c.contained());
        assert!(c.scan(1000) < 1.0);
    }
}
