use serde::{Deserialize, Serialize};

use crate::lattice_flow::graph::{site_coords, LatticeGraph};
use crate::mu_kernel::MuError;
use crate::schrodinger::Grid;

/// Periodic images summed in each direction when evaluating `μ` on the torus.
const IMAGES: i64 = 2;

/// `μ = μ'_per(x/R) / p(x)` on a torus whose integer lattice is subdivided by
/// the field grid, with `μ'(x) = (1+|x|²)^{-5d}` and `p` the sum of all
/// lattice translates of `μ'_per(·/R)`. Translates by lattice sites sum to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuKernel {
    dim: usize,
    dilation: f64,
    sites_per_axis: usize,
    points_per_unit: usize,
    grid: Grid,
    /// `μ` at grid displacement `j·h` (row-major, wrapped).
    values: Vec<f64>,
    /// `p` on the fractional offsets of one unit cell.
    normalizer: Vec<f64>,
}

/// `(1+|x|²)^{-5d}`.
pub fn base_profile(x: &[f64]) -> f64 {
    let d = x.len() as i32;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (1.0 + r2).powi(-5 * d)
}

/// Integer side length and subdivision of the unit lattice, if the grid fits it.
pub fn lattice_fit(grid: &Grid) -> Result<(usize, usize), MuError> {
    let side = grid.side();
    let s = side.round();
    if (side - s).abs() > 1e-9 || s < 3.0 {
        return Err(MuError::Config(format!(
            "torus side {side} must be an integer ≥ 3 to carry the unit lattice"
        )));
    }
    let s = s as usize;
    if grid.points() % s != 0 || grid.points() / s < 4 {
        return Err(MuError::Config(format!(
            "{} points per axis do not subdivide {s} unit cells at least 4 times each",
            grid.points()
        )));
    }
    Ok((s, grid.points() / s))
}

pub fn build_mu(grid: &Grid, dilation: f64) -> Result<MuKernel, MuError> {
    if !(dilation.is_finite() && dilation >= 1.0) {
        return Err(MuError::Config(format!("dilation {dilation} must be ≥ 1")));
    }
    let (s, k) = lattice_fit(grid)?;
    let dim = grid.dim();
    let mut kernel = MuKernel {
        dim,
        dilation,
        sites_per_axis: s,
        points_per_unit: k,
        grid: grid.clone(),
        values: Vec::new(),
        normalizer: Vec::new(),
    };
    let h = grid.spacing();
    let cell = k.pow(dim as u32);
    kernel.normalizer = (0..cell)
        .map(|c| {
            let off: Vec<f64> = site_coords(c, dim, k).iter().map(|&i| i as f64 * h).collect();
            kernel.normalizer_at(&off)
        })
        .collect();
    kernel.values = (0..grid.len())
        .map(|j| {
            let idx = grid.axis_indices(j);
            // symmetric displacement keeps the image sum exactly even
            let x = displacement(grid, j);
            let cell_idx = (0..dim).fold(0, |acc, a| acc * k + idx[a] % k);
            kernel.periodized(&x) / kernel.normalizer[cell_idx]
        })
        .collect();
    Ok(kernel)
}

impl MuKernel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dilation(&self) -> f64 {
        self.dilation
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Lattice sites per axis of the torus.
    pub fn sites_per_axis(&self) -> usize {
        self.sites_per_axis
    }

    pub fn num_sites(&self) -> usize {
        self.sites_per_axis.pow(self.dim as u32)
    }

    /// Grid points per unit length.
    pub fn points_per_unit(&self) -> usize {
        self.points_per_unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lattice(&self) -> LatticeGraph {
        LatticeGraph::torus(self.dim, self.sites_per_axis).expect("side checked at build")
    }

    /// Flat grid index of lattice site `site`.
    pub fn site_grid_index(&self, site: usize) -> usize {
        let m = self.grid.points();
        site_coords(site, self.dim, self.sites_per_axis)
            .iter()
            .fold(0, |acc, &c| acc * m + c as usize * self.points_per_unit)
    }

    /// Lattice site whose unit cell `[a, a+1)^d` contains grid point `flat`.
    pub fn cell_of_grid_index(&self, flat: usize) -> usize {
        let idx = self.grid.axis_indices(flat);
        (0..self.dim).fold(0, |acc, a| acc * self.sites_per_axis + idx[a] / self.points_per_unit)
    }

    /// `Σ_k μ'((x - kL)/R)` over periodic images near `x` reduced to `[-L/2, L/2]`.
    fn periodized(&self, x: &[f64]) -> f64 {
        let l = self.sites_per_axis as f64;
        let width = (2 * IMAGES + 1) as usize;
        let count = width.pow(self.dim as u32);
        let mut acc = 0.0;
        let mut y = vec![0.0; self.dim];
        for c in 0..count {
            let shift = site_coords(c, self.dim, width);
            for a in 0..self.dim {
                let centered = x[a] - l * (x[a] / l).round();
                y[a] = (centered - (shift[a] - IMAGES) as f64 * l) / self.dilation;
            }
            acc += base_profile(&y);
        }
        acc
    }

    fn normalizer_at(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        let mut y = vec![0.0; self.dim];
        for site in 0..self.num_sites() {
            let a = site_coords(site, self.dim, self.sites_per_axis);
            for i in 0..self.dim {
                y[i] = x[i] - a[i] as f64;
            }
            acc += self.periodized(&y);
        }
        acc
    }

    /// `μ(x)` at an arbitrary point of the torus.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let l = self.sites_per_axis as f64;
        let wrapped: Vec<f64> = x.iter().map(|v| v.rem_euclid(l)).collect();
        self.periodized(&wrapped) / self.normalizer_at(&wrapped)
    }

    /// `∫μ` by the grid Riemann sum.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `μ_A` on the grid for a set of lattice sites.
    pub fn set_function(&self, set: &[usize]) -> Vec<f64> {
        if set.len() > 8 {
            let mut comb = vec![0.0; self.grid.len()];
            for &site in set {
                comb[self.site_grid_index(site)] = 1.0;
            }
            return crate::fft::convolve_real(&comb, &self.values, self.dim, self.grid.points(), 1.0);
        }
        let m = self.grid.points();
        let mut out = vec![0.0; self.grid.len()];
        for &site in set {
            let base = self.grid.axis_indices(self.site_grid_index(site));
            for (j, o) in out.iter_mut().enumerate() {
                let idx = self.grid.axis_indices(j);
                let src = (0..self.dim).fold(0, |acc, a| acc * m + (idx[a] + m - base[a]) % m);
                *o += self.values[src];
            }
        }
        out
    }
}

/// Torus displacement of grid index `j` from the origin, per axis in
/// `[-L/2, L/2)`.
pub fn displacement(grid: &Grid, j: usize) -> Vec<f64> {
    let m = grid.points();
    let h = grid.spacing();
    let idx = grid.axis_indices(j);
    (0..grid.dim())
        .map(|a| crate::fft::signed_index(idx[a], m) as f64 * h)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requires_lattice_compatible_grid() {
        assert!(build_mu(&Grid::new(1, 16.0, 64).unwrap(), 2.0).is_ok());
        assert!(build_mu(&Grid::new(1, 16.5, 64).unwrap(), 2.0).is_err());
        assert!(build_mu(&Grid::new(1, 16.0, 32).unwrap(), 2.0).is_err());
        assert!(build_mu(&Grid::new(1, 16.0, 64).unwrap(), 0.5).is_err());
    }

    #[test]
    fn partition_of_unity_on_grid() {
        let g = Grid::new(1, 16.0, 64).unwrap();
        let mu = build_mu(&g, 2.0).unwrap();
        let all: Vec<usize> = (0..16).collect();
        for v in mu.set_function(&all) {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!((mu.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eval_agrees_with_cache() {
        let g = Grid::new(2, 8.0, 32).unwrap();
        let mu = build_mu(&g, 2.0).unwrap();
        for j in [0, 5, 37, 500] {
            let x = g.position(j);
            assert!((mu.eval(&x) - mu.values()[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn even_and_positive() {
        let g = Grid::new(1, 16.0, 64).unwrap();
        let mu = build_mu(&g, 2.0).unwrap();
        for x in [0.3, 1.7, 5.25, 7.9] {
            assert!((mu.eval(&[x]) - mu.eval(&[-x])).abs() < 1e-15);
            assert!(mu.eval(&[x]) > 0.0);
        }
    }
}
