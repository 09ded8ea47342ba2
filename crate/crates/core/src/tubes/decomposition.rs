use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::lattice_flow::graph::{coords_to_site, site_coords, Adjacency, LatticeGraph};
use crate::lattice_flow::{
    enumerate_paths, layered_decomposition, path_ensemble, LayeredOptions, PathEnsemble,
    SlackEvent, DEFAULT_DENOMINATOR,
};
use crate::mu_kernel::{build_mu, mass_weights, MuKernel};
use crate::schrodinger::{galilean_rescale, Direction, Grid, WaveField};
use crate::tubes::slice::CoverSlice;
use crate::tubes::tube::{torus_delta, Tube};
use crate::tubes::TubeError;

/// `C_d` in the speed limit `V = C_d/τ`: the ℓ² length of the longest step in `H`.
pub fn speed_constant(dim: usize) -> f64 {
    3.0 * (dim as f64).sqrt()
}

/// Default tube radius in lattice units, `10d`.
pub fn default_radius(dim: usize) -> f64 {
    10.0 * dim as f64
}

/// `N = ⌈2R/τ⌉`, rounded up to the next even number.
pub fn layer_count(r_time: f64, tau: f64) -> usize {
    let n = (2.0 * r_time / tau - 1e-12).ceil().max(1.0) as usize;
    n + n % 2
}

/// Physical coordinates in terms of the computational frame:
/// `t = t'/ρ²`, `x = x'/ρ + 2ξ t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub xi: Vec<f64>,
    pub rho: f64,
}

impl Frame {
    pub fn identity(dim: usize) -> Self {
        Self {
            xi: vec![0.0; dim],
            rho: 1.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rho == 1.0 && self.xi.iter().all(|&x| x == 0.0)
    }

    pub fn to_physical_time(&self, t: f64) -> f64 {
        t / (self.rho * self.rho)
    }

    pub fn to_frame(&self, x: &[f64], t: f64) -> (Vec<f64>, f64) {
        let xf = x
            .iter()
            .zip(&self.xi)
            .map(|(a, v)| self.rho * (a - 2.0 * v * t))
            .collect();
        (xf, self.rho * self.rho * t)
    }

    pub fn to_physical(&self, x: &[f64], tf: f64) -> (Vec<f64>, f64) {
        let t = self.to_physical_time(tf);
        let xp = x
            .iter()
            .zip(&self.xi)
            .map(|(a, v)| a / self.rho + 2.0 * v * t)
            .collect();
        (xp, t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposeOptions {
    pub denominator: u64,
    /// Sink-capacity inflation tried on infeasible transitions.
    pub slack: Option<f64>,
    /// Tube radius in lattice units of the computational frame.
    pub radius: Option<f64>,
    /// Dilation of `μ` used when the kernel is built internally.
    pub dilation: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            denominator: DEFAULT_DENOMINATOR,
            slack: Some(1e-6),
            radius: None,
            dilation: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tau: f64,
    pub r_time: f64,
    pub grid_side: f64,
    pub grid_points: usize,
    pub denominator: u64,
    /// Mass of the field in the computational frame.
    pub frame_mass: f64,
    pub slack_events: Vec<SlackEvent>,
    pub max_quantization_residue: u64,
    /// Largest relative drift of a layer total before renormalization.
    pub max_layer_drift: f64,
}

/// Tube decomposition held implicitly as a path ensemble on the lattice of a
/// computational frame. Layer `j` sits at frame time `(j - N/2)τ`; tubes stay
/// put after the last layer until `Nτ/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeDecomposition {
    dim: usize,
    lattice_side: usize,
    tau: f64,
    radius: f64,
    frame: Frame,
    layer_times: Vec<f64>,
    ensemble: PathEnsemble,
    /// `Z·P(ν_j = u, ν_{j+1} = v)` per transition, from the chain's forward pass.
    pair_marginals: Vec<Vec<Vec<u64>>>,
    provenance: Provenance,
}

pub fn decompose(
    u0: &WaveField,
    mu: &MuKernel,
    tau: f64,
    r_time: f64,
    opts: &DecomposeOptions,
) -> Result<TubeDecomposition, TubeError> {
    if !(r_time.is_finite() && r_time > 0.0) {
        return Err(TubeError::Config(format!("time range {r_time} must be positive")));
    }
    let n = layer_count(r_time, tau);
    let mw = mass_weights(u0, mu, tau, n, opts.denominator)?;
    let g = mu.lattice();
    let lf = layered_decomposition(
        &mw.layers,
        &g,
        LayeredOptions { slack: opts.slack },
    )?;
    let ensemble = path_ensemble(&lf, lf.weights(), &g)?;
    let pair_marginals = ensemble.integral_pair_marginals()?;
    let dim = mu.dim();
    Ok(TubeDecomposition {
        dim,
        lattice_side: mu.sites_per_axis(),
        tau,
        radius: opts.radius.unwrap_or_else(|| default_radius(dim)),
        frame: Frame::identity(dim),
        layer_times: mw.times.clone(),
        ensemble,
        pair_marginals,
        provenance: Provenance {
            tau,
            r_time,
            grid_side: u0.grid().side(),
            grid_points: u0.grid().points(),
            denominator: opts.denominator,
            frame_mass: mw.mass,
            slack_events: lf.slack_events().to_vec(),
            max_quantization_residue: mw.quantization.max_abs_residue(),
            max_layer_drift: mw.max_drift(g.stencil_size()),
        },
    })
}

/// Wraps an existing path ensemble on the `d`-dimensional torus lattice as a
/// decomposition with layers at `(j - N/2)τ`.
pub fn from_ensemble(
    ensemble: PathEnsemble,
    dim: usize,
    tau: f64,
    radius: f64,
    frame: Frame,
    provenance: Provenance,
) -> Result<TubeDecomposition, TubeError> {
    let sites = ensemble.num_sites();
    let side = (sites as f64).powf(1.0 / dim as f64).round() as usize;
    if dim == 0 || side.pow(dim as u32) != sites || ensemble.num_layers() == 0 {
        return Err(TubeError::Config(format!(
            "{sites} sites do not form a {dim}-dimensional torus"
        )));
    }
    if !(tau > 0.0 && radius > 0.0 && frame.rho > 0.0) || frame.xi.len() != dim {
        return Err(TubeError::Config("invalid time step, radius or frame".into()));
    }
    let n = ensemble.num_layers();
    let layer_times = (0..n).map(|j| (j as f64 - (n / 2) as f64) * tau).collect();
    let pair_marginals = ensemble.integral_pair_marginals()?;
    Ok(TubeDecomposition {
        dim,
        lattice_side: side,
        tau,
        radius,
        frame,
        layer_times,
        ensemble,
        pair_marginals,
        provenance,
    })
}

/// Scale `ρ' ≥ ρ` for which the rescaled torus side `ρ'L` divides the grid into
/// whole unit cells (a power of two, since `M` is).
pub fn effective_scale(grid: &Grid, rho: f64) -> Result<f64, TubeError> {
    let target = grid.side() * rho;
    let side = (target - 1e-9).max(1.0).ceil() as usize;
    let side = side.next_power_of_two();
    if grid.points() % side != 0 || grid.points() / side < 4 {
        return Err(TubeError::Config(format!(
            "rescaled torus of side {side} is not resolved by {} points per axis",
            grid.points()
        )));
    }
    Ok(side as f64 / grid.side())
}

/// Decomposes a field with spectrum in `B_ρ(ξ)`: boost and rescale it onto the
/// unit band, decompose there, and keep the map back to physical coordinates.
/// Tubes come back with radius `r/ρ'` and velocities within `Vρ'` of `2ξ`,
/// where `ρ' ≥ ρ` is the smallest scale fitting the grid.
pub fn scaled_decompose(
    u0: &WaveField,
    xi: &[f64],
    rho: f64,
    tau: f64,
    r_time: f64,
    opts: &DecomposeOptions,
) -> Result<TubeDecomposition, TubeError> {
    let rho_eff = effective_scale(u0.grid(), rho)?;
    let frame_field = galilean_rescale(u0, xi, rho_eff, Direction::Forward)?;
    let mu = build_mu(frame_field.grid(), opts.dilation)?;
    let frame_range = r_time * rho_eff * rho_eff;
    let mut dec = decompose(&frame_field, &mu, tau, frame_range, opts)?;
    dec.frame = Frame {
        xi: xi.to_vec(),
        rho: rho_eff,
    };
    Ok(dec)
}

impl TubeDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn ensemble(&self) -> &PathEnsemble {
        &self.ensemble
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn lattice(&self) -> LatticeGraph {
        LatticeGraph::torus(self.dim, self.lattice_side).expect("validated at construction")
    }

    pub fn lattice_side(&self) -> usize {
        self.lattice_side
    }

    pub fn num_layers(&self) -> usize {
        self.layer_times.len()
    }

    /// Frame times of the layers.
    pub fn layer_times(&self) -> &[f64] {
        &self.layer_times
    }

    /// Frame time at which the tubes end, `Nτ/2`.
    pub fn end_time(&self) -> f64 {
        self.layer_times[0] + self.tau * self.num_layers() as f64
    }

    /// Physical time range covered.
    pub fn time_range(&self) -> (f64, f64) {
        (
            self.frame.to_physical_time(self.layer_times[0]),
            self.frame.to_physical_time(self.end_time()),
        )
    }

    /// Radius in the computational frame.
    pub fn frame_radius(&self) -> f64 {
        self.radius
    }

    pub fn radius(&self) -> f64 {
        self.radius / self.frame.rho
    }

    /// Frame speed limit `V = C_d/τ`.
    pub fn speed_limit(&self) -> f64 {
        speed_constant(self.dim) / self.tau
    }

    /// Physical torus side.
    pub fn period(&self) -> f64 {
        self.lattice_side as f64 / self.frame.rho
    }

    pub fn denominator(&self) -> u64 {
        self.ensemble.denominator()
    }

    /// `Z = Σ_p α(p)` in numerator units.
    pub fn total_weight(&self) -> u64 {
        self.ensemble.normalizer()
    }

    pub fn pair_marginals(&self) -> &[Vec<Vec<u64>>] {
        &self.pair_marginals
    }

    fn layer_of(&self, tf: f64) -> Result<(usize, f64), TubeError> {
        let lo = self.layer_times[0];
        let hi = self.end_time();
        let slop = 1e-12 * self.tau;
        if !(tf >= lo - slop && tf <= hi + slop) {
            let (plo, phi) = self.time_range();
            return Err(TubeError::OutOfRange {
                t: self.frame.to_physical_time(tf),
                lo: plo,
                hi: phi,
            });
        }
        let n = self.num_layers();
        let j = (((tf - lo) / self.tau).floor().max(0.0) as usize).min(n - 1);
        let s = ((tf - self.layer_times[j]) / self.tau).clamp(0.0, 1.0);
        Ok((j, s))
    }

    /// `f(x,t) = Σ_p α(p) 1_{T_{γ_p,r}}(x,t)` in numerator units, at physical
    /// points. Computed from the pair marginals of the chain: on each time
    /// slab only the two endpoints of a path matter.
    pub fn evaluate_cover(&self, points: &[(Vec<f64>, f64)]) -> Result<Vec<u128>, TubeError> {
        use rayon::prelude::*;
        let g = self.lattice();
        let coords: Vec<Vec<f64>> = (0..g.num_sites())
            .map(|a| site_coords(a, self.dim, self.lattice_side).iter().map(|&c| c as f64).collect())
            .collect();
        let steps: Vec<Vec<Vec<f64>>> = (0..g.num_sites())
            .map(|u| {
                g.out_neighbors(u)
                    .iter()
                    .map(|&v| g.step(u, v).unwrap().iter().map(|&h| h as f64).collect())
                    .collect()
            })
            .collect();
        points
            .par_iter()
            .map(|(x, t)| {
                let (xf, tf) = self.frame.to_frame(x, *t);
                let (j, s) = self.layer_of(tf)?;
                Ok(self.cover_at(&g, &coords, &steps, &xf, j, s, tf))
            })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn cover_at(
        &self,
        g: &LatticeGraph,
        coords: &[Vec<f64>],
        steps: &[Vec<Vec<f64>>],
        xf: &[f64],
        j: usize,
        s: f64,
        tf: f64,
    ) -> u128 {
        let period = self.lattice_side as f64;
        let r2 = self.radius * self.radius;
        let reach = self.radius + (self.dim as f64).sqrt() + 1e-9;
        let last = j + 1 == self.num_layers() || tf >= self.layer_times[self.num_layers() - 1];
        let mut acc = 0u128;
        let mut pos = vec![0.0; self.dim];
        for u in 0..g.num_sites() {
            let d2: f64 = (0..self.dim)
                .map(|a| torus_delta(xf[a], coords[u][a], period).powi(2))
                .sum();
            if d2 > reach * reach {
                continue;
            }
            if last {
                if d2 <= r2 {
                    acc += self.ensemble.layer_weights(self.num_layers() - 1)[u] as u128;
                }
                continue;
            }
            for (k, h) in steps[u].iter().enumerate() {
                let w = self.pair_marginals[j][u][k];
                if w == 0 {
                    continue;
                }
                for a in 0..self.dim {
                    pos[a] = coords[u][a] + s * h[a];
                }
                let e2: f64 = (0..self.dim)
                    .map(|a| torus_delta(xf[a], pos[a], period).powi(2))
                    .sum();
                if e2 <= r2 {
                    acc += w as u128;
                }
            }
        }
        acc
    }

    /// The cover at physical time `t` as a function of `x`; one-dimensional
    /// decompositions only. Agrees with `evaluate_cover` away from tube
    /// boundaries.
    pub fn cover_slice(&self, t: f64) -> Result<CoverSlice, TubeError> {
        if self.dim != 1 {
            return Err(TubeError::Config("cover slices need d = 1".into()));
        }
        let (_, tf) = self.frame.to_frame(&[0.0], t);
        let (j, s) = self.layer_of(tf)?;
        let n = self.lattice_side;
        let rho = self.frame.rho;
        let shift = 2.0 * self.frame.xi[0] * t;
        let half = self.radius / rho;
        let last = j + 1 == self.num_layers() || tf >= self.layer_times[self.num_layers() - 1];
        let mut items = Vec::with_capacity(3 * n);
        let g = self.lattice();
        for u in 0..n {
            if last {
                let w = self.ensemble.layer_weights(self.num_layers() - 1)[u];
                items.push((u as f64 / rho + shift, half, w as u128));
                continue;
            }
            for (k, &v) in g.out_neighbors(u).iter().enumerate() {
                let w = self.pair_marginals[j][u][k];
                if w == 0 {
                    continue;
                }
                let h = g.step(u, v).unwrap()[0] as f64;
                items.push(((u as f64 + s * h) / rho + shift, half, w as u128));
            }
        }
        Ok(CoverSlice::from_intervals(self.period(), items))
    }

    /// `m(a, t_j)` (numerator units) for the prism containing a physical point:
    /// the lattice cell `[a, a+1)^d` in the frame and the layer slab.
    pub fn prism_weight(&self, x: &[f64], t: f64) -> Result<u64, TubeError> {
        let (xf, tf) = self.frame.to_frame(x, t);
        let (j, _) = self.layer_of(tf)?;
        let s = self.lattice_side as i64;
        let cell: Vec<i64> = xf.iter().map(|v| (v.floor() as i64).rem_euclid(s)).collect();
        Ok(self.ensemble.layer_weights(j)[coords_to_site(&cell, self.lattice_side)])
    }

    /// Tube of one lattice path, in physical coordinates.
    pub fn tube_of_path(&self, sites: &[usize], weight: f64) -> Tube {
        let g = self.lattice();
        let mut pts: Vec<Vec<f64>> = Vec::with_capacity(sites.len() + 1);
        let first: Vec<f64> = g.coords(sites[0]).iter().map(|&c| c as f64).collect();
        pts.push(first);
        for w in sites.windows(2) {
            let h = g.step(w[0], w[1]).expect("paths follow edges");
            let prev = pts.last().unwrap();
            let next = prev.iter().zip(&h).map(|(p, d)| p + *d as f64).collect();
            pts.push(next);
        }
        pts.push(pts.last().unwrap().clone());
        let mut times = self.layer_times.clone();
        times.push(self.end_time());
        let (points, times): (Vec<Vec<f64>>, Vec<f64>) = pts
            .iter()
            .zip(&times)
            .map(|(p, &tf)| self.frame.to_physical(p, tf))
            .unzip();
        Tube {
            times,
            points,
            radius: self.radius(),
            weight,
            period: self.period(),
        }
    }

    /// Explicit tubes of all paths with weight at least `threshold` (mass
    /// units), in path enumeration order.
    pub fn materialize(&self, threshold: f64, cap: usize) -> Result<Vec<Tube>, TubeError> {
        let d = self.denominator();
        let min = BigRational::from_float(threshold * d as f64)
            .unwrap_or_else(|| BigRational::from_integer(BigInt::from(0)));
        let paths = enumerate_paths(&self.ensemble, &min, cap)?;
        Ok(paths
            .iter()
            .map(|p| {
                let w = (&p.weight / BigRational::from_integer(BigInt::from(d)))
                    .to_f64()
                    .unwrap_or(0.0);
                self.tube_of_path(&p.sites, w)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_counts_are_even() {
        assert_eq!(layer_count(1.0, 0.5), 4);
        assert_eq!(layer_count(1.0, 0.3), 8);
        assert_eq!(layer_count(0.1, 1.0), 2);
    }

    #[test]
    fn frame_maps_invert() {
        let f = Frame {
            xi: vec![0.5],
            rho: 2.0,
        };
        let (x, t) = f.to_frame(&[1.0], 0.3);
        let (x2, t2) = f.to_physical(&x, t);
        assert!((x2[0] - 1.0).abs() < 1e-15 && (t2 - 0.3).abs() < 1e-15);
    }
}
