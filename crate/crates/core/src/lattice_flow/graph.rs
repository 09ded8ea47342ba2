//! Periodic lattice digraphs with the ℓ∞ unit-ball neighborhood rule.

use crate::lattice_flow::FlowError;

/// Generic out-adjacency. Neighbor lists have a fixed order, which fixes the
/// edge enumeration and hence makes flows reproducible.
pub trait Adjacency {
    fn num_sites(&self) -> usize;
    fn out_neighbors(&self, site: usize) -> &[usize];
}

/// A `d`-dimensional torus of side `S` with `(u, v)` an edge iff `v - u ∈ {-1,0,1}^d`
/// (mod `S`). Sites are indexed in row-major order. Each neighbor list starts
/// with the site itself, followed by the others in ascending order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeGraph {
    dim: usize,
    side: usize,
    neighbors: Vec<Vec<usize>>,
}

impl LatticeGraph {
    pub fn torus(dim: usize, side: usize) -> Result<Self, FlowError> {
        if dim == 0 {
            return Err(FlowError::Structure("lattice dimension must be positive".into()));
        }
        if side < 3 {
            return Err(FlowError::Structure(format!("torus side {side} < 3")));
        }
        let n = side
            .checked_pow(dim as u32)
            .ok_or_else(|| FlowError::Structure("lattice too large".into()))?;
        let offsets = h_offsets(dim);
        let mut neighbors = Vec::with_capacity(n);
        for u in 0..n {
            let cu = site_coords(u, dim, side);
            let mut nb: Vec<usize> = offsets
                .iter()
                .map(|h| {
                    let c: Vec<i64> = cu.iter().zip(h).map(|(&a, &b)| a + b).collect();
                    coords_to_site(&c, side)
                })
                .collect();
            // the self-loop leads so augmenting paths prefer staying put
            nb.sort_unstable_by_key(|&v| (v != u, v));
            neighbors.push(nb);
        }
        Ok(Self { dim, side, neighbors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// |H| = 3^d.
    pub fn stencil_size(&self) -> usize {
        3usize.pow(self.dim as u32)
    }

    pub fn coords(&self, site: usize) -> Vec<i64> {
        site_coords(site, self.dim, self.side)
    }

    pub fn site(&self, coords: &[i64]) -> usize {
        coords_to_site(coords, self.side)
    }

    /// The unique `h ∈ H` with `v = u + h (mod S)`, or `None` if `v ∉ N⁺(u)`.
    pub fn step(&self, u: usize, v: usize) -> Option<Vec<i64>> {
        let s = self.side as i64;
        let cu = self.coords(u);
        let cv = self.coords(v);
        let mut h = Vec::with_capacity(self.dim);
        for (a, b) in cu.iter().zip(&cv) {
            let diff = (b - a + s + 1).rem_euclid(s) - 1;
            if diff.abs() > 1 {
                return None;
            }
            h.push(diff);
        }
        Some(h)
    }

    /// Incoming neighbors; equal to `out_neighbors` for the symmetric stencil.
    pub fn in_neighbors(&self, site: usize) -> Vec<usize> {
        (0..self.num_sites())
            .filter(|&u| self.neighbors[u].contains(&site))
            .collect()
    }

    /// `A + H` as a sorted site list.
    pub fn expand(&self, set: &[usize]) -> Vec<usize> {
        let mut mark = vec![false; self.num_sites()];
        for &a in set {
            for &b in &self.neighbors[a] {
                mark[b] = true;
            }
        }
        mark.iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }
}

impl Adjacency for LatticeGraph {
    fn num_sites(&self) -> usize {
        self.neighbors.len()
    }

    fn out_neighbors(&self, site: usize) -> &[usize] {
        &self.neighbors[site]
    }
}

/// All of `{-1,0,1}^d` in lexicographic order.
pub fn h_offsets(dim: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-1..=1).map(move |h| {
                    let mut q = p.clone();
                    q.push(h);
                    q
                })
            })
            .collect();
    }
    out
}

pub(crate) fn site_coords(mut site: usize, dim: usize, side: usize) -> Vec<i64> {
    let mut c = vec![0i64; dim];
    for k in (0..dim).rev() {
        c[k] = (site % side) as i64;
        site /= side;
    }
    c
}

pub(crate) fn coords_to_site(coords: &[i64], side: usize) -> usize {
    let s = side as i64;
    coords
        .iter()
        .fold(0usize, |acc, &c| acc * side + c.rem_euclid(s) as usize)
}
