//! Markov-chain weighting of lattice paths induced by a layered flow.
//!
//! Path weights are exact rationals in numerator units of the shared
//! denominator: `α(p) = w₁(p₁) · Π_k f(k, p_k, p_{k+1}) / w_k(p_k)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::lattice_flow::graph::Adjacency;
use crate::lattice_flow::layered::LayeredFlow;
use crate::lattice_flow::weights::WeightLayers;
use crate::lattice_flow::FlowError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathEnsemble {
    denominator: u64,
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<u64>>,
    flows: Vec<Vec<Vec<u64>>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedPath {
    pub sites: Vec<usize>,
    pub weight: BigRational,
}

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl PathEnsemble {
    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn num_sites(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[u]
    }

    pub fn layer_weights(&self, i: usize) -> &[u64] {
        &self.weights[i]
    }

    pub fn layer_flow(&self, i: usize) -> &[Vec<u64>] {
        &self.flows[i]
    }

    /// `Z = Σ w₁` in numerator units.
    pub fn normalizer(&self) -> u64 {
        self.weights[0].iter().sum()
    }

    /// `w̃₁ = w₁ / Z`; all zeros for an empty ensemble.
    pub fn initial(&self) -> Vec<BigRational> {
        let z = self.normalizer();
        self.weights[0]
            .iter()
            .map(|&w| if z == 0 { BigRational::zero() } else { ratio(w, z) })
            .collect()
    }

    /// Row `u` of the layer-`i` transition kernel, `P_i(u→v) = f(i,u,v)/w_i(u)`.
    /// Sites without mass carry no row.
    pub fn kernel(&self, i: usize, u: usize) -> Option<Vec<(usize, BigRational)>> {
        let w = self.weights[i][u];
        if w == 0 {
            return None;
        }
        Some(
            self.neighbors[u]
                .iter()
                .zip(&self.flows[i][u])
                .map(|(&v, &f)| (v, ratio(f, w)))
                .collect(),
        )
    }

    /// Layer marginals of the chain, normalized, computed by pushing the initial
    /// distribution through the kernels.
    pub fn push_forward(&self) -> Vec<Vec<BigRational>> {
        let mut out = vec![self.initial()];
        for i in 0..self.flows.len() {
            let prev = out.last().unwrap();
            let mut next = vec![BigRational::zero(); self.num_sites()];
            for (u, p) in prev.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                if let Some(row) = self.kernel(i, u) {
                    for (v, q) in row {
                        next[v] += p * q;
                    }
                }
            }
            out.push(next);
        }
        out
    }

    /// Whether every pushed-forward marginal equals the normalized layer exactly.
    pub fn reproduces_layers(&self) -> bool {
        let z = self.normalizer();
        if z == 0 {
            return self.weights.iter().all(|l| l.iter().all(|&w| w == 0));
        }
        self.push_forward()
            .iter()
            .zip(&self.weights)
            .all(|(m, w)| m.iter().zip(w).all(|(a, &b)| *a == ratio(b, z)))
    }

    /// `Z · P(ν_i = u, ν_{i+1} = v)` for every edge of layer transition `i`,
    /// aligned with `neighbors(u)`. Computed by forward dynamic programming.
    pub fn pair_marginals(&self, i: usize) -> Vec<Vec<BigRational>> {
        let z = int(self.normalizer());
        let forward = self.push_forward();
        (0..self.num_sites())
            .map(|u| match self.kernel(i, u) {
                Some(row) => row
                    .into_iter()
                    .map(|(_, q)| &forward[i][u] * &q * &z)
                    .collect(),
                None => vec![BigRational::zero(); self.neighbors[u].len()],
            })
            .collect()
    }

    /// Pair marginals for every transition as integer numerators; errors if the
    /// chain produced a non-integral value.
    pub fn integral_pair_marginals(&self) -> Result<Vec<Vec<Vec<u64>>>, FlowError> {
        match self.integer_forward() {
            Some(out) => Ok(out),
            None => self.rational_forward(),
        }
    }

    // Same recursion in integer numerators; gives up as soon as a step is not
    // exactly divisible.
    fn integer_forward(&self) -> Option<Vec<Vec<Vec<u64>>>> {
        let mut forward: Vec<u128> = self.weights[0].iter().map(|&w| w as u128).collect();
        let mut out = Vec::with_capacity(self.flows.len());
        for i in 0..self.flows.len() {
            let mut layer = Vec::with_capacity(self.num_sites());
            let mut next = vec![0u128; self.num_sites()];
            for u in 0..self.num_sites() {
                let w = self.weights[i][u] as u128;
                if w == 0 {
                    layer.push(vec![0; self.neighbors[u].len()]);
                    continue;
                }
                let mut ints = Vec::with_capacity(self.neighbors[u].len());
                for (&v, &f) in self.neighbors[u].iter().zip(&self.flows[i][u]) {
                    let num = forward[u].checked_mul(f as u128)?;
                    if num % w != 0 {
                        return None;
                    }
                    let joint = num / w;
                    ints.push(u64::try_from(joint).ok()?);
                    next[v] += joint;
                }
                layer.push(ints);
            }
            out.push(layer);
            forward = next;
        }
        Some(out)
    }

    fn rational_forward(&self) -> Result<Vec<Vec<Vec<u64>>>, FlowError> {
        let z = int(self.normalizer());
        let mut forward = self.initial();
        let mut out = Vec::with_capacity(self.flows.len());
        for i in 0..self.flows.len() {
            let mut layer = Vec::with_capacity(self.num_sites());
            let mut next = vec![BigRational::zero(); self.num_sites()];
            for u in 0..self.num_sites() {
                let row = match self.kernel(i, u) {
                    Some(row) => row,
                    None => {
                        layer.push(vec![0; self.neighbors[u].len()]);
                        continue;
                    }
                };
                let mut ints = Vec::with_capacity(row.len());
                for (v, q) in row {
                    let joint = &forward[u] * &q;
                    let scaled = &joint * &z;
                    if !scaled.is_integer() {
                        return Err(FlowError::Structure(format!(
                            "non-integral pair marginal at layer {i}, edge ({u}, {v})"
                        )));
                    }
                    ints.push(scaled.to_integer().to_u64().ok_or_else(|| {
                        FlowError::Structure("pair marginal overflows u64".into())
                    })?);
                    next[v] += joint;
                }
                layer.push(ints);
            }
            out.push(layer);
            forward = next;
        }
        Ok(out)
    }

    /// `α(p)` in numerator units; zero for sequences that are not chain paths.
    pub fn path_weight(&self, path: &[usize]) -> BigRational {
        if path.len() != self.num_layers() {
            return BigRational::zero();
        }
        let mut acc = int(self.weights[0][path[0]]);
        for (i, pair) in path.windows(2).enumerate() {
            let Some(row) = self.kernel(i, pair[0]) else {
                return BigRational::zero();
            };
            match row.into_iter().find(|(v, _)| *v == pair[1]) {
                Some((_, q)) => acc *= q,
                None => return BigRational::zero(),
            }
        }
        acc
    }
}

/// Builds the path ensemble of a layered flow after checking both marginal
/// identities against `w`.
pub fn path_ensemble<G: Adjacency + ?Sized>(
    lf: &LayeredFlow,
    w: &WeightLayers,
    g: &G,
) -> Result<PathEnsemble, FlowError> {
    lf.check_marginals(w, g)?;
    Ok(PathEnsemble {
        denominator: w.denominator(),
        neighbors: (0..g.num_sites())
            .map(|u| g.out_neighbors(u).to_vec())
            .collect(),
        weights: w.layers().to_vec(),
        flows: lf.flows().iter().map(|f| f.entries().to_vec()).collect(),
    })
}

/// All chain paths with `α(p) ≥ min_weight` (numerator units), in
/// edge order. Prefix weights bound every completion, so branches
/// below the threshold are pruned. Fails once more than `cap` paths are found.
pub fn enumerate_paths(
    pe: &PathEnsemble,
    min_weight: &BigRational,
    cap: usize,
) -> Result<Vec<WeightedPath>, FlowError> {
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(pe.num_layers());
    for u in 0..pe.num_sites() {
        let w = pe.weights[0][u];
        if w == 0 {
            continue;
        }
        let wt = int(w);
        if &wt < min_weight {
            continue;
        }
        prefix.push(u);
        descend(pe, &mut prefix, wt, min_weight, cap, &mut out)?;
        prefix.pop();
    }
    Ok(out)
}

fn descend(
    pe: &PathEnsemble,
    prefix: &mut Vec<usize>,
    weight: BigRational,
    min_weight: &BigRational,
    cap: usize,
    out: &mut Vec<WeightedPath>,
) -> Result<(), FlowError> {
    let i = prefix.len() - 1;
    if prefix.len() == pe.num_layers() {
        if out.len() >= cap {
            return Err(FlowError::PathExplosion { cap });
        }
        out.push(WeightedPath {
            sites: prefix.clone(),
            weight,
        });
        return Ok(());
    }
    let u = prefix[i];
    let Some(row) = pe.kernel(i, u) else {
        return Ok(());
    };
    for (v, q) in row {
        if q.is_zero() {
            continue;
        }
        let next = &weight * &q;
        if &next < min_weight {
            continue;
        }
        prefix.push(v);
        descend(pe, prefix, next, min_weight, cap, out)?;
        prefix.pop();
    }
    Ok(())
}
