#![allow(dead_code)]

use lipschitz_tubes::lattice_flow::{Adjacency, CapacityEdge, FlowNetwork, LatticeGraph, WeightLayers};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Splits `total` into `parts` nonnegative integers at uniformly drawn cut points.
pub fn random_split(rng: &mut ChaCha8Rng, total: u64, parts: usize) -> Vec<u64> {
    let mut cuts: Vec<u64> = (0..parts - 1).map(|_| rng.gen_range(0..=total)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(total - prev);
    out
}

/// A first layer with random sparsity, then each layer pushed forward by a
/// random transport along lattice edges. Feasible by construction.
pub fn random_feasible_layers(
    rng: &mut ChaCha8Rng,
    g: &LatticeGraph,
    layers: usize,
    max_weight: u64,
) -> Vec<Vec<u64>> {
    let n = g.num_sites();
    let density = rng.gen_range(0.2..1.0);
    let mut first: Vec<u64> = (0..n)
        .map(|_| if rng.gen_bool(density) { rng.gen_range(1..=max_weight) } else { 0 })
        .collect();
    if first.iter().all(|&w| w == 0) {
        first[0] = 1;
    }
    let mut out = vec![first];
    for _ in 1..layers {
        let prev = out.last().unwrap();
        let mut next = vec![0u64; n];
        for u in 0..n {
            let nb = g.out_neighbors(u);
            for (&v, part) in nb.iter().zip(random_split(rng, prev[u], nb.len())) {
                next[v] += part;
            }
        }
        out.push(next);
    }
    out
}

/// Brute force over all nonempty subsets of at most 20 sites: the first `A`
/// (in mask order) with `Σ_A w1 > Σ_{N⁺(A)} w2`, as `(mask, lhs, rhs)`.
pub fn brute_force_violation<G: Adjacency>(w1: &[u64], w2: &[u64], g: &G) -> Option<(u32, u128, u128)> {
    let n = g.num_sites();
    assert!(n <= 20);
    let nb: Vec<u32> = (0..n)
        .map(|u| g.out_neighbors(u).iter().fold(0u32, |m, &v| m | (1 << v)))
        .collect();
    let full = 1usize << n;
    let mut sum2 = vec![0u128; full];
    let mut sum1 = vec![0u128; full];
    let mut hood = vec![0u32; full];
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        sum1[mask] = sum1[rest] + w1[low] as u128;
        sum2[mask] = sum2[rest] + w2[low] as u128;
        hood[mask] = hood[rest] | nb[low];
    }
    (1..full).find_map(|mask| {
        let rhs = sum2[hood[mask] as usize];
        (sum1[mask] > rhs).then_some((mask as u32, sum1[mask], rhs))
    })
}

pub fn mask_of(set: &[usize]) -> u32 {
    set.iter().fold(0, |m, &v| m | (1 << v))
}

/// `(Σ_A w1, Σ_{N⁺(A)} w2)` recomputed from neighbor lists.
pub fn sides<G: Adjacency>(set: &[usize], w1: &[u64], w2: &[u64], g: &G) -> (u128, u128) {
    let mut hood: Vec<usize> = set.iter().flat_map(|&a| g.out_neighbors(a).to_vec()).collect();
    hood.sort_unstable();
    hood.dedup();
    (
        set.iter().map(|&a| w1[a] as u128).sum(),
        hood.iter().map(|&b| w2[b] as u128).sum(),
    )
}

/// A successor of `w1` violating local conservation: a random transport,
/// then mass drained from the neighborhood of a loaded site `a` to sites out
/// of its reach until `N⁺(a)` holds less than `w1(a)`. `None` when every
/// loaded site reaches the whole lattice.
pub fn infeasible_successor(rng: &mut ChaCha8Rng, g: &LatticeGraph, w1: &[u64]) -> Option<Vec<u64>> {
    let n = g.num_sites();
    let mut w2 = vec![0u64; n];
    for u in 0..n {
        let nb = g.out_neighbors(u);
        for (&v, part) in nb.iter().zip(random_split(rng, w1[u], nb.len())) {
            w2[v] += part;
        }
    }
    let loaded: Vec<usize> = (0..n)
        .filter(|&a| w1[a] > 0 && g.out_neighbors(a).len() < n)
        .collect();
    if loaded.is_empty() {
        return None;
    }
    let a = loaded[rng.gen_range(0..loaded.len())];
    let hood = g.out_neighbors(a).to_vec();
    let far: Vec<usize> = (0..n).filter(|v| !hood.contains(v)).collect();
    let held: u64 = hood.iter().map(|&v| w2[v]).sum();
    let keep = rng.gen_range(0..w1[a]).min(held);
    let mut excess = held - keep;
    for &v in &hood {
        let take = excess.min(w2[v]);
        w2[v] -= take;
        w2[far[rng.gen_range(0..far.len())]] += take;
        excess -= take;
    }
    assert!(brute_force_violation(w1, &w2, g).is_some());
    Some(w2)
}

pub fn weight_layers(layers: Vec<Vec<u64>>) -> WeightLayers {
    WeightLayers::new(1 << 20, layers).unwrap()
}

/// Random network on `n ≤ 16` nodes with one-directional pipes; node 0 is
/// the source and `n-1` the sink.
pub fn random_network(rng: &mut ChaCha8Rng, n: usize) -> FlowNetwork {
    let density = rng.gen_range(0.15..0.6);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if !rng.gen_bool(density) {
                continue;
            }
            let cap = rng.gen_range(0..=50);
            let (from, to) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            edges.push(CapacityEdge { from, to, cap });
        }
    }
    FlowNetwork::new(n, 0, n - 1, edges).unwrap()
}

/// Minimum over all source-side sets containing the source but not the sink.
pub fn min_cut_by_enumeration(net: &FlowNetwork) -> u128 {
    let n = net.num_nodes();
    let (s, t) = (net.source(), net.sink());
    let others: Vec<usize> = (0..n).filter(|&v| v != s && v != t).collect();
    let mut best = u128::MAX;
    for mask in 0u32..(1 << others.len()) {
        let mut side = vec![false; n];
        side[s] = true;
        for (k, &v) in others.iter().enumerate() {
            side[v] = mask >> k & 1 == 1;
        }
        let cap: u128 = net
            .edges()
            .iter()
            .filter(|e| side[e.from] && !side[e.to])
            .map(|e| e.cap as u128)
            .sum();
        best = best.min(cap);
    }
    best
}
