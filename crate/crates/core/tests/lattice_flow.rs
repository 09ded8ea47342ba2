mod common;

use lipschitz_tubes::lattice_flow::{
    enumerate_paths, layered_decomposition, max_flow, one_layer_flow, path_ensemble,
    verify_local_conservation, Adjacency, ConservationMode, FlowError, LatticeGraph, LayeredOptions,
    WeightLayers,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn small_graph(rng: &mut ChaCha8Rng) -> LatticeGraph {
    if rng.gen_bool(0.5) {
        LatticeGraph::torus(1, rng.gen_range(3..=12)).unwrap()
    } else {
        LatticeGraph::torus(2, 3).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn max_flow_equals_min_cut(seed in any::<u64>(), n in 2usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, n);
        let mf = max_flow(&net);
        prop_assert_eq!(mf.value, min_cut_by_enumeration(&net));
        prop_assert_eq!(net.cut_capacity(&mf.source_side), mf.value);
        for (e, &f) in net.edges().iter().zip(&mf.flows) {
            prop_assert!(f <= e.cap);
        }
    }

    #[test]
    fn feasible_layers_decompose_exactly(seed in any::<u64>(), layers in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = small_graph(&mut rng);
        let w = weight_layers(random_feasible_layers(&mut rng, &g, layers, 500));
        let lf = layered_decomposition(&w, &g, LayeredOptions::default()).unwrap();
        for i in 0..layers - 1 {
            prop_assert_eq!(lf.flow(i).out_marginal(), w.layer(i).to_vec());
            prop_assert_eq!(lf.flow(i).in_marginal(&g), w.layer(i + 1).to_vec());
        }
    }

    #[test]
    fn one_layer_verdict_matches_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = small_graph(&mut rng);
        let n = g.num_sites();
        let total = rng.gen_range(1..=60);
        let w1 = random_split(&mut rng, total, n);
        let w2 = random_split(&mut rng, total, n);
        let brute = brute_force_violation(&w1, &w2, &g);
        match one_layer_flow(&w1, &w2, &g) {
            Ok(f) => {
                prop_assert!(brute.is_none());
                prop_assert_eq!(f.out_marginal(), w1.clone());
                prop_assert_eq!(f.in_marginal(&g), w2.clone());
            }
            Err(FlowError::Infeasible { set, lhs, rhs, .. }) => {
                prop_assert!(brute.is_some());
                prop_assert_eq!(sides(&set, &w1, &w2, &g), (lhs, rhs));
                prop_assert!(lhs > rhs);
            }
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn dp_pair_marginals_match_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = LatticeGraph::torus(1, rng.gen_range(3..=7)).unwrap();
        let w = WeightLayers::new(16, random_feasible_layers(&mut rng, &g, 3, 12)).unwrap();
        let lf = layered_decomposition(&w, &g, LayeredOptions::default()).unwrap();
        let pe = path_ensemble(&lf, &w, &g).unwrap();
        let paths = enumerate_paths(&pe, &BigRational::zero(), 1_000_000).unwrap();
        let dp = pe.integral_pair_marginals().unwrap();
        for i in 0..2 {
            for u in 0..g.num_sites() {
                for (k, &v) in g.out_neighbors(u).iter().enumerate() {
                    let s: BigRational = paths
                        .iter()
                        .filter(|p| p.sites[i] == u && p.sites[i + 1] == v)
                        .map(|p| p.weight.clone())
                        .sum();
                    prop_assert_eq!(s, BigRational::from_integer(BigInt::from(dp[i][u][k])));
                }
            }
        }
    }
}

#[test]
fn conservation_modes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let g = small_graph(&mut rng);
        let mut layers = random_feasible_layers(&mut rng, &g, 3, 40);
        if rng.gen_bool(0.5) {
            if let Some(bad) = infeasible_successor(&mut rng, &g, &layers[2]) {
                layers.push(bad);
            }
        }
        let w = weight_layers(layers);
        let cut = verify_local_conservation(&w, &g, ConservationMode::CutFeasibility);
        let brute = verify_local_conservation(&w, &g, ConservationMode::BruteForce);
        let a: Vec<bool> = cut.transitions.iter().map(|t| t.feasible).collect();
        let b: Vec<bool> = brute.transitions.iter().map(|t| t.feasible).collect();
        assert_eq!(a, b);
    }
}

/// All integer flows supported on the out-edges of `sources`, each entry in
/// `0..=cap`; returns whether one has marginals `w1`, `w2`.
fn integer_flow_exists(g: &LatticeGraph, w1: &[u64], w2: &[u64], sources: &[usize], cap: u64) -> bool {
    let edges: Vec<(usize, usize)> = sources
        .iter()
        .flat_map(|&u| g.out_neighbors(u).iter().map(move |&v| (u, v)))
        .collect();
    let mut x = vec![0u64; edges.len()];
    loop {
        let mut out = vec![0u64; w1.len()];
        let mut inn = vec![0u64; w2.len()];
        for (&(u, v), &f) in edges.iter().zip(&x) {
            out[u] += f;
            inn[v] += f;
        }
        if out == w1 && inn == w2 {
            return true;
        }
        let mut k = 0;
        while k < x.len() && x[k] == cap {
            x[k] = 0;
            k += 1;
        }
        if k == x.len() {
            return false;
        }
        x[k] += 1;
    }
}

#[test]
fn half_step_shift_matches_exhaustive_flow_search() {
    let g = LatticeGraph::torus(1, 5).unwrap();
    // (.5,.5,0,0,0) → (0,.5,.5,0,0) in units of 1/2
    let (w1, w2) = ([1, 1, 0, 0, 0], [0, 1, 1, 0, 0]);
    assert!(integer_flow_exists(&g, &w1, &w2, &[0, 1], 2));
    let f = one_layer_flow(&w1, &w2, &g).unwrap();
    assert_eq!(f.out_marginal(), w1.to_vec());
    assert_eq!(f.in_marginal(&g), w2.to_vec());

    let far = [0, 0, 1, 1, 0];
    assert!(!integer_flow_exists(&g, &w1, &far, &[0, 1], 2));
    assert!(matches!(one_layer_flow(&w1, &far, &g), Err(FlowError::Infeasible { .. })));
}

#[test]
fn path_weights_are_products_of_flow_ratios() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let g = LatticeGraph::torus(1, 6).unwrap();
        let w = WeightLayers::new(8, random_feasible_layers(&mut rng, &g, 3, 6)).unwrap();
        let lf = layered_decomposition(&w, &g, LayeredOptions::default()).unwrap();
        let pe = path_ensemble(&lf, &w, &g).unwrap();
        let paths = enumerate_paths(&pe, &BigRational::zero(), 100_000).unwrap();
        let mut expected = Vec::new();
        for a in 0..6 {
            for (k1, &b) in g.out_neighbors(a).iter().enumerate() {
                for (k2, &c) in g.out_neighbors(b).iter().enumerate() {
                    let f1 = lf.flow(0).entries()[a][k1];
                    let f2 = lf.flow(1).entries()[b][k2];
                    if f1 == 0 || f2 == 0 {
                        continue;
                    }
                    let r = |n: u64| BigRational::from_integer(BigInt::from(n));
                    let alpha = r(w.layer(0)[a]) * (r(f1) / r(w.layer(0)[a])) * (r(f2) / r(w.layer(1)[b]));
                    expected.push((vec![a, b, c], alpha));
                }
            }
        }
        let mut got: Vec<(Vec<usize>, BigRational)> = paths.into_iter().map(|p| (p.sites, p.weight)).collect();
        got.sort();
        expected.sort();
        assert_eq!(got, expected);
    }
}
