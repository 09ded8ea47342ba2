mod common;

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use lipschitz_tubes::estimates::{
    annulus_field, bilinear_sweep, bilinear_via_tubes, loglog_slope, monte_carlo_volume,
    multilinear_overlap, synthetic_families, tube_intersection_volume, BilinearSweepConfig,
    OverlapOptions, TubeSideOptions,
};
use lipschitz_tubes::lattice_flow::{
    enumerate_paths, layered_decomposition, max_flow, path_ensemble, Adjacency, FlowError,
    LatticeGraph, LayeredOptions, WeightLayers,
};
use lipschitz_tubes::mu_kernel::{build_mu, calibrate_tau, verify_fs, FsOptions, MuKernel};
use lipschitz_tubes::schrodinger::{
    galilean_rescale, make_band_limited, mass, propagate, Direction, FrequencyWindow, Grid,
    Profile, WaveField,
};
use lipschitz_tubes::tubes::{
    decompose, from_ensemble, scaled_decompose, verify_domination, verify_efficiency,
    DecomposeOptions, DominationSpec, Frame, Provenance, Tube,
};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn unit_grid() -> Grid {
    Grid::new(1, 16.0, 64).unwrap()
}

fn profile(i: usize) -> Profile {
    [Profile::RandomPhase, Profile::Gaussian, Profile::Bump][i % 3]
}

/// The 50-field band-limited ensemble shared by the kernel and assembly checks.
fn unit_fields(count: usize, seed: u64) -> Vec<WaveField> {
    let grid = unit_grid();
    let window = FrequencyWindow::unit(1);
    (0..count)
        .map(|i| make_band_limited(&grid, &window, profile(i), seed + i as u64).unwrap())
        .collect()
}

fn unit_mu() -> MuKernel {
    build_mu(&unit_grid(), 2.0).unwrap()
}

/// τ calibrated once on the 50-field ensemble and reused downstream.
fn calibrated_tau() -> f64 {
    static TAU: OnceLock<f64> = OnceLock::new();
    *TAU.get_or_init(|| {
        let opts = FsOptions::default();
        calibrate_tau(&unit_fields(50, 0), &unit_mu(), 2.0, &opts)
            .expect("calibration")
            .tau
    })
}

fn flow_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut layer_pairs = 0usize;
    for inst in 0..200 {
        let g = if inst % 2 == 0 {
            LatticeGraph::torus(1, rng.gen_range(3..=64)).unwrap()
        } else {
            LatticeGraph::torus(2, rng.gen_range(3..=8)).unwrap()
        };
        let n = rng.gen_range(2..=8);
        let w = weight_layers(random_feasible_layers(&mut rng, &g, n, 1000));
        let lf = layered_decomposition(&w, &g, LayeredOptions::default())
            .map_err(|e| format!("feasible instance {inst} rejected: {e}"))?;
        ensure(lf.slack_events().is_empty() && lf.weights() == &w, || {
            format!("instance {inst} altered its layers")
        })?;
        for i in 0..n - 1 {
            let f = lf.flow(i).entries();
            let mut out = vec![0u64; g.num_sites()];
            let mut inn = vec![0u64; g.num_sites()];
            for u in 0..g.num_sites() {
                ensure(f[u].len() == g.out_neighbors(u).len(), || format!("instance {inst}: ragged flow"))?;
                for (&v, &x) in g.out_neighbors(u).iter().zip(&f[u]) {
                    out[u] += x;
                    inn[v] += x;
                }
            }
            ensure(out == w.layer(i) && inn == w.layer(i + 1), || {
                format!("instance {inst} transition {i}: marginals differ")
            })?;
            layer_pairs += 1;
        }
    }
    for inst in 0..50 {
        let g = if inst % 2 == 0 {
            LatticeGraph::torus(1, rng.gen_range(5..=16)).unwrap()
        } else {
            LatticeGraph::torus(2, 4).unwrap()
        };
        let k = rng.gen_range(1..=3);
        let layers = loop {
            let mut layers = random_feasible_layers(&mut rng, &g, k, 100);
            if let Some(bad) = infeasible_successor(&mut rng, &g, layers.last().unwrap()) {
                layers.push(bad);
                break layers;
            }
        };
        let w = weight_layers(layers);
        let (w1, w2) = (w.layer(k - 1), w.layer(k));
        ensure(brute_force_violation(w1, w2, &g).is_some(), || {
            format!("infeasible instance {inst} not confirmed")
        })?;
        match layered_decomposition(&w, &g, LayeredOptions::default()) {
            Err(FlowError::Infeasible { layer, set, lhs, rhs }) => {
                let (bl, br) = sides(&set, w1, w2, &g);
                ensure(layer == k - 1 && bl == lhs && br == rhs && bl > br, || {
                    format!("infeasible instance {inst}: cut {set:?} at {layer} not a violation ({bl} vs {br})")
                })?;
            }
            other => return Err(format!("infeasible instance {inst}: got {other:?}")),
        }
    }
    Ok(format!("200 feasible ({layer_pairs} transitions) exact, 50 infeasible with confirmed cuts"))
}

fn mfmc() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut total = 0u128;
    for inst in 0..100 {
        let n = rng.gen_range(2..=16);
        let net = random_network(&mut rng, n);
        let mf = max_flow(&net);
        let cut = min_cut_by_enumeration(&net);
        ensure(mf.value == cut && net.cut_capacity(&mf.source_side) == cut, || {
            format!("network {inst}: flow {} vs min cut {cut}", mf.value)
        })?;
        total += cut;
    }
    Ok(format!("100 networks, Σ values {total}"))
}

/// Layers supported on the window of sites `1..=6` of a 1-D torus of side 8.
fn windowed_layers(rng: &mut ChaCha8Rng, layers: usize) -> Vec<Vec<u64>> {
    let inside = |v: usize| (1..=6).contains(&v);
    let g = LatticeGraph::torus(1, 8).unwrap();
    let mut first = vec![0u64; 8];
    for w in first.iter_mut().take(7).skip(1) {
        if rng.gen_bool(0.6) {
            *w = rng.gen_range(1..=40);
        }
    }
    first[rng.gen_range(1..=6)] += 1;
    let mut out = vec![first];
    for _ in 1..layers {
        let prev = out.last().unwrap();
        let mut next = vec![0u64; 8];
        for u in 0..8 {
            let nb: Vec<usize> = g.out_neighbors(u).iter().copied().filter(|&v| inside(v)).collect();
            for (&v, part) in nb.iter().zip(random_split(rng, prev[u], nb.len())) {
                next[v] += part;
            }
        }
        out.push(next);
    }
    out
}

fn path_marginals() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = LatticeGraph::torus(1, 8).unwrap();
    let (tau, radius) = (1.0, 1.3);
    let mut paths_seen = 0;
    for inst in 0..50 {
        let w = WeightLayers::new(64, windowed_layers(&mut rng, 3)).unwrap();
        let lf = layered_decomposition(&w, &g, LayeredOptions::default()).map_err(|e| e.to_string())?;
        let pe = path_ensemble(&lf, &w, &g).map_err(|e| e.to_string())?;
        let paths = enumerate_paths(&pe, &BigRational::zero(), 100_000).map_err(|e| e.to_string())?;
        paths_seen += paths.len();
        // layer marginals of the path weights
        for i in 0..3 {
            let mut acc = vec![BigRational::zero(); 8];
            for p in &paths {
                acc[p.sites[i]] += &p.weight;
            }
            for u in 0..8 {
                ensure(acc[u] == BigRational::from_integer(BigInt::from(w.layer(i)[u])), || {
                    format!("instance {inst}: layer {i} site {u} marginal {} vs {}", acc[u], w.layer(i)[u])
                })?;
            }
        }
        // edge marginals reproduce the flows
        let dp = pe.integral_pair_marginals().map_err(|e| e.to_string())?;
        for i in 0..2 {
            for u in 0..8 {
                for (k, &v) in g.out_neighbors(u).iter().enumerate() {
                    let s: BigRational = paths
                        .iter()
                        .filter(|p| p.sites[i] == u && p.sites[i + 1] == v)
                        .map(|p| p.weight.clone())
                        .sum();
                    let flow = lf.flow(i).entries()[u][k];
                    ensure(s == BigRational::from_integer(BigInt::from(flow)) && dp[i][u][k] == flow, || {
                        format!("instance {inst}: edge ({i}, {u}, {v}) enumeration {s}, DP {}, flow {flow}", dp[i][u][k])
                    })?;
                }
            }
        }
        // cover at every lattice cell center, a quarter step into each slab
        let provenance = Provenance {
            tau,
            r_time: 1.5,
            grid_side: 8.0,
            grid_points: 32,
            denominator: 64,
            frame_mass: 1.0,
            slack_events: Vec::new(),
            max_quantization_residue: 0,
            max_layer_drift: 0.0,
        };
        let dec = from_ensemble(pe.clone(), 1, tau, radius, Frame::identity(1), provenance)
            .map_err(|e| e.to_string())?;
        for &tj in dec.layer_times() {
            let t = tj + 0.25 * tau;
            let pts: Vec<(Vec<f64>, f64)> = (0..8).map(|a| (vec![a as f64 + 0.5], t)).collect();
            let cover = dec.evaluate_cover(&pts).map_err(|e| e.to_string())?;
            let slice = dec.cover_slice(t).map_err(|e| e.to_string())?;
            for (a, (x, _)) in pts.iter().enumerate() {
                let mut oracle = BigRational::zero();
                for p in &paths {
                    let j = ((t - dec.layer_times()[0]) / tau).floor() as usize;
                    let s = (t - dec.layer_times()[0]) / tau - j as f64;
                    let pos = if j + 1 >= p.sites.len() {
                        p.sites[p.sites.len() - 1] as f64
                    } else {
                        let h = g.step(p.sites[j], p.sites[j + 1]).unwrap()[0] as f64;
                        p.sites[j] as f64 + s * h
                    };
                    let d = (x[0] - pos).rem_euclid(8.0);
                    if d.min(8.0 - d) <= radius {
                        oracle += &p.weight;
                    }
                }
                ensure(oracle.is_integer(), || format!("instance {inst}: fractional cover {oracle}"))?;
                let expected = oracle.to_integer();
                ensure(BigInt::from(cover[a]) == expected && BigInt::from(slice.eval(x[0])) == expected, || {
                    format!(
                        "instance {inst}: cover at ({}, {t}) DP {} slice {} enumeration {expected}",
                        x[0],
                        cover[a],
                        slice.eval(x[0])
                    )
                })?;
            }
        }
    }
    Ok(format!("50 instances, {paths_seen} paths, layer/edge/cover marginals exact"))
}

/// `e^{itΔ}` of `exp(-x²/(2s²))` centered at `c`, summed over periodic images.
fn gaussian_oracle(x: f64, t: f64, s: f64, c: f64, period: f64) -> Complex64 {
    let a = Complex64::new(s * s, 2.0 * t);
    let amp = (Complex64::new(s * s, 0.0) / a).sqrt();
    (-60..=60)
        .map(|k| {
            let y = x - c - k as f64 * period;
            amp * (-(y * y) / (2.0 * a)).exp()
        })
        .sum()
}

fn propagator() -> Outcome {
    let grid = Grid::new(1, 64.0, 256).unwrap();
    let (s, c) = (1.5, 32.0);
    let values: Vec<Complex64> = (0..grid.len())
        .map(|j| gaussian_oracle(grid.position(j)[0], 0.0, s, c, 64.0))
        .collect();
    let window = FrequencyWindow::new(vec![0.0], 6.0).unwrap();
    let u0 = WaveField::new(grid.clone(), values, window, 0.0).unwrap();
    let mut sup = 0.0f64;
    for t in [0.1, 0.5, 1.0, 2.5, 5.0, 10.0] {
        let u = propagate(&u0, t);
        for (j, z) in u.values().iter().enumerate() {
            sup = sup.max((z - gaussian_oracle(grid.position(j)[0], t, s, c, 64.0)).norm());
        }
    }
    ensure(sup <= 1e-8, || format!("Gaussian sup error {sup:.3e}"))?;

    let band = make_band_limited(&grid, &FrequencyWindow::new(vec![0.5], 1.0).unwrap(), Profile::RandomPhase, 7)
        .map_err(|e| e.to_string())?;
    let m0 = mass(&band);
    let mut drift = 0.0f64;
    for k in 0..=40 {
        let t = 0.25 * k as f64;
        drift = drift.max((mass(&propagate(&band, t)) - m0).abs() / m0);
    }
    ensure(drift <= 1e-12, || format!("mass drift {drift:.3e}"))?;

    let mut group = 0.0f64;
    for (a, b) in [(0.3, 0.7), (2.0, -1.25), (4.5, 5.5)] {
        let two = propagate(&propagate(&band, a), b);
        let one = propagate(&band, a + b);
        for (x, y) in two.values().iter().zip(one.values()) {
            group = group.max((x - y).norm());
        }
    }
    ensure(group <= 1e-12, || format!("group law error {group:.3e}"))?;
    Ok(format!("Gaussian sup {sup:.2e}, mass drift {drift:.2e}, group law {group:.2e}"))
}

/// `max_j |Σ_a μ(x_j - a) - 1|` from the cached kernel values.
fn partition_error(mu: &MuKernel) -> f64 {
    let grid = mu.grid();
    let m = grid.points();
    let d = grid.dim();
    let mut worst = 0.0f64;
    for j in 0..grid.len() {
        let idx = grid.axis_indices(j);
        let mut acc = 0.0;
        for site in 0..mu.num_sites() {
            let base = grid.axis_indices(mu.site_grid_index(site));
            let src = (0..d).fold(0, |acc, a| acc * m + (idx[a] + m - base[a]) % m);
            acc += mu.values()[src];
        }
        worst = worst.max((acc - 1.0).abs());
    }
    worst
}

fn kernel_suite() -> Outcome {
    let p1 = partition_error(&unit_mu());
    let p2 = partition_error(&build_mu(&Grid::new(2, 8.0, 32).unwrap(), 2.0).unwrap());
    ensure(p1.max(p2) <= 1e-10, || format!("partition of unity off by {:.3e}", p1.max(p2)))?;
    let tau = calibrated_tau();
    let mu = unit_mu();
    let mut worst = f64::INFINITY;
    let mut checks = 0;
    for (i, u) in unit_fields(50, 0).iter().enumerate() {
        // fresh subsets, not the ones seen by the calibration
        let opts = FsOptions { seed: 10_000 + i as u64, ..FsOptions::default() };
        let r = verify_fs(u, &mu, tau, &opts);
        checks += r.checks;
        worst = worst.min(r.worst_margin);
        ensure(r.passed, || format!("FS fails on field {i} at τ = {tau}: {:?}", r.worst))?;
    }
    Ok(format!("partition {:.1e}, τ = {tau:.4}, {checks} FS checks, worst margin {worst:.2e}", p1.max(p2)))
}

fn assembly() -> Outcome {
    let tau = calibrated_tau();
    let mu = unit_mu();
    let (mut c_dom, mut c_eff, mut bound) = (0.0f64, 0.0f64, 0.0);
    for (i, u) in unit_fields(20, 500).iter().enumerate() {
        let dec = decompose(u, &mu, tau, 1.0, &DecomposeOptions::default()).map_err(|e| format!("field {i}: {e}"))?;
        let dom = verify_domination(u, &dec, &DominationSpec::default()).map_err(|e| format!("field {i}: {e}"))?;
        ensure(dom.prism_violations == 0, || format!("field {i}: {} prism violations", dom.prism_violations))?;
        let eff = verify_efficiency(&dec, u);
        ensure(eff.passed, || format!("field {i}: efficiency {} > {}", eff.c_eff, eff.bound))?;
        c_dom = c_dom.max(dom.c_dom);
        c_eff = c_eff.max(eff.c_eff);
        bound = eff.bound;
    }
    Ok(format!("20 fields dominated (C_dom ≤ {c_dom:.3}), efficiency ≤ {c_eff:.4} (bound {bound:.4})"))
}

fn symmetry() -> Outcome {
    let tau = calibrated_tau();
    let mu = unit_mu();
    let opts = DecomposeOptions::default();
    for (i, u) in unit_fields(5, 900).iter().enumerate() {
        let a = decompose(u, &mu, tau, 1.0, &opts).map_err(|e| e.to_string())?;
        let b = scaled_decompose(u, &[0.0], 1.0, tau, 1.0, &opts).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("field {i}: identity-scaled decomposition differs"))?;
    }
    let grid = unit_grid();
    let xi = std::f64::consts::PI;
    let window = FrequencyWindow::new(vec![xi], 1.0).unwrap();
    let mut worst = 0.0f64;
    let mut tubes = 0;
    for seed in 0..3 {
        let u = make_band_limited(&grid, &window, profile(seed as usize), 40 + seed).map_err(|e| e.to_string())?;
        let boosted = scaled_decompose(&u, &[xi], 1.0, tau, 1.0, &opts).map_err(|e| e.to_string())?;
        let rest = galilean_rescale(&u, &[xi], 1.0, Direction::Forward).map_err(|e| e.to_string())?;
        let plain = decompose(&rest, &mu, tau, 1.0, &opts).map_err(|e| e.to_string())?;
        let tb: Vec<Tube> = boosted.materialize(1e-4, 1_000_000).map_err(|e| e.to_string())?;
        let tp: Vec<Tube> = plain.materialize(1e-4, 1_000_000).map_err(|e| e.to_string())?;
        ensure(tb.len() == tp.len() && !tb.is_empty(), || format!("tube counts {} vs {}", tb.len(), tp.len()))?;
        for (x, y) in tb.iter().zip(&tp) {
            for ((px, tx), (py, ty)) in x.points.iter().zip(&x.times).zip(y.points.iter().zip(&y.times)) {
                worst = worst.max((tx - ty).abs());
                worst = worst.max((px[0] - (py[0] + 2.0 * xi * ty)).abs());
            }
        }
        tubes += tb.len();
    }
    ensure(worst <= 1e-9, || format!("boosted tubes deviate from sheared tubes by {worst:.3e}"))?;
    Ok(format!("(0,1)-scaling bit-exact on 5 fields; {tubes} boosted tubes match sheared ones to {worst:.1e}"))
}

fn bilinear() -> Outcome {
    let cfg = BilinearSweepConfig { seeds: vec![0], ..BilinearSweepConfig::default() };
    let sweep = bilinear_sweep(&cfg).map_err(|e| e.to_string())?;
    ensure(sweep.constant.is_finite() && sweep.trend <= 0.10, || {
        format!("sweep means {:?}, trend {:.3}", sweep.means, sweep.trend)
    })?;
    let tau = calibrated_tau();
    let grid = Grid::new(1, 128.0, 8192).unwrap();
    let opts = TubeSideOptions { tau, ..TubeSideOptions::default() };
    let mut notes = Vec::new();
    for n in [8.0, 16.0, 32.0] {
        let u = annulus_field(&grid, n, 0).map_err(|e| e.to_string())?;
        let v = annulus_field(&grid, 1.0, 1 << 32).map_err(|e| e.to_string())?;
        let r = bilinear_via_tubes(&u, &v, n, 1.0, &opts).map_err(|e| format!("N = {n}: {e}"))?;
        let worst = r.pairs.iter().map(|p| p.lhs2 / p.rhs).fold(0.0, f64::max);
        ensure(r.holds, || format!("N = {n}: sandwich fails, worst pair LHS²/RHS {worst:.3}"))?;
        notes.push(format!("N={n}: worst {worst:.3}"));
    }
    let means: Vec<String> = sweep.means.iter().map(|(n, m)| format!("{n}:{m:.4}")).collect();
    Ok(format!(
        "ratios [{}], trend {:.2}%, sandwich holds ({})",
        means.join(", "),
        100.0 * sweep.trend,
        notes.join(", ")
    ))
}

fn intersection_law() -> Outcome {
    let window = (-0.5, 0.5);
    let mut products = Vec::new();
    let mut worst_mc = 0.0f64;
    for (k, dv) in [4.0, 8.0, 16.0, 32.0].into_iter().enumerate() {
        let a = Tube::straight(vec![100.0, 100.0], vec![0.0, 0.0], -1.0, 1.0, 1.0, 256.0);
        let b = Tube::straight(vec![100.0, 100.3], vec![dv, 0.0], -1.0, 1.0, 1.0, 256.0);
        let vol = tube_intersection_volume(&a, &b, window).map_err(|e| e.to_string())?;
        let (mc, _) = monte_carlo_volume(&a, &b, window, 4_000_000, 90 + k as u64);
        worst_mc = worst_mc.max((mc - vol).abs() / vol);
        products.push(vol * dv);
    }
    let lo = products.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = products.iter().copied().fold(0.0, f64::max);
    let spread = (hi - lo) / lo;
    ensure(spread <= 0.02 && worst_mc <= 0.01, || {
        format!("vol·Δv {products:?} (spread {spread:.3e}), Monte-Carlo deviation {worst_mc:.3e}")
    })?;
    Ok(format!("vol·Δv = {:.5} (spread {spread:.1e}), Monte-Carlo within {:.2}%", products[0], 100.0 * worst_mc))
}

fn multilinear() -> Outcome {
    let rs = [8.0, 16.0, 32.0, 64.0];
    let mut ratios = Vec::new();
    for r in rs {
        let fams = synthetic_families(3, 10, r, 0.1, 2.0, 5);
        let rep = multilinear_overlap(&fams, r, &OverlapOptions::default()).map_err(|e| e.to_string())?;
        ratios.push(rep.ratio);
    }
    let slope = loglog_slope(&rs, &ratios);
    ensure(slope < 0.5, || format!("slope {slope:.3} with ratios {ratios:?}"))?;
    Ok(format!("ratios {:?}, slope {slope:.4}", ratios.iter().map(|r| (r * 1e3).round() / 1e3).collect::<Vec<_>>()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("flow exactness", flow_exactness),
        ("max-flow/min-cut", mfmc),
        ("path-marginal oracle", path_marginals),
        ("propagator", propagator),
        ("kernel suite", kernel_suite),
        ("decomposition assembly", assembly),
        ("symmetry", symmetry),
        ("bilinear sweep and sandwich", bilinear),
        ("intersection law", intersection_law),
        ("multilinear overlap", multilinear),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS [{name}] {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{name}] {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
