use lipschitz_tubes::lattice_flow::DEFAULT_DENOMINATOR;
use lipschitz_tubes::mu_kernel::{
    build_mu, calibrate_tau, mass_weights, verify_fs, verify_kernel_lemmas, verify_lc, FsOptions,
};
use lipschitz_tubes::schrodinger::{make_band_limited, mass, FrequencyWindow, Grid, Profile, WaveField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> Grid {
    Grid::new(1, 16.0, 64).unwrap()
}

fn fields(count: usize, seed: u64) -> Vec<WaveField> {
    (0..count)
        .map(|i| make_band_limited(&grid(), &FrequencyWindow::unit(1), Profile::RandomPhase, seed + i as u64).unwrap())
        .collect()
}

/// Unit-mass plane wave `e^{ikx}/√L` with `k = 2π·2/L`.
fn plane_wave(g: &Grid) -> WaveField {
    let k = std::f64::consts::TAU * 2.0 / g.side();
    let amp = 1.0 / g.side().sqrt();
    let values = (0..g.len())
        .map(|j| Complex64::from_polar(amp, k * g.position(j)[0]))
        .collect();
    WaveField::new(g.clone(), values, FrequencyWindow::unit(1), 0.0).unwrap()
}

#[test]
fn translates_sum_to_one_off_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (d, side, points) in [(1, 16.0, 64), (2, 8.0, 32)] {
        let mu = build_mu(&Grid::new(d, side, points).unwrap(), 2.0).unwrap();
        let s = side as i64;
        for _ in 0..100 {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..side)).collect();
            let mut total = 0.0;
            for site in 0..s.pow(d as u32) {
                let a = [site % s, site / s];
                let y: Vec<f64> = (0..d).map(|i| x[i] - a[i] as f64).collect();
                total += mu.eval(&y);
            }
            assert!((total - 1.0).abs() <= 1e-10, "d = {d}, x = {x:?}: {total}");
        }
    }
}

#[test]
fn polynomial_decay_is_pinched() {
    // μ(x)|x|^{10} between two positive constants on 1 ≤ |x| ≤ L/4
    let mu = build_mu(&Grid::new(1, 64.0, 256).unwrap(), 2.0).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..=3000 {
        let x = 1.0 + 15.0 * k as f64 / 3000.0;
        let v = mu.eval(&[x]) * x.powi(10);
        assert!((mu.eval(&[x]) - mu.eval(&[-x])).abs() <= 1e-12);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    assert!(lo > 0.0 && hi.is_finite());
    assert!(hi / lo < 1e6, "decay band [{lo:.3e}, {hi:.3e}]");
}

#[test]
fn lc_constant_is_finite_on_an_ensemble() {
    let mu = build_mu(&grid(), 2.0).unwrap();
    let ratios: Vec<f64> = fields(50, 300).iter().map(|u| verify_lc(u, &mu)).collect();
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    // the constant depends on the kernel, not on the draw
    assert!(hi / lo < 3.0, "C_LC spread [{lo:.3}, {hi:.3}]");
}

#[test]
fn calibration_is_reproducible_and_monotone() {
    let mu = build_mu(&grid(), 2.0).unwrap();
    let ensemble = fields(6, 700);
    let opts = FsOptions { trials: 60, ..FsOptions::default() };
    let a = calibrate_tau(&ensemble, &mu, 2.0, &opts).unwrap();
    let b = calibrate_tau(&ensemble, &mu, 2.0, &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.tau > 0.0 && a.tau <= a.tau_raw && a.tau_raw <= 2.0);
    for u in &ensemble {
        assert!(verify_fs(u, &mu, a.tau, &opts).passed);
        assert!(verify_fs(u, &mu, a.tau / 2.0, &opts).passed);
    }
    let g = make_band_limited(&grid(), &FrequencyWindow::unit(1), Profile::Gaussian, 0).unwrap();
    assert!(calibrate_tau(&[g], &mu, 2.0, &opts).unwrap().tau > 0.0);
}

#[test]
fn half_line_boundary_constant_is_finite() {
    let mu = build_mu(&grid(), 2.0).unwrap();
    let half: Vec<usize> = (0..8).collect();
    let all: Vec<usize> = (0..16).collect();
    let r = verify_kernel_lemmas(&mu, &[half, all, vec![]], &[]);
    assert!(r.all_finite());
    assert!(r.boundary[0].constant > 0.0);
    assert!(r.boundary[1].constant < 1e-8);
}

#[test]
fn two_layer_totals_are_stencil_times_mass() {
    for (d, side, points) in [(1, 16.0, 64), (2, 8.0, 32)] {
        let g = Grid::new(d, side, points).unwrap();
        let u = make_band_limited(&g, &FrequencyWindow::unit(d), Profile::Bump, 4).unwrap();
        let mu = build_mu(&g, 2.0).unwrap();
        let w = mass_weights(&u, &mu, 0.3, 2, DEFAULT_DENOMINATOR).unwrap();
        let target = 3f64.powi(d as i32) * mass(&u);
        for t in &w.raw_totals {
            assert!((t - target).abs() <= 1e-9, "d = {d}: {t} vs {target}");
        }
        let q = (target * DEFAULT_DENOMINATOR as f64).round() as u64;
        assert_eq!(w.layers.total(), q);
    }
}

#[test]
fn plane_wave_layers_are_stationary() {
    let g = grid();
    let u = plane_wave(&g);
    let mu = build_mu(&g, 2.0).unwrap();
    let w = mass_weights(&u, &mu, 0.3, 6, DEFAULT_DENOMINATOR).unwrap();
    for layer in &w.raw[1..] {
        for (a, b) in layer.iter().zip(&w.raw[0]) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
    // constant modulus: both sides of the locally-constant bound are constant
    let r = verify_lc(&u, &mu);
    assert!((r - 1.0 / mu.integral()).abs() <= 1e-9);
}
