use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice_flow::graph::{site_coords, Adjacency, LatticeGraph};
use crate::mu_kernel::kernel::{displacement, MuKernel};
use crate::mu_kernel::weights::site_masses_from_intensity;
use crate::mu_kernel::MuError;
use crate::schrodinger::field::{intensity, mass, Evolution, WaveField};

/// Smallest time step calibration will return before giving up.
pub const TAU_FLOOR: f64 = 1e-4;
/// Factor applied to the largest passing time step.
pub const SAFETY: f64 = 0.5;

/// Largest ratio `sup_{|y-x|≤1} |u(y)|² / ∫|u(y)|² μ(x-y) dy` over grid points
/// `x`, with the supremum taken over grid points of the ball. Zero for the
/// zero field.
pub fn verify_lc(u0: &WaveField, mu: &MuKernel) -> f64 {
    let grid = mu.grid();
    let dens = intensity(u0);
    let peak = dens.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let conv = crate::fft::convolve_real(&dens, mu.values(), grid.dim(), grid.points(), grid.cell_volume());
    let m = grid.points();
    let ball: Vec<Vec<i64>> = (0..grid.len())
        .filter(|&j| displacement(grid, j).iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12)
        .map(|j| {
            grid.axis_indices(j)[..grid.dim()]
                .iter()
                .map(|&i| crate::fft::signed_index(i, m))
                .collect()
        })
        .collect();
    (0..grid.len())
        .into_par_iter()
        .map(|x| {
            let idx = grid.axis_indices(x);
            let sup = ball
                .iter()
                .map(|off| {
                    let y = (0..grid.dim()).fold(0usize, |acc, a| {
                        acc * m + (idx[a] as i64 + off[a]).rem_euclid(m as i64) as usize
                    });
                    dens[y]
                })
                .fold(0.0, f64::max);
            if conv[x] > 0.0 {
                sup / conv[x]
            } else {
                0.0
            }
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FsOptions {
    /// Random subsets drawn per field.
    pub trials: usize,
    pub seed: u64,
    /// Times checked, as fractions of τ.
    pub time_fractions: Vec<f64>,
    /// Also check negative times.
    pub both_directions: bool,
    /// Allowed negative margin, relative to the field mass (roundoff).
    pub tolerance: f64,
}

impl Default for FsOptions {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 0,
            time_fractions: vec![0.25, 0.5, 0.75, 1.0],
            both_directions: true,
            tolerance: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FsWitness {
    pub family: String,
    pub set: Vec<usize>,
    pub time: f64,
    /// 1: `∫|u_t|²μ_A ≤ ∫|u_0|²μ_{A+H}`; 2: the reverse roles.
    pub inequality: u8,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FsReport {
    pub tau: f64,
    pub sets: usize,
    pub checks: usize,
    /// Smallest `rhs - lhs` seen, in mass units.
    pub worst_margin: f64,
    pub worst: Option<FsWitness>,
    pub passed: bool,
}

/// A test set of lattice sites together with its `H`-neighborhood.
#[derive(Clone, Debug)]
pub(crate) struct TestSet {
    family: &'static str,
    set: Vec<usize>,
    hood: Vec<usize>,
}

pub(crate) fn test_sets(g: &LatticeGraph, trials: usize, seed: u64) -> Vec<TestSet> {
    let n = g.num_sites();
    let d = g.dim();
    let s = g.side();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<(&'static str, Vec<usize>)> = vec![("empty", vec![]), ("all", (0..n).collect())];

    if n <= 256 {
        out.extend((0..n).map(|a| ("singleton", vec![a])));
    } else {
        out.extend((0..256).map(|_| ("singleton", vec![rng.gen_range(0..n)])));
    }
    // half-spaces {x_axis < c}
    for axis in 0..d {
        for c in 1..s {
            let set = (0..n)
                .filter(|&a| (site_coords(a, d, s)[axis] as usize) < c)
                .collect();
            out.push(("half-space", set));
        }
    }
    let boxed = |rng: &mut ChaCha8Rng| -> Vec<usize> {
        let lo: Vec<i64> = (0..d).map(|_| rng.gen_range(0..s as i64)).collect();
        let len: Vec<i64> = (0..d).map(|_| rng.gen_range(1..s as i64)).collect();
        (0..n)
            .filter(|&a| {
                site_coords(a, d, s)
                    .iter()
                    .enumerate()
                    .all(|(i, &c)| (c - lo[i]).rem_euclid(s as i64) < len[i])
            })
            .collect()
    };
    for _ in 0..trials {
        let p: f64 = rng.gen_range(0.1..0.9);
        let set = (0..n).filter(|_| rng.gen_bool(p)).collect();
        out.push(("random", set));
    }
    for _ in 0..trials.div_ceil(4) {
        let k = rng.gen_range(1..=4);
        let mut mark = vec![false; n];
        for _ in 0..k {
            for a in boxed(&mut rng) {
                mark[a] = true;
            }
        }
        out.push(("union", (0..n).filter(|&a| mark[a]).collect()));
    }
    out.into_iter()
        .map(|(family, set)| TestSet {
            family,
            hood: g.expand(&set),
            set,
        })
        .collect()
}

/// Precomputed state for repeated FS checks on one field.
struct FsProbe {
    evolution: Evolution,
    c0: Vec<f64>,
    mass: f64,
    t0: f64,
}

impl FsProbe {
    fn new(u0: &WaveField, mu: &MuKernel) -> Self {
        Self {
            evolution: Evolution::new(u0),
            c0: site_masses_from_intensity(&intensity(u0), mu),
            mass: mass(u0),
            t0: u0.time(),
        }
    }

    fn check(&self, mu: &MuKernel, sets: &[TestSet], tau: f64, opts: &FsOptions) -> FsReport {
        let mut times: Vec<f64> = opts.time_fractions.iter().map(|f| f * tau).collect();
        if opts.both_directions {
            times.extend(opts.time_fractions.iter().map(|f| -f * tau));
        }
        let sum = |c: &[f64], set: &[usize]| set.iter().map(|&a| c[a]).sum::<f64>();
        let mut report = FsReport {
            tau,
            sets: sets.len(),
            checks: 0,
            worst_margin: f64::INFINITY,
            worst: None,
            passed: true,
        };
        for &t in &times {
            let ct = site_masses_from_intensity(&self.evolution.intensity_at(self.t0 + t), mu);
            for ts in sets {
                let margins = [
                    sum(&self.c0, &ts.hood) - sum(&ct, &ts.set),
                    sum(&ct, &ts.hood) - sum(&self.c0, &ts.set),
                ];
                for (k, &margin) in margins.iter().enumerate() {
                    report.checks += 1;
                    if margin < report.worst_margin {
                        report.worst_margin = margin;
                        report.worst = Some(FsWitness {
                            family: ts.family.into(),
                            set: ts.set.clone(),
                            time: t,
                            inequality: k as u8 + 1,
                            margin,
                        });
                    }
                }
            }
        }
        report.passed = report.worst_margin >= -opts.tolerance * self.mass.max(f64::MIN_POSITIVE);
        report
    }
}

/// Checks both finite-speed inequalities for structured and random site sets
/// at times `±f·τ`. Violations are reported, not raised.
pub fn verify_fs(u0: &WaveField, mu: &MuKernel, tau: f64, opts: &FsOptions) -> FsReport {
    let sets = test_sets(&mu.lattice(), opts.trials, opts.seed);
    FsProbe::new(u0, mu).check(mu, &sets, tau, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Returned time step, `SAFETY · tau_raw`.
    pub tau: f64,
    /// Largest time step found to pass.
    pub tau_raw: f64,
    pub tau_max: f64,
    /// `(τ, passed, worst margin)` for every probe, in order.
    pub probes: Vec<(f64, bool, f64)>,
}

/// Bisects for the largest `τ ≤ tau_max` at which the finite-speed check
/// passes on every field of the ensemble, then applies the safety factor.
pub fn calibrate_tau(
    ensemble: &[WaveField],
    mu: &MuKernel,
    tau_max: f64,
    opts: &FsOptions,
) -> Result<Calibration, MuError> {
    if !(tau_max.is_finite() && tau_max > 0.0) {
        return Err(MuError::Config(format!("tau_max {tau_max} must be positive")));
    }
    let probes: Vec<FsProbe> = ensemble.par_iter().map(|u| FsProbe::new(u, mu)).collect();
    let sets: Vec<Vec<TestSet>> = (0..ensemble.len())
        .map(|i| test_sets(&mu.lattice(), opts.trials, opts.seed.wrapping_add(i as u64)))
        .collect();
    let mut log = Vec::new();
    let mut passes = |tau: f64| {
        let worst = probes
            .par_iter()
            .zip(&sets)
            .map(|(p, s)| {
                let r = p.check(mu, s, tau, opts);
                (r.passed, r.worst_margin)
            })
            .reduce(|| (true, f64::INFINITY), |a, b| (a.0 && b.0, a.1.min(b.1)));
        log.push((tau, worst.0, worst.1));
        worst.0
    };
    let raw = if passes(tau_max) {
        tau_max
    } else {
        let floor = TAU_FLOOR.min(tau_max);
        if !passes(floor) {
            return Err(MuError::Calibration(format!(
                "finite-speed check fails already at τ = {floor}"
            )));
        }
        let (mut lo, mut hi) = (floor, tau_max);
        for _ in 0..40 {
            if (hi - lo) <= 1e-3 * lo {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if passes(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(Calibration {
        tau: SAFETY * raw,
        tau_raw: raw,
        tau_max,
        probes: log,
    })
}
