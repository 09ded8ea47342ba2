use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimates::covering::{annulus_covering, Piece};
use crate::estimates::EstimateError;
use crate::schrodinger::field::{rolloff, Evolution};
use crate::schrodinger::{mass, FrequencyWindow, Grid, WaveField};
use crate::tubes::{
    scaled_decompose, segment_product, verify_domination, DecomposeOptions, DominationSpec, TubeDecomposition,
};

/// Unit-mass field with spectrum in `A_N = {N/2 ≤ |κ| ≤ 2N}`: a Gaussian shell
/// of radius `c·N` (`c` drawn from `[1.15, 1.35]`) and width `N/4`, with a
/// random imbalance between opposite sides, smoothly cut to the annulus and
/// centered near the middle of the torus.
pub fn annulus_field(grid: &Grid, scale: f64, seed: u64) -> Result<WaveField, EstimateError> {
    if !(scale > 0.0) {
        return Err(EstimateError::Config(format!("scale {scale} must be positive")));
    }
    let d = grid.dim();
    let window = FrequencyWindow::new(vec![0.0; d], 2.0 * scale)?;
    if !grid.resolves(&window) {
        return Err(EstimateError::Precondition(format!(
            "annulus of scale {scale} is not resolved (Nyquist {:.3})",
            grid.nyquist()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shell = scale * rng.gen_range(1.15..1.35);
    let sigma = 0.25 * scale;
    let balance: f64 = rng.gen_range(0.35..0.65);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let axis = rng.gen_range(0.0..std::f64::consts::TAU);
    let x0: Vec<f64> = (0..d)
        .map(|_| grid.side() / 2.0 + rng.gen_range(-0.5..0.5) / scale)
        .collect();
    let width = 0.1 * scale;
    let coeffs: Vec<Complex64> = (0..grid.len())
        .map(|k| {
            let f = grid.frequency(k);
            let r = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            let cut = rolloff(r, 2.0 * scale, width) * rolloff(scale - r, scale / 2.0, width);
            if cut == 0.0 {
                return Complex64::default();
            }
            let g = (-(r - shell).powi(2) / (2.0 * sigma * sigma)).exp();
            let side = if d == 1 {
                if f[0] > 0.0 {
                    balance.sqrt()
                } else {
                    (1.0 - balance).sqrt()
                }
            } else {
                let th = f[1].atan2(f[0]);
                1.0 + (2.0 * balance - 1.0) * (th - axis).cos()
            };
            let arg = if f[0] < 0.0 { phase } else { 0.0 }
                - f.iter().zip(&x0).map(|(a, b)| a * b).sum::<f64>();
            Complex64::from_polar(g * side * cut, arg)
        })
        .collect();
    let u = WaveField::from_spectrum(grid.clone(), coeffs, window, 0.0)?;
    let m = mass(&u);
    if m == 0.0 {
        return Err(EstimateError::Precondition("annulus holds no grid frequency".into()));
    }
    Ok(u.scaled(1.0 / m.sqrt()))
}

/// Even number of Simpson intervals on `[-R, R]`: `5N²` per unit time, which
/// resolves the `N⁻²` time scale of `∫|u_t v_t|² dx`.
pub fn default_time_steps(n: f64, r_time: f64) -> usize {
    let k = (2.0 * r_time * 5.0 * n * n).ceil().max(16.0) as usize;
    k + k % 2
}

fn simpson_weights(steps: usize, dt: f64) -> Vec<f64> {
    (0..=steps)
        .map(|k| {
            let c = if k == 0 || k == steps {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * dt / 3.0
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearMeasurement {
    pub n: f64,
    pub m: f64,
    pub r_time: f64,
    pub steps: usize,
    /// `‖u_t v_t‖_{L²(T^d × [-R,R])}`.
    pub norm_product: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    /// `M^{(d-1)/2} N^{-1/2} ‖u₀‖ ‖v₀‖`.
    pub scale: f64,
    pub ratio: f64,
}

fn check_separation(n: f64, m: f64) -> Result<(), EstimateError> {
    if !(n > 0.0 && m > 0.0) {
        return Err(EstimateError::Config("frequency scales must be positive".into()));
    }
    if m > n / 4.0 {
        return Err(EstimateError::Precondition(format!(
            "M = {m} is not separated from N = {n} (need M ≤ N/4)"
        )));
    }
    Ok(())
}

/// `‖u_t v_t‖_{L²_{x,t}}` over `[-R, R]` by composite Simpson in time (exact
/// spectral evolution at every node) divided by `M^{(d-1)/2} N^{-1/2} ‖u₀‖‖v₀‖`.
pub fn bilinear_ratio(
    u: &WaveField,
    v: &WaveField,
    n: f64,
    m: f64,
    r_time: f64,
    steps: usize,
) -> Result<BilinearMeasurement, EstimateError> {
    check_separation(n, m)?;
    if u.grid() != v.grid() {
        return Err(EstimateError::Config("fields live on different grids".into()));
    }
    if !u.grid().resolves(u.window()) || !v.grid().resolves(v.window()) {
        return Err(EstimateError::Precondition("field window not resolved by the grid".into()));
    }
    if !(r_time > 0.0) || steps < 2 || steps % 2 == 1 {
        return Err(EstimateError::Config("need R > 0 and an even number of steps".into()));
    }
    let d = u.grid().dim() as i32;
    let (mass_u, mass_v) = (mass(u), mass(v));
    let scale = m.powf((d - 1) as f64 / 2.0) * n.powf(-0.5) * (mass_u * mass_v).sqrt();
    if mass_u == 0.0 || mass_v == 0.0 {
        return Ok(BilinearMeasurement {
            n,
            m,
            r_time,
            steps,
            norm_product: 0.0,
            mass_u,
            mass_v,
            scale,
            ratio: 0.0,
        });
    }
    let eu = Evolution::new(u);
    let ev = Evolution::new(v);
    let cell = u.grid().cell_volume();
    let dt = 2.0 * r_time / steps as f64;
    let slices: Vec<f64> = (0..=steps)
        .into_par_iter()
        .map(|k| {
            let t = -r_time + k as f64 * dt;
            let a = eu.at(u.time() + t);
            let b = ev.at(v.time() + t);
            a.values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| x.norm_sqr() * y.norm_sqr())
                .sum::<f64>()
                * cell
        })
        .collect();
    let integral: f64 = slices
        .iter()
        .zip(simpson_weights(steps, dt))
        .map(|(s, w)| s * w)
        .sum();
    let norm_product = integral.sqrt();
    Ok(BilinearMeasurement {
        n,
        m,
        r_time,
        steps,
        norm_product,
        mass_u,
        mass_v,
        scale,
        ratio: norm_product / scale,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilinearSweepConfig {
    pub dim: usize,
    /// Torus side `L`.
    pub side: f64,
    /// Grid points per axis.
    pub points: usize,
    pub m: f64,
    pub n_values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub r_time: f64,
}

impl Default for BilinearSweepConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            side: 512.0,
            points: 32768,
            m: 1.0,
            n_values: vec![8.0, 16.0, 32.0],
            seeds: vec![0],
            r_time: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: f64,
    pub m: f64,
    pub seed: u64,
    pub r_time: f64,
    pub steps: usize,
    pub norm_product: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearSweep {
    pub rows: Vec<SweepRow>,
    /// Mean ratio per `N`, in configuration order.
    pub means: Vec<(f64, f64)>,
    /// Largest measured ratio: the common constant of the sweep.
    pub constant: f64,
    /// `(max - min) / min` of the per-`N` means.
    pub trend: f64,
}

pub fn bilinear_sweep(cfg: &BilinearSweepConfig) -> Result<BilinearSweep, EstimateError> {
    if cfg.n_values.is_empty() || cfg.seeds.is_empty() {
        return Err(EstimateError::Config("sweep needs at least one N and one seed".into()));
    }
    let grid = Grid::new(cfg.dim, cfg.side, cfg.points)?;
    let mut rows = Vec::new();
    let mut means = Vec::new();
    for &n in &cfg.n_values {
        let steps = default_time_steps(n, cfg.r_time);
        let mut acc = 0.0;
        for &seed in &cfg.seeds {
            let u = annulus_field(&grid, n, seed)?;
            let v = annulus_field(&grid, cfg.m, seed.wrapping_add(1 << 32))?;
            let b = bilinear_ratio(&u, &v, n, cfg.m, cfg.r_time, steps)?;
            acc += b.ratio;
            rows.push(SweepRow {
                n,
                m: cfg.m,
                seed,
                r_time: cfg.r_time,
                steps,
                norm_product: b.norm_product,
                ratio: b.ratio,
            });
        }
        means.push((n, acc / cfg.seeds.len() as f64));
    }
    let constant = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let hi = means.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = means.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    Ok(BilinearSweep {
        rows,
        means,
        constant,
        trend: if lo > 0.0 { (hi - lo) / lo } else { f64::INFINITY },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeSideOptions {
    /// `V` of the frequency covering; balls have radius `1/(10V)`.
    pub covering_speed: f64,
    pub tau: f64,
    pub r_time: f64,
    pub decompose: DecomposeOptions,
    pub domination: DominationSpec,
    /// Trapezoid nodes per time slab for the tube side.
    pub samples_per_slab: usize,
    /// Simpson intervals for the field side; `None` for `default_time_steps`.
    pub lhs_steps: Option<usize>,
}

impl Default for TubeSideOptions {
    fn default() -> Self {
        Self {
            covering_speed: 0.5,
            tau: 0.3,
            r_time: 0.25,
            decompose: DecomposeOptions::default(),
            domination: DominationSpec::default(),
            samples_per_slab: 8,
            lhs_steps: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSummary {
    pub index: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub mass: f64,
    /// Scale of the computational frame.
    pub frame_scale: f64,
    pub lattice_side: usize,
    pub layers: usize,
    pub tube_radius: f64,
    pub c_dom: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub u_piece: usize,
    pub v_piece: usize,
    /// `‖u_i v_j‖²` over the window.
    pub lhs2: f64,
    /// `Σ_{n,m} w_n w'_m |T_n ∩ T'_m|` over the window, as `∫∫ f_i f_j`.
    pub weighted_volume: f64,
    /// `C_dom(u_i) C_dom(v_j) Σ w w' vol`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearTubeReport {
    pub n: f64,
    pub m: f64,
    pub r_time: f64,
    pub u_pieces: Vec<PieceSummary>,
    pub v_pieces: Vec<PieceSummary>,
    pub pairs: Vec<PairRecord>,
    /// `‖u v‖²` over the window.
    pub lhs2: f64,
    /// `Σ_i ‖u_i‖² / ‖u‖²` and the same for `v`.
    pub orthogonality: (f64, f64),
    pub rhs_total: f64,
    /// `N⁻¹ M^{d-1} ‖u‖² ‖v‖²`.
    pub normalizer: f64,
    /// `rhs_total / normalizer`.
    pub measured_c: f64,
    pub holds: bool,
}

struct Decomposed {
    piece: Piece,
    dec: TubeDecomposition,
    c_dom: f64,
}

/// Pieces carry a small share of the mass; the denominator grows by the
/// inverse share (as a power of two, at most `2^56`) so that weights keep the
/// same resolution relative to the piece.
fn piece_denominator(base: u64, piece_mass: f64) -> u64 {
    if !(piece_mass > 0.0 && piece_mass < 1.0) {
        return base;
    }
    let shift = (1.0 / piece_mass).log2().ceil() as u32;
    let cap = 1u64 << 56;
    base.checked_shl(shift).filter(|&d| d <= cap && d >= base).unwrap_or(cap.max(base))
}

fn decompose_pieces(pieces: Vec<Piece>, opts: &TubeSideOptions) -> Result<Vec<Decomposed>, EstimateError> {
    pieces
        .into_par_iter()
        .map(|piece| {
            let mut dopts = opts.decompose.clone();
            dopts.denominator = piece_denominator(dopts.denominator, mass(&piece.field));
            let dec = scaled_decompose(
                &piece.field,
                &piece.center,
                piece.radius,
                opts.tau,
                opts.r_time,
                &dopts,
            )?;
            let dom = verify_domination(&piece.field, &dec, &opts.domination)?;
            Ok(Decomposed {
                piece,
                dec,
                c_dom: dom.c_dom,
            })
        })
        .collect()
}

fn summary(p: &Decomposed) -> PieceSummary {
    PieceSummary {
        index: p.piece.index,
        center: p.piece.center.clone(),
        radius: p.piece.radius,
        mass: mass(&p.piece.field),
        frame_scale: p.dec.frame().rho,
        lattice_side: p.dec.lattice_side(),
        layers: p.dec.num_layers(),
        tube_radius: p.dec.radius(),
        c_dom: p.c_dom,
    }
}

/// Tube-side check of the bilinear estimate in one dimension. Both fields are
/// split by the annulus covering, each piece is decomposed in its own boosted
/// and rescaled frame, and for every pair of pieces
/// `‖u_i v_j‖² ≤ C_dom(u_i) C_dom(v_j) Σ w w' |T ∩ T'|` is checked. The
/// weighted volume sum is evaluated as `∫∫ f_i f_j dx dt` (Fubini), exact in
/// `x` and trapezoidal in `t` on a refinement of all slab boundaries.
pub fn bilinear_via_tubes(
    u: &WaveField,
    v: &WaveField,
    n: f64,
    m: f64,
    opts: &TubeSideOptions,
) -> Result<BilinearTubeReport, EstimateError> {
    check_separation(n, m)?;
    let grid = u.grid();
    if grid != v.grid() {
        return Err(EstimateError::Config("fields live on different grids".into()));
    }
    if grid.dim() != 1 {
        return Err(EstimateError::Config("the tube side is implemented for d = 1".into()));
    }
    let r = opts.r_time;
    if !(r > 0.0) || opts.samples_per_slab == 0 {
        return Err(EstimateError::Config("need R > 0 and at least one sample per slab".into()));
    }
    let cover = annulus_covering(1, opts.covering_speed)?;
    let (mass_u, mass_v) = (mass(u), mass(v));
    let split = |w: &WaveField, s: f64| -> Result<Vec<Piece>, EstimateError> {
        if mass(w) == 0.0 {
            Ok(Vec::new())
        } else {
            cover.split(w, s)
        }
    };
    let pu = decompose_pieces(split(u, n)?, opts)?;
    let pv = decompose_pieces(split(v, m)?, opts)?;
    let orth = |ps: &[Decomposed], total: f64| {
        if total == 0.0 {
            0.0
        } else {
            ps.iter().map(|p| mass(&p.piece.field)).sum::<f64>() / total
        }
    };
    let orthogonality = (orth(&pu, mass_u), orth(&pv, mass_v));
    let npairs = pu.len() * pv.len();

    // field side
    let steps = opts.lhs_steps.unwrap_or_else(|| default_time_steps(n, r));
    let dt = 2.0 * r / steps as f64;
    let eu: Vec<Evolution> = pu.iter().map(|p| Evolution::new(&p.piece.field)).collect();
    let ev: Vec<Evolution> = pv.iter().map(|p| Evolution::new(&p.piece.field)).collect();
    let (whole_u, whole_v) = (Evolution::new(u), Evolution::new(v));
    let cell = grid.cell_volume();
    let field_rows: Vec<(f64, Vec<f64>)> = (0..=steps)
        .into_par_iter()
        .map(|k| {
            let t = -r + k as f64 * dt;
            let iu: Vec<Vec<f64>> = eu.iter().map(|e| e.intensity_at(u.time() + t)).collect();
            let iv: Vec<Vec<f64>> = ev.iter().map(|e| e.intensity_at(v.time() + t)).collect();
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * cell;
            let whole = dot(&whole_u.intensity_at(u.time() + t), &whole_v.intensity_at(v.time() + t));
            let mut per = Vec::with_capacity(npairs);
            for a in &iu {
                for b in &iv {
                    per.push(dot(a, b));
                }
            }
            (whole, per)
        })
        .collect();
    let w = simpson_weights(steps, dt);
    let lhs2: f64 = field_rows.iter().zip(&w).map(|(row, c)| row.0 * c).sum();
    let mut pair_lhs = vec![0.0; npairs];
    for (row, c) in field_rows.iter().zip(&w) {
        for (acc, x) in pair_lhs.iter_mut().zip(&row.1) {
            *acc += x * c;
        }
    }

    // tube side
    let mut cuts = vec![-r, r];
    for p in pu.iter().chain(&pv) {
        let f = p.dec.frame();
        for &tf in p.dec.layer_times() {
            let t = f.to_physical_time(tf);
            if t > -r && t < r {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for c in cuts.windows(2) {
        let h = (c[1] - c[0]) / opts.samples_per_slab as f64;
        for k in 0..=opts.samples_per_slab {
            nodes.push(c[0] + k as f64 * h);
            weights.push(if k == 0 || k == opts.samples_per_slab { 0.5 * h } else { h });
        }
    }
    let tube_rows: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|&t| -> Result<Vec<f64>, EstimateError> {
            let segs = |p: &Decomposed| p.dec.cover_slice(t).map(|s| s.segments());
            let su = pu.iter().map(segs).collect::<Result<Vec<_>, _>>()?;
            let sv = pv.iter().map(segs).collect::<Result<Vec<_>, _>>()?;
            let mut per = Vec::with_capacity(npairs);
            for (a, pa) in su.iter().zip(&pu) {
                for (b, pb) in sv.iter().zip(&pv) {
                    let scale = pa.dec.denominator() as f64 * pb.dec.denominator() as f64;
                    per.push(segment_product(a, b) / scale);
                }
            }
            Ok(per)
        })
        .collect::<Result<_, _>>()?;
    let mut volumes = vec![0.0; npairs];
    for (row, c) in tube_rows.iter().zip(&weights) {
        for (acc, x) in volumes.iter_mut().zip(row) {
            *acc += x * c;
        }
    }

    let mut pairs = Vec::with_capacity(npairs);
    for (i, a) in pu.iter().enumerate() {
        for (j, b) in pv.iter().enumerate() {
            let k = i * pv.len() + j;
            let rhs = a.c_dom * b.c_dom * volumes[k];
            pairs.push(PairRecord {
                u_piece: a.piece.index,
                v_piece: b.piece.index,
                lhs2: pair_lhs[k],
                weighted_volume: volumes[k],
                rhs,
                holds: pair_lhs[k] <= rhs,
            });
        }
    }
    let rhs_total: f64 = pairs.iter().map(|p| p.rhs).sum();
    let normalizer = mass_u * mass_v / n;
    Ok(BilinearTubeReport {
        n,
        m,
        r_time: r,
        u_pieces: pu.iter().map(summary).collect(),
        v_pieces: pv.iter().map(summary).collect(),
        holds: pairs.iter().all(|p| p.holds),
        pairs,
        lhs2,
        orthogonality,
        rhs_total,
        normalizer,
        measured_c: if normalizer > 0.0 { rhs_total / normalizer } else { 0.0 },
    })
}
