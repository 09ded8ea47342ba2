use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::estimates::EstimateError;
use crate::tubes::Tube;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntersectionRecord {
    pub pair: (usize, usize),
    pub volume: f64,
    /// Smallest `|γ₁' - γ₂'|` over overlapping segment pairs.
    pub velocity_gap: f64,
    /// `|B_{min r}| · 2(r₁ + r₂) / gap`, or the smaller tube volume when the
    /// gap vanishes.
    pub bound: f64,
}

fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0 * r,
        _ => std::f64::consts::PI * r * r,
    }
}

/// Measure of the intersection of two balls (intervals for `d = 1`) of radii
/// `r1`, `r2` whose centers are `dist` apart.
pub fn slice_overlap(dim: usize, r1: f64, r2: f64, dist: f64) -> f64 {
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    if dist >= lo + hi {
        return 0.0;
    }
    if dist <= hi - lo {
        return ball_volume(dim, lo);
    }
    match dim {
        1 => lo + hi - dist,
        _ => {
            let d = dist;
            let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
            let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
            let k = ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0);
            r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k.sqrt()
        }
    }
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, tol / 2.0, depth - 1)
}

fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    simpson(&f, a, b, fa, fm, fb, tol, 40)
}

/// Roots in `(a, b)` of `|p + q (t - a)|² = c²`.
fn crossing_times(p: &[f64], q: &[f64], c: f64, a: f64, b: f64, out: &mut Vec<f64>) {
    let qq: f64 = q.iter().map(|x| x * x).sum();
    let pq: f64 = p.iter().zip(q).map(|(x, y)| x * y).sum();
    let pp: f64 = p.iter().map(|x| x * x).sum();
    if qq == 0.0 {
        return;
    }
    let disc = pq * pq - qq * (pp - c * c);
    if disc < 0.0 {
        return;
    }
    let s = disc.sqrt();
    for root in [(-pq - s) / qq, (-pq + s) / qq] {
        let t = a + root;
        if t > a && t < b {
            out.push(t);
        }
    }
}

/// Spacetime measure of `T₁ ∩ T₂` over `window`: exact slice overlaps
/// integrated in time between the breakpoints of the relative motion
/// (vertices, torus wraps, and the times the centers are `r₁ ± r₂` apart).
/// Piecewise-linear integrands in one dimension are integrated exactly.
pub fn tube_intersection_volume(a: &Tube, b: &Tube, window: (f64, f64)) -> Result<f64, EstimateError> {
    let dim = a.dim();
    if b.dim() != dim || !(1..=2).contains(&dim) {
        return Err(EstimateError::Config("tubes must share a dimension d ≤ 2".into()));
    }
    if a.period != b.period {
        return Err(EstimateError::Config("tubes live on different tori".into()));
    }
    if a.radius + b.radius > a.period / 2.0 {
        return Err(EstimateError::Config(format!(
            "radii {} + {} exceed half the torus side {}",
            a.radius, b.radius, a.period
        )));
    }
    let (t0, t1) = window;
    if !(t0 <= t1) {
        return Err(EstimateError::Config(format!("window [{t0}, {t1}] is empty")));
    }
    let period = a.period;
    let mut cuts = vec![t0, t1];
    cuts.extend(a.times.iter().chain(&b.times).copied().filter(|&t| t > t0 && t < t1));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        let (s0, s1) = (seg[0], seg[1]);
        if s1 <= s0 {
            continue;
        }
        let pa0 = a.position(s0);
        let pb0 = b.position(s0);
        let pa1 = a.position(s1);
        let pb1 = b.position(s1);
        let rel0: Vec<f64> = pb0.iter().zip(&pa0).map(|(x, y)| x - y).collect();
        let rel1: Vec<f64> = pb1.iter().zip(&pa1).map(|(x, y)| x - y).collect();
        let vel: Vec<f64> = rel0.iter().zip(&rel1).map(|(x, y)| (y - x) / (s1 - s0)).collect();
        // wraps of each axis, where the unwrapped offset passes (m + 1/2)L
        let mut sub = vec![s0, s1];
        for k in 0..dim {
            if vel[k] == 0.0 {
                continue;
            }
            let (lo, hi) = if rel0[k] < rel1[k] { (rel0[k], rel1[k]) } else { (rel1[k], rel0[k]) };
            let mut m = ((lo / period) - 0.5).ceil();
            while (m + 0.5) * period <= hi {
                let t = s0 + ((m + 0.5) * period - rel0[k]) / vel[k];
                if t > s0 && t < s1 {
                    sub.push(t);
                }
                m += 1.0;
            }
        }
        sub.sort_by(f64::total_cmp);
        sub.dedup();
        for piece in sub.windows(2) {
            let (u0, u1) = (piece[0], piece[1]);
            if u1 <= u0 {
                continue;
            }
            let mid = 0.5 * (u0 + u1);
            let p: Vec<f64> = (0..dim)
                .map(|k| {
                    let x = rel0[k] + vel[k] * (u0 - s0);
                    let xm = rel0[k] + vel[k] * (mid - s0);
                    x - period * (xm / period).round()
                })
                .collect();
            let mut events = vec![u0, u1];
            crossing_times(&p, &vel, a.radius + b.radius, u0, u1, &mut events);
            crossing_times(&p, &vel, (a.radius - b.radius).abs(), u0, u1, &mut events);
            events.sort_by(f64::total_cmp);
            events.dedup();
            let g = |t: f64| {
                let d = (0..dim)
                    .map(|k| (p[k] + vel[k] * (t - u0)).powi(2))
                    .sum::<f64>()
                    .sqrt();
                slice_overlap(dim, a.radius, b.radius, d)
            };
            for e in events.windows(2) {
                let (e0, e1) = (e[0], e[1]);
                if e1 <= e0 {
                    continue;
                }
                total += if dim == 1 {
                    0.5 * (e1 - e0) * (g(e0) + g(e1))
                } else {
                    let scale = ball_volume(dim, a.radius.min(b.radius)) * (e1 - e0);
                    adaptive(g, e0, e1, 1e-13 * scale.max(f64::MIN_POSITIVE))
                };
            }
        }
    }
    Ok(total)
}

fn segment_velocity_gap(a: &Tube, b: &Tube, window: (f64, f64)) -> f64 {
    let va = a.velocities();
    let vb = b.velocities();
    let mut gap = f64::INFINITY;
    let seg = |t: &Tube, i: usize| (t.times[i], t.times[i + 1]);
    for (i, x) in va.iter().enumerate() {
        let (a0, a1) = seg(a, i);
        for (j, y) in vb.iter().enumerate() {
            let (b0, b1) = seg(b, j);
            let lo = a0.max(b0).max(window.0);
            let hi = a1.min(b1).min(window.1);
            if hi <= lo {
                continue;
            }
            let g = x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            gap = gap.min(g);
        }
    }
    if gap.is_infinite() {
        0.0
    } else {
        gap
    }
}

pub fn intersection_record(
    pair: (usize, usize),
    a: &Tube,
    b: &Tube,
    window: (f64, f64),
) -> Result<IntersectionRecord, EstimateError> {
    let volume = tube_intersection_volume(a, b, window)?;
    let dim = a.dim();
    let gap = segment_velocity_gap(a, b, window);
    let small = ball_volume(dim, a.radius.min(b.radius));
    let cap = small * (window.1 - window.0);
    let bound = if gap > 0.0 {
        (small * 2.0 * (a.radius + b.radius) / gap).min(cap)
    } else {
        cap
    };
    Ok(IntersectionRecord {
        pair,
        volume,
        velocity_gap: gap,
        bound,
    })
}

/// Monte-Carlo estimate of the intersection volume with its standard error:
/// `t` uniform in the window, `x` uniform in the slice of `a`.
pub fn monte_carlo_volume(a: &Tube, b: &Tube, window: (f64, f64), samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = a.dim();
    let mut hits = 0usize;
    for _ in 0..samples {
        let t = rng.gen_range(window.0..window.1);
        let c = a.position(t);
        let x: Vec<f64> = if dim == 1 {
            vec![c[0] + rng.gen_range(-a.radius..a.radius)]
        } else {
            let r = a.radius * rng.gen::<f64>().sqrt();
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            vec![c[0] + r * th.cos(), c[1] + r * th.sin()]
        };
        if b.contains(&x, t) {
            hits += 1;
        }
    }
    let box_volume = ball_volume(dim, a.radius) * (window.1 - window.0);
    let p = hits as f64 / samples as f64;
    (box_volume * p, box_volume * (p * (1.0 - p) / samples as f64).sqrt())
}
