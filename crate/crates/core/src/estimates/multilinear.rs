use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimates::EstimateError;

/// Unit-radius tube around a polyline in `ℝ^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveTube {
    pub points: Vec<Vec<f64>>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeFamily {
    pub direction: Vec<f64>,
    pub tubes: Vec<CurveTube>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapOptions {
    /// Lower bound required of `|v₁ ∧ ⋯ ∧ v_n|`.
    pub nu: f64,
    /// Allowed distance of every unit tangent from `±v_i`.
    pub delta: f64,
    /// Quadrature cell side.
    pub spacing: f64,
}

impl Default for OverlapOptions {
    fn default() -> Self {
        Self {
            nu: 0.5,
            delta: 0.1,
            spacing: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub ball_radius: f64,
    /// `∫_{B_R} Π_i (Σ_j w_ij 1_{T_ij})^{1/(n-1)}`.
    pub lhs: f64,
    /// `Π_i (Σ_j w_ij)^{1/(n-1)}`.
    pub rhs: f64,
    pub ratio: f64,
    pub wedge: f64,
    pub max_deviation: f64,
    pub cells: usize,
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// `|det[v₁ … v_n]|` of the normalized directions, by elimination with
/// partial pivoting.
pub fn wedge(directions: &[Vec<f64>]) -> f64 {
    let n = directions.len();
    let mut a: Vec<Vec<f64>> = directions.iter().map(|v| normalize(v)).collect();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        a.swap(c, p);
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det.abs()
}

fn segment_distance_sq(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut axab = 0.0;
    for k in 0..x.len() {
        let d = b[k] - a[k];
        ab2 += d * d;
        axab += (x[k] - a[k]) * d;
    }
    let s = if ab2 > 0.0 { (axab / ab2).clamp(0.0, 1.0) } else { 0.0 };
    (0..x.len())
        .map(|k| (x[k] - a[k] - s * (b[k] - a[k])).powi(2))
        .sum()
}

struct Segment {
    a: Vec<f64>,
    b: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn segments(t: &CurveTube) -> Vec<Segment> {
    t.points
        .windows(2)
        .map(|w| {
            let lo = w[0].iter().zip(&w[1]).map(|(p, q)| p.min(*q) - 1.0).collect();
            let hi = w[0].iter().zip(&w[1]).map(|(p, q)| p.max(*q) + 1.0).collect();
            Segment {
                a: w[0].clone(),
                b: w[1].clone(),
                lo,
                hi,
            }
        })
        .collect()
}

fn inside(x: &[f64], segs: &[Segment]) -> bool {
    segs.iter().any(|s| {
        x.iter().zip(&s.lo).zip(&s.hi).all(|((v, l), h)| v >= l && v <= h)
            && segment_distance_sq(x, &s.a, &s.b) <= 1.0
    })
}

/// Both sides of the multilinear overlap inequality over `B_R`, by midpoint
/// quadrature on cells of side `spacing`. Only cells meeting a tube of the
/// first family are visited, since the integrand vanishes elsewhere.
pub fn multilinear_overlap(
    families: &[TubeFamily],
    ball_radius: f64,
    opts: &OverlapOptions,
) -> Result<OverlapReport, EstimateError> {
    let n = families.len();
    if n < 2 {
        return Err(EstimateError::Config("need at least two families".into()));
    }
    if families.iter().any(|f| f.direction.len() != n) {
        return Err(EstimateError::Config(format!("directions must lie in ℝ^{n}")));
    }
    if !(opts.spacing > 0.0 && ball_radius > 0.0) {
        return Err(EstimateError::Config("spacing and radius must be positive".into()));
    }
    let dirs: Vec<Vec<f64>> = families.iter().map(|f| normalize(&f.direction)).collect();
    let w = wedge(&dirs);
    if w < opts.nu {
        return Err(EstimateError::Transversality { wedge: w, nu: opts.nu });
    }
    let mut max_deviation: f64 = 0.0;
    for (f, v) in families.iter().zip(&dirs) {
        for t in &f.tubes {
            if t.points.iter().any(|p| p.len() != n) || t.points.len() < 2 || t.weight < 0.0 {
                return Err(EstimateError::Config("malformed tube".into()));
            }
            for s in t.points.windows(2) {
                let d: Vec<f64> = s[1].iter().zip(&s[0]).map(|(a, b)| a - b).collect();
                let u = normalize(&d);
                let plus = u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let minus = u.iter().zip(v).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt();
                max_deviation = max_deviation.max(plus.min(minus));
            }
        }
    }
    if max_deviation > opts.delta {
        return Err(EstimateError::Precondition(format!(
            "tangent deviates by {max_deviation:.3e} from its family direction (δ = {})",
            opts.delta
        )));
    }
    let segs: Vec<Vec<Vec<Segment>>> = families
        .iter()
        .map(|f| f.tubes.iter().map(segments).collect())
        .collect();
    let h = opts.spacing;
    let r2 = ball_radius * ball_radius;
    let mut cells: Vec<Vec<i64>> = Vec::new();
    for tube in &segs[0] {
        for s in tube {
            let lo: Vec<i64> = s.lo.iter().map(|v| (v.max(-ball_radius) / h).floor() as i64).collect();
            let hi: Vec<i64> = s.hi.iter().map(|v| (v.min(ball_radius) / h).ceil() as i64).collect();
            if lo.iter().zip(&hi).any(|(a, b)| a > b) {
                continue;
            }
            let mut idx = lo.clone();
            loop {
                let x: Vec<f64> = idx.iter().map(|&i| (i as f64 + 0.5) * h).collect();
                if x.iter().map(|v| v * v).sum::<f64>() <= r2
                    && segment_distance_sq(&x, &s.a, &s.b) <= 1.0
                {
                    cells.push(idx.clone());
                }
                let mut k = 0;
                loop {
                    if k == n {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] <= hi[k] {
                        break;
                    }
                    idx[k] = lo[k];
                    k += 1;
                }
                if k == n {
                    break;
                }
            }
        }
    }
    cells.sort_unstable();
    cells.dedup();
    let power = 1.0 / (n as f64 - 1.0);
    let values: Vec<f64> = cells
        .par_iter()
        .map(|idx| {
            let x: Vec<f64> = idx.iter().map(|&i| (i as f64 + 0.5) * h).collect();
            let mut prod = 1.0;
            for (f, fam) in families.iter().zip(&segs) {
                let s: f64 = f
                    .tubes
                    .iter()
                    .zip(fam)
                    .filter(|(_, sg)| inside(&x, sg))
                    .map(|(t, _)| t.weight)
                    .sum();
                if s == 0.0 {
                    return 0.0;
                }
                prod *= s.powf(power);
            }
            prod
        })
        .collect();
    let lhs = values.iter().sum::<f64>() * h.powi(n as i32);
    let rhs: f64 = families
        .iter()
        .map(|f| f.tubes.iter().map(|t| t.weight).sum::<f64>().powf(power))
        .product();
    Ok(OverlapReport {
        ball_radius,
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
        wedge: w,
        max_deviation,
        cells: cells.len(),
    })
}

/// `n` families of `per_family` unit tubes in `ℝ^n`. Family `i` runs along a
/// perturbation of `e_i`; each curve starts at a random offset of size at most
/// `spread` from the origin and takes unit steps whose directions stay within
/// `0.9δ` of the family direction. Curves span `[-R-2, R+2]` along it.
pub fn synthetic_families(
    n: usize,
    per_family: usize,
    ball_radius: f64,
    delta: f64,
    spread: f64,
    seed: u64,
) -> Vec<TubeFamily> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| loop {
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return g.into_iter().map(|x| x / r).collect::<Vec<f64>>();
        }
    };
    let perp = |v: &[f64], g: Vec<f64>| {
        let dot: f64 = g.iter().zip(v).map(|(a, b)| a * b).sum();
        let p: Vec<f64> = g.iter().zip(v).map(|(a, b)| a - dot * b).collect();
        normalize(&p)
    };
    let steps = (2.0 * (ball_radius + 2.0)).ceil() as usize;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let g = unit(&mut rng);
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let v = normalize(&e.iter().zip(&g).map(|(a, b)| a + 0.5 * delta * b).collect::<Vec<_>>());
        let mut tubes = Vec::with_capacity(per_family);
        for _ in 0..per_family {
            let o = perp(&v, unit(&mut rng));
            let size = spread * rng.gen::<f64>();
            let mut p: Vec<f64> = (0..n)
                .map(|k| size * o[k] - (ball_radius + 2.0) * v[k])
                .collect();
            let mut points = vec![p.clone()];
            for _ in 0..steps {
                let w = perp(&v, unit(&mut rng));
                let t = normalize(&v.iter().zip(&w).map(|(a, b)| a + 0.9 * delta * b).collect::<Vec<_>>());
                for k in 0..n {
                    p[k] += t[k];
                }
                points.push(p.clone());
            }
            tubes.push(CurveTube {
                points,
                weight: rng.gen_range(0.5..1.5),
            });
        }
        out.push(TubeFamily { direction: v, tubes });
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
