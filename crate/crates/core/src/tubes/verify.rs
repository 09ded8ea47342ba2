use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::schrodinger::field::Evolution;
use crate::schrodinger::{galilean_rescale, mass, Direction, WaveField};
use crate::tubes::decomposition::TubeDecomposition;
use crate::tubes::TubeError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationSpec {
    /// Use every `stride`-th grid point per axis.
    pub stride: usize,
    /// Intensities at or below `floor · peak` need no covering tube.
    pub floor: f64,
}

impl Default for DominationSpec {
    fn default() -> Self {
        Self {
            stride: 1,
            floor: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    /// `max |u_t(x)|² / f(x,t)` over samples with `f > 0`.
    pub c_dom: f64,
    pub samples: usize,
    pub covered_samples: usize,
    pub peak: f64,
    /// Point attaining `c_dom`, as `(x, t)`.
    pub witness: Option<(Vec<f64>, f64)>,
    /// Samples where `f(x,t) < m(a, t_j)` for the containing prism; zero when
    /// the prism argument holds.
    pub prism_violations: usize,
}

/// Frame sample times: every layer time and slab midpoint, the end time, and
/// `±R` when inside the range.
fn sample_times(dec: &TubeDecomposition) -> Vec<f64> {
    let mut ts = Vec::new();
    for &t in dec.layer_times() {
        ts.push(t);
        ts.push(t + 0.5 * dec.tau());
    }
    ts.push(dec.end_time());
    let r = dec.provenance().r_time;
    let (lo, hi) = (dec.layer_times()[0], dec.end_time());
    for t in [-r, r] {
        if t >= lo && t <= hi {
            ts.push(t);
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// Samples `|u_t(x)|²` against the cover `f(x,t)` on a space-time grid.
/// Fails with a witness if a point of non-negligible intensity is uncovered.
pub fn verify_domination(
    u0: &WaveField,
    dec: &TubeDecomposition,
    spec: &DominationSpec,
) -> Result<DominationReport, TubeError> {
    let frame = dec.frame();
    let field = if frame.is_identity() {
        u0.clone()
    } else {
        galilean_rescale(u0, &frame.xi, frame.rho, Direction::Forward)?
    };
    let grid = field.grid().clone();
    let stride = spec.stride.max(1);
    let idx: Vec<usize> = (0..grid.len())
        .filter(|&j| grid.axis_indices(j)[..grid.dim()].iter().all(|i| i % stride == 0))
        .collect();
    let evolution = Evolution::new(&field);
    let times = sample_times(dec);
    let intensities: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&tf| evolution.intensity_at(field.time() + tf))
        .collect();
    let peak = intensities
        .iter()
        .flat_map(|v| idx.iter().map(move |&j| v[j]))
        .fold(0.0, f64::max);
    let denom = dec.denominator() as f64;
    let mut report = DominationReport {
        c_dom: 0.0,
        samples: 0,
        covered_samples: 0,
        peak,
        witness: None,
        prism_violations: 0,
    };
    for (&tf, inten) in times.iter().zip(&intensities) {
        let pts: Vec<(Vec<f64>, f64)> = idx
            .iter()
            .map(|&j| frame.to_physical(&grid.position(j), tf))
            .collect();
        let cover = if dec.dim() == 1 {
            let slice = dec.cover_slice(frame.to_physical_time(tf))?;
            pts.iter().map(|p| slice.eval(p.0[0])).collect()
        } else {
            dec.evaluate_cover(&pts)?
        };
        for ((p, &j), &f) in pts.iter().zip(&idx).zip(&cover) {
            report.samples += 1;
            let i = inten[j];
            if f == 0 {
                if peak > 0.0 && i > spec.floor * peak {
                    return Err(TubeError::Domination {
                        x: p.0.clone(),
                        t: p.1,
                        intensity: i,
                    });
                }
                continue;
            }
            report.covered_samples += 1;
            if f < dec.prism_weight(&p.0, p.1)? as u128 {
                report.prism_violations += 1;
            }
            let ratio = i / (f as f64 / denom);
            if ratio > report.c_dom {
                report.c_dom = ratio;
                report.witness = Some(p.clone());
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    /// Physical tube radius.
    pub radius: f64,
    /// `Z` in numerator units.
    pub total_weight: u64,
    pub denominator: u64,
    /// `r^d Σ w`.
    pub weighted_sum: f64,
    pub mass: f64,
    /// `r^d Σ w / mass`, zero for the zero field.
    pub c_eff: f64,
    /// `(10d)^d 3^d (1 + 10⁻⁶)`.
    pub bound: f64,
    pub passed: bool,
}

pub fn verify_efficiency(dec: &TubeDecomposition, u0: &WaveField) -> EfficiencyReport {
    let d = dec.dim() as i32;
    let radius = dec.radius();
    let z = dec.total_weight();
    let weighted_sum = radius.powi(d) * (z as f64 / dec.denominator() as f64);
    let m = mass(u0);
    let c_eff = if m > 0.0 { weighted_sum / m } else { 0.0 };
    let bound = (10.0 * d as f64).powi(d) * 3f64.powi(d) * (1.0 + 1e-6);
    EfficiencyReport {
        radius,
        total_weight: z,
        denominator: dec.denominator(),
        weighted_sum,
        mass: m,
        c_eff,
        bound,
        passed: c_eff <= bound,
    }
}
