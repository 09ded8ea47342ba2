//! Multi-dimensional FFTs on square row-major grids.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

type Plans = HashMap<(usize, bool), Arc<dyn Fft<f64>>>;

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<(FftPlanner<f64>, Plans)>> = OnceLock::new();
    let cell = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cell.lock().expect("fft planner poisoned");
    let (planner, plans) = &mut *guard;
    let key = (len, direction == FftDirection::Forward);
    plans
        .entry(key)
        .or_insert_with(|| planner.plan_fft(len, direction))
        .clone()
}

fn transform(data: &mut [Complex64], dim: usize, m: usize, direction: FftDirection) {
    assert_eq!(data.len(), m.pow(dim as u32), "buffer does not match grid");
    let fft = plan(m, direction);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    match dim {
        1 => fft.process_with_scratch(data, &mut scratch),
        2 => {
            // rows are contiguous
            fft.process_with_scratch(data, &mut scratch);
            let mut column = vec![Complex64::default(); m];
            for j in 0..m {
                for i in 0..m {
                    column[i] = data[i * m + j];
                }
                fft.process_with_scratch(&mut column, &mut scratch);
                for i in 0..m {
                    data[i * m + j] = column[i];
                }
            }
        }
        _ => panic!("only 1-D and 2-D grids are supported"),
    }
}

/// Unnormalized forward transform, `c_k = Σ_j u_j e^{-2πi j·k/M}`.
pub fn forward(data: &mut [Complex64], dim: usize, m: usize) {
    transform(data, dim, m, FftDirection::Forward);
}

/// Inverse of [`forward`], including the `M^{-d}` factor.
pub fn inverse(data: &mut [Complex64], dim: usize, m: usize) {
    transform(data, dim, m, FftDirection::Inverse);
    let scale = 1.0 / data.len() as f64;
    for z in data.iter_mut() {
        *z *= scale;
    }
}

/// Signed integer frequency of FFT index `k` on an axis of length `m`.
pub fn signed_index(k: usize, m: usize) -> i64 {
    if k < m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

/// FFT index of a signed frequency, if it is representable.
pub fn unsigned_index(k: i64, m: usize) -> Option<usize> {
    let half = (m / 2) as i64;
    if k >= -half && k < half {
        Some(k.rem_euclid(m as i64) as usize)
    } else {
        None
    }
}

/// Circular convolution of two real grid functions via FFT, scaled by `cell`
/// so that it approximates `∫ a(x-y) b(y) dy`.
pub fn convolve_real(a: &[f64], b: &[f64], dim: usize, m: usize, cell: f64) -> Vec<f64> {
    let mut fa: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward(&mut fa, dim, m);
    forward(&mut fb, dim, m);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inverse(&mut fa, dim, m);
    fa.iter().map(|z| z.re * cell).collect()
}
