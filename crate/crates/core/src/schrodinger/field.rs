use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fft;
use crate::schrodinger::grid::{FrequencyWindow, Grid};
use crate::schrodinger::SchrodingerError;

/// Fraction of the window radius over which spectra roll off to zero.
pub const ROLLOFF_FRACTION: f64 = 0.1;

/// Complex samples of a solution at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveField {
    grid: Grid,
    values: Vec<Complex64>,
    window: FrequencyWindow,
    time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Gaussian in frequency with standard deviation `ρ/2`.
    Gaussian,
    /// `exp(1 - 1/(1 - |κ-ξ|²/ρ²))`.
    Bump,
    /// Unit-modulus coefficients with independent uniform phases.
    RandomPhase,
}

impl WaveField {
    pub fn new(
        grid: Grid,
        values: Vec<Complex64>,
        window: FrequencyWindow,
        time: f64,
    ) -> Result<Self, SchrodingerError> {
        if values.len() != grid.len() {
            return Err(SchrodingerError::Config(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if window.center.len() != grid.dim() {
            return Err(SchrodingerError::Config("window dimension differs from grid".into()));
        }
        Ok(Self {
            grid,
            values,
            window,
            time,
        })
    }

    pub fn zero(grid: Grid, window: FrequencyWindow) -> Self {
        let values = vec![Complex64::default(); grid.len()];
        Self {
            grid,
            values,
            window,
            time: 0.0,
        }
    }

    /// Field whose discrete Fourier coefficients are `coeffs` (unnormalized
    /// forward-transform convention).
    pub fn from_spectrum(
        grid: Grid,
        mut coeffs: Vec<Complex64>,
        window: FrequencyWindow,
        time: f64,
    ) -> Result<Self, SchrodingerError> {
        if coeffs.len() != grid.len() {
            return Err(SchrodingerError::Config("spectrum does not match grid".into()));
        }
        fft::inverse(&mut coeffs, grid.dim(), grid.points());
        Self::new(grid, coeffs, window, time)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn window(&self) -> &FrequencyWindow {
        &self.window
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for z in &mut self.values {
            *z *= factor;
        }
        self
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut c = self.values.clone();
        fft::forward(&mut c, self.grid.dim(), self.grid.points());
        c
    }

    /// Mass computed from the spectrum, `h^d M^{-d} Σ|c_k|²`.
    pub fn spectral_mass(&self) -> f64 {
        let s: f64 = self.spectrum().iter().map(|c| c.norm_sqr()).sum();
        s * self.grid.cell_volume() / self.grid.len() as f64
    }

    /// Share of spectral energy outside the window.
    pub fn out_of_window_energy(&self) -> f64 {
        let spec = self.spectrum();
        let mut total = 0.0;
        let mut outside = 0.0;
        for (k, c) in spec.iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            if !self.window.contains(&self.grid.frequency(k)) {
                outside += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }

    /// Largest distance from `center` of a coefficient carrying more than
    /// `rel_tol` of the peak coefficient energy.
    pub fn spectral_extent(&self, center: &[f64], rel_tol: f64) -> f64 {
        let spec = self.spectrum();
        let peak = spec.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
        let probe = FrequencyWindow {
            center: center.to_vec(),
            radius: 1.0,
        };
        spec.iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > rel_tol * peak)
            .map(|(k, _)| probe.distance(&self.grid.frequency(k)))
            .fold(0.0, f64::max)
    }

    /// Share of mass within `margin` of the torus boundary (the packets built
    /// here start at the center of the torus).
    pub fn boundary_mass_fraction(&self, margin: f64) -> f64 {
        let l = self.grid.side();
        let total: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let near: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                self.grid
                    .position(*i)
                    .iter()
                    .any(|&x| x < margin || x > l - margin)
            })
            .map(|(_, z)| z.norm_sqr())
            .sum();
        near / total
    }
}

/// Smooth cutoff: 1 up to `radius - width`, 0 from `radius` on.
pub fn rolloff(r: f64, radius: f64, width: f64) -> f64 {
    if r >= radius {
        return 0.0;
    }
    let s = (radius - r) / width;
    if s >= 1.0 {
        return 1.0;
    }
    let psi = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let a = psi(s);
    a / (a + psi(1.0 - s))
}

/// Unit-mass field with spectrum inside `window`, centered in physical space
/// at the middle of the torus.
pub fn make_band_limited(
    grid: &Grid,
    window: &FrequencyWindow,
    profile: Profile,
    seed: u64,
) -> Result<WaveField, SchrodingerError> {
    if !grid.resolves(window) {
        return Err(SchrodingerError::Config(format!(
            "window {:?} radius {} not resolved (Nyquist {:.4})",
            window.center,
            window.radius,
            grid.nyquist()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = window.radius;
    let width = ROLLOFF_FRACTION * rho;
    let mid = grid.side() / 2.0;
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for (k, c) in coeffs.iter_mut().enumerate() {
        let freq = grid.frequency(k);
        let r = window.distance(&freq);
        let cut = rolloff(r, rho, width);
        let amp = match profile {
            Profile::Gaussian => (-(r * r) / (2.0 * (rho / 2.0).powi(2))).exp(),
            Profile::Bump => {
                let q = r / rho;
                if q < 1.0 {
                    (1.0 - 1.0 / (1.0 - q * q)).exp()
                } else {
                    0.0
                }
            }
            Profile::RandomPhase => 1.0,
        };
        // draw for every coefficient so the stream does not depend on the window
        let theta = if profile == Profile::RandomPhase {
            rng.gen_range(0.0..std::f64::consts::TAU)
        } else {
            0.0
        };
        let shift: f64 = freq.iter().map(|f| f * mid).sum();
        *c = Complex64::from_polar(amp * cut, theta - shift);
    }
    let u = WaveField::from_spectrum(grid.clone(), coeffs, window.clone(), 0.0)?;
    let m = mass(&u);
    if m == 0.0 {
        return Err(SchrodingerError::Config(
            "window contains no resolvable frequency of the grid".into(),
        ));
    }
    Ok(u.scaled(1.0 / m.sqrt()))
}

/// `∫|u|² ≈ h^d Σ|u_j|²`.
pub fn mass(u: &WaveField) -> f64 {
    u.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * u.grid.cell_volume()
}

pub fn intensity(u: &WaveField) -> Vec<f64> {
    u.values.iter().map(|z| z.norm_sqr()).collect()
}

/// Exact solution operator `e^{itΔ}`: coefficients pick up `e^{-i|κ|²t}`.
pub fn propagate(u: &WaveField, t: f64) -> WaveField {
    if t == 0.0 {
        return u.clone();
    }
    Evolution::new(u).at(u.time + t)
}

/// Spectrum of a solution kept in memory so that many times can be sampled
/// with one inverse transform each.
#[derive(Clone, Debug)]
pub struct Evolution {
    grid: Grid,
    window: FrequencyWindow,
    time: f64,
    coeffs: Vec<Complex64>,
    symbol: Vec<f64>,
}

impl Evolution {
    pub fn new(u: &WaveField) -> Self {
        let grid = u.grid.clone();
        let symbol = (0..grid.len()).map(|k| grid.frequency_norm_sq(k)).collect();
        Self {
            coeffs: u.spectrum(),
            window: u.window.clone(),
            time: u.time,
            grid,
            symbol,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Coefficients at absolute time `t`.
    pub fn spectrum_at(&self, t: f64) -> Vec<Complex64> {
        let dt = t - self.time;
        self.coeffs
            .iter()
            .zip(&self.symbol)
            .map(|(c, &s)| {
                if *c == Complex64::default() {
                    *c
                } else {
                    c * Complex64::from_polar(1.0, -s * dt)
                }
            })
            .collect()
    }

    pub fn at(&self, t: f64) -> WaveField {
        let mut values = self.spectrum_at(t);
        fft::inverse(&mut values, self.grid.dim(), self.grid.points());
        WaveField {
            grid: self.grid.clone(),
            values,
            window: self.window.clone(),
            time: t,
        }
    }

    pub fn intensity_at(&self, t: f64) -> Vec<f64> {
        intensity(&self.at(t))
    }
}
