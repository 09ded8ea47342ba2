use serde::{Deserialize, Serialize};

/// `T_{γ,r} = {(x,t) : |x - γ(t)| ≤ r}` for a piecewise-linear `γ` on a torus
/// of side `period`. `γ` is constant before the first and after the last
/// vertex; vertex coordinates are unwrapped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub radius: f64,
    pub weight: f64,
    pub period: f64,
}

/// Per-axis torus difference reduced to `[-L/2, L/2]`.
pub fn torus_delta(a: f64, b: f64, period: f64) -> f64 {
    let d = a - b;
    d - period * (d / period).round()
}

pub fn torus_distance(x: &[f64], y: &[f64], period: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| torus_delta(*a, *b, period).powi(2))
        .sum::<f64>()
        .sqrt()
}

impl Tube {
    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.points[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.points[n - 1].clone();
        }
        let j = self.times.partition_point(|&s| s <= t) - 1;
        let s = (t - self.times[j]) / (self.times[j + 1] - self.times[j]);
        self.points[j]
            .iter()
            .zip(&self.points[j + 1])
            .map(|(a, b)| a + s * (b - a))
            .collect()
    }

    pub fn contains(&self, x: &[f64], t: f64) -> bool {
        torus_distance(x, &self.position(t), self.period) <= self.radius
    }

    /// Velocity of each segment.
    pub fn velocities(&self) -> Vec<Vec<f64>> {
        self.times
            .windows(2)
            .zip(self.points.windows(2))
            .map(|(t, p)| {
                let dt = t[1] - t[0];
                p[1].iter().zip(&p[0]).map(|(b, a)| (b - a) / dt).collect()
            })
            .collect()
    }

    /// Largest `|γ' - v0|` over segments.
    pub fn max_speed_relative(&self, v0: &[f64]) -> f64 {
        self.velocities()
            .iter()
            .map(|v| {
                v.iter()
                    .zip(v0)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// The straight tube `γ(t) = x0 + v t` on `[t0, t1]`.
    pub fn straight(x0: Vec<f64>, v: Vec<f64>, t0: f64, t1: f64, radius: f64, period: f64) -> Self {
        let at = |t: f64| x0.iter().zip(&v).map(|(a, b)| a + b * t).collect();
        Self {
            times: vec![t0, t1],
            points: vec![at(t0), at(t1)],
            radius,
            weight: 1.0,
            period,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_and_clamping() {
        let t = Tube {
            times: vec![0.0, 1.0, 2.0],
            points: vec![vec![0.0], vec![1.0], vec![1.0]],
            radius: 0.5,
            weight: 1.0,
            period: 100.0,
        };
        assert_eq!(t.position(0.5), vec![0.5]);
        assert_eq!(t.position(-1.0), vec![0.0]);
        assert_eq!(t.position(5.0), vec![1.0]);
        assert!(t.contains(&[1.4], 1.5));
        assert!(!t.contains(&[1.6], 1.5));
        assert_eq!(t.velocities(), vec![vec![1.0], vec![0.0]]);
    }

    #[test]
    fn torus_wrap() {
        assert!((torus_delta(0.5, 9.5, 10.0) - 1.0).abs() < 1e-15);
        assert!((torus_distance(&[0.2, 9.9], &[9.8, 0.1], 10.0) - (0.16f64 + 0.04).sqrt()).abs() < 1e-12);
    }
}
