use serde::{Deserialize, Serialize};

/// A one-dimensional cover function at a fixed time: a finite sum of weighted
/// closed intervals on a circle of length `period`, plus a constant `base` from
/// tubes wide enough to cover the whole circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSlice {
    period: f64,
    base: u128,
    starts: Vec<(f64, u128)>,
    ends: Vec<(f64, u128)>,
    start_cum: Vec<u128>,
    end_cum: Vec<u128>,
}

fn cumulative(items: &[(f64, u128)]) -> Vec<u128> {
    let mut acc = 0u128;
    let mut out = Vec::with_capacity(items.len() + 1);
    out.push(0);
    for &(_, w) in items {
        acc += w;
        out.push(acc);
    }
    out
}

impl CoverSlice {
    /// Builds the slice from `(center, half_width, weight)` triples, centers
    /// taken modulo `period`.
    pub fn from_intervals(period: f64, intervals: impl IntoIterator<Item = (f64, f64, u128)>) -> Self {
        let mut base = 0u128;
        let mut starts = Vec::new();
        let mut ends = Vec::new();
        for (c, r, w) in intervals {
            if w == 0 {
                continue;
            }
            if 2.0 * r >= period {
                base += w;
                continue;
            }
            let a = (c - r).rem_euclid(period);
            let b = a + 2.0 * r;
            if b <= period {
                starts.push((a, w));
                ends.push((b, w));
            } else {
                starts.push((a, w));
                ends.push((period, w));
                starts.push((0.0, w));
                ends.push((b - period, w));
            }
        }
        starts.sort_by(|x, y| x.0.total_cmp(&y.0));
        ends.sort_by(|x, y| x.0.total_cmp(&y.0));
        let start_cum = cumulative(&starts);
        let end_cum = cumulative(&ends);
        Self {
            period,
            base,
            starts,
            ends,
            start_cum,
            end_cum,
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Number of interval pieces after wrapping.
    pub fn pieces(&self) -> usize {
        self.starts.len()
    }

    pub fn eval(&self, x: f64) -> u128 {
        let x = x.rem_euclid(self.period);
        let s = self.starts.partition_point(|p| p.0 <= x);
        let e = self.ends.partition_point(|p| p.0 < x);
        self.base + self.start_cum[s] - self.end_cum[e]
    }

    /// Constant pieces `(left, right, value)` partitioning `[0, period)`.
    pub fn segments(&self) -> Vec<(f64, f64, u128)> {
        let mut cuts: Vec<f64> = Vec::with_capacity(2 * self.starts.len() + 2);
        cuts.push(0.0);
        cuts.extend(self.starts.iter().map(|p| p.0));
        cuts.extend(self.ends.iter().map(|p| p.0));
        cuts.push(self.period);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut out = Vec::with_capacity(cuts.len());
        let (mut si, mut ei) = (0, 0);
        let mut level = self.base as i128;
        for w in cuts.windows(2) {
            let (l, r) = (w[0], w[1]);
            while si < self.starts.len() && self.starts[si].0 <= l {
                level += self.starts[si].1 as i128;
                si += 1;
            }
            while ei < self.ends.len() && self.ends[ei].0 <= l {
                level -= self.ends[ei].1 as i128;
                ei += 1;
            }
            if r > l {
                out.push((l, r, level as u128));
            }
        }
        out
    }

    /// `∫ f g dx` over the circle, in products of numerator units.
    pub fn product_integral(&self, other: &CoverSlice) -> f64 {
        segment_product(&self.segments(), &other.segments())
    }

    /// `∫ f dx` in numerator units.
    pub fn integral(&self) -> f64 {
        self.segments()
            .iter()
            .map(|&(l, r, v)| v as f64 * (r - l))
            .sum()
    }
}

/// `∫ f g dx` for two step functions given by their [`CoverSlice::segments`].
pub fn segment_product(a: &[(f64, f64, u128)], b: &[(f64, f64, u128)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < a.len() && j < b.len() {
        let l = a[i].0.max(b[j].0);
        let r = a[i].1.min(b[j].1);
        if r > l {
            acc += (a[i].2 as f64) * (b[j].2 as f64) * (r - l);
        }
        if a[i].1 <= b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    acc
}
