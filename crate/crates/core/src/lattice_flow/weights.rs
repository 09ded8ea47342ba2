use serde::{Deserialize, Serialize};

use crate::lattice_flow::FlowError;

/// Default shared denominator for quantized weights.
pub const DEFAULT_DENOMINATOR: u64 = 1 << 40;

/// Nonnegative per-site masses for `N ≥ 2` time layers, stored as integer
/// numerators over a shared denominator. Every layer sums to the same total.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightLayers {
    denominator: u64,
    layers: Vec<Vec<u64>>,
    total: u64,
}

/// Where each layer's rounding residue was deposited.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizationReport {
    /// Signed numerator correction added to `sites[i]` of layer `i`.
    pub residues: Vec<i64>,
    pub sites: Vec<usize>,
}

impl QuantizationReport {
    pub fn max_abs_residue(&self) -> u64 {
        self.residues.iter().map(|r| r.unsigned_abs()).max().unwrap_or(0)
    }
}

impl WeightLayers {
    pub fn new(denominator: u64, layers: Vec<Vec<u64>>) -> Result<Self, FlowError> {
        if denominator == 0 {
            return Err(FlowError::Structure("denominator must be positive".into()));
        }
        if layers.len() < 2 {
            return Err(FlowError::Structure(format!(
                "need at least 2 layers, got {}",
                layers.len()
            )));
        }
        let n = layers[0].len();
        if layers.iter().any(|l| l.len() != n) {
            return Err(FlowError::Structure("layers have different site counts".into()));
        }
        let totals: Vec<u128> = layers.iter().map(|l| layer_sum(l)).collect();
        if let Some(i) = totals.iter().position(|&t| t != totals[0]) {
            return Err(FlowError::NotConserved {
                layer: i,
                expected: totals[0],
                found: totals[i],
            });
        }
        let total = u64::try_from(totals[0])
            .map_err(|_| FlowError::Structure("layer total overflows u64".into()))?;
        Ok(Self {
            denominator,
            layers,
            total,
        })
    }

    /// Quantizes real layers to `denominator` so that every layer sums to
    /// `target_total` exactly. The rounding residue of each layer goes to its
    /// heaviest site.
    pub fn quantize(
        layers: &[Vec<f64>],
        denominator: u64,
        target_total: u64,
    ) -> Result<(Self, QuantizationReport), FlowError> {
        let mut report = QuantizationReport::default();
        let mut out = Vec::with_capacity(layers.len());
        let scale = denominator as f64;
        for layer in layers {
            if layer.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(FlowError::Structure("weights must be finite and nonnegative".into()));
            }
            let mut q: Vec<u64> = layer.iter().map(|w| (w * scale).round() as u64).collect();
            let sum = layer_sum(&q) as i128;
            let residue = target_total as i128 - sum;
            let heaviest = argmax(&q);
            let fixed = q[heaviest] as i128 + residue;
            if fixed < 0 {
                return Err(FlowError::Structure(format!(
                    "quantization residue {residue} exceeds heaviest site weight"
                )));
            }
            q[heaviest] = fixed as u64;
            report.residues.push(residue as i64);
            report.sites.push(heaviest);
            out.push(q);
        }
        Ok((Self::new(denominator, out)?, report))
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn layers(&self) -> &[Vec<u64>] {
        &self.layers
    }

    pub fn layer(&self, i: usize) -> &[u64] {
        &self.layers[i]
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_sites(&self) -> usize {
        self.layers[0].len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        let d = self.denominator as f64;
        self.layers
            .iter()
            .map(|l| l.iter().map(|&w| w as f64 / d).collect())
            .collect()
    }

    pub(crate) fn replace_layer(&mut self, i: usize, layer: Vec<u64>) {
        debug_assert_eq!(layer_sum(&layer), self.total as u128);
        self.layers[i] = layer;
    }
}

pub(crate) fn layer_sum(layer: &[u64]) -> u128 {
    layer.iter().map(|&w| w as u128).sum()
}

fn argmax(q: &[u64]) -> usize {
    let mut best = 0;
    for (i, &w) in q.iter().enumerate() {
        if w > q[best] {
            best = i;
        }
    }
    best
}
