use std::path::Path;

use anyhow::{bail, Context};
use lipschitz_tubes::estimates::BilinearSweepConfig;
use lipschitz_tubes::lattice_flow::DEFAULT_DENOMINATOR;
use lipschitz_tubes::schrodinger::Profile;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    /// Base seed; every other seed in the run is an offset from it.
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    pub tau: TauPolicy,
    pub field: FieldConfig,
    pub decomposition: DecompositionConfig,
    #[serde(default)]
    pub bilinear: Option<BilinearConfig>,
    #[serde(default)]
    pub kakeya: Option<KakeyaConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub side: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default = "default_dilation")]
    pub dilation: f64,
    #[serde(default = "default_denominator")]
    pub denominator: u64,
    #[serde(default = "default_slack")]
    pub slack: Option<f64>,
}

fn default_dilation() -> f64 {
    2.0
}

fn default_denominator() -> u64 {
    DEFAULT_DENOMINATOR
}

fn default_slack() -> Option<f64> {
    Some(1e-6)
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            dilation: default_dilation(),
            denominator: default_denominator(),
            slack: default_slack(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TauPolicy {
    Fixed { value: f64 },
    Calibrate {
        tau_max: f64,
        /// Number of band-limited fields in the calibration ensemble.
        ensemble: usize,
        /// Random subsets per field.
        trials: usize,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub profile: Profile,
    /// Window center `ξ`; zero when absent.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Replace the field by zero (vacuous checks).
    #[serde(default)]
    pub zero: bool,
}

fn default_radius() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionConfig {
    pub r_time: f64,
    /// Tubes lighter than this (mass units) are not written to the CSV.
    pub threshold: f64,
    /// Multiplies the time step taken from the τ policy.
    #[serde(default = "one")]
    pub tau_scale: f64,
    /// Domination sampling stride per axis.
    #[serde(default = "one_usize")]
    pub stride: usize,
    #[serde(default = "default_cap")]
    pub max_tubes: usize,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_cap() -> usize {
    100_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilinearConfig {
    /// Seeds in the sweep are offsets from the base seed.
    pub sweep: BilinearSweepConfig,
    #[serde(default = "default_trend")]
    pub max_trend: f64,
    #[serde(default)]
    pub sandwich: Option<SandwichConfig>,
}

fn default_trend() -> f64 {
    0.10
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandwichConfig {
    pub side: f64,
    pub points: usize,
    pub n_values: Vec<f64>,
    pub m: f64,
    pub r_time: f64,
    pub covering_speed: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KakeyaConfig {
    pub radii: Vec<f64>,
    pub families: usize,
    pub per_family: usize,
    pub delta: f64,
    pub spread: f64,
    /// Offset from the base seed.
    pub seed: u64,
    #[serde(default = "default_slope")]
    pub max_slope: f64,
}

fn default_slope() -> f64 {
    0.5
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(1..=2).contains(&self.dim) {
            bail!("dim must be 1 or 2, got {}", self.dim);
        }
        if let Some(c) = &self.field.center {
            if c.len() != self.dim {
                bail!("field.center has {} entries for dim {}", c.len(), self.dim);
            }
        }
        if !(self.decomposition.r_time > 0.0 && self.decomposition.tau_scale > 0.0) {
            bail!("decomposition.r_time and tau_scale must be positive");
        }
        match self.tau {
            TauPolicy::Fixed { value } if !(value > 0.0) => bail!("tau.value must be positive"),
            TauPolicy::Calibrate { ensemble: 0, .. } => bail!("tau.ensemble must be non-empty"),
            _ => {}
        }
        if let Some(b) = &self.bilinear {
            if b.sweep.n_values.is_empty() || b.sweep.seeds.is_empty() {
                bail!("bilinear.sweep needs at least one N and one seed");
            }
            if let Some(s) = &b.sandwich {
                if s.n_values.is_empty() {
                    bail!("bilinear.sandwich.n_values is empty");
                }
            }
        }
        if let Some(k) = &self.kakeya {
            if k.radii.len() < 2 {
                bail!("kakeya.radii needs at least two radii for a slope");
            }
        }
        Ok(())
    }

    pub fn center(&self) -> Vec<f64> {
        self.field.center.clone().unwrap_or_else(|| vec![0.0; self.dim])
    }

    /// SHA-256 of the canonical JSON form, after any seed override.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
