use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub module: &'static str,
    pub op: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Data locating the failure (a point, a cut, a set).
    pub witness: Option<Value>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Constants {
    pub c_lc: Option<f64>,
    pub c_dom: Option<f64>,
    pub c_eff: Option<f64>,
    pub bilinear_c: Option<f64>,
    pub bilinear_trend: Option<f64>,
    pub sandwich_c: Option<Vec<f64>>,
    pub kakeya_slope: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TauRecord {
    pub policy: &'static str,
    /// Calibrated value before `tau_scale`.
    pub base: f64,
    pub used: f64,
    /// `(τ, passed, worst margin)` per calibration probe.
    pub probes: Vec<(f64, bool, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub tau: Option<TauRecord>,
    pub constants: Constants,
    pub checks: Vec<Check>,
    pub timing_ms: BTreeMap<String, u64>,
    pub passed: bool,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            config_hash: None,
            seed: None,
            tau: None,
            constants: Constants::default(),
            checks: Vec::new(),
            timing_ms: BTreeMap::new(),
            passed: true,
        }
    }

    pub fn check(
        &mut self,
        (module, op): (&'static str, &'static str),
        name: impl Into<String>,
        passed: bool,
        detail: impl Into<String>,
        witness: Option<Value>,
    ) {
        self.passed &= passed;
        self.checks.push(Check {
            module,
            op,
            name: name.into(),
            passed,
            detail: detail.into(),
            witness,
        });
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timing_ms.insert(stage.to_string(), start.elapsed().as_millis() as u64);
        out
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let path = dir.join("report.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn summary(&self) -> String {
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        if failed.is_empty() {
            format!("{}: {} checks passed", self.command, self.checks.len())
        } else {
            format!("{}: failed {}", self.command, failed.join(", "))
        }
    }
}
