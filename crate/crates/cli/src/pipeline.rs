use std::path::Path;

use anyhow::Context;
use lipschitz_tubes::estimates::{
    annulus_field, bilinear_sweep, bilinear_via_tubes, loglog_slope, multilinear_overlap,
    synthetic_families, OverlapOptions, TubeSideOptions,
};
use lipschitz_tubes::lattice_flow::FlowError;
use lipschitz_tubes::mu_kernel::{build_mu, calibrate_tau, verify_fs, verify_lc, FsOptions, MuKernel};
use lipschitz_tubes::schrodinger::{
    galilean_rescale, make_band_limited, Direction, FrequencyWindow, Grid, Profile, WaveField,
};
use lipschitz_tubes::tubes::{
    effective_scale, scaled_decompose, verify_domination, verify_efficiency, write_tubes_csv,
    DecomposeOptions, DominationSpec, TubeDecomposition, TubeError,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, TauPolicy};
use crate::report::{RunReport, TauRecord};
use crate::ConfigError;

const CALIBRATION_SEED_OFFSET: u64 = 1000;

fn config_err(e: impl std::fmt::Display) -> anyhow::Error {
    ConfigError(e.to_string()).into()
}

pub fn grid(cfg: &ExperimentConfig) -> anyhow::Result<Grid> {
    Grid::new(cfg.dim, cfg.grid.side, cfg.grid.points).map_err(config_err)
}

pub fn field(cfg: &ExperimentConfig) -> anyhow::Result<WaveField> {
    let grid = grid(cfg)?;
    let window = FrequencyWindow::new(cfg.center(), cfg.field.radius).map_err(config_err)?;
    if cfg.field.zero {
        return Ok(WaveField::zero(grid, window));
    }
    make_band_limited(&grid, &window, cfg.field.profile, cfg.seed).map_err(config_err)
}

/// The field carried to its unit-band frame, with the kernel on that frame.
fn frame(cfg: &ExperimentConfig, u: &WaveField) -> anyhow::Result<(WaveField, MuKernel)> {
    let rho = effective_scale(u.grid(), cfg.field.radius).map_err(config_err)?;
    let f = galilean_rescale(u, &cfg.center(), rho, Direction::Forward)?;
    let mu = build_mu(f.grid(), cfg.kernel.dilation).map_err(config_err)?;
    Ok((f, mu))
}

/// Time step from the configured policy, scaled by `tau_scale`.
pub fn tau(cfg: &ExperimentConfig, report: &mut RunReport) -> anyhow::Result<f64> {
    let (policy, base, probes) = match &cfg.tau {
        TauPolicy::Fixed { value } => ("fixed", *value, Vec::new()),
        TauPolicy::Calibrate {
            tau_max,
            ensemble,
            trials,
        } => {
            let grid = grid(cfg)?;
            let window = FrequencyWindow::unit(cfg.dim);
            let profiles = [Profile::RandomPhase, Profile::Gaussian, Profile::Bump];
            let fields = (0..*ensemble)
                .map(|i| {
                    let seed = cfg.seed + CALIBRATION_SEED_OFFSET + i as u64;
                    make_band_limited(&grid, &window, profiles[i % 3], seed).map_err(config_err)
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let mu = build_mu(&grid, cfg.kernel.dilation).map_err(config_err)?;
            let opts = FsOptions {
                trials: *trials,
                seed: cfg.seed,
                ..FsOptions::default()
            };
            let cal = report
                .timed("calibrate", || calibrate_tau(&fields, &mu, *tau_max, &opts))
                .context("mu-kernel/calibrate_tau")?;
            ("calibrate", cal.tau, cal.probes)
        }
    };
    let used = base * cfg.decomposition.tau_scale;
    report.tau = Some(TauRecord {
        policy,
        base,
        used,
        probes,
    });
    Ok(used)
}

/// Both finite-speed inequalities for the configured field at `tau`.
pub fn fs_check(cfg: &ExperimentConfig, u: &WaveField, tau: f64, report: &mut RunReport) -> anyhow::Result<()> {
    let (f, mu) = frame(cfg, u)?;
    let opts = FsOptions {
        seed: cfg.seed,
        ..FsOptions::default()
    };
    let r = report.timed("fs", || verify_fs(&f, &mu, tau, &opts));
    report.check(
        ("mu-kernel", "verify_fs"),
        "finite speed",
        r.passed,
        format!("{} checks at τ = {tau:.6}, worst margin {:.3e}", r.checks, r.worst_margin),
        (!r.passed).then(|| json!(r.worst)),
    );
    Ok(())
}

pub fn decompose(
    cfg: &ExperimentConfig,
    u: &WaveField,
    tau: f64,
    report: &mut RunReport,
) -> anyhow::Result<Option<TubeDecomposition>> {
    let opts = DecomposeOptions {
        denominator: cfg.kernel.denominator,
        slack: cfg.kernel.slack,
        radius: None,
        dilation: cfg.kernel.dilation,
    };
    let r_time = cfg.decomposition.r_time;
    let result = report.timed("decompose", || {
        scaled_decompose(u, &cfg.center(), cfg.field.radius, tau, r_time, &opts)
    });
    match result {
        Ok(dec) => {
            let slack = dec.provenance().slack_events.len();
            report.check(
                ("lattice-flow", "layered_decomposition"),
                "flow feasible",
                true,
                format!("{} layers, {} slack events", dec.num_layers(), slack),
                None,
            );
            Ok(Some(dec))
        }
        Err(TubeError::Flow(FlowError::Infeasible { layer, set, lhs, rhs })) => {
            report.check(
                ("lattice-flow", "layered_decomposition"),
                "flow feasible",
                false,
                format!("transition {layer} violates local conservation at τ = {tau:.6}: {lhs} > {rhs}"),
                Some(json!({ "layer": layer, "cut": set, "lhs": lhs.to_string(), "rhs": rhs.to_string() })),
            );
            fs_check(cfg, u, tau, report)?;
            Ok(None)
        }
        Err(e) => Err(anyhow::Error::new(e).context("tube-decomposition/decompose")),
    }
}

pub fn verify(cfg: &ExperimentConfig, u: &WaveField, dec: &TubeDecomposition, report: &mut RunReport) -> anyhow::Result<()> {
    let (f, mu) = frame(cfg, u)?;
    let c_lc = report.timed("lc", || verify_lc(&f, &mu));
    report.constants.c_lc = Some(c_lc);
    report.check(("mu-kernel", "verify_lc"), "locally constant", c_lc.is_finite(), format!("C_LC = {c_lc:.4}"), None);

    let spec = DominationSpec {
        stride: cfg.decomposition.stride,
        ..DominationSpec::default()
    };
    match report.timed("domination", || verify_domination(u, dec, &spec)) {
        Ok(d) => {
            report.constants.c_dom = Some(d.c_dom);
            let ok = d.prism_violations == 0 && d.c_dom.is_finite();
            report.check(
                ("tube-decomposition", "verify_domination"),
                "domination",
                ok,
                format!(
                    "C_dom = {:.4} over {} samples ({} covered), {} prism violations",
                    d.c_dom, d.samples, d.covered_samples, d.prism_violations
                ),
                d.witness.map(|(x, t)| json!({ "x": x, "t": t })),
            );
        }
        Err(TubeError::Domination { x, t, intensity }) => report.check(
            ("tube-decomposition", "verify_domination"),
            "domination",
            false,
            format!("uncovered intensity {intensity:.3e}"),
            Some(json!({ "x": x, "t": t, "intensity": intensity })),
        ),
        Err(e) => return Err(anyhow::Error::new(e).context("tube-decomposition/verify_domination")),
    }

    let e = verify_efficiency(dec, u);
    report.constants.c_eff = Some(e.c_eff);
    report.check(
        ("tube-decomposition", "verify_efficiency"),
        "efficiency",
        e.passed,
        format!("r^d Σw / mass = {:.6} ≤ {:.6}", e.c_eff, e.bound),
        None,
    );
    Ok(())
}

pub fn write_tubes(cfg: &ExperimentConfig, dec: &TubeDecomposition, out: &Path, report: &mut RunReport) -> anyhow::Result<()> {
    match dec.materialize(cfg.decomposition.threshold, cfg.decomposition.max_tubes) {
        Ok(tubes) => {
            write_tubes_csv(&tubes, &out.join("tubes.csv"))?;
            report.check(
                ("tube-decomposition", "materialize"),
                "tube export",
                true,
                format!("{} tubes above weight {}", tubes.len(), cfg.decomposition.threshold),
                None,
            );
        }
        Err(e) => report.check(
            ("tube-decomposition", "materialize"),
            "tube export",
            false,
            e.to_string(),
            None,
        ),
    }
    let json = serde_json::to_string(dec)?;
    std::fs::write(out.join("decomposition.json"), json)?;
    Ok(())
}

#[derive(Serialize)]
struct SandwichRow {
    n: f64,
    m: f64,
    lhs2: f64,
    rhs_total: f64,
    measured_c: f64,
    worst_pair: f64,
    holds: bool,
}

pub fn bilinear(cfg: &ExperimentConfig, tau: Option<f64>, out: &Path, report: &mut RunReport) -> anyhow::Result<()> {
    let Some(b) = &cfg.bilinear else {
        return Err(ConfigError("config has no bilinear section".into()).into());
    };
    let mut sweep_cfg = b.sweep.clone();
    sweep_cfg.seeds = sweep_cfg.seeds.iter().map(|s| cfg.seed + s).collect();
    let sweep = report
        .timed("bilinear", || bilinear_sweep(&sweep_cfg))
        .context("estimates-harness/bilinear_sweep")?;
    let mut w = csv::Writer::from_path(out.join("bilinear.csv"))?;
    for row in &sweep.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    report.constants.bilinear_c = Some(sweep.constant);
    report.constants.bilinear_trend = Some(sweep.trend);
    report.check(
        ("estimates-harness", "bilinear_ratio"),
        "bilinear sweep",
        sweep.constant.is_finite() && sweep.trend <= b.max_trend,
        format!("means {:?}, trend {:.4}", sweep.means, sweep.trend),
        None,
    );

    let Some(s) = &b.sandwich else {
        return Ok(());
    };
    let tau = tau.ok_or_else(|| ConfigError("the sandwich needs a time step".into()))?;
    let grid = Grid::new(1, s.side, s.points).map_err(config_err)?;
    let opts = TubeSideOptions {
        covering_speed: s.covering_speed,
        tau,
        r_time: s.r_time,
        ..TubeSideOptions::default()
    };
    let mut rows = Vec::new();
    report.timed("sandwich", || -> anyhow::Result<()> {
        for &n in &s.n_values {
            let u = annulus_field(&grid, n, cfg.seed)?;
            let v = annulus_field(&grid, s.m, cfg.seed + (1 << 32))?;
            let r = bilinear_via_tubes(&u, &v, n, s.m, &opts).context("estimates-harness/bilinear_via_tubes")?;
            let worst = r.pairs.iter().map(|p| p.lhs2 / p.rhs).fold(0.0, f64::max);
            rows.push(SandwichRow {
                n,
                m: s.m,
                lhs2: r.lhs2,
                rhs_total: r.rhs_total,
                measured_c: r.measured_c,
                worst_pair: worst,
                holds: r.holds,
            });
        }
        Ok(())
    })?;
    let mut w = csv::Writer::from_path(out.join("sandwich.csv"))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let failing: Vec<f64> = rows.iter().filter(|r| !r.holds).map(|r| r.n).collect();
    report.constants.sandwich_c = Some(rows.iter().map(|r| r.measured_c).collect());
    report.check(
        ("estimates-harness", "bilinear_via_tubes"),
        "tube-side sandwich",
        failing.is_empty(),
        format!("{} instances, worst pair ratio {:.4}", rows.len(), rows.iter().map(|r| r.worst_pair).fold(0.0, f64::max)),
        (!failing.is_empty()).then(|| json!({ "n": failing })),
    );
    Ok(())
}

#[derive(Serialize)]
struct KakeyaRow {
    radius: f64,
    lhs: f64,
    rhs: f64,
    ratio: f64,
    wedge: f64,
    cells: usize,
}

pub fn kakeya(cfg: &ExperimentConfig, out: &Path, report: &mut RunReport) -> anyhow::Result<()> {
    let Some(k) = &cfg.kakeya else {
        return Err(ConfigError("config has no kakeya section".into()).into());
    };
    let mut rows = Vec::new();
    report.timed("kakeya", || -> anyhow::Result<()> {
        for &r in &k.radii {
            let fams = synthetic_families(k.families, k.per_family, r, k.delta, k.spread, cfg.seed + k.seed);
            let opts = OverlapOptions {
                delta: k.delta,
                ..OverlapOptions::default()
            };
            let rep = multilinear_overlap(&fams, r, &opts).context("estimates-harness/multilinear_overlap")?;
            rows.push(KakeyaRow {
                radius: r,
                lhs: rep.lhs,
                rhs: rep.rhs,
                ratio: rep.ratio,
                wedge: rep.wedge,
                cells: rep.cells,
            });
        }
        Ok(())
    })?;
    let mut w = csv::Writer::from_path(out.join("kakeya.csv"))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let radii: Vec<f64> = rows.iter().map(|r| r.radius).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let slope = loglog_slope(&radii, &ratios);
    report.constants.kakeya_slope = Some(slope);
    report.check(
        ("estimates-harness", "multilinear_overlap"),
        "overlap growth",
        slope < k.max_slope,
        format!("log-log slope {slope:.4} (limit {})", k.max_slope),
        None,
    );
    Ok(())
}
