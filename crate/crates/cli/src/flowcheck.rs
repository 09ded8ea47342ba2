use std::path::{Path, PathBuf};

use anyhow::Context;
use lipschitz_tubes::lattice_flow::conservation::BRUTE_FORCE_MAX_SITES;
use lipschitz_tubes::lattice_flow::io::{flow_triples, LatticeDocument};
use lipschitz_tubes::lattice_flow::{
    layered_decomposition, verify_local_conservation, Adjacency, ConservationMode, LayeredOptions,
};
use serde::Serialize;
use serde_json::json;

use crate::report::RunReport;
use crate::ConfigError;

#[derive(Serialize)]
struct FlowRow {
    layer: usize,
    u: usize,
    v: usize,
    numerator: u64,
}

/// Cut-based feasibility against brute force over all subsets, per transition,
/// and exact marginals of the layered flow when feasible.
pub fn flow_check(graphs: &[PathBuf], out: &Path, report: &mut RunReport) -> anyhow::Result<()> {
    for path in graphs {
        let name = path.file_stem().map_or_else(|| "graph".into(), |s| s.to_string_lossy().into_owned());
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let doc = LatticeDocument::from_json(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let (g, w) = doc.into_parts().map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let cut = verify_local_conservation(&w, &g, ConservationMode::CutFeasibility);
        let cut_verdicts: Vec<bool> = cut.transitions.iter().map(|t| t.feasible).collect();
        if g.num_sites() <= BRUTE_FORCE_MAX_SITES {
            let brute = verify_local_conservation(&w, &g, ConservationMode::BruteForce);
            let brute_verdicts: Vec<bool> = brute.transitions.iter().map(|t| t.feasible).collect();
            let agree = brute_verdicts == cut_verdicts;
            report.check(
                ("lattice-flow", "verify_local_conservation"),
                format!("{name}: cut vs brute force"),
                agree,
                format!("cut {cut_verdicts:?}, brute force {brute_verdicts:?}"),
                (!agree).then(|| json!({ "cut": cut.transitions, "brute_force": brute.transitions })),
            );
        }
        let witness = cut
            .transitions
            .iter()
            .find(|t| !t.feasible)
            .map(|t| json!({ "layer": t.layer, "violation": t.violations }));
        let feasible = cut.feasible();
        let detail = if feasible {
            match layered_decomposition(&w, &g, LayeredOptions::default()) {
                Ok(lf) => {
                    lf.check_marginals(&w, &g).context("lattice-flow/check_marginals")?;
                    let mut wtr = csv::Writer::from_path(out.join(format!("{name}.flows.csv")))?;
                    for (layer, u, v, numerator) in flow_triples(&lf, &g) {
                        wtr.serialize(FlowRow { layer, u, v, numerator })?;
                    }
                    wtr.flush()?;
                    format!("feasible: {} transitions on {} sites, marginals exact", w.num_layers() - 1, g.num_sites())
                }
                Err(e) => return Err(anyhow::Error::new(e).context("lattice-flow/layered_decomposition")),
            }
        } else {
            "infeasible: violating cut reported".to_string()
        };
        report.check(("lattice-flow", "layered_decomposition"), format!("{name}: verdict"), true, detail, witness);
    }
    Ok(())
}
