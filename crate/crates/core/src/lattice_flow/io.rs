//! JSON interchange for lattice weights and sparse flow export.

use serde::{Deserialize, Serialize};

use crate::lattice_flow::graph::{Adjacency, LatticeGraph};
use crate::lattice_flow::layered::LayeredFlow;
use crate::lattice_flow::weights::WeightLayers;
use crate::lattice_flow::FlowError;

/// `{d, S, denominator, layers}` with sites in row-major order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeDocument {
    pub d: usize,
    #[serde(rename = "S")]
    pub side: usize,
    pub denominator: u64,
    pub layers: Vec<Vec<u64>>,
}

impl LatticeDocument {
    pub fn from_parts(g: &LatticeGraph, w: &WeightLayers) -> Self {
        Self {
            d: g.dim(),
            side: g.side(),
            denominator: w.denominator(),
            layers: w.layers().to_vec(),
        }
    }

    pub fn into_parts(self) -> Result<(LatticeGraph, WeightLayers), FlowError> {
        let g = LatticeGraph::torus(self.d, self.side)?;
        let w = WeightLayers::new(self.denominator, self.layers)?;
        if w.num_sites() != g.num_sites() {
            return Err(FlowError::Structure(format!(
                "layers have {} sites, a {}-dimensional torus of side {} has {}",
                w.num_sites(),
                self.d,
                self.side,
                g.num_sites()
            )));
        }
        Ok((g, w))
    }

    pub fn from_json(text: &str) -> Result<Self, FlowError> {
        serde_json::from_str(text).map_err(|e| FlowError::Structure(format!("invalid lattice JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("lattice document serializes")
    }
}

/// Nonzero flow entries as `(i, u, v, numerator)` triples, in edge order.
pub fn flow_triples<G: Adjacency + ?Sized>(lf: &LayeredFlow, g: &G) -> Vec<(usize, usize, usize, u64)> {
    let mut out = Vec::new();
    for (i, f) in lf.flows().iter().enumerate() {
        for (u, row) in f.entries().iter().enumerate() {
            for (&v, &x) in g.out_neighbors(u).iter().zip(row) {
                if x > 0 {
                    out.push((i, u, v, x));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_flow::layered::{layered_decomposition, LayeredOptions};

    #[test]
    fn document_round_trip() {
        let text = r#"{"d":1,"S":5,"denominator":4,"layers":[[1,1,0,0,2],[0,2,1,0,1]]}"#;
        let doc = LatticeDocument::from_json(text).unwrap();
        let (g, w) = doc.clone().into_parts().unwrap();
        assert_eq!(LatticeDocument::from_parts(&g, &w), doc);
        assert_eq!(LatticeDocument::from_json(&doc.to_json()).unwrap(), doc);
    }

    #[test]
    fn rejects_wrong_site_count_and_unknown_fields() {
        let bad = LatticeDocument::from_json(r#"{"d":2,"S":3,"denominator":1,"layers":[[1],[1]]}"#)
            .unwrap();
        assert!(bad.into_parts().is_err());
        assert!(LatticeDocument::from_json(
            r#"{"d":1,"S":3,"denominator":1,"layers":[[1,0,0],[1,0,0]],"x":1}"#
        )
        .is_err());
    }

    #[test]
    fn triples_sum_to_layer_totals() {
        let g = LatticeGraph::torus(1, 5).unwrap();
        let w = WeightLayers::new(1, vec![vec![2, 1, 0, 0, 0], vec![0, 2, 1, 0, 0], vec![0, 1, 1, 1, 0]])
            .unwrap();
        let lf = layered_decomposition(&w, &g, LayeredOptions::default()).unwrap();
        let t = flow_triples(&lf, &g);
        for i in 0..2 {
            let s: u64 = t.iter().filter(|x| x.0 == i).map(|x| x.3).sum();
            assert_eq!(s, 3);
        }
    }
}
