//! One-step transports between consecutive mass layers and their composition
//! into a layered flow.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice_flow::graph::Adjacency;
use crate::lattice_flow::network::{build_flow_network, max_flow, v1_node, v2_node, MaxFlow};
use crate::lattice_flow::weights::{layer_sum, WeightLayers};
use crate::lattice_flow::FlowError;

/// Flow on the edges of one layer transition: `entries[u][k] = f(u, N⁺(u)[k])`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerFlow {
    entries: Vec<Vec<u64>>,
}

impl LayerFlow {
    pub fn entries(&self) -> &[Vec<u64>] {
        &self.entries
    }

    pub fn out_marginal(&self) -> Vec<u64> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|&f| f as u128).sum::<u128>() as u64)
            .collect()
    }

    pub fn in_marginal<G: Adjacency + ?Sized>(&self, g: &G) -> Vec<u64> {
        let mut acc = vec![0u128; g.num_sites()];
        for (u, row) in self.entries.iter().enumerate() {
            for (&v, &f) in g.out_neighbors(u).iter().zip(row) {
                acc[v] += f as u128;
            }
        }
        acc.into_iter().map(|x| x as u64).collect()
    }
}

/// Records a transition that only became feasible after inflating sink-side
/// capacities; the downstream layer was replaced by the achieved in-marginal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackEvent {
    pub layer: usize,
    /// Largest per-site change of the downstream layer, in numerator units.
    pub max_adjustment: u64,
    /// Total numerator mass moved between sites of the downstream layer.
    pub moved: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayeredOptions {
    /// Multiplicative sink-capacity inflation tried when an exact transition is
    /// infeasible. `None` disables the retry.
    pub slack: Option<f64>,
}

impl Default for LayeredOptions {
    fn default() -> Self {
        Self { slack: None }
    }
}

/// Layer flows `f(i, ·, ·)` for `0 ≤ i < N-1` together with the layers they
/// transport (which differ from the input layers only if slack was used).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayeredFlow {
    weights: WeightLayers,
    flows: Vec<LayerFlow>,
    slack_events: Vec<SlackEvent>,
}

impl LayeredFlow {
    pub fn weights(&self) -> &WeightLayers {
        &self.weights
    }

    pub fn flows(&self) -> &[LayerFlow] {
        &self.flows
    }

    pub fn flow(&self, i: usize) -> &LayerFlow {
        &self.flows[i]
    }

    pub fn slack_events(&self) -> &[SlackEvent] {
        &self.slack_events
    }

    /// Checks both marginal identities against `w`, exactly.
    pub fn check_marginals<G: Adjacency + ?Sized>(
        &self,
        w: &WeightLayers,
        g: &G,
    ) -> Result<(), FlowError> {
        if w.num_layers() != self.flows.len() + 1 {
            return Err(FlowError::Structure("layer count mismatch".into()));
        }
        for (i, f) in self.flows.iter().enumerate() {
            check_layer_marginals(f, w.layer(i), w.layer(i + 1), g)
                .map_err(|e| e.at_layer(i))?;
        }
        Ok(())
    }
}

fn check_layer_marginals<G: Adjacency + ?Sized>(
    f: &LayerFlow,
    w1: &[u64],
    w2: &[u64],
    g: &G,
) -> Result<(), FlowError> {
    if f.entries.len() != g.num_sites() {
        return Err(FlowError::Structure("flow/graph size mismatch".into()));
    }
    if f.out_marginal() != w1 {
        return Err(FlowError::Marginal { layer: 0, side: "out" });
    }
    if f.in_marginal(g) != w2 {
        return Err(FlowError::Marginal { layer: 0, side: "in" });
    }
    Ok(())
}

fn extract_layer_flow<G: Adjacency + ?Sized>(g: &G, mf: &MaxFlow) -> LayerFlow {
    let n = g.num_sites();
    // s→V₁ edges come first, then interior edges in (u, N⁺(u)) order
    let mut idx = n;
    let entries = (0..n)
        .map(|u| {
            let row: Vec<u64> = mf.flows[idx..idx + g.out_neighbors(u).len()].to_vec();
            idx += row.len();
            row
        })
        .collect();
    LayerFlow { entries }
}

/// Reads a violating set off a minimum cut: the source-side sites whose whole
/// out-neighborhood is also on the source side.
fn violating_set<G: Adjacency + ?Sized>(g: &G, mf: &MaxFlow) -> Vec<usize> {
    let n = g.num_sites();
    (0..n)
        .filter(|&u| {
            mf.source_side[v1_node(u)]
                && g.out_neighbors(u)
                    .iter()
                    .all(|&v| mf.source_side[v2_node(v, n)])
        })
        .collect()
}

/// `(Σ_A w1, Σ_{N⁺(A)} w2)`.
pub fn conservation_sides<G: Adjacency + ?Sized>(
    set: &[usize],
    w1: &[u64],
    w2: &[u64],
    g: &G,
) -> (u128, u128) {
    let mut mark = vec![false; g.num_sites()];
    for &a in set {
        for &b in g.out_neighbors(a) {
            mark[b] = true;
        }
    }
    let lhs = set.iter().map(|&a| w1[a] as u128).sum();
    let rhs = mark
        .iter()
        .zip(w2)
        .filter(|(m, _)| **m)
        .map(|(_, &w)| w as u128)
        .sum();
    (lhs, rhs)
}

/// A flow on the edges with out-marginal `w1` and in-marginal `w2`, obtained
/// from a maximum flow of the two-copy network. Fails with a violating set of
/// the local conservation law when no such flow exists.
pub fn one_layer_flow<G: Adjacency + ?Sized>(
    w1: &[u64],
    w2: &[u64],
    g: &G,
) -> Result<LayerFlow, FlowError> {
    let total = layer_sum(w1);
    if total != layer_sum(w2) {
        return Err(FlowError::NotConserved {
            layer: 1,
            expected: total,
            found: layer_sum(w2),
        });
    }
    let net = build_flow_network(w1, w2, g)?;
    let mf = max_flow(&net);
    if mf.value < total {
        let set = violating_set(g, &mf);
        let (lhs, rhs) = conservation_sides(&set, w1, w2, g);
        debug_assert!(lhs > rhs, "min cut must expose a violation");
        return Err(FlowError::Infeasible {
            layer: 0,
            set,
            lhs,
            rhs,
        });
    }
    // saturation f(s,u) = w1(u) is implied by value = Σ w1 and f ≤ c
    let flow = extract_layer_flow(g, &mf);
    check_layer_marginals(&flow, w1, w2, g)?;
    Ok(flow)
}

/// As [`one_layer_flow`], but sink capacities are inflated by
/// `⌊(w2 + w̄2)·slack⌋`, `w̄2` the layer mean, so that sites in the far tails
/// get a cushion too. Returns the flow and its in-marginal, which replaces `w2`.
fn one_layer_flow_inflated<G: Adjacency + ?Sized>(
    w1: &[u64],
    w2: &[u64],
    g: &G,
    slack: f64,
) -> Option<(LayerFlow, Vec<u64>)> {
    let mean = layer_sum(w2) as f64 / w2.len().max(1) as f64;
    let inflated: Vec<u64> = w2
        .iter()
        .map(|&w| w.saturating_add(((w as f64 + mean) * slack).floor() as u64))
        .collect();
    let net = build_flow_network(w1, &inflated, g).ok()?;
    let mf = max_flow(&net);
    if mf.value < layer_sum(w1) {
        return None;
    }
    let flow = extract_layer_flow(g, &mf);
    let achieved = flow.in_marginal(g);
    Some((flow, achieved))
}

/// One flow per consecutive layer pair. Transitions are solved in parallel;
/// the result does not depend on scheduling.
pub fn layered_decomposition<G: Adjacency + Sync + ?Sized>(
    w: &WeightLayers,
    g: &G,
    opts: LayeredOptions,
) -> Result<LayeredFlow, FlowError> {
    if w.num_sites() != g.num_sites() {
        return Err(FlowError::Structure(format!(
            "weights have {} sites, graph has {}",
            w.num_sites(),
            g.num_sites()
        )));
    }
    let n = w.num_layers();
    let first_pass: Vec<Result<LayerFlow, FlowError>> = (0..n - 1)
        .into_par_iter()
        .map(|i| one_layer_flow(w.layer(i), w.layer(i + 1), g).map_err(|e| e.at_layer(i)))
        .collect();

    let first_failure = first_pass.iter().position(|r| r.is_err());
    let Some(start) = first_failure else {
        let flows = first_pass.into_iter().map(Result::unwrap).collect();
        return Ok(LayeredFlow {
            weights: w.clone(),
            flows,
            slack_events: Vec::new(),
        });
    };
    let Some(slack) = opts.slack else {
        return Err(first_pass.into_iter().nth(start).unwrap().unwrap_err());
    };

    let mut weights = w.clone();
    let mut flows: Vec<LayerFlow> = first_pass
        .into_iter()
        .take(start)
        .map(Result::unwrap)
        .collect();
    let mut slack_events = Vec::new();
    for i in start..n - 1 {
        match one_layer_flow(weights.layer(i), weights.layer(i + 1), g) {
            Ok(f) => flows.push(f),
            Err(exact_err) => {
                let exact_err = exact_err.at_layer(i);
                let Some((f, achieved)) =
                    one_layer_flow_inflated(weights.layer(i), weights.layer(i + 1), g, slack)
                else {
                    return Err(exact_err);
                };
                let (max_adjustment, moved) = adjustment(weights.layer(i + 1), &achieved);
                slack_events.push(SlackEvent {
                    layer: i,
                    max_adjustment,
                    moved,
                });
                weights.replace_layer(i + 1, achieved);
                flows.push(f);
            }
        }
    }
    Ok(LayeredFlow {
        weights,
        flows,
        slack_events,
    })
}

fn adjustment(old: &[u64], new: &[u64]) -> (u64, u64) {
    let mut max = 0;
    let mut moved = 0u128;
    for (&a, &b) in old.iter().zip(new) {
        let d = a.abs_diff(b);
        max = max.max(d);
        if b > a {
            moved += d as u128;
        }
    }
    (max, moved as u64)
}
