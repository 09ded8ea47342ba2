//! Capacitated source/sink networks and exact integer max-flow.

use std::collections::{HashMap, VecDeque};

use crate::lattice_flow::graph::Adjacency;
use crate::lattice_flow::FlowError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CapacityEdge {
    pub from: usize,
    pub to: usize,
    pub cap: u64,
}

/// A finite network with one-directional pipes: `c(u,v) > 0 ⇒ c(v,u) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowNetwork {
    num_nodes: usize,
    source: usize,
    sink: usize,
    edges: Vec<CapacityEdge>,
}

impl FlowNetwork {
    pub fn new(
        num_nodes: usize,
        source: usize,
        sink: usize,
        edges: Vec<CapacityEdge>,
    ) -> Result<Self, FlowError> {
        if source >= num_nodes || sink >= num_nodes || source == sink {
            return Err(FlowError::Structure("bad source/sink".into()));
        }
        let mut seen: HashMap<(usize, usize), u64> = HashMap::with_capacity(edges.len());
        for e in &edges {
            if e.from >= num_nodes || e.to >= num_nodes {
                return Err(FlowError::Structure(format!(
                    "edge ({}, {}) out of range",
                    e.from, e.to
                )));
            }
            if e.from == e.to {
                return Err(FlowError::Structure("self-loop in flow network".into()));
            }
            if seen.insert((e.from, e.to), e.cap).is_some() {
                return Err(FlowError::Structure(format!(
                    "duplicate edge ({}, {})",
                    e.from, e.to
                )));
            }
        }
        for e in &edges {
            if e.cap > 0 && seen.get(&(e.to, e.from)).copied().unwrap_or(0) > 0 {
                return Err(FlowError::Structure(format!(
                    "capacities ({}, {}) and ({}, {}) both positive",
                    e.from, e.to, e.to, e.from
                )));
            }
        }
        Ok(Self {
            num_nodes,
            source,
            sink,
            edges,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn edges(&self) -> &[CapacityEdge] {
        &self.edges
    }

    pub fn capacity(&self, from: usize, to: usize) -> u64 {
        self.edges
            .iter()
            .find(|e| e.from == from && e.to == to)
            .map_or(0, |e| e.cap)
    }

    /// `Cap S = Σ_{u∈S, v∉S} c(u,v)`.
    pub fn cut_capacity(&self, source_side: &[bool]) -> u128 {
        self.edges
            .iter()
            .filter(|e| source_side[e.from] && !source_side[e.to])
            .map(|e| e.cap as u128)
            .sum()
    }
}

/// Node layout of the two-copy network built from a lattice:
/// `s = 0`, `t = 1`, `V₁ = 2..2+n`, `V₂ = 2+n..2+2n`.
pub fn v1_node(site: usize) -> usize {
    2 + site
}

pub fn v2_node(site: usize, n: usize) -> usize {
    2 + n + site
}

/// Network whose maximum flows are one-step transports of `w1` onto `w2`:
/// `c(s,u) = w1(u)`, `c(u,v) = w1(u)` for `v ∈ N⁺(u)`, `c(v,t) = w2(v)`.
/// Edges are emitted as: source edges, interior edges by site and then by
/// neighbor-list position, sink edges.
pub fn build_flow_network<G: Adjacency + ?Sized>(
    w1: &[u64],
    w2: &[u64],
    g: &G,
) -> Result<FlowNetwork, FlowError> {
    let n = g.num_sites();
    if w1.len() != n || w2.len() != n {
        return Err(FlowError::Structure(format!(
            "weights have {} and {} sites, graph has {n}",
            w1.len(),
            w2.len()
        )));
    }
    let mut edges = Vec::with_capacity(n * 2 + n * g.out_neighbors(0).len());
    for (u, &w) in w1.iter().enumerate() {
        edges.push(CapacityEdge { from: 0, to: v1_node(u), cap: w });
    }
    for (u, &w) in w1.iter().enumerate() {
        for &v in g.out_neighbors(u) {
            edges.push(CapacityEdge {
                from: v1_node(u),
                to: v2_node(v, n),
                cap: w,
            });
        }
    }
    for (v, &w) in w2.iter().enumerate() {
        edges.push(CapacityEdge { from: v2_node(v, n), to: 1, cap: w });
    }
    FlowNetwork::new(2 + 2 * n, 0, 1, edges)
}

/// A maximum flow together with a minimum cut certifying it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxFlow {
    pub value: u128,
    /// Flow on each edge of the network, in the network's edge order.
    pub flows: Vec<u64>,
    /// Nodes reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
}

/// Exact maximum flow (Dinic). Deterministic: ties are broken by edge order.
pub fn max_flow(net: &FlowNetwork) -> MaxFlow {
    let mut dinic = Dinic::new(net);
    let value = dinic.run(net.source, net.sink);
    let flows = net
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| e.cap - dinic.residual[2 * i])
        .collect();
    let source_side = dinic.reachable(net.source);
    MaxFlow {
        value,
        flows,
        source_side,
    }
}

struct Dinic {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    residual: Vec<u64>,
    level: Vec<i64>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(net: &FlowNetwork) -> Self {
        let mut head = vec![Vec::new(); net.num_nodes];
        let mut to = Vec::with_capacity(net.edges.len() * 2);
        let mut residual = Vec::with_capacity(net.edges.len() * 2);
        for (i, e) in net.edges.iter().enumerate() {
            head[e.from].push(2 * i);
            head[e.to].push(2 * i + 1);
            to.push(e.to);
            residual.push(e.cap);
            to.push(e.from);
            residual.push(0);
        }
        let n = net.num_nodes;
        Self {
            head,
            to,
            residual,
            level: vec![-1; n],
            iter: vec![0; n],
        }
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.residual[e] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, limit: u64) -> u64 {
        if u == t {
            return limit;
        }
        while self.iter[u] < self.head[u].len() {
            let e = self.head[u][self.iter[u]];
            let v = self.to[e];
            if self.residual[e] > 0 && self.level[v] == self.level[u] + 1 {
                let pushed = self.dfs(v, t, limit.min(self.residual[e]));
                if pushed > 0 {
                    self.residual[e] -= pushed;
                    self.residual[e ^ 1] += pushed;
                    return pushed;
                }
            }
            self.iter[u] += 1;
        }
        0
    }

    fn run(&mut self, s: usize, t: usize) -> u128 {
        let mut total: u128 = 0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return total;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, u64::MAX);
                if f == 0 {
                    break;
                }
                total += f as u128;
            }
        }
    }

    fn reachable(&mut self, s: usize) -> Vec<bool> {
        self.bfs(s);
        self.level.iter().map(|&l| l >= 0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_flow::graph::LatticeGraph;

    fn edge(from: usize, to: usize, cap: u64) -> CapacityEdge {
        CapacityEdge { from, to, cap }
    }

    #[test]
    fn chain_has_unit_value() {
        let net = FlowNetwork::new(4, 0, 3, vec![edge(0, 1, 1), edge(1, 2, 1), edge(2, 3, 1)]).unwrap();
        let mf = max_flow(&net);
        assert_eq!(mf.value, 1);
        assert_eq!(mf.flows, vec![1, 1, 1]);
    }

    #[test]
    fn antisymmetry_enforced() {
        let err = FlowNetwork::new(3, 0, 2, vec![edge(0, 1, 1), edge(1, 0, 2)]).unwrap_err();
        assert!(matches!(err, FlowError::Structure(_)));
        // a zero reverse capacity is fine
        FlowNetwork::new(3, 0, 2, vec![edge(0, 1, 1), edge(1, 0, 0)]).unwrap();
    }

    #[test]
    fn delta_network_capacities() {
        let g = LatticeGraph::torus(1, 5).unwrap();
        let mut w1 = vec![0; 5];
        let mut w2 = vec![0; 5];
        w1[2] = 1;
        w2[3] = 1;
        let net = build_flow_network(&w1, &w2, &g).unwrap();
        assert_eq!(net.num_nodes(), 2 + 2 * 5);
        assert_eq!(net.capacity(0, v1_node(2)), 1);
        for &v in g.out_neighbors(2) {
            assert_eq!(net.capacity(v1_node(2), v2_node(v, 5)), 1);
        }
        assert_eq!(net.capacity(v2_node(3, 5), 1), 1);
        let mf = max_flow(&net);
        assert_eq!(mf.value, 1);
        let e = net
            .edges()
            .iter()
            .position(|e| e.from == v1_node(2) && e.to == v2_node(3, 5))
            .unwrap();
        assert_eq!(mf.flows[e], 1);
    }

    #[test]
    fn zero_network_has_zero_flow() {
        let g = LatticeGraph::torus(2, 3).unwrap();
        let z = vec![0; 9];
        let net = build_flow_network(&z, &z, &g).unwrap();
        assert!(net.edges().iter().all(|e| e.cap == 0));
        assert_eq!(max_flow(&net).value, 0);
    }

    #[test]
    fn one_dimensional_example_edge_count() {
        let g = LatticeGraph::torus(1, 5).unwrap();
        // (1, 2, 0, 0, 0)/3 in units of 1/3
        let w1 = vec![1, 2, 0, 0, 0];
        let net = build_flow_network(&w1, &w1, &g).unwrap();
        let interior = net
            .edges()
            .iter()
            .filter(|e| e.from >= 2 && e.from < 7)
            .count();
        assert_eq!(interior, 15);
        for (u, &w) in w1.iter().enumerate() {
            assert_eq!(net.capacity(0, v1_node(u)), w);
        }
    }

    #[test]
    fn min_cut_matches_value() {
        let net = FlowNetwork::new(
            6,
            0,
            5,
            vec![
                edge(0, 1, 10),
                edge(0, 2, 10),
                edge(1, 2, 2),
                edge(1, 3, 4),
                edge(1, 4, 8),
                edge(2, 4, 9),
                edge(3, 5, 10),
                edge(4, 3, 6),
                edge(4, 5, 10),
            ],
        )
        .unwrap();
        let mf = max_flow(&net);
        assert_eq!(mf.value, 19);
        assert_eq!(net.cut_capacity(&mf.source_side), 19);
    }
}
