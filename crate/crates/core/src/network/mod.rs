//! Input networks: parsing, validation and structural analysis.

mod decompose;
mod dominators;
mod merge;
mod shortcut;

pub use decompose::{decompose, SpDecomposition, SpKind, SpNode};
pub use dominators::{dominating_parents, Dominators};
pub use merge::{classify_arcs, merge_sets, merge_sets_with, ArcCase, MergeSets};
pub(crate) use shortcut::remove_with;
pub use shortcut::{find_shortcuts, remove_dominated_paths, RemovalReport};

use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::rational::{format_rational, Num, Rational, Signs};

/// Position of a node in its network's id-sorted node list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A trade arc from a seller to a buyer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub seller: NodeId,
    pub buyer: NodeId,
}

impl Edge {
    pub fn new(seller: NodeId, buyer: NodeId) -> Edge {
        Edge { seller, buyer }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Source {
    pub node: NodeId,
    pub cost: Rational,
}

/// A consumer market with inverse demand `p = demand - slope * X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Market {
    pub node: NodeId,
    pub demand: Rational,
    pub slope: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Single source, single sink, series-parallel (shortcuts allowed).
    Spg,
    /// Single source, several sinks.
    Smspg,
    /// Several sources, single sink.
    Msspg,
    /// Anything else with one source and one sink.
    Dag,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Spg => "SPG",
            Kind::Smspg => "SMSPG",
            Kind::Msspg => "MSSPG",
            Kind::Dag => "DAG",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    ids: Vec<String>,
    lookup: HashMap<String, NodeId>,
    arcs: Vec<Edge>,
    out: Vec<Vec<NodeId>>,
    inc: Vec<Vec<NodeId>>,
    sources: Vec<Source>,
    sinks: Vec<Market>,
    topo: Vec<NodeId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceDoc {
    id: String,
    cost: Num,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SinkDoc {
    id: String,
    demand: Num,
    slope: Num,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    nodes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<SourceDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    sources: Vec<SourceDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sink: Option<SinkDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    sinks: Vec<SinkDoc>,
    arcs: Vec<(String, String)>,
}

/// Parses and validates a network document (JSON).
pub fn parse_network(text: &str) -> Result<Network> {
    let doc: NetworkDoc =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    let mut sources = doc.sources;
    if let Some(s) = doc.source {
        sources.insert(0, s);
    }
    let mut sinks = doc.sinks;
    if let Some(t) = doc.sink {
        sinks.insert(0, t);
    }
    Network::from_parts(
        doc.nodes,
        sources.into_iter().map(|s| (s.id, s.cost.0)).collect(),
        sinks
            .into_iter()
            .map(|t| (t.id, t.demand.0, t.slope.0))
            .collect(),
        doc.arcs,
    )
}

impl Network {
    /// Validated construction from named parts.
    pub fn from_parts(
        nodes: Vec<String>,
        sources: Vec<(String, Rational)>,
        sinks: Vec<(String, Rational, Rational)>,
        arcs: Vec<(String, String)>,
    ) -> Result<Network> {
        let mut ids = nodes;
        if let Some(bad) = ids.iter().find(|id| id.is_empty()) {
            return Err(Error::Malformed(format!("empty node id {bad:?}")));
        }
        ids.sort();
        for w in ids.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateNode(w[0].clone()));
            }
        }
        let lookup: HashMap<String, NodeId> = ids
            .iter()
            .enumerate()
            .map(|(k, id)| (id.clone(), NodeId(k)))
            .collect();
        let find = |id: &str| {
            lookup
                .get(id)
                .copied()
                .ok_or_else(|| Error::UnknownNode(id.to_string()))
        };
        if sources.is_empty() {
            return Err(Error::Malformed("no source given".into()));
        }
        if sinks.is_empty() {
            return Err(Error::Malformed("no sink given".into()));
        }
        let mut terminals = BTreeSet::new();
        let mut src = Vec::new();
        for (id, cost) in sources {
            let node = find(&id)?;
            if !terminals.insert(node) {
                return Err(Error::Malformed(format!(
                    "node {id:?} is listed twice as a terminal"
                )));
            }
            if !cost.is_positive() {
                return Err(Error::Malformed(format!(
                    "production cost at source {id:?} must be positive, got {}",
                    format_rational(&cost)
                )));
            }
            src.push(Source { node, cost });
        }
        let mut snk = Vec::new();
        for (id, demand, slope) in sinks {
            let node = find(&id)?;
            if !terminals.insert(node) {
                return Err(Error::Malformed(format!(
                    "node {id:?} is listed twice as a terminal"
                )));
            }
            if !slope.is_positive() {
                return Err(Error::Malformed(format!(
                    "slope at sink {id:?} must be positive, got {}",
                    format_rational(&slope)
                )));
            }
            snk.push(Market {
                node,
                demand,
                slope,
            });
        }
        src.sort_by_key(|s| s.node);
        snk.sort_by_key(|t| t.node);
        for s in &src {
            for t in &snk {
                if t.demand <= s.cost {
                    return Err(Error::DemandNotAboveCost {
                        sink: ids[t.node.0].clone(),
                        demand: format_rational(&t.demand),
                        origin: ids[s.node.0].clone(),
                        cost: format_rational(&s.cost),
                    });
                }
            }
        }
        let mut edges = Vec::with_capacity(arcs.len());
        for (a, b) in &arcs {
            let (u, v) = (find(a)?, find(b)?);
            if u == v {
                return Err(Error::SelfLoop(a.clone()));
            }
            edges.push(Edge::new(u, v));
        }
        edges.sort();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(Error::ParallelArc(
                    ids[w[0].seller.0].clone(),
                    ids[w[0].buyer.0].clone(),
                ));
            }
        }
        let n = ids.len();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for e in &edges {
            out[e.seller.0].push(e.buyer);
            inc[e.buyer.0].push(e.seller);
        }
        for list in inc.iter_mut() {
            list.sort();
        }
        let topo = topological_order(&out, &inc).map_err(|k| Error::Cycle(ids[k].clone()))?;
        let is_source = |k: usize| src.iter().any(|s| s.node.0 == k);
        let is_sink = |k: usize| snk.iter().any(|t| t.node.0 == k);
        for k in 0..n {
            if is_source(k) {
                if !inc[k].is_empty() {
                    return Err(Error::SourceHasInflow(ids[k].clone()));
                }
                if out[k].is_empty() {
                    return Err(Error::Dangling(ids[k].clone()));
                }
            } else if is_sink(k) {
                if !out[k].is_empty() {
                    return Err(Error::SinkHasOutflow(ids[k].clone()));
                }
                if inc[k].is_empty() {
                    return Err(Error::Dangling(ids[k].clone()));
                }
            } else if inc[k].is_empty() || out[k].is_empty() {
                return Err(Error::Dangling(ids[k].clone()));
            }
        }
        Ok(Network {
            ids,
            lookup,
            arcs: edges,
            out,
            inc,
            sources: src,
            sinks: snk,
            topo,
        })
    }

    /// Builds a network whose node set is implied by the terminals and arcs.
    pub fn build(
        sources: &[(&str, Rational)],
        sinks: &[(&str, Rational, Rational)],
        arcs: &[(&str, &str)],
    ) -> Result<Network> {
        let mut nodes = BTreeSet::new();
        for (s, _) in sources {
            nodes.insert(s.to_string());
        }
        for (t, _, _) in sinks {
            nodes.insert(t.to_string());
        }
        for (a, b) in arcs {
            nodes.insert(a.to_string());
            nodes.insert(b.to_string());
        }
        Network::from_parts(
            nodes.into_iter().collect(),
            sources
                .iter()
                .map(|(s, c)| (s.to_string(), c.clone()))
                .collect(),
            sinks
                .iter()
                .map(|(t, a, b)| (t.to_string(), a.clone(), b.clone()))
                .collect(),
            arcs.iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        )
    }

    /// Single-source, single-sink convenience constructor.
    pub fn spg(
        source: &str,
        cost: Rational,
        sink: &str,
        demand: Rational,
        slope: Rational,
        arcs: &[(&str, &str)],
    ) -> Result<Network> {
        Network::build(&[(source, cost)], &[(sink, demand, slope)], arcs)
    }

    pub fn to_json(&self) -> String {
        let src = |s: &Source| SourceDoc {
            id: self.name(s.node).to_string(),
            cost: Num(s.cost.clone()),
        };
        let snk = |t: &Market| SinkDoc {
            id: self.name(t.node).to_string(),
            demand: Num(t.demand.clone()),
            slope: Num(t.slope.clone()),
        };
        let (source, sources) = if self.sources.len() == 1 {
            (Some(src(&self.sources[0])), Vec::new())
        } else {
            (None, self.sources.iter().map(src).collect())
        };
        let (sink, sinks) = if self.sinks.len() == 1 {
            (Some(snk(&self.sinks[0])), Vec::new())
        } else {
            (None, self.sinks.iter().map(snk).collect())
        };
        let doc = NetworkDoc {
            nodes: self.ids.clone(),
            source,
            sources,
            sink,
            sinks,
            arcs: self
                .arcs
                .iter()
                .map(|e| {
                    (
                        self.name(e.seller).to_string(),
                        self.name(e.buyer).to_string(),
                    )
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("network documents always serialize")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.ids.len()).map(NodeId)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn name(&self, v: NodeId) -> &str {
        &self.ids[v.0]
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.lookup.get(name).copied()
    }

    pub fn node(&self, name: &str) -> Result<NodeId> {
        self.id(name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn edge(&self, seller: &str, buyer: &str) -> Result<Edge> {
        let e = Edge::new(self.node(seller)?, self.node(buyer)?);
        match self.arc_index(e) {
            Some(_) => Ok(e),
            None => Err(Error::UnknownNode(format!("{seller}->{buyer}"))),
        }
    }

    pub fn edge_name(&self, e: Edge) -> String {
        format!("{}->{}", self.name(e.seller), self.name(e.buyer))
    }

    /// Arcs sorted by (seller, buyer).
    pub fn arcs(&self) -> &[Edge] {
        &self.arcs
    }

    pub fn arc_index(&self, e: Edge) -> Option<usize> {
        self.arcs.binary_search(&e).ok()
    }

    pub fn buyers(&self, v: NodeId) -> &[NodeId] {
        &self.out[v.0]
    }

    pub fn sellers(&self, v: NodeId) -> &[NodeId] {
        &self.inc[v.0]
    }

    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    pub fn sinks(&self) -> &[Market] {
        &self.sinks
    }

    pub fn source(&self) -> Result<&Source> {
        match self.sources.as_slice() {
            [s] => Ok(s),
            _ => Err(Error::NotSingleTerminal),
        }
    }

    pub fn sink(&self) -> Result<&Market> {
        match self.sinks.as_slice() {
            [t] => Ok(t),
            _ => Err(Error::NotSingleTerminal),
        }
    }

    pub fn market(&self, v: NodeId) -> Option<&Market> {
        self.sinks.iter().find(|t| t.node == v)
    }

    pub fn is_sink(&self, v: NodeId) -> bool {
        self.out[v.0].is_empty()
    }

    pub fn is_source(&self, v: NodeId) -> bool {
        self.inc[v.0].is_empty()
    }

    /// Topological order, ties broken by node id.
    pub fn topo_order(&self) -> &[NodeId] {
        &self.topo
    }

    pub fn kind(&self) -> Kind {
        if self.sources.len() > 1 {
            Kind::Msspg
        } else if self.sinks.len() > 1 {
            Kind::Smspg
        } else if decompose(self).is_ok() {
            Kind::Spg
        } else {
            Kind::Dag
        }
    }

    /// Nodes reachable from `v` (including `v`).
    pub fn reachable_from(&self, v: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![v];
        seen[v.0] = true;
        while let Some(u) = stack.pop() {
            for &w in &self.out[u.0] {
                if !seen[w.0] {
                    seen[w.0] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Keeps the arcs selected by `keep`; non-terminal nodes left without arcs are
    /// dropped and returned by name.
    pub fn restrict(&self, keep: impl Fn(Edge) -> bool) -> Result<(Network, Vec<String>)> {
        let arcs: Vec<Edge> = self.arcs.iter().copied().filter(|&e| keep(e)).collect();
        let mut touched = vec![false; self.len()];
        for e in &arcs {
            touched[e.seller.0] = true;
            touched[e.buyer.0] = true;
        }
        for s in &self.sources {
            touched[s.node.0] = true;
        }
        for t in &self.sinks {
            touched[t.node.0] = true;
        }
        let dropped = self
            .nodes()
            .filter(|v| !touched[v.0])
            .map(|v| self.name(v).to_string())
            .collect();
        let net = Network::from_parts(
            self.nodes()
                .filter(|v| touched[v.0])
                .map(|v| self.name(v).to_string())
                .collect(),
            self.sources
                .iter()
                .map(|s| (self.name(s.node).to_string(), s.cost.clone()))
                .collect(),
            self.sinks
                .iter()
                .map(|t| {
                    (
                        self.name(t.node).to_string(),
                        t.demand.clone(),
                        t.slope.clone(),
                    )
                })
                .collect(),
            arcs.iter()
                .map(|e| {
                    (
                        self.name(e.seller).to_string(),
                        self.name(e.buyer).to_string(),
                    )
                })
                .collect(),
        )?;
        Ok((net, dropped))
    }

    /// The sub-network formed by `arcs`, re-terminated at `source` and `sink`.
    pub fn subnetwork(
        &self,
        arcs: &[Edge],
        source: NodeId,
        sink: NodeId,
        cost: Rational,
        demand: Rational,
        slope: Rational,
    ) -> Result<Network> {
        let mut nodes = BTreeSet::new();
        for e in arcs {
            nodes.insert(self.name(e.seller).to_string());
            nodes.insert(self.name(e.buyer).to_string());
        }
        Network::from_parts(
            nodes.into_iter().collect(),
            vec![(self.name(source).to_string(), cost)],
            vec![(self.name(sink).to_string(), demand, slope)],
            arcs.iter()
                .map(|e| {
                    (
                        self.name(e.seller).to_string(),
                        self.name(e.buyer).to_string(),
                    )
                })
                .collect(),
        )
    }

    fn retune(
        &self,
        cost: Option<&Rational>,
        demand: Option<&Rational>,
        slope: Option<&Rational>,
    ) -> Result<Network> {
        Network::from_parts(
            self.ids.clone(),
            self.sources
                .iter()
                .map(|s| {
                    (
                        self.name(s.node).to_string(),
                        cost.unwrap_or(&s.cost).clone(),
                    )
                })
                .collect(),
            self.sinks
                .iter()
                .map(|t| {
                    (
                        self.name(t.node).to_string(),
                        demand.unwrap_or(&t.demand).clone(),
                        slope.unwrap_or(&t.slope).clone(),
                    )
                })
                .collect(),
            self.arcs
                .iter()
                .map(|e| {
                    (
                        self.name(e.seller).to_string(),
                        self.name(e.buyer).to_string(),
                    )
                })
                .collect(),
        )
    }

    /// Same network with every sink's demand intercept replaced.
    pub fn with_demand(&self, demand: &Rational) -> Result<Network> {
        self.retune(None, Some(demand), None)
    }

    /// Same network with every source's production cost replaced.
    pub fn with_cost(&self, cost: &Rational) -> Result<Network> {
        self.retune(Some(cost), None, None)
    }

    /// Same network with every sink's demand slope replaced.
    pub fn with_slope(&self, slope: &Rational) -> Result<Network> {
        self.retune(None, None, Some(slope))
    }
}

fn topological_order(
    out: &[Vec<NodeId>],
    inc: &[Vec<NodeId>],
) -> std::result::Result<Vec<NodeId>, usize> {
    let n = out.len();
    let mut indeg: Vec<usize> = inc.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&k| indeg[k] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(k)) = ready.pop() {
        order.push(NodeId(k));
        for w in &out[k] {
            indeg[w.0] -= 1;
            if indeg[w.0] == 0 {
                ready.push(Reverse(w.0));
            }
        }
    }
    if order.len() < n {
        return Err((0..n).find(|&k| indeg[k] > 0).unwrap_or(0));
    }
    Ok(order)
}
