use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Edge, Network, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpKind {
    Leaf(Edge),
    /// `first` ends where `second` starts.
    Series {
        first: usize,
        second: usize,
    },
    Parallel {
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpNode {
    pub kind: SpKind,
    pub source: NodeId,
    pub sink: NodeId,
}

impl SpNode {
    pub fn is_parallel(&self) -> bool {
        matches!(self.kind, SpKind::Parallel { .. })
    }

    pub fn is_series(&self) -> bool {
        matches!(self.kind, SpKind::Series { .. })
    }

    pub fn children(&self) -> Option<(usize, usize)> {
        match self.kind {
            SpKind::Leaf(_) => None,
            SpKind::Series { first, second } => Some((first, second)),
            SpKind::Parallel { left, right } => Some((left, right)),
        }
    }
}

/// Binary series/parallel composition tree whose leaves are arcs.
#[derive(Debug, Clone)]
pub struct SpDecomposition {
    nodes: Vec<SpNode>,
    root: usize,
    parent: Vec<Option<usize>>,
    leaves: HashMap<Edge, usize>,
    middles: HashMap<NodeId, usize>,
}

impl SpDecomposition {
    /// Indexes an arena-allocated tree.
    pub fn from_tree(nodes: Vec<SpNode>, root: usize) -> Result<SpDecomposition> {
        let mut parent = vec![None; nodes.len()];
        let mut leaves = HashMap::new();
        let mut middles = HashMap::new();
        let mut stack = vec![root];
        let mut seen = 0usize;
        while let Some(k) = stack.pop() {
            seen += 1;
            let node = nodes[k];
            match node.kind {
                SpKind::Leaf(e) => {
                    if e.seller != node.source || e.buyer != node.sink {
                        return Err(Error::Invariant(format!(
                            "leaf {k} has inconsistent terminals"
                        )));
                    }
                    if leaves.insert(e, k).is_some() {
                        return Err(Error::Invariant("arc appears twice in tree".into()));
                    }
                }
                SpKind::Series { first, second } => {
                    let (a, b) = (nodes[first], nodes[second]);
                    if a.source != node.source || b.sink != node.sink || a.sink != b.source {
                        return Err(Error::Invariant(format!(
                            "series node {k} does not compose"
                        )));
                    }
                    if middles.insert(a.sink, k).is_some() {
                        return Err(Error::Invariant(
                            "vertex is the middle of two series nodes".into(),
                        ));
                    }
                }
                SpKind::Parallel { left, right } => {
                    let (a, b) = (nodes[left], nodes[right]);
                    if a.source != node.source
                        || b.source != node.source
                        || a.sink != node.sink
                        || b.sink != node.sink
                    {
                        return Err(Error::Invariant(format!(
                            "parallel node {k} does not compose"
                        )));
                    }
                }
            }
            if let Some((x, y)) = node.children() {
                parent[x] = Some(k);
                parent[y] = Some(k);
                stack.push(x);
                stack.push(y);
            }
        }
        if seen != nodes.len() {
            return Err(Error::Invariant(
                "tree arena contains unreachable nodes".into(),
            ));
        }
        Ok(SpDecomposition {
            nodes,
            root,
            parent,
            leaves,
            middles,
        })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, k: usize) -> &SpNode {
        &self.nodes[k]
    }

    pub fn nodes(&self) -> &[SpNode] {
        &self.nodes
    }

    pub fn parent(&self, k: usize) -> Option<usize> {
        self.parent[k]
    }

    pub fn leaf(&self, e: Edge) -> Option<usize> {
        self.leaves.get(&e).copied()
    }

    /// The series node whose middle vertex is `v` (every interior vertex has one).
    pub fn series_at(&self, v: NodeId) -> Option<usize> {
        self.middles.get(&v).copied()
    }

    /// Proper ancestors of `k`, nearest first.
    pub fn ancestors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.parent[k], move |&a| self.parent[a])
    }

    /// Arcs below tree node `k`, sorted.
    pub fn arcs_under(&self, k: usize) -> Vec<Edge> {
        let mut arcs = Vec::new();
        let mut stack = vec![k];
        while let Some(j) = stack.pop() {
            match self.nodes[j].kind {
                SpKind::Leaf(e) => arcs.push(e),
                _ => {
                    let (x, y) = self.nodes[j].children().expect("internal node");
                    stack.push(x);
                    stack.push(y);
                }
            }
        }
        arcs.sort();
        arcs
    }

    /// Re-evaluates the compositions, returning the resulting arc set.
    pub fn evaluate(&self) -> Vec<Edge> {
        self.arcs_under(self.root)
    }
}

/// Series/parallel reduction of a single-source, single-sink DAG.
pub fn decompose(net: &Network) -> Result<SpDecomposition> {
    let s = net.source()?.node;
    let t = net.sink()?.node;
    let n = net.len();
    let mut tree: Vec<SpNode> = Vec::with_capacity(2 * net.arcs().len());
    let mut out: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); n];
    let mut inc: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); n];
    let mut work: BTreeSet<usize> = BTreeSet::new();

    for &e in net.arcs() {
        tree.push(SpNode {
            kind: SpKind::Leaf(e),
            source: e.seller,
            sink: e.buyer,
        });
        out[e.seller.0].insert(e.buyer.0, tree.len() - 1);
        inc[e.buyer.0].insert(e.seller.0, tree.len() - 1);
    }
    work.extend((0..n).filter(|&v| v != s.0 && v != t.0));

    while let Some(w) = work.pop_first() {
        if inc[w].len() != 1 || out[w].len() != 1 {
            continue;
        }
        let (u, first) = inc[w].pop_first().expect("one incoming");
        let (v, second) = out[w].pop_first().expect("one outgoing");
        out[u].remove(&w);
        inc[v].remove(&w);
        tree.push(SpNode {
            kind: SpKind::Series { first, second },
            source: NodeId(u),
            sink: NodeId(v),
        });
        let mut edge = tree.len() - 1;
        if let Some(&other) = out[u].get(&v) {
            tree.push(SpNode {
                kind: SpKind::Parallel {
                    left: other,
                    right: edge,
                },
                source: NodeId(u),
                sink: NodeId(v),
            });
            edge = tree.len() - 1;
        }
        out[u].insert(v, edge);
        inc[v].insert(u, edge);
        for x in [u, v] {
            if x != s.0 && x != t.0 {
                work.insert(x);
            }
        }
    }

    let stuck: Vec<String> = (0..n)
        .filter(|&v| v != s.0 && v != t.0 && !(inc[v].is_empty() && out[v].is_empty()))
        .map(|v| net.name(NodeId(v)).to_string())
        .collect();
    if !stuck.is_empty() || out[s.0].len() != 1 || !out[s.0].contains_key(&t.0) {
        return Err(Error::NotSeriesParallel(stuck));
    }
    let root = out[s.0][&t.0];
    SpDecomposition::from_tree(tree, root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn line_is_one_series_node() {
        let net = catalog::line();
        let d = decompose(&net).unwrap();
        let root = d.node(d.root());
        assert!(root.is_series());
        let (a, b) = root.children().unwrap();
        assert_eq!(d.node(a).kind, SpKind::Leaf(net.edge("s", "v").unwrap()));
        assert_eq!(d.node(b).kind, SpKind::Leaf(net.edge("v", "t").unwrap()));
    }

    #[test]
    fn diamond_is_parallel_of_two_series() {
        let net = catalog::diamond();
        let d = decompose(&net).unwrap();
        let root = d.node(d.root());
        assert!(root.is_parallel());
        let (a, b) = root.children().unwrap();
        let mut branches: Vec<Vec<Edge>> = vec![d.arcs_under(a), d.arcs_under(b)];
        branches.sort();
        assert!(d.node(a).is_series() && d.node(b).is_series());
        assert_eq!(
            branches,
            vec![
                vec![net.edge("s", "u").unwrap(), net.edge("u", "t").unwrap()],
                vec![net.edge("s", "v").unwrap(), net.edge("v", "t").unwrap()],
            ]
        );
    }

    #[test]
    fn bridge_is_rejected() {
        let err = decompose(&catalog::bridge()).unwrap_err();
        assert!(matches!(err, Error::NotSeriesParallel(_)));
    }

    #[test]
    fn evaluation_reproduces_arcs() {
        for net in [
            catalog::merging(),
            catalog::two_level(),
            catalog::three_buyers(),
            catalog::shortcut_triangle(),
        ] {
            let d = decompose(&net).unwrap();
            assert_eq!(d.evaluate(), net.arcs().to_vec());
        }
    }

    #[test]
    fn every_interior_vertex_is_a_series_middle() {
        let net = catalog::merging();
        let d = decompose(&net).unwrap();
        for v in net.nodes() {
            let interior = !net.is_source(v) && !net.is_sink(v);
            assert_eq!(d.series_at(v).is_some(), interior, "{}", net.name(v));
        }
    }
}
