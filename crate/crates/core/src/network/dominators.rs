use super::{Network, NodeId};
use crate::error::Result;

/// Immediate-dominator tree of a single-source DAG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dominators {
    idom: Vec<Option<NodeId>>,
    depth: Vec<usize>,
}

impl Dominators {
    pub fn immediate(&self, v: NodeId) -> Option<NodeId> {
        self.idom[v.0]
    }

    /// Every node lying on all source-to-`v` paths, excluding `v`, nearest first.
    pub fn parents(&self, v: NodeId) -> Vec<NodeId> {
        std::iter::successors(self.idom[v.0], |u| self.idom[u.0]).collect()
    }

    pub fn dominates(&self, i: NodeId, j: NodeId) -> bool {
        i != j && self.parents(j).contains(&i)
    }
}

/// Dominating parents of every node, computed in topological order as the
/// dominator-tree meet of each node's sellers.
pub fn dominating_parents(net: &Network) -> Result<Dominators> {
    let root = net.source()?.node;
    let n = net.len();
    let mut idom: Vec<Option<NodeId>> = vec![None; n];
    let mut depth = vec![0usize; n];
    for &v in net.topo_order() {
        if v == root {
            continue;
        }
        let mut meet: Option<NodeId> = None;
        for &u in net.sellers(v) {
            meet = Some(match meet {
                None => u,
                Some(m) => {
                    let (mut a, mut b) = (m, u);
                    while a != b {
                        if depth[a.0] >= depth[b.0] && a != root {
                            a = idom[a.0].unwrap_or(root);
                        } else {
                            b = idom[b.0].unwrap_or(root);
                        }
                    }
                    a
                }
            });
        }
        if let Some(m) = meet {
            idom[v.0] = Some(m);
            depth[v.0] = depth[m.0] + 1;
        }
    }
    Ok(Dominators { idom, depth })
}
