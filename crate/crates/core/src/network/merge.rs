use std::collections::HashMap;
use std::fmt;

use super::{decompose, Edge, Network, NodeId, SpDecomposition};
use crate::error::{Error, Result};

/// Arc classification by the seller's out-degree and the buyer's in-degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcCase {
    /// One buyer for the seller, one seller for the buyer.
    Ss,
    /// One buyer for the seller, several sellers for the buyer.
    Ms,
    /// Several buyers for the seller, one seller for the buyer.
    Sm,
}

impl fmt::Display for ArcCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArcCase::Ss => "SS",
            ArcCase::Ms => "MS",
            ArcCase::Sm => "SM",
        })
    }
}

/// Self-merging and parent-merging children of every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeSets {
    self_merging: Vec<Vec<NodeId>>,
    parent_merging: Vec<Vec<NodeId>>,
    chains: HashMap<Edge, Vec<NodeId>>,
}

impl MergeSets {
    /// C_S(i): nodes reached from `i` by two internally disjoint paths.
    pub fn self_merging(&self, i: NodeId) -> &[NodeId] {
        &self.self_merging[i.0]
    }

    /// C_P(i): descendants where flows of some ancestor of `i` re-merge.
    pub fn parent_merging(&self, i: NodeId) -> &[NodeId] {
        &self.parent_merging[i.0]
    }

    /// Self-merging nodes of the seller that the arc's flow passes through, nearest
    /// first. Only recorded for sellers with several buyers.
    pub fn chain(&self, e: Edge) -> &[NodeId] {
        self.chains.get(&e).map(Vec::as_slice).unwrap_or(&[])
    }

    /// C_T(i,j) = C_S(i) ∩ C(j) \ C_P(i), sorted.
    pub fn internal(&self, e: Edge) -> Vec<NodeId> {
        let cp = self.parent_merging(e.seller);
        let mut v: Vec<NodeId> = self
            .chain(e)
            .iter()
            .copied()
            .filter(|h| cp.binary_search(h).is_err())
            .collect();
        v.sort();
        v
    }

    /// C(i): every node reachable from `i`, excluding `i`.
    pub fn children(net: &Network, i: NodeId) -> Vec<NodeId> {
        let seen = net.reachable_from(i);
        net.nodes().filter(|&v| v != i && seen[v.0]).collect()
    }

    /// P(i): every node that reaches `i`, excluding `i`.
    pub fn parents(net: &Network, i: NodeId) -> Vec<NodeId> {
        net.nodes()
            .filter(|&v| v != i && net.reachable_from(v)[i.0])
            .collect()
    }

    /// Re-indexes onto `to`, whose nodes are a subset of `from`'s, dropping `gone`
    /// from every set.
    pub(crate) fn transfer(&self, from: &Network, to: &Network, gone: NodeId) -> MergeSets {
        let map = |v: NodeId| to.id(from.name(v));
        let remap = |list: &[NodeId]| -> Vec<NodeId> {
            let mut out: Vec<NodeId> = list
                .iter()
                .filter(|&&v| v != gone)
                .filter_map(|&v| map(v))
                .collect();
            out.sort();
            out
        };
        let mut self_merging = vec![Vec::new(); to.len()];
        let mut parent_merging = vec![Vec::new(); to.len()];
        for v in from.nodes() {
            if let Some(w) = map(v) {
                self_merging[w.0] = remap(&self.self_merging[v.0]);
                parent_merging[w.0] = remap(&self.parent_merging[v.0]);
            }
        }
        let mut chains = HashMap::new();
        for (e, chain) in &self.chains {
            if let (Some(a), Some(b)) = (map(e.seller), map(e.buyer)) {
                let kept: Vec<NodeId> = chain
                    .iter()
                    .filter(|&&v| v != gone)
                    .filter_map(|&v| map(v))
                    .collect();
                chains.insert(Edge::new(a, b), kept);
            }
        }
        MergeSets {
            self_merging,
            parent_merging,
            chains,
        }
    }

    /// Checks the set identities relating the merge sets across each arc.
    pub fn check_identities(&self, net: &Network, cases: &[ArcCase]) -> Result<()> {
        for terminal in net
            .sources()
            .iter()
            .map(|s| s.node)
            .chain(net.sinks().iter().map(|t| t.node))
        {
            if !self.parent_merging(terminal).is_empty() {
                return Err(Error::Invariant(format!(
                    "terminal {} has parent-merging children",
                    net.name(terminal)
                )));
            }
        }
        for (k, &e) in net.arcs().iter().enumerate() {
            let (ci, cj) = (self.parent_merging(e.seller), self.parent_merging(e.buyer));
            let ok = match cases[k] {
                ArcCase::Ss => ci == cj,
                ArcCase::Sm => {
                    let ct = self.internal(e);
                    disjoint_union(ci, &ct) == Some(cj.to_vec())
                }
                ArcCase::Ms => disjoint_union(cj, &[e.buyer]) == Some(ci.to_vec()),
            };
            if !ok {
                return Err(Error::Invariant(format!(
                    "merge-set identity fails on {} arc {}",
                    cases[k],
                    net.edge_name(e)
                )));
            }
        }
        Ok(())
    }
}

fn disjoint_union(a: &[NodeId], b: &[NodeId]) -> Option<Vec<NodeId>> {
    let mut v: Vec<NodeId> = a.iter().chain(b).copied().collect();
    v.sort();
    let n = v.len();
    v.dedup();
    (v.len() == n).then_some(v)
}

/// Merge sets of a shortcut-free series-parallel network.
pub fn merge_sets(net: &Network) -> Result<MergeSets> {
    Ok(merge_sets_with(net, &decompose(net)?))
}

/// Merge sets read off a decomposition tree: C_S(i) collects the sinks of the
/// parallel compositions starting at `i`; C_P(i) the sinks of the parallel
/// compositions enclosing the series composition whose middle vertex is `i`.
pub fn merge_sets_with(net: &Network, dec: &SpDecomposition) -> MergeSets {
    let size = dec.len();
    let mut near = vec![None; size];
    let mut skip = vec![None; size];
    let mut stack = vec![dec.root()];
    while let Some(k) = stack.pop() {
        if let Some(p) = dec.parent(k) {
            near[k] = if dec.node(p).is_parallel() {
                Some(p)
            } else {
                near[p]
            };
        }
        if dec.node(k).is_parallel() {
            let mut q = near[k];
            while let Some(a) = q {
                if dec.node(a).sink != dec.node(k).sink {
                    break;
                }
                q = skip[a];
            }
            skip[k] = q;
        }
        if let Some((x, y)) = dec.node(k).children() {
            stack.push(x);
            stack.push(y);
        }
    }
    let enclosing = |k: usize| -> Vec<NodeId> {
        let mut sinks = Vec::new();
        let mut q = near[k];
        while let Some(a) = q {
            sinks.push(dec.node(a).sink);
            q = skip[a];
        }
        sinks
    };

    let n = net.len();
    let mut self_merging = vec![Vec::new(); n];
    for node in dec.nodes() {
        if node.is_parallel() {
            self_merging[node.source.0].push(node.sink);
        }
    }
    for list in self_merging.iter_mut() {
        list.sort();
        list.dedup();
    }
    let mut parent_merging = vec![Vec::new(); n];
    for v in net.nodes() {
        if let Some(k) = dec.series_at(v) {
            let mut list = enclosing(k);
            list.sort();
            parent_merging[v.0] = list;
        }
    }
    let mut chains = HashMap::new();
    for v in net.nodes() {
        if net.buyers(v).len() < 2 {
            continue;
        }
        for &j in net.buyers(v) {
            let e = Edge::new(v, j);
            let leaf = dec.leaf(e).expect("arc has a leaf");
            let mut chain: Vec<NodeId> = Vec::new();
            let mut q = near[leaf];
            while let Some(a) = q {
                let node = dec.node(a);
                if node.source != v {
                    break;
                }
                chain.push(node.sink);
                q = skip[a];
            }
            chains.insert(e, chain);
        }
    }
    MergeSets {
        self_merging,
        parent_merging,
        chains,
    }
}

/// Labels every arc SS, MS or SM; an arc whose seller and buyer both have
/// several partners is reported as an invariant violation.
pub fn classify_arcs(net: &Network, _ms: &MergeSets) -> Result<Vec<ArcCase>> {
    net.arcs()
        .iter()
        .map(|&e| {
            let many_buyers = net.buyers(e.seller).len() > 1;
            let many_sellers = net.sellers(e.buyer).len() > 1;
            match (many_buyers, many_sellers) {
                (false, false) => Ok(ArcCase::Ss),
                (false, true) => Ok(ArcCase::Ms),
                (true, false) => Ok(ArcCase::Sm),
                (true, true) => Err(Error::Invariant(format!(
                    "arc {} has several buyers at the seller and several sellers at the buyer",
                    net.edge_name(e)
                ))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn names(net: &Network, v: &[NodeId]) -> Vec<String> {
        v.iter().map(|&x| net.name(x).to_string()).collect()
    }

    fn set(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn merging_sets_match_by_hand() {
        let net = catalog::merging();
        let ms = merge_sets(&net).unwrap();
        let n = |s: &str| net.node(s).unwrap();
        assert_eq!(names(&net, ms.self_merging(n("a"))), set(&["g", "h"]));
        assert_eq!(names(&net, ms.parent_merging(n("a"))), set(&["h"]));
        assert_eq!(
            names(&net, &ms.internal(net.edge("a", "c").unwrap())),
            set(&["g"])
        );
        assert!(ms.internal(net.edge("a", "b").unwrap()).is_empty());
        assert_eq!(names(&net, ms.parent_merging(n("c"))), set(&["g", "h"]));
        assert!(ms.self_merging(n("c")).is_empty());
        assert_eq!(names(&net, ms.parent_merging(n("g"))), set(&["h"]));
        let cases = classify_arcs(&net, &ms).unwrap();
        ms.check_identities(&net, &cases).unwrap();
    }

    #[test]
    fn merging_sets_agree_with_path_definitions() {
        let net = catalog::merging();
        let ms = merge_sets(&net).unwrap();
        for i in net.nodes() {
            let brute: Vec<NodeId> = MergeSets::children(&net, i)
                .into_iter()
                .filter(|&j| disjoint_paths(&net, i, j))
                .collect();
            assert_eq!(ms.self_merging(i), brute.as_slice(), "C_S({})", net.name(i));
        }
    }

    fn disjoint_paths(net: &Network, i: NodeId, j: NodeId) -> bool {
        // Two internally disjoint i-j paths exist unless a single vertex separates
        // them, or the only route is a single arc.
        let reach = |banned: Option<NodeId>| {
            let mut seen = vec![false; net.len()];
            let mut stack = vec![i];
            seen[i.0] = true;
            while let Some(u) = stack.pop() {
                for &w in net.buyers(u) {
                    if Some(w) != banned && !seen[w.0] {
                        seen[w.0] = true;
                        stack.push(w);
                    }
                }
            }
            seen[j.0]
        };
        let paths = reach(None);
        let cut = net
            .nodes()
            .filter(|&v| v != i && v != j)
            .any(|v| !reach(Some(v)));
        let arcs_out = net
            .buyers(i)
            .iter()
            .filter(|&&b| b == j || net.reachable_from(b)[j.0])
            .count();
        let arcs_in = net
            .sellers(j)
            .iter()
            .filter(|&&a| a == i || net.reachable_from(i)[a.0])
            .count();
        paths && !cut && arcs_out >= 2 && arcs_in >= 2
    }

    #[test]
    fn line_has_no_merges() {
        let net = catalog::line();
        let ms = merge_sets(&net).unwrap();
        for v in net.nodes() {
            assert!(ms.self_merging(v).is_empty());
            assert!(ms.parent_merging(v).is_empty());
        }
        let cases = classify_arcs(&net, &ms).unwrap();
        assert_eq!(cases, vec![ArcCase::Ss, ArcCase::Ss]);
    }

    #[test]
    fn diamond_merges_at_the_sink() {
        let net = catalog::diamond();
        let ms = merge_sets(&net).unwrap();
        let n = |s: &str| net.node(s).unwrap();
        assert_eq!(names(&net, ms.self_merging(n("s"))), set(&["t"]));
        assert_eq!(names(&net, ms.parent_merging(n("u"))), set(&["t"]));
        assert_eq!(names(&net, ms.parent_merging(n("v"))), set(&["t"]));
        assert!(ms.parent_merging(n("s")).is_empty());
        assert!(ms.parent_merging(n("t")).is_empty());
        let cases = classify_arcs(&net, &ms).unwrap();
        let case = |a: &str, b: &str| cases[net.arc_index(net.edge(a, b).unwrap()).unwrap()];
        assert_eq!(case("s", "u"), ArcCase::Sm);
        assert_eq!(case("s", "v"), ArcCase::Sm);
        assert_eq!(case("u", "t"), ArcCase::Ms);
        assert_eq!(case("v", "t"), ArcCase::Ms);
        ms.check_identities(&net, &cases).unwrap();
    }

    #[test]
    fn two_level_arc_cases() {
        let net = catalog::two_level();
        let ms = merge_sets(&net).unwrap();
        let cases = classify_arcs(&net, &ms).unwrap();
        let case = |a: &str, b: &str| cases[net.arc_index(net.edge(a, b).unwrap()).unwrap()];
        assert_eq!(case("s", "j1"), ArcCase::Sm);
        assert_eq!(case("s", "j2"), ArcCase::Sm);
        assert_eq!(case("j1", "k"), ArcCase::Ss);
        for (a, b) in [("v1", "l"), ("v2", "l"), ("k", "t"), ("l", "t")] {
            assert_eq!(case(a, b), ArcCase::Ms, "{a}->{b}");
        }
        ms.check_identities(&net, &cases).unwrap();
    }

    #[test]
    fn bridge_shape_has_an_mm_arc() {
        let net = catalog::bridge();
        let ms = MergeSets {
            self_merging: vec![Vec::new(); net.len()],
            parent_merging: vec![Vec::new(); net.len()],
            chains: HashMap::new(),
        };
        assert!(matches!(classify_arcs(&net, &ms), Err(Error::Invariant(_))));
    }
}
