use std::collections::BTreeSet;

use super::{decompose, Edge, Network, SpDecomposition};
use crate::error::Result;

/// What `remove_dominated_paths` took out of the network, by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RemovalReport {
    pub shortcuts: Vec<(String, String)>,
    pub removed_arcs: Vec<(String, String)>,
    pub removed_nodes: Vec<String>,
}

impl RemovalReport {
    pub fn is_empty(&self) -> bool {
        self.removed_arcs.is_empty()
    }
}

/// Shortcut arcs of a series-parallel network, each paired with the arcs of the
/// paths it dominates.
pub fn find_shortcuts(dec: &SpDecomposition) -> Vec<(Edge, Vec<Edge>)> {
    let mut found = Vec::new();
    for arc in dec.evaluate() {
        let leaf = dec.leaf(arc).expect("every arc has a leaf");
        let mut top = None;
        for a in dec.ancestors(leaf) {
            let node = dec.node(a);
            if node.is_parallel() && node.source == arc.seller && node.sink == arc.buyer {
                top = Some(a);
            } else {
                break;
            }
        }
        if let Some(top) = top {
            let dominated = dec
                .arcs_under(top)
                .into_iter()
                .filter(|&e| e != arc)
                .collect();
            found.push((arc, dominated));
        }
    }
    found
}

/// Deletes every path dominated by a shortcut arc, repeating until none is left.
pub fn remove_dominated_paths(net: &Network) -> Result<(Network, RemovalReport)> {
    let dec = decompose(net)?;
    let (net, report, _) = remove_with(net, dec)?;
    Ok((net, report))
}

pub(crate) fn remove_with(
    net: &Network,
    dec: SpDecomposition,
) -> Result<(Network, RemovalReport, SpDecomposition)> {
    let mut report = RemovalReport::default();
    let mut current = net.clone();
    let mut dec = dec;
    loop {
        let found = find_shortcuts(&dec);
        if found.is_empty() {
            break;
        }
        let mut doomed = BTreeSet::new();
        for (arc, dominated) in &found {
            report.shortcuts.push((
                current.name(arc.seller).to_string(),
                current.name(arc.buyer).to_string(),
            ));
            doomed.extend(dominated.iter().copied());
        }
        for e in &doomed {
            report.removed_arcs.push((
                current.name(e.seller).to_string(),
                current.name(e.buyer).to_string(),
            ));
        }
        let (next, dropped) = current.restrict(|e| !doomed.contains(&e))?;
        report.removed_nodes.extend(dropped);
        current = next;
        dec = decompose(&current)?;
    }
    report.shortcuts.sort();
    report.shortcuts.dedup();
    report.removed_arcs.sort();
    report.removed_nodes.sort();
    Ok((current, report, dec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn pairs(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn triangle_loses_its_long_path() {
        let (net, report) = remove_dominated_paths(&catalog::shortcut_triangle()).unwrap();
        assert_eq!(report.removed_arcs, pairs(&[("s", "v"), ("v", "t")]));
        assert_eq!(report.removed_nodes, vec!["v".to_string()]);
        assert_eq!(net.arcs().len(), 1);
        assert!(net.edge("s", "t").is_ok());
    }

    #[test]
    fn shortcut_free_network_is_untouched() {
        let (net, report) = remove_dominated_paths(&catalog::two_level()).unwrap();
        assert!(report.is_empty());
        assert_eq!(net, catalog::two_level());
    }

    #[test]
    fn nested_shortcuts_reach_a_fixed_point() {
        let (net, report) = remove_dominated_paths(&catalog::nested_shortcuts()).unwrap();
        assert_eq!(report.shortcuts, pairs(&[("a", "c"), ("s", "c")]));
        assert_eq!(
            report.removed_arcs,
            pairs(&[("a", "b"), ("a", "c"), ("b", "c"), ("s", "a")])
        );
        assert_eq!(report.removed_nodes, vec!["a".to_string(), "b".to_string()]);
        assert_eq!(net.arcs().len(), 2);
        assert!(find_shortcuts(&decompose(&net).unwrap()).is_empty());
    }
}
