//! Forward distribution of the source's output, the end-to-end solver, and an
//! independent equilibrium verifier.

use malachite::num::basic::traits::Zero;
use std::fmt;

use crate::error::{Error, Result};
use crate::network::{
    classify_arcs, decompose, find_shortcuts, merge_sets_with, remove_with, ArcCase, Edge,
    MergeSets, Network, RemovalReport, SpDecomposition,
};
use crate::pricing::{backward_price, nearest, topo_position, PriceSchedule};
use crate::rational::{format_rational, Rational, Signs};

/// Trades, throughputs and prices, indexed like the network they belong to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equilibrium {
    /// x_ij, aligned with `Network::arcs`.
    pub flow: Vec<Rational>,
    pub active: Vec<bool>,
    /// X_i per node.
    pub throughput: Vec<Rational>,
    /// Realized unit price per node; the source's is its production cost.
    pub price: Vec<Rational>,
    /// Arcs deleted as dominated; they carry zero flow and have no price.
    pub removed_arcs: Vec<(String, String)>,
    pub removed_nodes: Vec<String>,
}

impl Equilibrium {
    pub fn flow_on(&self, net: &Network, e: Edge) -> Option<&Rational> {
        net.arc_index(e).map(|k| &self.flow[k])
    }

    /// Flow on a named arc; removed arcs report zero.
    pub fn x(&self, net: &Network, seller: &str, buyer: &str) -> Result<Rational> {
        if self
            .removed_arcs
            .iter()
            .any(|(a, b)| a == seller && b == buyer)
        {
            return Ok(Rational::ZERO);
        }
        let e = net.edge(seller, buyer)?;
        Ok(self.flow[net.arc_index(e).expect("edge exists")].clone())
    }

    pub fn price_of(&self, net: &Network, node: &str) -> Option<&Rational> {
        net.id(node).map(|v| &self.price[v.0])
    }

    pub fn throughput_of(&self, net: &Network, node: &str) -> Option<&Rational> {
        net.id(node).map(|v| &self.throughput[v.0])
    }
}

/// Distributes X_s forward: single-buyer nodes pass on everything, sellers with
/// several buyers split by their convex coefficients.
pub fn forward_flow(
    net: &Network,
    _ms: &MergeSets,
    _cases: &[ArcCase],
    ps: &PriceSchedule,
) -> Result<Equilibrium> {
    let source = net.source()?;
    let n = net.len();
    let mut throughput = vec![Rational::ZERO; n];
    let mut flow = vec![Rational::ZERO; net.arcs().len()];
    throughput[source.node.0] = ps.inflow.clone();
    for &i in net.topo_order() {
        let x_i = throughput[i.0].clone();
        let buyers = net.buyers(i);
        for &j in buyers {
            let e = Edge::new(i, j);
            let x = if buyers.len() == 1 {
                x_i.clone()
            } else {
                let a = ps.alpha(e).ok_or_else(|| {
                    Error::Invariant(format!("no convex coefficient for {}", net.edge_name(e)))
                })?;
                a * &x_i
            };
            throughput[j.0] += &x;
            flow[net.arc_index(e).expect("arc exists")] = x;
        }
    }
    // a - b_i X_i - Σ_{C_P(i)} b_l X_l equals q_{l_1} - b_i X_i, with l_1 the
    // nearest node of C_P(i).
    let position = topo_position(net);
    let mut formula: Vec<Option<Rational>> = vec![None; n];
    for &v in net.topo_order().iter().rev() {
        let set = &ps.parent_merging[v.0];
        let base = match nearest(set, &position) {
            None => Some(ps.demand.clone()),
            Some(l) if ps.parent_merging[l.0].len() + 1 == set.len() => formula[l.0].clone(),
            Some(_) => None,
        };
        formula[v.0] = Some(match base {
            Some(base) => base - ps.b(v) * &throughput[v.0],
            None => ps.price_at(v, |l| Some(throughput[l.0].clone()))?,
        });
    }
    let price: Vec<Rational> = net
        .nodes()
        .zip(formula)
        .map(|(v, q)| match net.market(v) {
            Some(m) => &m.demand - &m.slope * &throughput[v.0],
            None => q.expect("every node priced"),
        })
        .collect();
    if price[source.node.0] != source.cost {
        return Err(Error::Invariant(format!(
            "source price {} differs from its cost {}",
            format_rational(&price[source.node.0]),
            format_rational(&source.cost)
        )));
    }
    let active = flow.iter().map(|x| x.is_positive()).collect();
    Ok(Equilibrium {
        flow,
        active,
        throughput,
        price,
        removed_arcs: Vec::new(),
        removed_nodes: Vec::new(),
    })
}

/// Everything computed on the way to an equilibrium.
#[derive(Debug, Clone)]
pub struct Solution {
    /// The shortcut-free network the equilibrium lives on.
    pub network: Network,
    pub removal: RemovalReport,
    pub decomposition: SpDecomposition,
    pub merge: MergeSets,
    pub cases: Vec<ArcCase>,
    pub schedule: PriceSchedule,
    pub equilibrium: Equilibrium,
}

/// Dominated-path removal, merge sets, arc classes, backward prices, forward flow.
pub fn solve(net: &Network) -> Result<Solution> {
    net.source()?;
    net.sink()?;
    let dec = decompose(net)?;
    let (network, removal, decomposition) = if find_shortcuts(&dec).is_empty() {
        (net.clone(), RemovalReport::default(), dec)
    } else {
        remove_with(net, dec)?
    };
    let merge = merge_sets_with(&network, &decomposition);
    let cases = classify_arcs(&network, &merge)?;
    let schedule = backward_price(&network, &merge, &cases)?;
    let mut equilibrium = forward_flow(&network, &merge, &cases, &schedule)?;
    equilibrium.removed_arcs = removal.removed_arcs.clone();
    equilibrium.removed_nodes = removal.removed_nodes.clone();
    Ok(Solution {
        network,
        removal,
        decomposition,
        merge,
        cases,
        schedule,
        equilibrium,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Conservation {
        node: String,
        inflow: Rational,
        outflow: Rational,
    },
    NegativeFlow {
        arc: String,
        flow: Rational,
    },
    ActiveFlag {
        arc: String,
    },
    /// ∂Π_i/∂x_ij is nonzero on an active arc or positive on an inactive one.
    Stationarity {
        arc: String,
        derivative: Rational,
        active: bool,
    },
    PriceMismatch {
        node: String,
        expected: Rational,
        found: Rational,
    },
    PriceDecrease {
        arc: String,
        seller_price: Rational,
        buyer_price: Rational,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = format_rational;
        match self {
            Violation::Conservation {
                node,
                inflow,
                outflow,
            } => write!(
                f,
                "conservation at {node}: in {} out {}",
                r(inflow),
                r(outflow)
            ),
            Violation::NegativeFlow { arc, flow } => {
                write!(f, "negative flow {} on {arc}", r(flow))
            }
            Violation::ActiveFlag { arc } => write!(f, "active flag disagrees with flow on {arc}"),
            Violation::Stationarity {
                arc,
                derivative,
                active,
            } => write!(
                f,
                "stationarity on {} arc {arc}: derivative {}",
                if *active { "active" } else { "inactive" },
                r(derivative)
            ),
            Violation::PriceMismatch {
                node,
                expected,
                found,
            } => write!(
                f,
                "price at {node}: expected {} found {}",
                r(expected),
                r(found)
            ),
            Violation::PriceDecrease {
                arc,
                seller_price,
                buyer_price,
            } => write!(
                f,
                "price falls along {arc}: {} then {}",
                r(seller_price),
                r(buyer_price)
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks conservation, first-order conditions of every firm, consistency of the
/// prices with the price functions, and monotone prices along active arcs.
pub fn verify_equilibrium(
    net: &Network,
    ms: &MergeSets,
    eq: &Equilibrium,
    ps: &PriceSchedule,
) -> VerificationReport {
    let mut violations = Vec::new();
    let arcs = net.arcs();
    let x = |e: Edge| &eq.flow[net.arc_index(e).expect("arc exists")];

    for (k, &e) in arcs.iter().enumerate() {
        if eq.flow[k].is_negative() {
            violations.push(Violation::NegativeFlow {
                arc: net.edge_name(e),
                flow: eq.flow[k].clone(),
            });
        }
        if eq.active[k] != eq.flow[k].is_positive() {
            violations.push(Violation::ActiveFlag {
                arc: net.edge_name(e),
            });
        }
    }

    for v in net.nodes() {
        if net.is_source(v) || net.is_sink(v) {
            continue;
        }
        let inflow: Rational = net.sellers(v).iter().map(|&u| x(Edge::new(u, v))).sum();
        let outflow: Rational = net.buyers(v).iter().map(|&w| x(Edge::new(v, w))).sum();
        if inflow != outflow {
            violations.push(Violation::Conservation {
                node: net.name(v).to_string(),
                inflow,
                outflow,
            });
        }
    }

    for i in net.nodes() {
        let buyers = net.buyers(i);
        if buyers.is_empty() {
            continue;
        }
        let own_price = match net.sources().iter().find(|s| s.node == i) {
            Some(s) => s.cost.clone(),
            None => eq.price[i.0].clone(),
        };
        let reach: Vec<Vec<bool>> = if buyers.len() > 1 {
            buyers.iter().map(|&j| net.reachable_from(j)).collect()
        } else {
            Vec::new()
        };
        for (jk, &j) in buyers.iter().enumerate() {
            let e = Edge::new(i, j);
            let mut d = &eq.price[j.0] - &own_price;
            for (hk, &h) in buyers.iter().enumerate() {
                let x_ih = x(Edge::new(i, h));
                if x_ih.is_zero() {
                    continue;
                }
                let mut coeff = if hk == jk {
                    ps.b(h).clone()
                } else {
                    Rational::ZERO
                };
                for &l in ms.parent_merging(h) {
                    if hk == jk || reach[jk][l.0] {
                        coeff += ps.b(l);
                    }
                }
                d -= coeff * x_ih;
            }
            let active = x(e).is_positive();
            if (active && !d.is_zero()) || (!active && d.is_positive()) {
                violations.push(Violation::Stationarity {
                    arc: net.edge_name(e),
                    derivative: d,
                    active,
                });
            }
        }
    }

    for v in net.nodes() {
        let expected = match net.market(v) {
            Some(m) => Ok(&m.demand - &m.slope * &eq.throughput[v.0]),
            None => ps.price_at(v, |l| Some(eq.throughput[l.0].clone())),
        };
        let mut expected = match expected {
            Ok(p) => vec![p],
            Err(_) => Vec::new(),
        };
        if let Some(s) = net.sources().iter().find(|s| s.node == v) {
            expected.push(s.cost.clone());
        }
        for p in expected {
            if p != eq.price[v.0] {
                violations.push(Violation::PriceMismatch {
                    node: net.name(v).to_string(),
                    expected: p,
                    found: eq.price[v.0].clone(),
                });
            }
        }
    }

    for (k, &e) in arcs.iter().enumerate() {
        if eq.active[k] && eq.price[e.seller.0] > eq.price[e.buyer.0] {
            violations.push(Violation::PriceDecrease {
                arc: net.edge_name(e),
                seller_price: eq.price[e.seller.0].clone(),
                buyer_price: eq.price[e.buyer.0].clone(),
            });
        }
    }
    VerificationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::rational::{int, rat};

    #[test]
    fn two_level_flows_and_prices() {
        let net = catalog::two_level();
        let sol = solve(&net).unwrap();
        let eq = &sol.equilibrium;
        assert_eq!(eq.x(&net, "s", "j1").unwrap(), rat(5, 46));
        assert_eq!(eq.x(&net, "s", "j2").unwrap(), rat(3, 46));
        assert_eq!(eq.x(&net, "j2", "v1").unwrap(), rat(3, 92));
        assert_eq!(eq.x(&net, "j2", "v2").unwrap(), rat(3, 92));
        for (node, p) in [
            ("j1", rat(3, 2)),
            ("j2", rat(3, 2)),
            ("v1", rat(39, 23)),
            ("v2", rat(39, 23)),
        ] {
            assert_eq!(eq.price_of(&net, node).unwrap(), &p, "{node}");
        }
        assert_eq!(eq.price_of(&net, "s").unwrap(), &int(1));
        assert!(eq.active.iter().all(|&a| a));
        assert!(verify_equilibrium(&sol.network, &sol.merge, eq, &sol.schedule).is_clean());
    }

    #[test]
    fn line_and_diamond() {
        let net = catalog::line();
        let eq = solve(&net).unwrap().equilibrium;
        assert_eq!(eq.x(&net, "s", "v").unwrap(), int(2));
        assert_eq!(eq.x(&net, "v", "t").unwrap(), int(2));
        assert_eq!(eq.price_of(&net, "v").unwrap(), &int(5));

        let net = catalog::diamond();
        let eq = solve(&net).unwrap().equilibrium;
        assert_eq!(eq.x(&net, "s", "u").unwrap(), int(1));
        assert_eq!(eq.x(&net, "s", "v").unwrap(), int(1));
        assert_eq!(eq.price_of(&net, "u").unwrap(), &int(4));
        assert_eq!(eq.price_of(&net, "v").unwrap(), &int(4));
    }

    #[test]
    fn shortcut_triangle_uses_only_the_shortcut() {
        let net = catalog::shortcut_triangle();
        let sol = solve(&net).unwrap();
        let eq = &sol.equilibrium;
        assert_eq!(eq.x(&sol.network, "s", "t").unwrap(), int(1));
        assert_eq!(eq.x(&sol.network, "s", "v").unwrap(), int(0));
        assert_eq!(eq.x(&sol.network, "v", "t").unwrap(), int(0));
        assert_eq!(eq.removed_arcs.len(), 2);
    }

    #[test]
    fn single_arc() {
        let net = catalog::single_arc(1, 9, 1);
        let sol = solve(&net).unwrap();
        assert_eq!(sol.equilibrium.x(&net, "s", "t").unwrap(), int(4));
        assert_eq!(sol.equilibrium.price_of(&net, "t").unwrap(), &int(5));
    }

    #[test]
    fn perturbed_split_breaks_stationarity_at_the_source() {
        let net = catalog::two_level();
        let sol = solve(&net).unwrap();
        let mut eq = sol.equilibrium.clone();
        let bump = rat(1, 100);
        for (a, b) in [("s", "j1"), ("j1", "k"), ("k", "t")] {
            let k = net.arc_index(net.edge(a, b).unwrap()).unwrap();
            eq.flow[k] += &bump;
        }
        for v in ["s", "j1", "k", "t"] {
            eq.throughput[net.node(v).unwrap().0] += &bump;
        }
        for v in net.nodes() {
            eq.price[v.0] = match net.market(v) {
                Some(m) => &m.demand - &m.slope * &eq.throughput[v.0],
                None => sol
                    .schedule
                    .price_at(v, |l| Some(eq.throughput[l.0].clone()))
                    .unwrap(),
            };
        }
        let report = verify_equilibrium(&net, &sol.merge, &eq, &sol.schedule);
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::Stationarity { arc, .. } if arc.starts_with("s->")
        )));
    }

    #[test]
    fn zero_trade_is_not_an_equilibrium() {
        let net = catalog::two_level();
        let sol = solve(&net).unwrap();
        let mut eq = sol.equilibrium.clone();
        for x in eq.flow.iter_mut() {
            *x = Rational::ZERO;
        }
        eq.active = vec![false; eq.flow.len()];
        for x in eq.throughput.iter_mut() {
            *x = Rational::ZERO;
        }
        for v in net.nodes() {
            eq.price[v.0] = if net.is_source(v) { int(1) } else { int(2) };
        }
        let report = verify_equilibrium(&net, &sol.merge, &eq, &sol.schedule);
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::Stationarity { arc, active: false, derivative } if arc == "s->j1" && derivative.is_positive()
        )));
    }
}
