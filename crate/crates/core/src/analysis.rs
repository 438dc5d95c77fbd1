//! Utilities, welfare, component factors and comparative statics of an equilibrium.

use malachite::num::basic::traits::{One, Two};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::flow::{solve, Equilibrium, Solution};
use crate::network::{
    classify_arcs, decompose, dominating_parents, merge_sets_with, Edge, MergeSets, Network,
    NodeId, SpDecomposition, SpKind,
};
use crate::pricing::{backward_price, PriceSchedule};
use crate::rational::{format_rational, half, Rational};

/// `Π_i` for the source and every intermediary, by the closed form
/// `½ (b_i + Σ_{C_P(i)} b_l) X_i²`, cross-checked against revenue minus cost.
pub fn node_utilities(
    net: &Network,
    ms: &MergeSets,
    ps: &PriceSchedule,
    eq: &Equilibrium,
) -> Result<BTreeMap<NodeId, Rational>> {
    let mut out = BTreeMap::new();
    for v in net.nodes().filter(|&v| !net.is_sink(v)) {
        let x = &eq.throughput[v.0];
        let mut coef = ps.b(v).clone();
        for &l in ms.parent_merging(v) {
            coef += ps.b(l);
        }
        let closed = half() * coef * x * x;
        let mut direct = -(&eq.price[v.0] * x);
        for &j in net.buyers(v) {
            if let Some(f) = eq.flow_on(net, Edge::new(v, j)) {
                direct += &eq.price[j.0] * f;
            }
        }
        if closed != direct {
            return Err(Error::Invariant(format!(
                "utility of {}: closed form {} but revenue minus cost {}",
                net.name(v),
                format_rational(&closed),
                format_rational(&direct)
            )));
        }
        out.insert(v, closed);
    }
    Ok(out)
}

/// The common price the source charges each buyer, `(a_t + a_s) / 2`.
pub fn source_price(net: &Network) -> Result<Rational> {
    Ok(half() * (&net.sink()?.demand + &net.source()?.cost))
}

/// One double-utility comparison: `upper ≥ 2 · lower`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleUtility {
    pub parent: NodeId,
    /// The dominated firm, or every buyer of `parent` when it is an SS/SM seller.
    pub children: Vec<NodeId>,
    pub upper: Rational,
    pub lower: Rational,
    pub holds: bool,
}

/// Dominating parent vs. dominated firm, and SS/SM seller vs. its buyers together.
pub fn check_double_utility(
    net: &Network,
    utilities: &BTreeMap<NodeId, Rational>,
) -> Result<Vec<DoubleUtility>> {
    let dom = dominating_parents(net)?;
    let mut out = Vec::new();
    for (&j, pj) in utilities {
        for i in dom.parents(j) {
            let Some(pi) = utilities.get(&i) else {
                continue;
            };
            out.push(DoubleUtility {
                parent: i,
                children: vec![j],
                upper: pi.clone(),
                lower: pj.clone(),
                holds: *pi >= Rational::TWO * pj,
            });
        }
    }
    for (&i, pi) in utilities {
        let buyers = net.buyers(i);
        if buyers.iter().any(|&j| net.sellers(j).len() != 1) {
            continue;
        }
        let firms: Vec<NodeId> = buyers
            .iter()
            .copied()
            .filter(|j| !net.is_sink(*j))
            .collect();
        if firms.is_empty() {
            continue;
        }
        let total: Rational = firms.iter().map(|j| &utilities[j]).sum();
        out.push(DoubleUtility {
            parent: i,
            children: firms,
            holds: *pi >= Rational::TWO * &total,
            upper: pi.clone(),
            lower: total,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Welfare {
    /// `½ b_t X_t²`.
    pub consumer_surplus: Rational,
    /// Sum of firm utilities plus consumer surplus.
    pub by_sum: Rational,
    /// `(a_t - a_s - b_t X_s / 2) X_s`.
    pub by_flow: Rational,
    /// `(a_t - a_s)² (1 - 1/(2λ)) / (λ b_t)`.
    pub by_lambda: Rational,
}

/// Social welfare three ways; disagreement is an invariant violation.
pub fn social_welfare(
    net: &Network,
    ps: &PriceSchedule,
    eq: &Equilibrium,
    utilities: &BTreeMap<NodeId, Rational>,
) -> Result<Welfare> {
    let source = net.source()?;
    let sink = net.sink()?;
    let xt = &eq.throughput[sink.node.0];
    let xs = &eq.throughput[source.node.0];
    let consumer_surplus = half() * &sink.slope * xt * xt;
    let by_sum = utilities.values().sum::<Rational>() + &consumer_surplus;
    let margin = &sink.demand - &source.cost;
    let by_flow = (&margin - half() * &sink.slope * xs) * xs;
    let lambda = ps.b(source.node) / &sink.slope;
    let by_lambda = welfare_at_lambda(&margin, &sink.slope, &lambda);
    if by_sum != by_flow || by_flow != by_lambda {
        return Err(Error::Invariant(format!(
            "social welfare disagrees: {} / {} / {}",
            format_rational(&by_sum),
            format_rational(&by_flow),
            format_rational(&by_lambda)
        )));
    }
    Ok(Welfare {
        consumer_surplus,
        by_sum,
        by_flow,
        by_lambda,
    })
}

/// `(a_t - a_s)² (1 - 1/(2λ)) / (λ b_t)`.
pub fn welfare_at_lambda(margin: &Rational, slope: &Rational, lambda: &Rational) -> Rational {
    margin * margin * (Rational::ONE - Rational::ONE / (Rational::TWO * lambda)) / (lambda * slope)
}

/// Outcome of one composition law at a decomposition node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LawCheck {
    Series {
        node: usize,
        holds: bool,
    },
    Parallel {
        node: usize,
        holds: bool,
    },
    /// A side is a single arc, so the parallel law does not apply.
    Skipped {
        node: usize,
        notice: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentFactors {
    /// λ of the whole network.
    pub lambda: Rational,
    /// λ of every decomposition node, indexed like the decomposition.
    pub per_node: Vec<Rational>,
    pub laws: Vec<LawCheck>,
}

/// `λ(Y) = b_{s_Y} / b_{t_Y}` for the network and each decomposition subtree.
pub fn component_factor(net: &Network, dec: &SpDecomposition) -> Result<ComponentFactors> {
    let mut per_node = Vec::with_capacity(dec.len());
    for (k, node) in dec.nodes().iter().enumerate() {
        let lambda = match node.kind {
            SpKind::Leaf(_) => Rational::TWO,
            _ => {
                let arcs = dec.arcs_under(k);
                let sub = net.subnetwork(
                    &arcs,
                    node.source,
                    node.sink,
                    Rational::ONE,
                    Rational::TWO,
                    Rational::ONE,
                )?;
                lambda_of(&sub)?
            }
        };
        per_node.push(lambda);
    }
    let two = Rational::TWO;
    let mut laws = Vec::new();
    for (k, node) in dec.nodes().iter().enumerate() {
        match node.kind {
            SpKind::Leaf(_) => {}
            SpKind::Series { first, second } => laws.push(LawCheck::Series {
                node: k,
                holds: per_node[k] == &per_node[first] * &per_node[second],
            }),
            SpKind::Parallel { left, right } => {
                let (y, z) = (&per_node[left], &per_node[right]);
                if *y == two || *z == two {
                    laws.push(LawCheck::Skipped {
                        node: k,
                        notice: "one side is a single arc; the parallel law needs a shortcut-free composition"
                            .into(),
                    });
                } else {
                    let expected = (y - &two) * (z - &two) / (y + z - Rational::from(4)) + &two;
                    laws.push(LawCheck::Parallel {
                        node: k,
                        holds: per_node[k] == expected,
                    });
                }
            }
        }
    }
    let lambda = per_node[dec.root()].clone();
    Ok(ComponentFactors {
        lambda,
        per_node,
        laws,
    })
}

/// `b_s / b_t` of a shortcut-free SPG.
pub fn lambda_of(net: &Network) -> Result<Rational> {
    let dec = decompose(net)?;
    let ms = merge_sets_with(net, &dec);
    let cases = classify_arcs(net, &ms)?;
    let ps = backward_price(net, &ms, &cases)?;
    Ok(ps.b(net.source()?.node) / &net.sink()?.slope)
}

/// The network with the two children of Series node `k` exchanged.
pub fn swap_series(net: &Network, dec: &SpDecomposition, k: usize) -> Result<Network> {
    let node = dec
        .nodes()
        .get(k)
        .ok_or_else(|| Error::BadParameter(format!("no decomposition node #{k}")))?;
    let SpKind::Series { first, second } = node.kind else {
        return Err(Error::BadParameter(format!(
            "decomposition node #{k} is not a series composition"
        )));
    };
    let (start, middle, end) = (node.source, dec.node(first).sink, node.sink);
    let front: Vec<_> = dec.arcs_under(first);
    let back: Vec<_> = dec.arcs_under(second);
    let moved = |v: NodeId, map: &[(NodeId, NodeId)]| {
        map.iter().find(|(a, _)| *a == v).map_or(v, |(_, b)| *b)
    };
    let mut arcs = Vec::new();
    for &e in net.arcs() {
        let (u, v) = if back.binary_search(&e).is_ok() {
            let m = [(middle, start), (end, middle)];
            (moved(e.seller, &m), moved(e.buyer, &m))
        } else if front.binary_search(&e).is_ok() {
            let m = [(start, middle), (middle, end)];
            (moved(e.seller, &m), moved(e.buyer, &m))
        } else {
            (e.seller, e.buyer)
        };
        arcs.push((net.name(u).to_string(), net.name(v).to_string()));
    }
    Network::from_parts(
        net.ids().to_vec(),
        net.sources()
            .iter()
            .map(|s| (net.name(s.node).to_string(), s.cost.clone()))
            .collect(),
        net.sinks()
            .iter()
            .map(|t| {
                (
                    net.name(t.node).to_string(),
                    t.demand.clone(),
                    t.slope.clone(),
                )
            })
            .collect(),
        arcs,
    )
}

/// The parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// The sink's demand intercept a_t.
    Demand,
    /// The source's production cost a_s.
    Cost,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub value: Rational,
    pub inflow: Rational,
    pub welfare: Rational,
    /// Π_i by node name.
    pub utility: BTreeMap<String, Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
    /// Consecutive rows breaking the expected direction, as `(row, quantity)`.
    pub violations: Vec<(usize, String)>,
}

impl Sweep {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-solves at each value; X_s, SW and every Π_i should rise with a_t and fall with a_s.
pub fn demand_sweep(
    net: &Network,
    parameter: SweepParameter,
    values: &[Rational],
) -> Result<Sweep> {
    let mut rows = Vec::with_capacity(values.len());
    for value in values {
        let tuned = match parameter {
            SweepParameter::Demand => net.with_demand(value)?,
            SweepParameter::Cost => net.with_cost(value)?,
        };
        let report = analyze(&solve(&tuned)?)?;
        rows.push(SweepRow {
            value: value.clone(),
            inflow: report.inflow,
            welfare: report.welfare.by_sum,
            utility: report
                .utility
                .iter()
                .map(|(v, u)| (tuned.name(*v).to_string(), u.clone()))
                .collect(),
        });
    }
    let mut violations = Vec::new();
    for (k, w) in rows.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let rising = match (parameter, a.value.cmp(&b.value)) {
            (_, std::cmp::Ordering::Equal) => continue,
            (SweepParameter::Demand, o) => o == std::cmp::Ordering::Less,
            (SweepParameter::Cost, o) => o == std::cmp::Ordering::Greater,
        };
        let ok = |x: &Rational, y: &Rational| if rising { x < y } else { x > y };
        if !ok(&a.inflow, &b.inflow) {
            violations.push((k + 1, "inflow".to_string()));
        }
        if !ok(&a.welfare, &b.welfare) {
            violations.push((k + 1, "welfare".to_string()));
        }
        for (name, u) in &a.utility {
            if let Some(v) = b.utility.get(name) {
                if !ok(u, v) {
                    violations.push((k + 1, format!("utility of {name}")));
                }
            }
        }
    }
    Ok(Sweep {
        parameter,
        rows,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisReport {
    pub utility: BTreeMap<NodeId, Rational>,
    pub welfare: Welfare,
    pub lambda: Rational,
    pub source_price: Rational,
    pub inflow: Rational,
    pub double_utility: Vec<DoubleUtility>,
}

/// Utilities, welfare, λ and the double-utility comparisons of a solution.
pub fn analyze(sol: &Solution) -> Result<AnalysisReport> {
    let net = &sol.network;
    let utility = node_utilities(net, &sol.merge, &sol.schedule, &sol.equilibrium)?;
    let welfare = social_welfare(net, &sol.schedule, &sol.equilibrium, &utility)?;
    let lambda = sol.schedule.b(net.source()?.node) / &net.sink()?.slope;
    let double_utility = check_double_utility(net, &utility)?;
    Ok(AnalysisReport {
        source_price: source_price(net)?,
        inflow: sol.schedule.inflow.clone(),
        utility,
        welfare,
        lambda,
        double_utility,
    })
}
