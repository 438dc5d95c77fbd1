//! Backward computation of the equilibrium price functions
//! `p_i = a_t - b_i X_i - sum_{l in C_P(i)} b_l X_l`.

use malachite::num::arithmetic::traits::Reciprocal;
use malachite::num::basic::traits::{One, Two, Zero};
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};
use crate::network::{ArcCase, Edge, MergeSets, Network, NodeId};
use crate::rational::{Rational, Signs};

/// One merging node of a seller with several buyers, together with the flows
/// that reach it directly (`buyers`) and through earlier merging nodes (`feeders`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HubGroup {
    pub node: NodeId,
    pub buyers: Vec<NodeId>,
    pub feeders: Vec<NodeId>,
    /// Whether the hub's own slope enters its aggregate variable.
    pub counted: bool,
}

/// Merging nodes of one seller in topological order; the last one collects
/// every branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmGroups {
    pub seller: NodeId,
    pub hubs: Vec<HubGroup>,
}

/// Aggregate variables and weights behind a seller's convex coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmAggregate {
    /// `(h_k, c_k(i))` in topological order.
    pub hubs: Vec<(NodeId, Rational)>,
    /// β_p for every hub except the last.
    pub hub_weight: BTreeMap<NodeId, Rational>,
    /// β_j for every buyer.
    pub buyer_weight: BTreeMap<NodeId, Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceSchedule {
    /// Demand intercept shared by the price functions.
    pub demand: Rational,
    /// b_i per node, indexed by `NodeId`.
    pub slope: Vec<Rational>,
    /// C_P(i) per node.
    pub parent_merging: Vec<Vec<NodeId>>,
    /// α_j for the arcs of sellers with several buyers.
    pub alpha: BTreeMap<Edge, Rational>,
    pub aggregates: BTreeMap<NodeId, SmAggregate>,
    /// X_s, the quantity the source produces.
    pub inflow: Rational,
}

impl PriceSchedule {
    pub fn b(&self, v: NodeId) -> &Rational {
        &self.slope[v.0]
    }

    pub fn alpha(&self, e: Edge) -> Option<&Rational> {
        self.alpha.get(&e)
    }

    /// `a_t - b_i X_i - sum_{l in C_P(i)} b_l X_l` for the given throughputs.
    pub fn price_at(
        &self,
        i: NodeId,
        throughput: impl Fn(NodeId) -> Option<Rational>,
    ) -> Result<Rational> {
        let need = |v: NodeId| {
            throughput(v)
                .ok_or_else(|| Error::Infeasible(format!("missing throughput for node #{}", v.0)))
        };
        let mut p = &self.demand - &self.slope[i.0] * need(i)?;
        for &l in &self.parent_merging[i.0] {
            p -= &self.slope[l.0] * need(l)?;
        }
        Ok(p)
    }

    /// Re-indexes onto `to`, whose nodes are a subset of `from`'s.
    pub(crate) fn transfer(&self, from: &Network, to: &Network, gone: NodeId) -> PriceSchedule {
        let map = |v: NodeId| to.id(from.name(v));
        let mut slope = vec![Rational::ZERO; to.len()];
        let mut parent_merging = vec![Vec::new(); to.len()];
        for v in from.nodes() {
            if let Some(w) = map(v) {
                slope[w.0] = self.slope[v.0].clone();
                let mut list: Vec<NodeId> = self.parent_merging[v.0]
                    .iter()
                    .filter(|&&l| l != gone)
                    .filter_map(|&l| map(l))
                    .collect();
                list.sort();
                parent_merging[w.0] = list;
            }
        }
        let alpha = self
            .alpha
            .iter()
            .filter_map(|(e, a)| Some((Edge::new(map(e.seller)?, map(e.buyer)?), a.clone())))
            .collect();
        let remap = |m: &BTreeMap<NodeId, Rational>| -> BTreeMap<NodeId, Rational> {
            m.iter()
                .filter_map(|(v, x)| Some((map(*v)?, x.clone())))
                .collect()
        };
        let aggregates = self
            .aggregates
            .iter()
            .filter_map(|(v, agg)| {
                Some((
                    map(*v)?,
                    SmAggregate {
                        hubs: agg
                            .hubs
                            .iter()
                            .filter_map(|(h, c)| Some((map(*h)?, c.clone())))
                            .collect(),
                        hub_weight: remap(&agg.hub_weight),
                        buyer_weight: remap(&agg.buyer_weight),
                    },
                ))
            })
            .collect();
        PriceSchedule {
            demand: self.demand.clone(),
            slope,
            parent_merging,
            alpha,
            aggregates,
            inflow: self.inflow.clone(),
        }
    }
}

/// Closed form for a seller whose buyers all merge at a single node:
/// `b_i = 2 / sum(1/b_j) + 2 * internal + parent`, `α_j ∝ 1/b_j`.
pub fn simple_sm_coefficients(
    buyer_slopes: &[Rational],
    internal: &Rational,
    parent: &Rational,
) -> (Rational, Vec<Rational>) {
    let inv: Vec<Rational> = buyer_slopes.iter().map(|b| b.reciprocal()).collect();
    let total: Rational = inv.iter().sum();
    let b = Rational::TWO / &total + Rational::TWO * internal + parent;
    let alpha = inv.iter().map(|x| x / &total).collect();
    (b, alpha)
}

/// Aggregate-variable recursion for a seller with several merging nodes:
/// `c_k = 1 / (sum_{B_k} 1/b_j + sum_{P_k} 1/c_l) + b_{h_k}` (slope omitted when
/// the hub is not counted), `b_i = 2 c_n + parent`, and α_j the product of the
/// weights along the buyer's path of merging nodes.
pub fn general_sm_coefficients(
    groups: &SmGroups,
    slope: impl Fn(NodeId) -> Rational,
    parent: &Rational,
) -> Result<(Rational, BTreeMap<NodeId, Rational>, SmAggregate)> {
    let malformed = |what: &str| {
        Error::Invariant(format!(
            "malformed merge groups for seller #{}: {what}",
            groups.seller.0
        ))
    };
    if groups.hubs.is_empty() {
        return Err(malformed("no merging node"));
    }
    let mut position: BTreeMap<NodeId, usize> = BTreeMap::new();
    for (k, hub) in groups.hubs.iter().enumerate() {
        if position.insert(hub.node, k).is_some() {
            return Err(malformed("merging node listed twice"));
        }
    }
    let mut next: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut first: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for (k, hub) in groups.hubs.iter().enumerate() {
        if hub.buyers.len() + hub.feeders.len() == 0 {
            return Err(malformed("merging node with nothing flowing in"));
        }
        for &f in &hub.feeders {
            match position.get(&f) {
                Some(&pf) if pf < k => {}
                _ => return Err(malformed("feeder is not an earlier merging node")),
            }
            if next.insert(f, hub.node).is_some() {
                return Err(malformed("merging node feeds two others"));
            }
        }
        for &j in &hub.buyers {
            if first.insert(j, hub.node).is_some() {
                return Err(malformed("buyer in two groups"));
            }
        }
    }
    let last = groups.hubs.last().expect("non-empty").node;
    for hub in &groups.hubs {
        if hub.node != last && !next.contains_key(&hub.node) {
            return Err(malformed("merging node feeds nothing"));
        }
    }

    let mut c: BTreeMap<NodeId, Rational> = BTreeMap::new();
    let mut denom: BTreeMap<NodeId, Rational> = BTreeMap::new();
    let mut hubs = Vec::with_capacity(groups.hubs.len());
    for hub in &groups.hubs {
        let mut d = Rational::ZERO;
        for &j in &hub.buyers {
            d += slope(j).reciprocal();
        }
        for f in &hub.feeders {
            d += (&c[f]).reciprocal();
        }
        let mut ck = (&d).reciprocal();
        if hub.counted {
            ck += slope(hub.node);
        }
        denom.insert(hub.node, d);
        c.insert(hub.node, ck.clone());
        hubs.push((hub.node, ck));
    }
    let mut buyer_weight = BTreeMap::new();
    for (&j, h) in &first {
        buyer_weight.insert(j, slope(j).reciprocal() / &denom[h]);
    }
    let mut hub_weight = BTreeMap::new();
    for (&p, h) in &next {
        hub_weight.insert(p, (&c[&p]).reciprocal() / &denom[h]);
    }
    let mut alpha = BTreeMap::new();
    for (&j, &h) in &first {
        let mut a = buyer_weight[&j].clone();
        let mut at = h;
        while let Some(&up) = next.get(&at) {
            a *= &hub_weight[&at];
            at = up;
        }
        alpha.insert(j, a);
    }
    let b = Rational::TWO * &c[&last] + parent;
    Ok((
        b,
        alpha,
        SmAggregate {
            hubs,
            hub_weight,
            buyer_weight,
        },
    ))
}

/// Groups the buyers of `seller` by their first merging node and links each
/// merging node to the next one its flow reaches.
pub fn sm_groups(
    net: &Network,
    ms: &MergeSets,
    seller: NodeId,
    excluded: Option<NodeId>,
) -> Result<SmGroups> {
    sm_groups_at(net, ms, seller, excluded, &topo_position(net))
}

fn sm_groups_at(
    net: &Network,
    ms: &MergeSets,
    seller: NodeId,
    excluded: Option<NodeId>,
    position: &[usize],
) -> Result<SmGroups> {
    let parent = ms.parent_merging(seller);
    let mut hubs: BTreeMap<NodeId, HubGroup> = BTreeMap::new();
    let mut next: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for &j in net.buyers(seller) {
        let chain = ms.chain(Edge::new(seller, j));
        let Some(&h) = chain.first() else {
            return Err(Error::Invariant(format!(
                "arc {}->{} reaches no merging node",
                net.name(seller),
                net.name(j)
            )));
        };
        for &x in chain {
            hubs.entry(x).or_insert_with(|| HubGroup {
                node: x,
                buyers: Vec::new(),
                feeders: Vec::new(),
                counted: Some(x) != excluded && parent.binary_search(&x).is_err(),
            });
        }
        hubs.get_mut(&h).expect("inserted").buyers.push(j);
        for w in chain.windows(2) {
            if let Some(prev) = next.insert(w[0], w[1]) {
                if prev != w[1] {
                    return Err(Error::Invariant(format!(
                        "merging node {} has two successors",
                        net.name(w[0])
                    )));
                }
            }
        }
    }
    for (&p, &h) in &next {
        hubs.get_mut(&h).expect("inserted").feeders.push(p);
    }
    let mut list: Vec<HubGroup> = hubs.into_values().collect();
    list.sort_by_key(|g| position[g.node.0]);
    Ok(SmGroups { seller, hubs: list })
}

pub(crate) fn topo_position(net: &Network) -> Vec<usize> {
    let mut pos = vec![0; net.len()];
    for (k, v) in net.topo_order().iter().enumerate() {
        pos[v.0] = k;
    }
    pos
}

/// Topological order with ties broken by the largest node id instead of the smallest.
fn topo_high_first(net: &Network) -> Vec<NodeId> {
    let mut indeg: Vec<usize> = net.nodes().map(|v| net.sellers(v).len()).collect();
    let mut ready: BinaryHeap<NodeId> = net.nodes().filter(|v| indeg[v.0] == 0).collect();
    let mut order = Vec::with_capacity(net.len());
    while let Some(v) = ready.pop() {
        order.push(v);
        for &w in net.buyers(v) {
            indeg[w.0] -= 1;
            if indeg[w.0] == 0 {
                ready.push(w);
            }
        }
    }
    order
}

#[derive(Debug, Clone, Default)]
pub(crate) struct PassOptions {
    pub reverse_ties: bool,
    /// Nodes whose slope is given rather than computed (markets).
    pub fixed: BTreeMap<NodeId, Rational>,
    /// A virtual node that is dropped from every sum.
    pub excluded: Option<NodeId>,
    pub demand: Option<Rational>,
}

/// Runs the backward pass over a shortcut-free series-parallel network.
pub fn backward_price(net: &Network, ms: &MergeSets, cases: &[ArcCase]) -> Result<PriceSchedule> {
    backward_price_ordered(net, ms, cases, false)
}

/// As [`backward_price`], optionally breaking topological ties by the largest id.
pub fn backward_price_ordered(
    net: &Network,
    ms: &MergeSets,
    cases: &[ArcCase],
    reverse_ties: bool,
) -> Result<PriceSchedule> {
    let sink = net.sink()?;
    let mut opts = PassOptions {
        reverse_ties,
        ..PassOptions::default()
    };
    opts.fixed.insert(sink.node, sink.slope.clone());
    let ps = backward_pass(net, ms, cases, &opts)?;
    if ps.slope[net.source()?.node.0] < Rational::TWO * &sink.slope {
        return Err(Error::Invariant(
            "source slope below twice the sink slope".into(),
        ));
    }
    Ok(ps)
}

pub(crate) fn backward_pass(
    net: &Network,
    ms: &MergeSets,
    cases: &[ArcCase],
    opts: &PassOptions,
) -> Result<PriceSchedule> {
    ms.check_identities(net, cases)?;
    let source = net.source()?;
    let demand = match &opts.demand {
        Some(a) => a.clone(),
        None => net.sink()?.demand.clone(),
    };
    let order: Vec<NodeId> = if opts.reverse_ties {
        topo_high_first(net)
    } else {
        net.topo_order().to_vec()
    };
    let n = net.len();
    let position = topo_position(net);
    let mut slope: Vec<Option<Rational>> = vec![None; n];
    for (v, b) in &opts.fixed {
        slope[v.0] = Some(b.clone());
    }
    let keep = |l: &NodeId| Some(*l) != opts.excluded;
    let kept: Vec<Vec<NodeId>> = net
        .nodes()
        .map(|v| {
            ms.parent_merging(v)
                .iter()
                .copied()
                .filter(|l| keep(l))
                .collect()
        })
        .collect();
    // Σ_{C_P(v)} b_l, filled in as soon as b_v is known.
    let mut below: Vec<Option<Rational>> = vec![None; n];
    let mut alpha = BTreeMap::new();
    let mut aggregates = BTreeMap::new();
    for &i in order.iter().rev() {
        if slope[i.0].is_none() {
            let b = if Some(i) == opts.excluded {
                Rational::ONE
            } else {
                seller_slope(
                    net,
                    ms,
                    i,
                    opts,
                    &position,
                    &slope,
                    &below,
                    &mut alpha,
                    &mut aggregates,
                )?
            };
            slope[i.0] = Some(b);
        }
        below[i.0] = Some(chain_sum(net, &kept, i, &position, &slope, &below)?);
    }
    let slope: Vec<Rational> = slope
        .into_iter()
        .map(|b| b.expect("every node visited"))
        .collect();
    let inflow = (&demand - &source.cost) / &slope[source.node.0];
    if !inflow.is_positive() {
        return Err(Error::Infeasible("source inflow is not positive".into()));
    }
    Ok(PriceSchedule {
        demand,
        slope,
        parent_merging: kept,
        alpha,
        aggregates,
        inflow,
    })
}

/// The element of `set` closest to its owner, i.e. first in topological order.
pub(crate) fn nearest(set: &[NodeId], position: &[usize]) -> Option<NodeId> {
    set.iter().copied().min_by_key(|l| position[l.0])
}

/// `Σ_{l in C_P(i)} b_l` through `C_P(i) = {l_1} ∪ C_P(l_1)`, summing directly when
/// the sets do not nest that way.
fn chain_sum(
    net: &Network,
    kept: &[Vec<NodeId>],
    i: NodeId,
    position: &[usize],
    slope: &[Option<Rational>],
    below: &[Option<Rational>],
) -> Result<Rational> {
    let get = |v: NodeId| {
        slope[v.0].as_ref().ok_or_else(|| {
            Error::Invariant(format!(
                "slope of {} needed before it is known",
                net.name(v)
            ))
        })
    };
    let set = &kept[i.0];
    let Some(l) = nearest(set, position) else {
        return Ok(Rational::ZERO);
    };
    if kept[l.0].len() + 1 == set.len() {
        if let Some(rest) = &below[l.0] {
            return Ok(get(l)? + rest);
        }
    }
    let mut total = Rational::ZERO;
    for &l in set {
        total += get(l)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn seller_slope(
    net: &Network,
    ms: &MergeSets,
    i: NodeId,
    opts: &PassOptions,
    position: &[usize],
    slope: &[Option<Rational>],
    below: &[Option<Rational>],
    alpha: &mut BTreeMap<Edge, Rational>,
    aggregates: &mut BTreeMap<NodeId, SmAggregate>,
) -> Result<Rational> {
    let known = |v: NodeId, table: &[Option<Rational>]| -> Result<Rational> {
        table[v.0].clone().ok_or_else(|| {
            Error::Invariant(format!(
                "slope of {} needed before it is known",
                net.name(v)
            ))
        })
    };
    let b = match net.buyers(i) {
        [] => {
            return Err(Error::Invariant(format!(
                "node {} has no buyers and no given slope",
                net.name(i)
            )))
        }
        [j] => {
            let bj = known(*j, slope)?;
            let rest = known(*j, below)?;
            if net.sellers(*j).len() == 1 {
                Rational::TWO * bj + rest
            } else {
                bj + rest
            }
        }
        _ => {
            let mut parent = Rational::ZERO;
            for l in ms
                .parent_merging(i)
                .iter()
                .filter(|&&l| Some(l) != opts.excluded)
            {
                parent += known(*l, slope)?;
            }
            let groups = sm_groups_at(net, ms, i, opts.excluded, position)?;
            let (b, coeffs, agg) = general_sm_coefficients(
                &groups,
                |v| slope[v.0].clone().expect("downstream slopes are known"),
                &parent,
            )?;
            check_convex(net, i, &coeffs)?;
            for (j, a) in coeffs {
                alpha.insert(Edge::new(i, j), a);
            }
            aggregates.insert(i, agg);
            b
        }
    };
    if !b.is_positive() {
        return Err(Error::Invariant(format!(
            "non-positive slope at {}",
            net.name(i)
        )));
    }
    Ok(b)
}

fn check_convex(net: &Network, i: NodeId, coeffs: &BTreeMap<NodeId, Rational>) -> Result<()> {
    let total: Rational = coeffs.values().sum();
    if total != 1 || coeffs.values().any(|a| !a.is_positive()) {
        return Err(Error::Invariant(format!(
            "convex coefficients of {} do not form a distribution",
            net.name(i)
        )));
    }
    Ok(())
}
