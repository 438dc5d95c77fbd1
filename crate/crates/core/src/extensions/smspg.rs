use crate::error::{Error, Result};
use crate::flow::{forward_flow, solve, Equilibrium, Solution};
use crate::network::{
    classify_arcs, decompose, find_shortcuts, merge_sets_with, MergeSets, Network, NodeId,
    RemovalReport,
};
use crate::oracle::{best_response_check, BestResponse, DeviationGrid};
use crate::pricing::{backward_pass, PassOptions, PriceSchedule};
use crate::rational::{format_rational, Signs};

/// Equilibrium of a single-source network whose markets share one demand curve.
#[derive(Debug, Clone)]
pub struct SmspgSolution {
    pub network: Network,
    /// The extra market joining every real one, when there are several.
    pub virtual_sink: Option<String>,
    /// Solution on the network with the virtual market attached.
    pub augmented: Solution,
    pub merge: MergeSets,
    pub schedule: PriceSchedule,
    pub equilibrium: Equilibrium,
}

impl SmspgSolution {
    /// Best-response search for every firm that sells.
    pub fn certify(&self, grid: &DeviationGrid) -> Result<Vec<BestResponse>> {
        let net = &self.augmented.network;
        let skip = |v: NodeId| {
            net.is_sink(v)
                || self
                    .network
                    .id(net.name(v))
                    .is_some_and(|w| self.network.is_sink(w))
        };
        net.nodes()
            .filter(|&v| !skip(v))
            .map(|v| best_response_check(&self.augmented, v, None, grid))
            .collect()
    }

    /// Flow into each market, by name.
    pub fn market_flows(&self) -> Vec<(String, crate::Rational)> {
        self.network
            .sinks()
            .iter()
            .map(|t| {
                (
                    self.network.name(t.node).to_string(),
                    self.equilibrium.throughput[t.node.0].clone(),
                )
            })
            .collect()
    }
}

/// Backward and forward passes with every market feeding one virtual market
/// that is left out of all merge sums; each real market keeps its own slope.
pub fn smspg_equal_demand_solve(net: &Network) -> Result<SmspgSolution> {
    if net.sources().len() != 1 || net.sinks().is_empty() {
        return Err(Error::NotSingleTerminal);
    }
    let first = &net.sinks()[0];
    if net
        .sinks()
        .iter()
        .any(|t| t.demand != first.demand || t.slope != first.slope)
    {
        return Err(Error::BadParameter(
            "markets differ in demand or slope; only the two-market shape is analyzed for unequal markets"
                .into(),
        ));
    }
    if net.sinks().len() == 1 {
        let sol = solve(net)?;
        return Ok(SmspgSolution {
            network: net.clone(),
            virtual_sink: None,
            merge: sol.merge.clone(),
            schedule: sol.schedule.clone(),
            equilibrium: sol.equilibrium.clone(),
            augmented: sol,
        });
    }

    let mut top = String::from("market");
    while net.id(&top).is_some() {
        top.push('_');
    }
    let mut nodes = net.ids().to_vec();
    nodes.push(top.clone());
    let mut arcs: Vec<(String, String)> = net
        .arcs()
        .iter()
        .map(|e| {
            (
                net.name(e.seller).to_string(),
                net.name(e.buyer).to_string(),
            )
        })
        .collect();
    for t in net.sinks() {
        arcs.push((net.name(t.node).to_string(), top.clone()));
    }
    let source = &net.sources()[0];
    let augmented = Network::from_parts(
        nodes,
        vec![(net.name(source.node).to_string(), source.cost.clone())],
        vec![(top.clone(), first.demand.clone(), first.slope.clone())],
        arcs,
    )?;
    let dec = decompose(&augmented)?;
    if !find_shortcuts(&dec).is_empty() {
        return Err(Error::BadParameter(
            "the network has a shortcut; remove dominated paths first".into(),
        ));
    }
    let top_id = augmented.node(&top)?;
    let ms = merge_sets_with(&augmented, &dec);
    let cases = classify_arcs(&augmented, &ms)?;
    let mut opts = PassOptions {
        excluded: Some(top_id),
        demand: Some(first.demand.clone()),
        ..PassOptions::default()
    };
    for t in net.sinks() {
        opts.fixed
            .insert(augmented.node(net.name(t.node))?, t.slope.clone());
    }
    let ps = backward_pass(&augmented, &ms, &cases, &opts)?;
    let eq = forward_flow(&augmented, &ms, &cases, &ps)?;

    let mut flow = Vec::with_capacity(net.arcs().len());
    for &e in net.arcs() {
        let a = augmented.node(net.name(e.seller))?;
        let b = augmented.node(net.name(e.buyer))?;
        let x = eq
            .flow_on(&augmented, crate::network::Edge::new(a, b))
            .cloned()
            .ok_or_else(|| Error::Invariant(format!("arc {} lost", net.edge_name(e))))?;
        flow.push(x);
    }
    let mut throughput = Vec::with_capacity(net.len());
    let mut price = Vec::with_capacity(net.len());
    for v in net.nodes() {
        let w = augmented.node(net.name(v))?;
        throughput.push(eq.throughput[w.0].clone());
        price.push(eq.price[w.0].clone());
    }
    for t in net.sinks() {
        if !throughput[t.node.0].is_positive() {
            return Err(Error::Invariant(format!(
                "market {} inactive with inflow {}",
                net.name(t.node),
                format_rational(&throughput[t.node.0])
            )));
        }
    }
    let equilibrium = Equilibrium {
        active: flow.iter().map(|x| x.is_positive()).collect(),
        flow,
        throughput,
        price,
        removed_arcs: Vec::new(),
        removed_nodes: Vec::new(),
    };
    let merge = ms.transfer(&augmented, net, top_id);
    let schedule = ps.transfer(&augmented, net, top_id);
    Ok(SmspgSolution {
        network: net.clone(),
        virtual_sink: Some(top),
        augmented: Solution {
            network: augmented,
            removal: RemovalReport::default(),
            decomposition: dec,
            merge: ms,
            cases,
            schedule: ps,
            equilibrium: eq,
        },
        merge,
        schedule,
        equilibrium,
    })
}
