use std::collections::BTreeMap;

use malachite::num::basic::traits::{One, Two};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    best_response_check, generate_spg, lcp_solve, DeviationGrid, RandomSpgSpec, SmAllocationProblem,
};
use crate::analysis::{check_double_utility, node_utilities, social_welfare, swap_series};
use crate::error::{Error, Result};
use crate::flow::{solve, verify_equilibrium, Solution};
use crate::network::{NodeId, SpKind};
use crate::rational::{format_rational, Rational};

pub const CHECKS: [&str; 8] = [
    "verify",
    "lcp",
    "welfare",
    "lambda",
    "alpha",
    "double-utility",
    "swap",
    "best-response",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckTally {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub networks: usize,
    pub checks: Vec<CheckTally>,
    /// One line per failure: seed, check, detail.
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn tally(&self, name: &str) -> Option<&CheckTally> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Networks swapped for the series-swap check.
pub const SWAP_INSTANCES: usize = 500;

/// Solves `count` random shortcut-free SPGs (seeds `seed..seed+count`, between 3
/// and `budget` nodes) and runs every oracle check on each.
pub fn run_property_suite(seed: u64, count: usize, budget: usize) -> Result<SuiteReport> {
    if budget < 3 {
        return Err(Error::BadParameter(format!(
            "node budget {budget} exhausted: at least 3 nodes are needed"
        )));
    }
    let mut tallies: BTreeMap<&'static str, (usize, usize)> =
        CHECKS.iter().map(|&c| (c, (0, 0))).collect();
    let mut failures = Vec::new();
    let mut swaps = 0usize;
    for i in 0..count {
        let s = seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0x5eed);
        let nodes = rng.random_range(3..=budget);
        let mut record = |name: &'static str, result: std::result::Result<(), String>| {
            let t = tallies.get_mut(name).expect("known check");
            match result {
                Ok(()) => t.0 += 1,
                Err(detail) => {
                    t.1 += 1;
                    failures.push(format!("seed {s}: {name}: {detail}"));
                }
            }
        };
        let (net, _) = generate_spg(&RandomSpgSpec::new(s, nodes))?;
        let sol = match solve(&net) {
            Ok(sol) => sol,
            Err(e) => {
                record("verify", Err(e.to_string()));
                continue;
            }
        };
        let report = verify_equilibrium(&sol.network, &sol.merge, &sol.equilibrium, &sol.schedule);
        record(
            "verify",
            if report.is_clean() {
                Ok(())
            } else {
                Err(format!("{} violations", report.violations.len()))
            },
        );
        record("lcp", lcp_matches(&sol));
        let utilities = node_utilities(&sol.network, &sol.merge, &sol.schedule, &sol.equilibrium);
        let welfare = utilities.as_ref().map_err(|e| e.to_string()).and_then(|u| {
            social_welfare(&sol.network, &sol.schedule, &sol.equilibrium, u)
                .map_err(|e| e.to_string())
        });
        record("welfare", welfare.clone().map(|_| ()));
        let lambda = lambda(&sol);
        record(
            "lambda",
            if lambda >= Rational::TWO {
                Ok(())
            } else {
                Err(format!("λ = {}", format_rational(&lambda)))
            },
        );
        record("alpha", alpha_sums(&sol));
        record(
            "double-utility",
            utilities.as_ref().map_err(|e| e.to_string()).and_then(|u| {
                let checks = check_double_utility(&sol.network, u).map_err(|e| e.to_string())?;
                match checks.iter().find(|c| !c.holds) {
                    None => Ok(()),
                    Some(c) => Err(format!(
                        "{}: {} < 2 · {}",
                        sol.network.name(c.parent),
                        format_rational(&c.upper),
                        format_rational(&c.lower)
                    )),
                }
            }),
        );
        if swaps < SWAP_INSTANCES {
            if let Some(result) = swap_invariant(&sol, &mut rng) {
                swaps += 1;
                record("swap", result);
            }
        }
        record("best-response", no_gain(&sol));
    }
    Ok(SuiteReport {
        networks: count,
        checks: CHECKS
            .iter()
            .map(|&name| CheckTally {
                name,
                passed: tallies[name].0,
                failed: tallies[name].1,
            })
            .collect(),
        failures,
    })
}

fn lambda(sol: &Solution) -> Rational {
    let net = &sol.network;
    match (net.source(), net.sink()) {
        (Ok(s), Ok(t)) => sol.schedule.b(s.node) / &t.slope,
        _ => Rational::ONE,
    }
}

fn lcp_matches(sol: &Solution) -> std::result::Result<(), String> {
    let net = &sol.network;
    for v in net.nodes().filter(|&v| net.buyers(v).len() > 1) {
        let prob = SmAllocationProblem::at(sol, v).map_err(|e| e.to_string())?;
        let alloc = lcp_solve(&prob).map_err(|e| format!("{}: {e}", net.name(v)))?;
        for (j, &b) in prob.buyers.iter().enumerate() {
            let x = sol
                .equilibrium
                .flow_on(net, crate::network::Edge::new(v, b))
                .cloned()
                .unwrap_or_default();
            if x != alloc.flows[j] {
                return Err(format!(
                    "{}->{}: forward {} vs oracle {}",
                    net.name(v),
                    net.name(b),
                    format_rational(&x),
                    format_rational(&alloc.flows[j])
                ));
            }
        }
        let residual = prob.residual(&alloc);
        if residual != 0 {
            return Err(format!(
                "{}: residual {}",
                net.name(v),
                format_rational(&residual)
            ));
        }
    }
    Ok(())
}

fn alpha_sums(sol: &Solution) -> std::result::Result<(), String> {
    let mut sums: BTreeMap<NodeId, Rational> = BTreeMap::new();
    for (e, a) in &sol.schedule.alpha {
        *sums.entry(e.seller).or_default() += a;
    }
    match sums.iter().find(|(_, s)| **s != 1) {
        None => Ok(()),
        Some((v, s)) => Err(format!(
            "Σα at {} = {}",
            sol.network.name(*v),
            format_rational(s)
        )),
    }
}

fn swap_invariant(sol: &Solution, rng: &mut ChaCha8Rng) -> Option<std::result::Result<(), String>> {
    let dec = &sol.decomposition;
    let series: Vec<usize> = (0..dec.len())
        .filter(|&k| matches!(dec.node(k).kind, SpKind::Series { .. }))
        .collect();
    if series.is_empty() {
        return None;
    }
    let k = series[rng.random_range(0..series.len())];
    Some(swap_compare(sol, k))
}

fn swap_compare(sol: &Solution, k: usize) -> std::result::Result<(), String> {
    let fingerprint = |sol: &Solution| -> std::result::Result<[Rational; 4], String> {
        let net = &sol.network;
        let u = node_utilities(net, &sol.merge, &sol.schedule, &sol.equilibrium)
            .map_err(|e| e.to_string())?;
        let w =
            social_welfare(net, &sol.schedule, &sol.equilibrium, &u).map_err(|e| e.to_string())?;
        let s = net.source().map_err(|e| e.to_string())?.node;
        Ok([
            lambda(sol),
            sol.schedule.inflow.clone(),
            w.by_sum,
            u[&s].clone(),
        ])
    };
    let swapped = swap_series(&sol.network, &sol.decomposition, k).map_err(|e| e.to_string())?;
    let other = solve(&swapped).map_err(|e| e.to_string())?;
    let (a, b) = (fingerprint(sol)?, fingerprint(&other)?);
    let labels = ["λ", "X_s", "SW", "Π_s"];
    for i in 0..4 {
        if a[i] != b[i] {
            return Err(format!(
                "{} changed from {} to {} swapping node #{k}",
                labels[i],
                format_rational(&a[i]),
                format_rational(&b[i])
            ));
        }
    }
    Ok(())
}

fn no_gain(sol: &Solution) -> std::result::Result<(), String> {
    let grid = DeviationGrid::default();
    for v in sol
        .network
        .nodes()
        .filter(|&v| !sol.network.buyers(v).is_empty())
    {
        let br = best_response_check(sol, v, None, &grid).map_err(|e| e.to_string())?;
        if br.improves() {
            return Err(format!(
                "{} gains {}",
                sol.network.name(v),
                format_rational(&br.gain)
            ));
        }
    }
    Ok(())
}
