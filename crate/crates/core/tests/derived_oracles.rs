use spg_core::catalog;
use spg_core::flow::{verify_equilibrium, Violation};
use spg_core::oracle::{
    best_response_check, lcp_solve, solve_linear, DeviationGrid, Offer, SmAllocationProblem,
    Strategy,
};
use spg_core::rational::{int, rat};
use spg_core::{solve, Network, Rational};

fn chain(n: usize, cost: i64, demand: i64, slope: i64) -> Network {
    let names: Vec<String> = (0..=n + 1)
        .map(|k| match k {
            0 => "s".to_string(),
            k if k == n + 1 => "t".to_string(),
            k => format!("v{k}"),
        })
        .collect();
    let arcs: Vec<(&str, &str)> = names
        .windows(2)
        .map(|w| (w[0].as_str(), w[1].as_str()))
        .collect();
    Network::spg("s", int(cost), "t", int(demand), int(slope), &arcs).unwrap()
}

/// A reseller facing `p = a - βX` with unit cost c sells `(a - c) / 2β`, so its
/// own inverse demand is `c = a - 2βX`. Walk this up from the market.
fn chain_by_induction(n: usize, cost: i64, demand: i64, slope: i64) -> (Rational, Vec<Rational>) {
    let a = int(demand);
    let mut beta = vec![int(slope)];
    for _ in 0..=n {
        let next = int(2) * beta.last().unwrap();
        beta.push(next);
    }
    // beta[k] is the slope faced by the seller k arcs above the market.
    let x = (&a - int(cost)) / &beta[n + 1];
    let prices = (1..=n).map(|k| &a - &beta[n + 1 - k] * &x).collect();
    (x, prices)
}

#[test]
fn chains_match_backward_induction() {
    for n in 0..7 {
        for (cost, demand, slope) in [(1, 9, 1), (2, 30, 3), (5, 6, 2)] {
            let net = chain(n, cost, demand, slope);
            let sol = solve(&net).unwrap();
            let (x, prices) = chain_by_induction(n, cost, demand, slope);
            assert_eq!(sol.schedule.inflow, x, "n = {n}");
            for (k, p) in prices.iter().enumerate() {
                assert_eq!(
                    sol.equilibrium.price_of(&net, &format!("v{}", k + 1)),
                    Some(p)
                );
            }
        }
    }
}

fn fan(k: usize, cost: i64, demand: i64, slope: i64) -> Network {
    let mids: Vec<String> = (1..=k).map(|i| format!("v{i}")).collect();
    let mut arcs = Vec::new();
    for m in &mids {
        arcs.push(("s", m.as_str()));
        arcs.push((m.as_str(), "t"));
    }
    Network::spg("s", int(cost), "t", int(demand), int(slope), &arcs).unwrap()
}

/// Resellers compete à la Cournot: `p_i = a - bX - b x_i`. The source picks the
/// x maximizing `Σ p_i x_i - a_s X`, whose first-order conditions are
/// `2b (X + x_i) = a - a_s`.
#[test]
fn fans_match_cournot_first_order_conditions() {
    for k in 1..6 {
        let (cost, demand, slope) = (2, 17, 3);
        let b = int(slope);
        let rows = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| int(2) * &b * int(1 + i64::from(i == j)))
                    .collect()
            })
            .collect();
        let x = solve_linear(rows, vec![int(demand - cost); k]).unwrap();
        let total: Rational = x.iter().sum();
        let net = fan(k, cost, demand, slope);
        let sol = solve(&net).unwrap();
        assert_eq!(sol.schedule.inflow, total);
        for (i, xi) in x.iter().enumerate() {
            let v = format!("v{}", i + 1);
            assert_eq!(&sol.equilibrium.x(&net, "s", &v).unwrap(), xi);
            let p = int(demand) - &b * &total - &b * xi;
            assert_eq!(sol.equilibrium.price_of(&net, &v), Some(&p));
        }
    }
}

/// `s -> v -> {w1, w2} -> t`: the Cournot pair gives `p_v = a - 3bX`, so the
/// source sells `(a - a_s) / 6b`.
#[test]
fn reseller_in_front_of_a_cournot_pair() {
    let net = Network::spg(
        "s",
        int(1),
        "t",
        int(13),
        int(2),
        &[
            ("s", "v"),
            ("v", "w1"),
            ("v", "w2"),
            ("w1", "t"),
            ("w2", "t"),
        ],
    )
    .unwrap();
    let sol = solve(&net).unwrap();
    let x = rat(13 - 1, 6 * 2);
    assert_eq!(sol.schedule.inflow, x);
    assert_eq!(
        sol.equilibrium.price_of(&net, "v"),
        Some(&(int(13) - int(6) * &x))
    );
    assert_eq!(sol.equilibrium.x(&net, "v", "w1").unwrap(), &x / int(2));
}

#[test]
fn lcp_allocations() {
    let sol = solve(&catalog::two_level()).unwrap();
    let s = sol.network.node("s").unwrap();
    let alloc = lcp_solve(&SmAllocationProblem::at(&sol, s).unwrap()).unwrap();
    assert_eq!(alloc.flows, vec![rat(5, 46), rat(3, 46)]);

    let sol = solve(&catalog::diamond()).unwrap();
    let s = sol.network.node("s").unwrap();
    let alloc = lcp_solve(&SmAllocationProblem::at(&sol, s).unwrap()).unwrap();
    assert_eq!(alloc.flows, vec![int(1), int(1)]);
}

#[test]
fn very_different_slopes_keep_both_arcs() {
    let big = int(1_000_000);
    let prob = SmAllocationProblem {
        seller: spg_core::NodeId(0),
        buyers: vec![spg_core::NodeId(1), spg_core::NodeId(2)],
        buyer_slope: vec![int(1), big.clone()],
        internal: vec![vec![], vec![]],
        hubs: vec![],
        hub_slope: vec![],
        capacity: rat(1, 1000),
        constant: int(0),
        demand: int(0),
    };
    let alloc = lcp_solve(&prob).unwrap();
    assert!(alloc.flows.iter().all(|x| *x > int(0)));
    // x ∝ 1/b
    assert_eq!(&alloc.flows[0] / &alloc.flows[1], big);
}

#[test]
fn line_candidate_is_improved() {
    let net = catalog::line();
    let sol = solve(&net).unwrap();
    let s = net.node("s").unwrap();
    let v = net.node("v").unwrap();
    let candidate = Strategy {
        offers: vec![Offer {
            buyer: v,
            price: int(7),
            quantity: int(2),
        }],
    };
    let br = best_response_check(&sol, s, Some(&candidate), &DeviationGrid::default()).unwrap();
    assert_eq!(br.current, int(5));
    assert_eq!(br.best, int(8));
    assert_eq!(br.gain, int(3));
}

#[test]
fn solved_examples_have_no_improving_deviation() {
    for net in [
        catalog::diamond(),
        catalog::two_level(),
        catalog::three_buyers(),
        catalog::merging(),
    ] {
        let sol = solve(&net).unwrap();
        for v in sol.network.nodes().filter(|&v| !sol.network.is_sink(v)) {
            let br = best_response_check(&sol, v, None, &DeviationGrid::default()).unwrap();
            assert!(
                !br.improves(),
                "{} at {}",
                sol.network.name(v),
                spg_core::rational::format_rational(&br.gain)
            );
        }
    }
}

#[test]
fn verifier_catches_perturbations() {
    let net = catalog::two_level();
    let sol = solve(&net).unwrap();
    assert!(verify_equilibrium(&net, &sol.merge, &sol.equilibrium, &sol.schedule).is_clean());

    let mut eq = sol.equilibrium.clone();
    let bump = rat(1, 100);
    for (a, b) in [("s", "j1"), ("j1", "k"), ("k", "t")] {
        let k = net.arc_index(net.edge(a, b).unwrap()).unwrap();
        eq.flow[k] += &bump;
    }
    for v in ["s", "j1", "k", "t"] {
        eq.throughput[net.node(v).unwrap().0] += &bump;
    }
    let report = verify_equilibrium(&net, &sol.merge, &eq, &sol.schedule);
    assert!(report
        .violations
        .iter()
        .any(|v| matches!(v, Violation::Stationarity { arc, .. } if arc.starts_with("s->"))));

    let mut zero = sol.equilibrium.clone();
    for x in zero.flow.iter_mut().chain(zero.throughput.iter_mut()) {
        *x = int(0);
    }
    zero.active.iter_mut().for_each(|a| *a = false);
    let report = verify_equilibrium(&net, &sol.merge, &zero, &sol.schedule);
    assert!(report
        .violations
        .iter()
        .any(|v| matches!(v, Violation::Stationarity { .. })));
}
