use spg_core::analysis::{analyze, lambda_of, source_price};
use spg_core::catalog;
use spg_core::network::{
    decompose, find_shortcuts, merge_sets, remove_dominated_paths, Kind, SpKind,
};
use spg_core::rational::{int, rat};
use spg_core::{parse_network, solve, Error, Network, Rational};

fn node_set(net: &Network, ids: &[spg_core::NodeId]) -> Vec<String> {
    let mut v: Vec<String> = ids.iter().map(|&i| net.name(i).to_string()).collect();
    v.sort();
    v
}

#[test]
fn line_document_parses() {
    let net = parse_network(
        r#"{"nodes":["s","v","t"],"source":{"id":"s","cost":1},
            "sink":{"id":"t","demand":9,"slope":1},"arcs":[["s","v"],["v","t"]]}"#,
    )
    .unwrap();
    assert_eq!(net.len(), 3);
    assert_eq!(net.arcs().len(), 2);
    assert_eq!(net, catalog::line());
}

#[test]
fn rejected_documents() {
    let doubled = r#"{"nodes":["s","t"],"source":{"id":"s","cost":1},
        "sink":{"id":"t","demand":9,"slope":1},"arcs":[["s","t"],["s","t"]]}"#;
    assert!(matches!(
        parse_network(doubled),
        Err(Error::ParallelArc(..))
    ));
    let flat = r#"{"nodes":["s","t"],"source":{"id":"s","cost":1},
        "sink":{"id":"t","demand":1,"slope":1},"arcs":[["s","t"]]}"#;
    assert!(matches!(
        parse_network(flat),
        Err(Error::DemandNotAboveCost { .. })
    ));
}

#[test]
fn decompositions() {
    let line = catalog::line();
    let dec = decompose(&line).unwrap();
    assert!(dec.node(dec.root()).is_series());

    let diamond = catalog::diamond();
    let dec = decompose(&diamond).unwrap();
    let root = dec.node(dec.root());
    let SpKind::Parallel { left, right } = root.kind else {
        panic!("root is not parallel")
    };
    assert!(dec.node(left).is_series() && dec.node(right).is_series());

    assert!(matches!(
        decompose(&catalog::bridge()),
        Err(Error::NotSeriesParallel(_))
    ));
    assert_eq!(catalog::crossed_dag().kind(), Kind::Dag);
    assert_eq!(catalog::two_sources().kind(), Kind::Msspg);
}

#[test]
fn shortcut_removal() {
    let (net, report) = remove_dominated_paths(&catalog::shortcut_triangle()).unwrap();
    assert_eq!(net.arcs().len(), 1);
    assert_eq!(net.edge_name(net.arcs()[0]), "s->t");
    assert_eq!(report.removed_nodes, vec!["v".to_string()]);

    let (same, report) = remove_dominated_paths(&catalog::two_level()).unwrap();
    assert!(report.is_empty());
    assert_eq!(same, catalog::two_level());

    let (net, _) = remove_dominated_paths(&catalog::nested_shortcuts()).unwrap();
    assert!(find_shortcuts(&decompose(&net).unwrap()).is_empty());
}

#[test]
fn merging_sets() {
    let net = catalog::merging();
    let ms = merge_sets(&net).unwrap();
    let n = |s: &str| net.node(s).unwrap();
    assert_eq!(node_set(&net, ms.self_merging(n("a"))), ["g", "h"]);
    assert_eq!(node_set(&net, ms.parent_merging(n("a"))), ["h"]);
    assert_eq!(
        node_set(&net, &ms.internal(net.edge("a", "c").unwrap())),
        ["g"]
    );
    assert_eq!(node_set(&net, ms.parent_merging(n("c"))), ["g", "h"]);
    assert_eq!(node_set(&net, ms.parent_merging(n("g"))), ["h"]);
}

#[test]
fn line_and_diamond_merge_sets() {
    let net = catalog::line();
    let ms = merge_sets(&net).unwrap();
    assert!(net
        .nodes()
        .all(|v| ms.self_merging(v).is_empty() && ms.parent_merging(v).is_empty()));

    let net = catalog::diamond();
    let ms = merge_sets(&net).unwrap();
    let n = |s: &str| net.node(s).unwrap();
    assert_eq!(node_set(&net, ms.self_merging(n("s"))), ["t"]);
    assert_eq!(node_set(&net, ms.parent_merging(n("u"))), ["t"]);
    assert_eq!(node_set(&net, ms.parent_merging(n("v"))), ["t"]);
}

#[test]
fn two_level_schedule() {
    let net = catalog::two_level();
    let sol = solve(&net).unwrap();
    let n = |s: &str| net.node(s).unwrap();
    let ps = &sol.schedule;
    assert_eq!(ps.b(n("j1")), &int(3));
    assert_eq!(ps.b(n("j2")), &int(5));
    assert_eq!(ps.b(n("s")), &rat(23, 4));
    assert_eq!(ps.inflow, rat(4, 23));
    let alpha = |a: &str, b: &str| ps.alpha(net.edge(a, b).unwrap()).unwrap().clone();
    assert_eq!(
        [
            alpha("s", "j1"),
            alpha("s", "j2"),
            alpha("j2", "v1"),
            alpha("j2", "v2")
        ],
        [rat(5, 8), rat(3, 8), rat(1, 2), rat(1, 2)]
    );
    let eq = &sol.equilibrium;
    assert_eq!(eq.x(&net, "s", "j1").unwrap(), rat(5, 46));
    assert_eq!(eq.x(&net, "s", "j2").unwrap(), rat(3, 46));
    assert_eq!(eq.x(&net, "j2", "v1").unwrap(), rat(3, 92));
    assert_eq!(eq.x(&net, "j2", "v2").unwrap(), rat(3, 92));
    for (v, p) in [
        ("j1", rat(3, 2)),
        ("j2", rat(3, 2)),
        ("v1", rat(39, 23)),
        ("v2", rat(39, 23)),
    ] {
        assert_eq!(eq.price_of(&net, v), Some(&p), "{v}");
    }
    let p_j1 = ps
        .price_at(n("j1"), |v| eq.throughput_of(&net, net.name(v)).cloned())
        .unwrap();
    assert_eq!(p_j1, rat(3, 2));
    // All throughputs zero: the price is the demand intercept.
    assert_eq!(ps.price_at(n("j1"), |_| Some(int(0))).unwrap(), int(2));
    // The source's price at its own output is its cost.
    assert_eq!(
        ps.price_at(n("s"), |v| eq.throughput_of(&net, net.name(v)).cloned())
            .unwrap(),
        int(1)
    );
}

#[test]
fn general_single_seller() {
    let net = catalog::three_buyers();
    let sol = solve(&net).unwrap();
    let n = |s: &str| net.node(s).unwrap();
    let ps = &sol.schedule;
    assert_eq!(ps.aggregates[&n("s")].hubs[0].1, int(2));
    assert_eq!(ps.b(n("s")), &rat(22, 5));
    assert_eq!(ps.inflow, rat(5, 22));
    let alpha = |b: &str| ps.alpha(net.edge("s", b).unwrap()).unwrap().clone();
    assert_eq!(
        [alpha("j1"), alpha("j2"), alpha("j3")],
        [rat(2, 5), rat(3, 10), rat(3, 10)]
    );
}

#[test]
fn line_example() {
    let net = catalog::line();
    let sol = solve(&net).unwrap();
    assert_eq!(sol.equilibrium.x(&net, "s", "v").unwrap(), int(2));
    assert_eq!(sol.equilibrium.x(&net, "v", "t").unwrap(), int(2));
    assert_eq!(sol.equilibrium.price_of(&net, "v"), Some(&int(5)));
    let r = analyze(&sol).unwrap();
    assert_eq!(r.utility[&net.node("s").unwrap()], int(8));
    assert_eq!(r.utility[&net.node("v").unwrap()], int(4));
    assert_eq!(source_price(&net).unwrap(), int(5));
    assert_eq!(r.lambda, int(4));
    // 7 (a_t - a_s)^2 / (32 b_t) at λ = 4
    assert_eq!(r.welfare.by_sum, rat(7 * 64, 32));
}

#[test]
fn diamond_example() {
    let net = catalog::diamond();
    let sol = solve(&net).unwrap();
    let eq = &sol.equilibrium;
    assert_eq!(eq.x(&net, "s", "u").unwrap(), int(1));
    assert_eq!(eq.x(&net, "s", "v").unwrap(), int(1));
    assert_eq!(eq.price_of(&net, "u"), Some(&int(4)));
    assert_eq!(eq.price_of(&net, "v"), Some(&int(4)));
    let r = analyze(&sol).unwrap();
    let u = |s: &str| r.utility[&net.node(s).unwrap()].clone();
    assert_eq!((u("s"), u("u"), u("v")), (int(6), int(1), int(1)));
    assert!(u("s") >= int(2) * (u("u") + u("v")));
    assert_eq!(r.lambda, int(3));
    for w in [&r.welfare.by_sum, &r.welfare.by_flow, &r.welfare.by_lambda] {
        assert_eq!(w, &int(10));
    }
}

#[test]
fn shortcut_example() {
    let net = catalog::shortcut_triangle();
    let sol = solve(&net).unwrap();
    let eq = &sol.equilibrium;
    assert_eq!(eq.x(&sol.network, "s", "t").unwrap(), int(1));
    assert_eq!(
        eq.removed_arcs,
        vec![
            ("s".to_string(), "v".to_string()),
            ("v".to_string(), "t".to_string())
        ]
    );
}

#[test]
fn single_arc() {
    let net = catalog::single_arc(1, 9, 1);
    let sol = solve(&net).unwrap();
    assert_eq!(sol.equilibrium.x(&net, "s", "t").unwrap(), int(4));
    assert_eq!(sol.equilibrium.price_of(&net, "t"), Some(&int(5)));
    assert_eq!(lambda_of(&net).unwrap(), int(2));
    let r = analyze(&sol).unwrap();
    assert_eq!(r.welfare.by_sum, Rational::from(3 * 64) / Rational::from(8));
}
