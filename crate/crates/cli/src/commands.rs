use std::io::Read;
use std::path::Path;

use spg_core::analysis::{analyze, demand_sweep, swap_series, SweepParameter};
use spg_core::extensions::{
    dag_example_check, demand_grid, msspg_nonexistence_demo, smspg_equal_demand_solve,
    two_market_analyze, MsspgGame, Preference, TwoMarketScenario,
};
use spg_core::network::{
    classify_arcs, decompose, find_shortcuts, merge_sets_with, remove_dominated_paths, Kind,
};
use spg_core::oracle::run_property_suite;
use spg_core::rational::{format_rational, parse_rational, to_f64, Signs};
use spg_core::{parse_network, solve, Edge, Equilibrium, Error, Network, Rational, Result};

use crate::render::{Cell, Sheet};

/// A rendered report, plus the reason for exit status 5 when a check failed.
pub struct Report {
    pub sheet: Sheet,
    pub failure: Option<String>,
}

impl From<Sheet> for Report {
    fn from(sheet: Sheet) -> Self {
        Report {
            sheet,
            failure: None,
        }
    }
}

/// Reads a network document; `-` is standard input.
pub fn load(path: &Path) -> Result<Network> {
    let mut text = String::new();
    let read = if path == Path::new("-") {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    read.map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    parse_network(&text)
}

/// Accepts `p/q`, integers and plain decimals such as `19.5`.
pub fn parse_value(s: &str) -> std::result::Result<Rational, String> {
    let t = s.trim();
    let text = match t.split_once('.') {
        Some((whole, frac)) if !t.contains('/') => {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(format!("bad number {s:?}"));
            }
            format!("{whole}{frac}/1{}", "0".repeat(frac.len()))
        }
        _ => t.to_string(),
    };
    parse_rational(&text).map_err(|_| format!("bad number {s:?}"))
}

fn names(net: &Network, vs: &[spg_core::NodeId]) -> String {
    let v: Vec<&str> = vs.iter().map(|&v| net.name(v)).collect();
    format!("{{{}}}", v.join(", "))
}

pub fn validate(net: &Network) -> Result<Report> {
    let mut s = Sheet::new(&["record", "id", "detail"]);
    let kind = net.kind();
    s.row(vec!["kind".into(), Cell::Empty, kind.to_string().into()]);
    s.row(vec!["nodes".into(), Cell::Empty, net.len().into()]);
    s.row(vec!["arcs".into(), Cell::Empty, net.arcs().len().into()]);
    for src in net.sources() {
        s.row(vec![
            "source".into(),
            net.name(src.node).into(),
            format!("cost {}", format_rational(&src.cost)).into(),
        ]);
    }
    for t in net.sinks() {
        s.row(vec![
            "sink".into(),
            net.name(t.node).into(),
            format!(
                "demand {} slope {}",
                format_rational(&t.demand),
                format_rational(&t.slope)
            )
            .into(),
        ]);
    }
    if matches!(kind, Kind::Smspg | Kind::Msspg) {
        s.note("single_terminal", false);
        return Ok(s.into());
    }
    let dec = decompose(net)?;
    let shortcuts = find_shortcuts(&dec);
    for (e, dominated) in &shortcuts {
        let d: Vec<String> = dominated.iter().map(|&x| net.edge_name(x)).collect();
        s.row(vec![
            "shortcut".into(),
            net.edge_name(*e).into(),
            format!("dominates {}", d.join(" ")).into(),
        ]);
    }
    let (reduced, removal) = remove_dominated_paths(net)?;
    for (a, b) in &removal.removed_arcs {
        s.row(vec![
            "removed".into(),
            format!("{a}->{b}").into(),
            "arc".into(),
        ]);
    }
    for v in &removal.removed_nodes {
        s.row(vec!["removed".into(), v.clone().into(), "node".into()]);
    }
    let ms = merge_sets_with(&reduced, &decompose(&reduced)?);
    let cases = classify_arcs(&reduced, &ms)?;
    for &v in reduced.topo_order() {
        if reduced.is_sink(v) {
            continue;
        }
        s.row(vec![
            "merge".into(),
            reduced.name(v).into(),
            format!(
                "C_S={} C_P={}",
                names(&reduced, ms.self_merging(v)),
                names(&reduced, ms.parent_merging(v))
            )
            .into(),
        ]);
    }
    for (&e, case) in reduced.arcs().iter().zip(&cases) {
        s.row(vec![
            "arc".into(),
            reduced.edge_name(e).into(),
            case.to_string().into(),
        ]);
    }
    s.note("series_parallel", true);
    s.note("shortcut_free", shortcuts.is_empty());
    Ok(s.into())
}

fn equilibrium_sheet(
    input: &Network,
    solved: &Network,
    eq: &Equilibrium,
    inflow: &Rational,
) -> Sheet {
    let mut s = Sheet::new(&["record", "id", "flow", "throughput", "price", "active"]);
    let zero = || Cell::Rat(Rational::from(0));
    for &e in input.arcs() {
        let found = match (
            solved.id(input.name(e.seller)),
            solved.id(input.name(e.buyer)),
        ) {
            (Some(a), Some(b)) => eq.flow_on(solved, Edge::new(a, b)),
            _ => None,
        };
        let (flow, active) = match found {
            Some(x) => (Cell::from(x), x.is_positive()),
            None => (zero(), false),
        };
        s.row(vec![
            "arc".into(),
            input.edge_name(e).into(),
            flow,
            Cell::Empty,
            Cell::Empty,
            active.into(),
        ]);
    }
    for v in input.nodes() {
        let name = input.name(v);
        let row = match solved.id(name) {
            Some(w) => vec![
                Cell::from(&eq.throughput[w.0]),
                Cell::from(&eq.price[w.0]),
                eq.throughput[w.0].is_positive().into(),
            ],
            None => vec![zero(), Cell::Empty, false.into()],
        };
        let mut cells = vec!["node".into(), name.into(), Cell::Empty];
        cells.extend(row);
        s.row(cells);
    }
    s.note("inflow", inflow);
    s
}

/// `s -> v -> {t1, t2}`, the shape of the two-market analysis.
fn two_market_shape(net: &Network) -> Option<TwoMarketScenario> {
    let [t1, t2] = net.sinks() else { return None };
    let src = net.source().ok()?;
    let [v] = net.buyers(src.node) else {
        return None;
    };
    let mut buyers = net.buyers(*v).to_vec();
    buyers.sort();
    let mut markets = vec![t1.node, t2.node];
    markets.sort();
    if net.len() != 4 || buyers != markets {
        return None;
    }
    let (hi, lo) = if t1.demand >= t2.demand {
        (t1, t2)
    } else {
        (t2, t1)
    };
    TwoMarketScenario::new(
        src.cost.clone(),
        hi.demand.clone(),
        hi.slope.clone(),
        lo.demand.clone(),
        lo.slope.clone(),
    )
    .ok()
}

pub fn solve_network(net: &Network) -> Result<Report> {
    match net.kind() {
        Kind::Msspg => Err(Error::Infeasible(
            "several sources: a pure equilibrium need not exist (see `spgeq demo msspg`)".into(),
        )),
        Kind::Smspg => {
            let first = &net.sinks()[0];
            let uniform = net
                .sinks()
                .iter()
                .all(|t| t.demand == first.demand && t.slope == first.slope);
            if !uniform {
                if let Some(sc) = two_market_shape(net) {
                    return Ok(two_market_sheet(&sc).into());
                }
            }
            let sol = smspg_equal_demand_solve(net)?;
            Ok(equilibrium_sheet(net, &sol.network, &sol.equilibrium, &sol.schedule.inflow).into())
        }
        Kind::Spg | Kind::Dag => {
            let sol = solve(net)?;
            Ok(equilibrium_sheet(net, &sol.network, &sol.equilibrium, &sol.schedule.inflow).into())
        }
    }
}

pub fn analyze_network(net: &Network) -> Result<Report> {
    let sol = solve(net)?;
    let r = analyze(&sol)?;
    let n = &sol.network;
    let mut s = Sheet::new(&["record", "id", "value", "bound", "holds"]);
    let row = |s: &mut Sheet, rec: &str, id: &str, v: &Rational| {
        s.row(vec![
            rec.into(),
            id.into(),
            v.into(),
            Cell::Empty,
            Cell::Empty,
        ]);
    };
    for v in n.nodes() {
        if let Some(u) = r.utility.get(&v) {
            row(&mut s, "utility", n.name(v), u);
        }
    }
    row(
        &mut s,
        "source_price",
        n.name(n.source()?.node),
        &r.source_price,
    );
    row(&mut s, "inflow", n.name(n.source()?.node), &r.inflow);
    row(&mut s, "lambda", "", &r.lambda);
    row(
        &mut s,
        "welfare",
        "consumer_surplus",
        &r.welfare.consumer_surplus,
    );
    row(&mut s, "welfare", "by_sum", &r.welfare.by_sum);
    row(&mut s, "welfare", "by_flow", &r.welfare.by_flow);
    row(&mut s, "welfare", "by_lambda", &r.welfare.by_lambda);
    let mut failed = Vec::new();
    for d in &r.double_utility {
        let children: Vec<&str> = d.children.iter().map(|&c| n.name(c)).collect();
        let id = format!("{} over {}", n.name(d.parent), children.join("+"));
        if !d.holds {
            failed.push(id.clone());
        }
        s.row(vec![
            "double_utility".into(),
            id.into(),
            (&d.upper).into(),
            (Rational::from(2) * &d.lower).into(),
            d.holds.into(),
        ]);
    }
    Ok(Report {
        sheet: s,
        failure: (!failed.is_empty())
            .then(|| format!("double-utility bound fails for {}", failed.join(", "))),
    })
}

pub fn swap(net: &Network, at: &str) -> Result<Report> {
    let sol = solve(net)?;
    let v = sol.network.node(at)?;
    let k = sol.decomposition.series_at(v).ok_or_else(|| {
        Error::BadParameter(format!("{at} is not the junction of a series composition"))
    })?;
    let swapped = swap_series(&sol.network, &sol.decomposition, k)?;
    let other = solve(&swapped)?;
    let (r1, r2) = (analyze(&sol)?, analyze(&other)?);
    let source = sol.network.source()?.node;
    let source2 = other.network.source()?.node;
    let mut s = Sheet::new(&["record", "id", "original", "swapped", "equal"]);
    let mut differ = Vec::new();
    let invariants = [
        ("lambda", &r1.lambda, &r2.lambda),
        ("inflow", &r1.inflow, &r2.inflow),
        ("welfare", &r1.welfare.by_sum, &r2.welfare.by_sum),
        (
            "source_utility",
            &r1.utility[&source],
            &r2.utility[&source2],
        ),
    ];
    for (name, a, b) in invariants {
        if a != b {
            differ.push(name);
        }
        s.row(vec![
            "invariant".into(),
            name.into(),
            a.into(),
            b.into(),
            (a == b).into(),
        ]);
    }
    for v in sol.network.nodes() {
        let Some(a) = r1.utility.get(&v) else {
            continue;
        };
        let name = sol.network.name(v);
        let b = other.network.id(name).and_then(|w| r2.utility.get(&w));
        let (cell, eq) = match b {
            Some(b) => (Cell::from(b), a == b),
            None => (Cell::Empty, false),
        };
        s.row(vec![
            "utility".into(),
            name.into(),
            a.into(),
            cell,
            eq.into(),
        ]);
    }
    Ok(Report {
        sheet: s,
        failure: (!differ.is_empty()).then(|| format!("swap changed {}", differ.join(", "))),
    })
}

pub fn sweep(
    net: &Network,
    parameter: SweepParameter,
    from: &Rational,
    to: &Rational,
    step: &Rational,
) -> Result<Report> {
    if !step.is_positive() {
        return Err(Error::BadParameter("sweep step must be positive".into()));
    }
    let mut values = Vec::new();
    let mut x = from.clone();
    while x <= *to {
        values.push(x.clone());
        x += step;
    }
    let sw = demand_sweep(net, parameter, &values)?;
    let label = match parameter {
        SweepParameter::Demand => "demand",
        SweepParameter::Cost => "cost",
    };
    let firms: Vec<String> = sw
        .rows
        .first()
        .map(|r| r.utility.keys().cloned().collect())
        .unwrap_or_default();
    let mut columns = vec![label.to_string(), "inflow".into(), "welfare".into()];
    columns.extend(firms.iter().map(|f| format!("utility:{f}")));
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut s = Sheet::new(&columns);
    for r in &sw.rows {
        let mut cells = vec![
            Cell::from(&r.value),
            Cell::from(&r.inflow),
            Cell::from(&r.welfare),
        ];
        cells.extend(
            firms
                .iter()
                .map(|f| r.utility.get(f).map_or(Cell::Empty, Cell::from)),
        );
        s.row(cells);
    }
    s.note("monotone", sw.is_monotone());
    let failure = (!sw.is_monotone()).then(|| {
        let v: Vec<String> = sw
            .violations
            .iter()
            .map(|(i, q)| format!("{q} at row {i}"))
            .collect();
        format!("monotonicity fails: {}", v.join(", "))
    });
    Ok(Report { sheet: s, failure })
}

pub fn oracle(seed: u64, count: usize, budget: usize) -> Result<Report> {
    let report = run_property_suite(seed, count, budget)?;
    let mut s = Sheet::new(&["check", "passed", "failed"]);
    for c in &report.checks {
        s.row(vec![c.name.into(), c.passed.into(), c.failed.into()]);
    }
    s.note("networks", report.networks);
    for f in &report.failures {
        eprintln!("{f}");
    }
    Ok(Report {
        sheet: s,
        failure: (!report.is_clean()).then(|| format!("{} oracle failures", report.failures.len())),
    })
}

pub fn two_market_sheet(sc: &TwoMarketScenario) -> Sheet {
    let out = two_market_analyze(sc);
    let mut s = Sheet::new(&[
        "strategy",
        "flow",
        "price",
        "source_utility",
        "intermediary_utility",
        "consumer_surplus",
        "welfare",
        "x1",
        "x2",
        "feasible",
    ]);
    for (name, b) in [("high", &out.high), ("low", &out.low)] {
        s.row(vec![
            name.into(),
            (&b.flow).into(),
            (&b.price).into(),
            (&b.source_utility).into(),
            (&b.intermediary_utility).into(),
            (&b.consumer_surplus).into(),
            (&b.welfare).into(),
            (&b.market_flows.0).into(),
            (&b.market_flows.1).into(),
            b.feasible.into(),
        ]);
    }
    let chosen = match out.preferred {
        Preference::Low => &out.low,
        _ => &out.high,
    };
    s.note("preferred", out.preferred.to_string());
    s.note("source_utility", to_f64(&chosen.source_utility));
    s.note("multiple_equilibria", out.multiple_equilibria);
    s.note("indifference_demand", out.indifference_demand);
    s
}

/// `a1=lo:hi:step`.
pub fn parse_sweep(spec: &str) -> Result<[Rational; 3]> {
    let bad = || Error::BadParameter(format!("sweep {spec:?} is not a1=lo:hi:step"));
    let range = spec.strip_prefix("a1=").ok_or_else(bad)?;
    let parts: Vec<Rational> = range
        .split(':')
        .map(parse_value)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    parts.try_into().map_err(|_| bad())
}

pub fn two_market(sc: &TwoMarketScenario, sweep: Option<&str>) -> Result<Report> {
    let Some(spec) = sweep else {
        return Ok(two_market_sheet(sc).into());
    };
    let [lo, hi, step] = parse_sweep(spec)?;
    let grid = demand_grid(sc, &lo, &hi, &step)?;
    let mut s = Sheet::new(&[
        "a1",
        "preferred",
        "high_utility",
        "low_utility",
        "low_feasible",
        "high_welfare",
        "low_welfare",
        "multiple_equilibria",
    ]);
    for (a1, o) in &grid {
        s.row(vec![
            a1.into(),
            o.preferred.to_string().into(),
            (&o.high.source_utility).into(),
            (&o.low.source_utility).into(),
            o.low.feasible.into(),
            (&o.high.welfare).into(),
            (&o.low.welfare).into(),
            o.multiple_equilibria.into(),
        ]);
    }
    if let Some((_, o)) = grid.first() {
        s.note("indifference_demand", o.indifference_demand);
    }
    Ok(s.into())
}

pub fn demo_msspg(start: &Rational, epsilon: &Rational, rounds: usize) -> Result<Report> {
    let game = MsspgGame::default();
    let trace = msspg_nonexistence_demo(&game, [start.clone(), start.clone()], epsilon, rounds)?;
    let mut s = Sheet::new(&[
        "step",
        "p1",
        "p2",
        "responder",
        "to",
        "utility_before",
        "utility_after",
    ]);
    for (i, st) in trace.steps.iter().enumerate() {
        let mut cells = vec![i.into(), (&st.profile[0]).into(), (&st.profile[1]).into()];
        match &st.witness {
            Some(w) => cells.extend([
                format!("s{}", w.firm + 1).into(),
                (&w.to).into(),
                (&w.utility_before).into(),
                (&w.utility_after).into(),
            ]),
            None => cells.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]),
        }
        s.row(cells);
    }
    s.note("epsilon", &trace.epsilon);
    s.note("strictly_decreasing", trace.strictly_decreasing());
    s.note(
        "every_profile_has_deviation",
        trace.every_profile_has_deviation(),
    );
    s.note("reached_boundary", trace.reached_boundary);
    s.note("degenerate", trace.degenerate);
    Ok(s.into())
}

pub fn demo_dag() -> Result<Report> {
    let r = dag_example_check()?;
    let mut s = Sheet::new(&["record", "id", "value"]);
    for (id, v) in ["only_a", "only_b", "both"].iter().zip(&r.case_utilities) {
        s.row(vec!["case_utility".into(), (*id).into(), v.into()]);
    }
    for (id, v) in ["s->a", "b->c", "b->d"].iter().zip(&r.flows) {
        s.row(vec!["flow".into(), (*id).into(), v.into()]);
    }
    for (id, v) in ["s->a", "s->b", "a->c", "b->d"].iter().zip(&r.prices) {
        s.row(vec!["price".into(), (*id).into(), v.into()]);
    }
    for (firm, br) in &r.firm_checks {
        s.row(vec![
            "best_response_gain".into(),
            firm.clone().into(),
            (&br.gain).into(),
        ]);
    }
    let c = &r.competition;
    s.row(vec![
        "competition".into(),
        "current".into(),
        (&c.current).into(),
    ]);
    s.row(vec!["competition".into(), "best".into(), (&c.best).into()]);
    s.row(vec!["competition".into(), "gain".into(), (&c.gain).into()]);
    for (id, v) in ["p_bc", "q_bc", "p_bd", "q_bd"].iter().zip(&c.best_offer) {
        s.row(vec!["competition_offer".into(), (*id).into(), v.into()]);
    }
    s.note("active_is_spg", r.active_is_spg);
    s.note("no_improving_deviation", r.no_improving_deviation());
    Ok(s.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use spg_core::rational::rat;

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!(parse_value("19.5").unwrap(), rat(39, 2));
        assert_eq!(parse_value("-0.25").unwrap(), rat(-1, 4));
        assert_eq!(parse_value("3/2").unwrap(), rat(3, 2));
        assert!(parse_value("1.").is_err());
        assert!(parse_value("x").is_err());
    }

    #[test]
    fn sweep_spec() {
        let [lo, hi, step] = parse_sweep("a1=12:22:1/2").unwrap();
        assert_eq!((lo, hi, step), (rat(12, 1), rat(22, 1), rat(1, 2)));
        assert!(parse_sweep("a2=1:2:1").is_err());
        assert!(parse_sweep("a1=1:2").is_err());
    }
}
