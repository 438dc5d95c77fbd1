use malachite::num::basic::traits::Zero;

use crate::analysis::node_utilities;
use crate::catalog;
use crate::error::{Error, Result};
use crate::flow::{solve, Solution};
use crate::network::{decompose, find_shortcuts, Network};
use crate::oracle::{best_response_check, solve_linear, BestResponse, DeviationGrid};
use crate::rational::{int, rat, Rational, Signs};

/// Outcome of the general-DAG example `s -> {a, b}`, `a -> c`, `b -> {c, d}`,
/// `{c, d} -> t` with `a_s = 1`, `p_t = 11 - X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagReport {
    /// Π_s when only `a` trades, only `b` trades, and `a` and `b -> d` trade.
    pub case_utilities: [Rational; 3],
    /// (x, y, z) on s->a, b->c, b->d at the equilibrium.
    pub flows: [Rational; 3],
    /// (p_sa, p_sb, p_ac, p_bd).
    pub prices: [Rational; 4],
    /// Active arcs form a shortcut-free SPG.
    pub active_is_spg: bool,
    /// Best responses of every firm on the active network.
    pub firm_checks: Vec<(String, BestResponse)>,
    pub competition: CompetitionCheck,
}

impl DagReport {
    pub fn no_improving_deviation(&self) -> bool {
        self.firm_checks.iter().all(|(_, b)| !b.improves()) && !self.competition.gain.is_positive()
    }
}

/// Whether `b` gains by offering goods to `c` against `a`'s offer of one unit at 8.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompetitionCheck {
    pub current: Rational,
    pub best: Rational,
    pub gain: Rational,
    /// (p_bc, q_bc, p_bd, q_bd) of the best offer found.
    pub best_offer: [Rational; 4],
    pub tried: usize,
}

fn case(net: &Network, arcs: &[(&str, &str)]) -> Result<Solution> {
    let keep: Vec<_> = arcs
        .iter()
        .map(|(a, b)| net.edge(a, b))
        .collect::<Result<_>>()?;
    let (sub, _) = net.restrict(|e| keep.contains(&e))?;
    solve(&sub)
}

fn source_utility(sol: &Solution) -> Result<Rational> {
    let u = node_utilities(&sol.network, &sol.merge, &sol.schedule, &sol.equilibrium)?;
    Ok(u[&sol.network.source()?.node].clone())
}

pub fn dag_example_check() -> Result<DagReport> {
    let net = catalog::crossed_dag();
    let only_a = case(&net, &[("s", "a"), ("a", "c"), ("c", "t")])?;
    let only_b = case(
        &net,
        &[("s", "b"), ("b", "c"), ("b", "d"), ("c", "t"), ("d", "t")],
    )?;
    let both = case(
        &net,
        &[
            ("s", "a"),
            ("s", "b"),
            ("a", "c"),
            ("b", "d"),
            ("c", "t"),
            ("d", "t"),
        ],
    )?;
    let case_utilities = [
        source_utility(&only_a)?,
        source_utility(&only_b)?,
        source_utility(&both)?,
    ];
    if case_utilities[2] <= case_utilities[0] || case_utilities[2] <= case_utilities[1] {
        return Err(Error::Invariant(
            "the two-path case is not the source's best".into(),
        ));
    }
    let eq = &both.equilibrium;
    let sub = &both.network;
    let flows = [eq.x(sub, "s", "a")?, Rational::ZERO, eq.x(sub, "b", "d")?];
    let price = |v: &str| {
        eq.price_of(sub, v)
            .cloned()
            .ok_or_else(|| Error::UnknownNode(v.into()))
    };
    let prices = [price("a")?, price("b")?, price("c")?, price("d")?];
    let active_is_spg = decompose(sub)
        .map(|d| find_shortcuts(&d).is_empty())
        .unwrap_or(false);
    let grid = DeviationGrid::default();
    let firm_checks = sub
        .nodes()
        .filter(|&v| !sub.is_sink(v))
        .map(|v| {
            Ok((
                sub.name(v).to_string(),
                best_response_check(&both, v, None, &grid)?,
            ))
        })
        .collect::<Result<_>>()?;
    let competition = competition_check(&prices, &flows)?;
    Ok(DagReport {
        case_utilities,
        flows,
        prices,
        active_is_spg,
        firm_checks,
        competition,
    })
}

/// Purchases (u, y, z): `c` takes u from `a` and y from `b`, `d` takes z from `b`,
/// with `c` and `d` competing à la Cournot on `p_t = 11 - (u + y) - z`.
fn downstream(
    a_offer: (&Rational, &Rational),
    bc: (&Rational, &Rational),
    bd: (&Rational, &Rational),
) -> Option<[Rational; 3]> {
    let demand = int(11);
    let caps = [a_offer.1, bc.1, bd.1];
    let costs = [a_offer.0, bc.0, bd.0];
    // Marginal value of each purchase: 11 - 2X_c - X_d for c's, 11 - X_c - 2z for d's.
    let coef = [
        [int(2), int(2), int(1)],
        [int(2), int(2), int(1)],
        [int(1), int(1), int(2)],
    ];
    for code in 0..27usize {
        let regime = [code % 3, code / 3 % 3, code / 9];
        let interior: Vec<usize> = (0..3).filter(|&k| regime[k] == 1).collect();
        let mut q: [Rational; 3] = std::array::from_fn(|k| {
            if regime[k] == 2 {
                caps[k].clone()
            } else {
                Rational::ZERO
            }
        });
        if !interior.is_empty() {
            let a = interior
                .iter()
                .map(|&r| interior.iter().map(|&c| coef[r][c].clone()).collect())
                .collect();
            let b = interior
                .iter()
                .map(|&r| {
                    let fixed: Rational = (0..3)
                        .filter(|&k| regime[k] == 2)
                        .map(|k| &coef[r][k] * &q[k])
                        .sum();
                    &demand - costs[r] - fixed
                })
                .collect();
            let Some(sol) = solve_linear(a, b) else {
                continue;
            };
            for (i, &k) in interior.iter().enumerate() {
                q[k] = sol[i].clone();
            }
        }
        let ok = (0..3).all(|k| {
            let marginal =
                &demand - costs[k] - (0..3).map(|m| &coef[k][m] * &q[m]).sum::<Rational>();
            match regime[k] {
                0 => !marginal.is_positive(),
                1 => !q[k].is_negative() && q[k] <= *caps[k],
                _ => !marginal.is_negative(),
            }
        });
        if ok {
            return Some(q);
        }
    }
    None
}

fn competition_check(prices: &[Rational; 4], flows: &[Rational; 3]) -> Result<CompetitionCheck> {
    let (p_sb, p_ac, p_bd) = (&prices[1], &prices[2], &prices[3]);
    let held = flows[2].clone();
    let a_offer = (p_ac, &flows[0]);
    let value = |p_bc: &Rational, q_bc: &Rational, p_bd: &Rational, q_bd: &Rational| {
        downstream(a_offer, (p_bc, q_bc), (p_bd, q_bd))
            .map(|q| p_bc * &q[1] + p_bd * &q[2] - p_sb * &held)
    };
    let current = value(p_ac, &Rational::ZERO, p_bd, &held).ok_or_else(|| {
        Error::Invariant("no downstream response to the equilibrium offers".into())
    })?;
    let mut best = current.clone();
    let mut best_offer = [Rational::ZERO, Rational::ZERO, p_bd.clone(), held.clone()];
    let mut tried = 0usize;
    let price_grid: Vec<Rational> = (8..=44).map(|k| rat(k, 4)).collect();
    let quarters: Vec<Rational> = (0..=4).map(|k| &held * rat(k, 4)).collect();
    for q_bc in &quarters {
        for q_bd in &quarters {
            if q_bc + q_bd > held {
                continue;
            }
            for p_bc in &price_grid {
                for p_bd in &price_grid {
                    tried += 1;
                    if let Some(v) = value(p_bc, q_bc, p_bd, q_bd) {
                        if v > best {
                            best = v;
                            best_offer = [p_bc.clone(), q_bc.clone(), p_bd.clone(), q_bd.clone()];
                        }
                    }
                }
            }
        }
    }
    Ok(CompetitionCheck {
        gain: &best - &current,
        current,
        best,
        best_offer,
        tried,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_the_cases_and_prices() {
        let r = dag_example_check().unwrap();
        assert_eq!(r.case_utilities, [rat(25, 4), rat(25, 3), int(10)]);
        assert_eq!(r.flows, [int(1), int(0), int(1)]);
        assert_eq!(r.prices, [int(6), int(6), int(8), int(8)]);
        assert!(r.active_is_spg);
    }

    #[test]
    fn b_gains_by_splitting_between_c_and_d() {
        let r = dag_example_check().unwrap();
        assert_eq!(r.competition.current, int(2));
        // With c buying from a at 8 and both of b's offers taken in full, c's total is
        // (3 - z)/2, d pays at most 19/2 - 3z/2 and c at most 8, so b earns
        // 8(1 - z) + (19/2 - 3z/2) z - 6, maximal at z = 1/2 with 19/8.
        let closed =
            |z: Rational| int(8) * (int(1) - &z) + (rat(19, 2) - rat(3, 2) * &z) * &z - int(6);
        let sup = closed(rat(1, 2));
        assert_eq!(sup, rat(19, 8));
        for k in 0..=4 {
            assert!(closed(rat(k, 4)) <= sup);
        }
        assert!(r.competition.best <= sup);
        assert_eq!(r.competition.best, rat(9, 4));
        assert_eq!(
            r.competition.best_offer,
            [rat(31, 4), rat(1, 2), rat(35, 4), rat(1, 2)]
        );
        assert!(!r.no_improving_deviation());
    }

    #[test]
    fn no_gain_within_the_active_network() {
        let r = dag_example_check().unwrap();
        assert!(r.firm_checks.iter().all(|(_, b)| !b.improves()));
    }

    #[test]
    fn cournot_at_equilibrium_offers() {
        let q = downstream((&int(8), &int(1)), (&int(9), &int(0)), (&int(8), &int(1))).unwrap();
        assert_eq!(q, [int(1), int(0), int(1)]);
    }
}
