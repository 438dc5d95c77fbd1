use malachite::num::basic::traits::{One, Two, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, rat, Rational, Signs};

/// Two sources of cost 1 selling to `c`, which resells at `p_t = 2 - X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MsspgGame {
    pub cost: Rational,
    pub demand: Rational,
    pub slope: Rational,
}

impl Default for MsspgGame {
    fn default() -> Self {
        MsspgGame {
            cost: Rational::ONE,
            demand: Rational::TWO,
            slope: Rational::ONE,
        }
    }
}

impl MsspgGame {
    /// What `c` buys from each source at prices `(p1, p2)`. It buys only from the
    /// cheaper one, up to `(a - p) / (2b)`; on a tie it splits equally.
    pub fn purchases(&self, p: [&Rational; 2]) -> [Rational; 2] {
        let cheaper = if p[0] <= p[1] { p[0] } else { p[1] };
        let total = (&self.demand - cheaper) / (Rational::TWO * &self.slope);
        if !total.is_positive() {
            return [Rational::ZERO, Rational::ZERO];
        }
        if p[0] == p[1] {
            let half = total / Rational::TWO;
            [half.clone(), half]
        } else if p[0] < p[1] {
            [total, Rational::ZERO]
        } else {
            [Rational::ZERO, total]
        }
    }

    pub fn utilities(&self, p: [&Rational; 2]) -> [Rational; 2] {
        let x = self.purchases(p);
        [(p[0] - &self.cost) * &x[0], (p[1] - &self.cost) * &x[1]]
    }

    /// Price maximizing a lone seller's utility.
    pub fn monopoly_price(&self) -> Rational {
        (&self.demand + &self.cost) / Rational::TWO
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationWitness {
    /// 0 for s1, 1 for s2.
    pub firm: usize,
    pub from: Rational,
    pub to: Rational,
    pub utility_before: Rational,
    pub utility_after: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    /// Prices (p_{s1 c}, p_{s2 c}) before the move.
    pub profile: [Rational; 2],
    /// A move that pays off for one seller at this profile, re-checked by direct
    /// utility comparison.
    pub witness: Option<DeviationWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MsspgTrace {
    pub epsilon: Rational,
    pub steps: Vec<TraceStep>,
    /// The trace stopped because no undercut by ε stays above cost.
    pub reached_boundary: bool,
    /// The last profile has no profitable deviation at all (both at cost).
    pub degenerate: bool,
}

impl MsspgTrace {
    /// Prices set by successive responders.
    pub fn responses(&self) -> Vec<Rational> {
        self.steps
            .iter()
            .filter_map(|s| s.witness.as_ref().map(|w| w.to.clone()))
            .collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.responses().windows(2).all(|w| w[1] < w[0])
    }

    pub fn every_profile_has_deviation(&self) -> bool {
        self.steps.iter().all(|s| {
            s.witness
                .as_ref()
                .is_some_and(|w| w.utility_after > w.utility_before)
        })
    }
}

/// Alternating best responses: the responder undercuts the other price by ε, or
/// posts the monopoly price when that is lower. When an ε undercut would reach
/// cost, the last profile is still shown to admit a smaller profitable undercut.
pub fn msspg_nonexistence_demo(
    game: &MsspgGame,
    start: [Rational; 2],
    epsilon: &Rational,
    rounds: usize,
) -> Result<MsspgTrace> {
    if !epsilon.is_positive() {
        return Err(Error::BadParameter("ε must be positive".into()));
    }
    if start.iter().any(|p| *p < game.cost) {
        return Err(Error::Infeasible(format!(
            "prices below cost {}",
            format_rational(&game.cost)
        )));
    }
    let mut profile = start;
    let mut steps = Vec::new();
    let mut responder = 1usize;
    let mut reached_boundary = false;
    let mut degenerate = false;
    for _ in 0..rounds {
        let other = profile[1 - responder].clone();
        let mono = game.monopoly_price();
        let target = if mono < other {
            Some(mono)
        } else if &other - epsilon > game.cost {
            Some(&other - epsilon)
        } else {
            None
        };
        let witness = match target {
            Some(to) => witness(game, &profile, responder, to),
            None => {
                reached_boundary = true;
                // Undercut by half the remaining margin instead.
                let margin = &other - &game.cost;
                if margin.is_positive() {
                    witness(
                        game,
                        &profile,
                        responder,
                        &game.cost + margin / Rational::TWO,
                    )
                } else {
                    degenerate = true;
                    None
                }
            }
        };
        steps.push(TraceStep {
            profile: profile.clone(),
            witness: witness.clone(),
        });
        match witness {
            Some(w) if !reached_boundary => profile[responder] = w.to,
            _ => break,
        }
        responder = 1 - responder;
    }
    Ok(MsspgTrace {
        epsilon: epsilon.clone(),
        steps,
        reached_boundary,
        degenerate,
    })
}

fn witness(
    game: &MsspgGame,
    profile: &[Rational; 2],
    firm: usize,
    to: Rational,
) -> Option<DeviationWitness> {
    let before = game.utilities([&profile[0], &profile[1]])[firm].clone();
    let mut moved = profile.clone();
    moved[firm] = to.clone();
    let after = game.utilities([&moved[0], &moved[1]])[firm].clone();
    (after > before).then(|| DeviationWitness {
        firm,
        from: profile[firm].clone(),
        to,
        utility_before: before,
        utility_after: after,
    })
}

/// ε used by the demo unless overridden.
pub fn default_epsilon() -> Rational {
    rat(1, 100)
}
