use malachite::num::basic::traits::{One, Two, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rational::{half, rat, to_f64, Rational, Signs};

/// `s -> v -> {t1, t2}` with markets `p_k = a_k - b_k x_k` and `a_1 ≥ a_2 > a_s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoMarketScenario {
    pub cost: Rational,
    pub a1: Rational,
    pub b1: Rational,
    pub a2: Rational,
    pub b2: Rational,
}

impl TwoMarketScenario {
    pub fn new(
        cost: Rational,
        a1: Rational,
        b1: Rational,
        a2: Rational,
        b2: Rational,
    ) -> Result<Self> {
        if !b1.is_positive() || !b2.is_positive() {
            return Err(Error::BadParameter("market slopes must be positive".into()));
        }
        if a2 <= cost {
            return Err(Error::Infeasible("a_2 must exceed the cost a_s".into()));
        }
        if a1 < a2 {
            return Err(Error::BadParameter(
                "markets must be ordered with a_1 ≥ a_2".into(),
            ));
        }
        Ok(TwoMarketScenario {
            cost,
            a1,
            b1,
            a2,
            b2,
        })
    }

    /// `B = 1 / (1/b_1 + 1/b_2)`.
    pub fn harmonic(&self) -> Rational {
        Rational::ONE / (Rational::ONE / &self.b1 + Rational::ONE / &self.b2)
    }

    /// `Δ = (a_2 - a_s) / (4 b_2)`, the flow gap between the strategies.
    pub fn delta(&self) -> Rational {
        (&self.a2 - &self.cost) / (Rational::from(4) * &self.b2)
    }
}

/// One strategy of the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    /// X_v.
    pub flow: Rational,
    /// Price v pays, p_v.
    pub price: Rational,
    pub source_utility: Rational,
    pub intermediary_utility: Rational,
    pub consumer_surplus: Rational,
    pub welfare: Rational,
    /// (x_1, x_2).
    pub market_flows: (Rational, Rational),
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preference {
    High,
    Low,
    /// Both strategies give the source the same utility.
    Either,
}

impl std::fmt::Display for Preference {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Preference::High => "high",
            Preference::Low => "low",
            Preference::Either => "either",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutcome {
    pub high: Branch,
    pub low: Branch,
    pub preferred: Preference,
    pub multiple_equilibria: bool,
    /// a_1* for this cost, a_2, b_1, b_2.
    pub indifference_demand: f64,
}

/// Only market 1 served: `X = (a_1 - a_s) / (4 b_1)`.
pub fn high_branch(sc: &TwoMarketScenario) -> Branch {
    let four = Rational::from(4);
    let margin = &sc.a1 - &sc.cost;
    let flow = &margin / (&four * &sc.b1);
    let price = &sc.a1 - Rational::TWO * &sc.b1 * &flow;
    let v = &sc.b1 * &flow * &flow;
    Branch {
        source_utility: &margin * &margin / (Rational::from(8) * &sc.b1),
        intermediary_utility: v.clone(),
        consumer_surplus: half() * &v,
        welfare: Rational::from(7) * &margin * &margin / (Rational::from(32) * &sc.b1),
        market_flows: (flow.clone(), Rational::ZERO),
        // v keeps market 2 dark only while its marginal revenue from market 1 is at least a_2.
        feasible: price >= sc.a2,
        flow,
        price,
    }
}

/// Both markets served: `X = ((a_1/b_1 + a_2/b_2) B - a_s) / (4B)`.
pub fn low_branch(sc: &TwoMarketScenario) -> Branch {
    let two = Rational::TWO;
    let big_b = sc.harmonic();
    let flow =
        ((&sc.a1 / &sc.b1 + &sc.a2 / &sc.b2) * &big_b - &sc.cost) / (Rational::from(4) * &big_b);
    let denom = &two * &sc.b1 + &two * &sc.b2;
    let x1 = (&sc.a1 - &sc.a2 + &two * &sc.b2 * &flow) / &denom;
    let x2 = (&two * &sc.b1 * &flow - &sc.a1 + &sc.a2) / &denom;
    let price = &sc.a1 - &two * &sc.b1 * &x1;
    let v = &sc.b1 * &x1 * &x1 + &sc.b2 * &x2 * &x2;
    let gap = &sc.a1 - &sc.a2;
    Branch {
        source_utility: &two * &big_b * &flow * &flow,
        intermediary_utility: v.clone(),
        consumer_surplus: half() * &v,
        welfare: Rational::from(3) * &gap * &gap / (Rational::from(8) * (&sc.b1 + &sc.b2))
            + Rational::from(7) * &big_b * &flow * &flow / &two,
        feasible: !x2.is_negative(),
        market_flows: (x1, x2),
        flow,
        price,
    }
}

/// Both strategies, the source's preference, and the indifference demand.
pub fn two_market_analyze(sc: &TwoMarketScenario) -> StrategyOutcome {
    let high = high_branch(sc);
    let low = low_branch(sc);
    let (preferred, multiple_equilibria) = match (high.feasible, low.feasible) {
        (true, false) => (Preference::High, false),
        (false, true) => (Preference::Low, false),
        (false, false) => (Preference::Low, false),
        (true, true) => match high.source_utility.cmp(&low.source_utility) {
            std::cmp::Ordering::Greater => (Preference::High, false),
            std::cmp::Ordering::Less => (Preference::Low, false),
            std::cmp::Ordering::Equal => (Preference::Either, true),
        },
    };
    StrategyOutcome {
        indifference_demand: indifference_demand(
            to_f64(&sc.cost),
            to_f64(&sc.a2),
            to_f64(&sc.b1),
            to_f64(&sc.b2),
        ),
        high,
        low,
        preferred,
        multiple_equilibria,
    }
}

/// `a_1* = a_s + 4 b_1 √b_2 Δ / (√(b_1+b_2) - √b_2)`, where the source is
/// indifferent between the strategies. For `b_1 = b_2` this is
/// `(1+√2) a_2 - √2 a_s`.
pub fn indifference_demand(cost: f64, a2: f64, b1: f64, b2: f64) -> f64 {
    let delta = (a2 - cost) / (4.0 * b2);
    let root = b2.sqrt();
    cost + 4.0 * b1 * root * delta / ((b1 + b2).sqrt() - root)
}

/// `Π_s^h - Π_s^l` as a function of a_1, in floating point.
pub fn utility_difference(cost: f64, a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
    let big_b = 1.0 / (1.0 / b1 + 1.0 / b2);
    let high = (a1 - cost).powi(2) / (8.0 * b1);
    let flow = ((a1 / b1 + a2 / b2) * big_b - cost) / (4.0 * big_b);
    high - 2.0 * big_b * flow * flow
}

/// Root of [`utility_difference`] above a_s by bisection, to `tol` absolute.
pub fn indifference_by_bisection(cost: f64, a2: f64, b1: f64, b2: f64, tol: f64) -> f64 {
    let f = |a1: f64| utility_difference(cost, a1, b1, a2, b2);
    let mut lo = a2;
    let mut hi = a2 + (a2 - cost).max(1.0);
    while f(hi) < 0.0 {
        lo = hi;
        hi = a2 + 2.0 * (hi - a2);
    }
    while hi - lo > tol * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `SW_low - SW_high = (5 b_2 (a_1-a_2)² + 7 (b_1+b_2)(a_2-a_s)²) / (32 b_2 (b_1+b_2))`.
pub fn welfare_gap(sc: &TwoMarketScenario) -> Rational {
    let gap = &sc.a1 - &sc.a2;
    let lift = &sc.a2 - &sc.cost;
    let sum = &sc.b1 + &sc.b2;
    (Rational::from(5) * &sc.b2 * &gap * &gap + Rational::from(7) * &sum * &lift * &lift)
        / (Rational::from(32) * &sc.b2 * &sum)
}

/// Random scenarios whose low strategy is feasible.
pub fn random_scenarios(seed: u64, count: usize) -> Vec<TwoMarketScenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let cost = rat(rng.random_range(0..=80), 8);
        let a2 = &cost + rat(rng.random_range(1..=80), 8);
        let a1 = &a2 + rat(rng.random_range(0..=80), 8);
        let b1 = rat(rng.random_range(1..=32), 8);
        let b2 = rat(rng.random_range(1..=32), 8);
        let sc = TwoMarketScenario {
            cost,
            a1,
            b1,
            a2,
            b2,
        };
        if low_branch(&sc).feasible {
            out.push(sc);
        }
    }
    out
}

/// Tallies of the flow and welfare comparisons over random scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceCheck {
    pub scenarios: usize,
    pub flow_violations: usize,
    pub welfare_violations: usize,
    /// Scenarios where the closed-form welfare gap differs from `SW_low - SW_high`.
    pub gap_mismatches: usize,
    /// Largest relative error of the gap formula when both sides go through `f64`.
    pub max_relative_error: f64,
}

impl DominanceCheck {
    pub fn holds(&self) -> bool {
        self.flow_violations == 0 && self.welfare_violations == 0 && self.gap_mismatches == 0
    }
}

pub fn check_low_price_dominance(seed: u64, count: usize) -> DominanceCheck {
    let mut check = DominanceCheck {
        scenarios: count,
        flow_violations: 0,
        welfare_violations: 0,
        gap_mismatches: 0,
        max_relative_error: 0.0,
    };
    for sc in random_scenarios(seed, count) {
        let high = high_branch(&sc);
        let low = low_branch(&sc);
        if low.flow < high.flow {
            check.flow_violations += 1;
        }
        if low.welfare < high.welfare {
            check.welfare_violations += 1;
        }
        let direct = &low.welfare - &high.welfare;
        let formula = welfare_gap(&sc);
        if direct != formula {
            check.gap_mismatches += 1;
        }
        let (d, f) = (to_f64(&direct), to_f64(&formula));
        let err = (d - f).abs() / f.abs().max(f64::MIN_POSITIVE);
        check.max_relative_error = check.max_relative_error.max(err);
    }
    check
}

/// Outcomes for a_1 from `lo` to `hi` in steps of `step`.
pub fn demand_grid(
    sc: &TwoMarketScenario,
    lo: &Rational,
    hi: &Rational,
    step: &Rational,
) -> Result<Vec<(Rational, StrategyOutcome)>> {
    if !step.is_positive() {
        return Err(Error::BadParameter("sweep step must be positive".into()));
    }
    let mut out = Vec::new();
    let mut a1 = lo.clone();
    while a1 <= *hi {
        let point = TwoMarketScenario::new(
            sc.cost.clone(),
            a1.clone(),
            sc.b1.clone(),
            sc.a2.clone(),
            sc.b2.clone(),
        )?;
        out.push((a1.clone(), two_market_analyze(&point)));
        a1 += step;
    }
    Ok(out)
}
