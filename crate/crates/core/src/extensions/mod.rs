//! Generalized networks: two-market strategy analysis, the equal-demand
//! multi-market solver, and the multi-source and general-DAG demos.

mod dag;
mod msspg;
mod smspg;
mod two_market;

pub use dag::{dag_example_check, CompetitionCheck, DagReport};
pub use msspg::{
    default_epsilon, msspg_nonexistence_demo, DeviationWitness, MsspgGame, MsspgTrace, TraceStep,
};
pub use smspg::{smspg_equal_demand_solve, SmspgSolution};
pub use two_market::{
    check_low_price_dominance, demand_grid, high_branch, indifference_by_bisection,
    indifference_demand, low_branch, random_scenarios, two_market_analyze, utility_difference,
    welfare_gap, Branch, DominanceCheck, Preference, StrategyOutcome, TwoMarketScenario,
};
