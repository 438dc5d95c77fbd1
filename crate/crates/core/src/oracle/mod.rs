//! Brute-force certification: per-firm LCP solving by active-set enumeration,
//! best-response search, and a random SPG generator for property tests.

mod best_response;
mod generate;
mod lcp;
mod linalg;
mod suite;

pub use best_response::{best_response_check, BestResponse, DeviationGrid, Offer, Strategy};
pub use generate::{generate_spg, RandomSpgSpec};
pub use lcp::{lcp_solve, Allocation, SmAllocationProblem};
pub use linalg::solve_linear;
pub use suite::{run_property_suite, CheckTally, SuiteReport, CHECKS, SWAP_INSTANCES};
