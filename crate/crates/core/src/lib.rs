//! Equilibria of sequential supply-chain games on series-parallel networks.
//!
//! A source produces at unit cost `a_s`, intermediaries buy and resell, and a
//! market at the sink pays `a_t - b_t X_t`. On series-parallel networks the
//! subgame-perfect equilibrium is unique and computable in two passes: a backward
//! pass building linear price functions ([`pricing`]) and a forward pass
//! distributing the source's output ([`flow`]).
//!
//! ```
//! use spg_core::{catalog, flow::solve, rational::rat};
//!
//! let net = catalog::two_level();
//! let sol = solve(&net).unwrap();
//! assert_eq!(sol.schedule.inflow, rat(4, 23));
//! assert_eq!(sol.equilibrium.x(&net, "s", "j1").unwrap(), rat(5, 46));
//! ```

pub mod analysis;
pub mod catalog;
pub mod error;
pub mod extensions;
pub mod flow;
pub mod network;
pub mod oracle;
pub mod pricing;
pub mod rational;

pub use error::{Error, ErrorClass, Result};
pub use flow::{solve, Equilibrium, Solution};
pub use network::{parse_network, Edge, Network, NodeId};
pub use pricing::PriceSchedule;
pub use rational::Rational;
