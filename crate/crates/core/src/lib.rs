//! Sojourn times and pure-threshold join/balk equilibria for a two-node
//! tandem queue whose arrivals observe only the total number of customers.
//!
//! * [`sojourn`]: full-information mean sojourn tables `T1, T2, T`.
//! * [`partial`]: product-form law under a threshold population and the
//!   conditional sojourn means given the total occupancy.
//! * [`equilibrium`]: profit profile and equilibrium threshold.
//! * [`sim`]: event simulation and linear-solve oracles.
//! * [`validate`]: cross-oracle check suite used by the CLI.

pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod partial;
pub mod sim;
pub mod sojourn;
pub mod validate;

pub use equilibrium::{find_threshold, monotone_conditions, profit, Outcome, ThresholdResult};
pub use error::{Error, Result};
pub use model::{validate, viability, ModelParams, ValidationReport};
pub use partial::{conditional_dist, lr_order_check, stationary_law, t1_cond, t2_cond, t_cond, Node};
pub use sim::{simulate, solve_steady_state, SimConfig, SimEstimate};
pub use sojourn::{build_table, check_monotonicity, delta1_t2_row0, SojournTable};
