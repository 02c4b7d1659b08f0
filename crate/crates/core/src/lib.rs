//! The √ε outlier significance test for reversible Markov chains, exact
//! oracles for its bound, and a self-loop regularized redistricting flip
//! chain to which it applies.

pub mod chain;
pub mod districting;
pub mod error;
pub mod experiments;
pub mod rng;
pub mod significance;

pub use error::{Error, GeographyError, Result};
pub use significance::{
    count_le, ell_small_count, gillman_bound, power_lower_bound, pvalue_with_tv, run_sqrt_eps_test, sqrt_eps_pvalue,
    theorem_bound, LabeledTrajectory, OutlierReport, PowerParams,
};
