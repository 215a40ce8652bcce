//! Demand response under the indifference-set consumer model.
//!
//! Consumers are described by the set of consumption profiles they are
//! equally happy with. A price-responsive home energy-management system picks
//! the cheapest profile in that set; the grid either controls profiles
//! directly ([`direct`]) or steers them with dynamic prices ([`pricing`]).
//!
//! Module map:
//! - [`lp`]: dense simplex used by polytope sets.
//! - [`sets`]: indifference sets and their cost/argmin oracles.
//! - [`cost`]: positively homogeneous grid costs and their dual sets.
//! - [`meanfield`]: Minkowski averages, support functions, Hausdorff estimates.
//! - [`pricing`]: Frank-Wolfe price optimization and revenue scaling.
//! - [`direct`]: direct-control benchmarks and the two-period closed forms.
//! - [`scenario`]: weather/renewable series, Gaussian day sampling, populations.
//! - [`casestudy`]: day-ahead prices for a thermal neighbourhood with solar.
//! - [`format`]: line-oriented text encoding of populations and series.

pub mod casestudy;
pub mod cost;
pub mod direct;
mod error;
pub mod format;
pub mod lp;
pub mod meanfield;
pub mod pricing;
pub mod scenario;
pub mod sets;
pub(crate) mod vecops;

pub use cost::GridCostFunction;
pub use error::{Error, Result};
pub use meanfield::Population;
pub use pricing::PricingProblem;
pub use sets::{HemsResponse, IndifferenceSet};
