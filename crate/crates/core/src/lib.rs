//! Estimating the total variation distance between Gibbs distributions of two-spin
//! systems (hardcore and Ising models) on a common graph.
//!
//! The crate is organised bottom-up: [`graph`] and [`model`] define the systems,
//! [`exact`] enumerates them for small instances, [`sampler`] draws approximate
//! samples with Glauber dynamics, [`counter`] approximates partition functions by
//! annealing, and [`estimate`] combines them into distance estimators.
//! [`generators`] builds random and exhaustive instance families.

pub mod counter;
pub mod error;
pub mod estimate;
pub mod exact;
pub mod generators;
pub mod graph;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod sampler;

pub use counter::{approx_count, conditional_count, ratio_estimate, CountEstimate, CounterConfig};
pub use error::{Error, ErrorClass, Result};
pub use estimate::{
    dispatch_tv, plan_dispatch, Branch, ErrorKind, EstimateReport, EstimatorBudget, Mode,
};
pub use exact::{exact_marginal_tv, exact_partition, exact_tv, ExactDistribution};
pub use graph::Graph;
pub use model::{preprocess, regime_report, Preprocessed, RegimeReport};
pub use model::{
    Configuration, Field, HardcoreModel, IsingModel, ModelKind, Pinning, Spin, SpinSystem,
};
pub use rng::{rng_from_seed, SimRng};
pub use sampler::{Sampler, SamplerConfig};
