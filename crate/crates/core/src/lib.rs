//! Scenario parameterization, weighted SVD reduction, KDE sampling and
//! Wasserstein-based representativeness metrics for driving scenarios.

pub mod baselines;
pub mod error;
pub mod experiments;
pub mod io;
pub mod kde;
pub mod ot;
pub mod rng;
pub mod scenario;
pub mod svd;
pub mod synth;

pub use error::{Error, Result};
pub use kde::KdeModel;
pub use ot::{MetricReport, TransportPlan};
pub use scenario::{
    Category, Dataset, Interpolation, Layout, ParameterVector, Scenario, WeightGroups, WeightVector,
    ZeroVariancePolicy,
};
pub use svd::{ReducedBasis, ReducedCoordinates};
