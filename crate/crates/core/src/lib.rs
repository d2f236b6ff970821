//! Externalities of an FCFS M/G/1 queue: the law of the busy-period
//! customer count, closed-form moments and transforms of `E_v(x)`, crossing
//! times of its derivative process, Gaussian limits, and an exact pathwise
//! simulator to check all of them against.
//!
//! The closed-form kernels are generic over [`Scalar`]; the aliases below
//! fix the common instantiations.

pub mod analytics;
pub mod busy_period;
pub mod crossing;
pub mod distributions;
pub mod error;
pub mod fclt;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod stats;

pub use busy_period::{count_lst, count_pmf, BusyPeriodLaw, PmfOptions};
pub use distributions::{InitialWorkload, ModelParams, ServiceDistribution, WorkloadLaw};
pub use error::{Error, Result};
pub use rng::RngStream;
pub use scalar::{ratio, Rational, Real, Scalar};

pub use analytics::SecondOrderModel;

/// Service law with exact rational parameters.
pub type ExactDistribution = ServiceDistribution<Rational>;
/// Second-order model evaluated in exact arithmetic.
pub type ExactSecondOrderModel = SecondOrderModel<Rational>;
pub type ServiceDistributionF32 = ServiceDistribution<f32>;
pub type BusyPeriodLawF32 = BusyPeriodLaw<f32>;
pub type SecondOrderModelF32 = SecondOrderModel<f32>;

/// Crate version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
