//! Statistical measurement and estimation of Rayleigh fading channels.
//!
//! * [`special`]: log-gamma, chi-square CDF, Poisson partial sums, normal quantile.
//! * [`planner`]: a priori and exact minimal sample sizes for relative-error targets.
//! * [`estimator`]: optimum two-power estimates of channel power, noise power
//!   and SNR, with Fisher information and Cramér-Rao bounds.
//! * [`interval`]: confidence intervals for the same quantities.
//! * [`channel`]: seeded, reproducible measurement campaigns.
//! * [`experiments`]: Monte Carlo checks of coverage, tightness and optimality.
//! * [`report`]: JSON/CSV output.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod interval;
pub mod planner;
pub mod report;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use estimator::{ChannelParams, CrbReport, PointEstimate, SampleBatch, SignalPlan};
pub use interval::ConfidenceInterval;
pub use planner::{AccuracySpec, SampleSize};
pub use special::Probability;
