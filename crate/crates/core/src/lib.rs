//! Active-node cardinality estimation on framed slotted Aloha channels.
//!
//! The estimator picks a frame size large enough that the per-frame
//! statistic is close to Gaussian, pays for the residual approximation error
//! with extra rounds, and inverts the averaged statistic. Both the `{0,1}`
//! and `{0,1,e}` reader models are supported.
//!
//! - [`stats`]: slot probabilities, mean and variance of the statistic, inversion
//! - [`planner`]: `k(r)`, frame bounds, round counts and the parameter search
//! - [`sim`]: channel simulator and reader sequences
//! - [`probe`]: Flajolet-Martin upper bound
//! - [`runtime`]: end-to-end estimation with slot accounting
//! - [`ezb`]: zero-based baseline

pub mod ezb;
pub mod planner;
pub mod probe;
pub mod runtime;
pub mod seed;
pub mod sim;
pub mod stats;

mod root;

pub use planner::{AccuracySpec, FramePlan, PlanError, PlannerConfig};
pub use runtime::{estimate, EstimateError, EstimateReport, EstimatorOptions};
pub use sim::{Population, ReplyModel};
pub use stats::ChannelModel;
