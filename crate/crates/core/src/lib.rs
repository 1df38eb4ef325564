//! Identity testing of reversible Markov chains from a single trajectory.
//!
//! The tester partitions the reference chain into well-connected
//! components, turns the observed trajectory into iid samples of
//! transition pairs inside one component, and runs an iid identity test on
//! them.

#![allow(clippy::needless_range_loop)]

pub mod chain;
pub mod config;
pub mod error;
pub mod generate;
pub mod identity;
pub mod io;
pub mod metrics;
pub mod partition;
pub mod sampling;
pub mod subset;

pub use chain::{ChainClass, EdgeMeasure, ProbVector, TransitionMatrix};
pub use config::Constants;
pub use error::{ChainError, Result};
pub use identity::{identity_test, LazifyMode, PropertyReport, TestConfig, TestReport};
pub use iid_test::{Decision, TestVerdict};
pub use metrics::{InducedDistribution, Symbol};
pub use partition::{MetricLP, StatePartition};
pub use sampling::{IidOutcome, Trajectory};
