//! Federated learning with over-the-air gradient aggregation.

pub mod aggregation;
pub mod data;
pub mod engine;
pub mod model;

pub use aggregation::{AirInterface, Environment, LinkBudget, OfdmParams, Scheme, Transport};
pub use data::{Dataset, Sample, SplitMode};
pub use engine::{run_round, FlConfig, FlState, RoundMetrics};
pub use model::{Architecture, Model};
