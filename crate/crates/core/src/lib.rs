//! Mean-field Hawkes processes on Erdős–Rényi graphs: simulation, matrix
//! oracles, plug-in estimation of the connection probability and Monte Carlo
//! validation of its fluctuation laws.

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod kernels;
pub mod mc;
pub mod oracle;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use estimators::{estimate, Estimate, EstimatorInput, PlugIn};
pub use graph::Adjacency;
pub use kernels::{Kernel, ModelParams};
pub use sim::{simulate, EventLog};
