//! Joint optimization of traditional (THO) and conditional (CHO) handovers
//! with an online meta-learner over projected-gradient experts.

pub mod baselines;
pub mod error;
pub mod feasible;
pub mod learner;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod runner;
pub mod scenario;

pub use error::{Error, Result};
pub use model::{CostMatrices, Decision, Form, HoMode, HoRole, NetworkConfig};
