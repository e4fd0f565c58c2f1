//! Exact finite-horizon computations and limit-law checks for Galton–Watson
//! branching processes and their Q-process.

pub mod asymptotics;
pub mod cumulative;
pub mod dd;
pub mod error;
pub mod montecarlo;
pub mod offspring;
pub mod qprocess;
pub mod series;
pub mod verify;

pub use error::{Error, Result};
pub use offspring::{Classification, ModelConstants, OffspringLaw};
pub use series::{LinearFractionalParams, TruncatedSeries};
