//! Binary insertion channels: the Simple model (a uniform bit inserted after
//! a position with probability `alpha`) and the Gallager model (a bit
//! replaced by two uniform bits with probability `alpha`).
//!
//! The crate provides
//!
//! * [`bits`] and [`entropy`]: packed bit sequences, run decompositions and
//!   entropy helpers,
//! * [`channels`]: sampling, application and the run-local rewrites of
//!   insertion realizations,
//! * [`series`]: certified summation of the small-`alpha` capacity expansion
//!   `C(alpha) = 1 + alpha log2 alpha + G alpha`,
//! * [`oracle`]: exact enumeration of the input/output/run-vector joint law
//!   for short blocks and the four-term mutual information decomposition,
//! * [`estimators`]: Monte Carlo estimators for the run-level terms,
//! * [`report`] and [`svg`]: flat records, text output and the curve chart,
//! * [`verify`]: the acceptance checks shared by the test suite and the CLI.

pub mod bits;
pub mod channels;
pub mod entropy;
pub mod error;
pub mod estimators;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod report;
pub mod series;
pub mod svg;
pub mod verify;

pub use bits::{runs_of, BitSeq, RunDecomposition, RunVector};
pub use error::{Error, Result};
pub use model::{ChannelModel, ChannelSpec};
