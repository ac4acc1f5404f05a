//! Constrained Bayesian optimisation of the split layer and transmit power of
//! collaborative DNN inference on an energy- and delay-budgeted edge device.
//!
//! The crate bundles an analytic wireless/compute cost model ([`system`]),
//! channel traces ([`channel`]), a deterministic utility oracle
//! ([`utility`]), the GP surrogate ([`gp`]), the hybrid acquisition
//! ([`acquisition`]), the optimisation loop ([`optimizer`]), reference
//! algorithms and the experiment harness.

pub mod acquisition;
pub mod baselines;
pub mod channel;
pub mod error;
pub mod gp;
pub mod harness;
pub mod optimizer;
pub mod problem;
pub mod record;
pub mod system;
pub mod utility;

pub use error::{Error, Result};
pub use problem::Problem;
pub use record::RunRecord;
pub use system::{CostBreakdown, SplitConfig};
