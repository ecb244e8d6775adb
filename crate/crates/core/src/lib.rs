//! Linear contextual bandits with knapsacks.
//!
//! Every round a slate of `K` contexts arrives, and pulling an arm yields a
//! reward and a `d`-dimensional resource consumption whose means are linear
//! in the arm's context. The learner maximizes total reward while keeping
//! every resource's cumulative consumption within a budget `B` over `T`
//! rounds.
//!
//! - [`estimation`]: ridge estimates, confidence ellipsoids and closed-form
//!   optimistic values.
//! - [`dual`]: multiplicative-weights learner pricing the resources.
//! - [`policy`]: the primal-dual arm selection for a given `Z`.
//! - [`bootstrap`]: exploration phase that estimates `OPT` and sets `Z`.
//! - [`packing`]: exact block-structured packing LPs and the `OPT` oracle.
//! - [`environment`]: synthetic instances, including the bandits-with-knapsacks
//!   and online-packing special cases.
//! - [`harness`]: seeded batch experiments, baselines and CSV/JSON output.

pub mod bootstrap;
pub mod dual;
pub mod environment;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod packing;
pub mod par;
pub mod policy;
pub mod seed;

pub use error::{Error, Result};
