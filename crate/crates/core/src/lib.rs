#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Off-policy evaluation for finite-state episodic MDPs.
//!
//! The crate is organised bottom-up:
//!
//! * [`mdp`] holds nonstationary tabular MDPs, finite and continuous-density
//!   policies, logged episodes and the seeded samplers that produce them.
//! * [`exact`] is the dynamic-programming oracle: exact state marginals,
//!   value functions, the MIS mean-squared-error leading term, the
//!   Cramer-Rao expression and the stationary ratio used by SSD-IS.
//! * [`marginal`] estimates per-step state marginals from logged data, most
//!   importantly the recursive estimate of the target-policy marginals.
//! * [`estimators`] is the estimator zoo (IS, WIS, DR, WDR, DM, MIS, MDR,
//!   SSD-IS) built on one generic importance-sampling framework.
//! * [`env`] builds the benchmark problems with their ground-truth values.
//!
//! Time steps are 1-based in documentation and 0-based in storage: step `t`
//! of an episode lives at index `t - 1`.
//!
//! Everything here depends only on `core` and `alloc`. File formats, the
//! CLI and the replication harness live in the companion `mis-ope` crate.

extern crate alloc;

pub mod env;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod marginal;
pub mod mdp;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
