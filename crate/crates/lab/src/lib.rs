//! Monte Carlo verification for the Brownian optimizer.
//!
//! [`event_m`], [`counting`] and [`distribution`] check the probabilistic
//! facts the regret analysis rests on. [`lowerbound`] builds the shifted
//! pair of objectives used to show that no label-blind algorithm beats a
//! regret floor. [`reference`] is an independent re-implementation of the
//! epoch algorithm used for conformance testing, and [`suite`] runs
//! everything with fixed seeds.

pub mod counting;
pub mod distribution;
pub mod event_m;
pub mod lowerbound;
pub mod reference;
pub mod stats;
pub mod suite;

pub use stats::{CheckRow, MeanEstimate, Proportion, Side};
pub use suite::{run_lemma_suite, Check, SuiteConfig};
