//! Noisy Bayesian optimization of a one-dimensional Brownian motion.
//!
//! The crate is organised bottom-up:
//!
//! * [`dyadic`] and [`path`] provide a lazily refined Brownian path on the
//!   dyadic rationals. Every node is drawn from a counter-based stream keyed
//!   by the path seed and the node's position, so values never depend on the
//!   order in which points are queried.
//! * [`bounds`] holds the closed-form pieces: the confidence widths
//!   `eta`/`alpha` and the Brownian-bridge maximum law.
//! * [`oracle`] turns a path into a budgeted, noisy evaluation oracle.
//! * [`optimizer`] implements the epoch-based interval elimination algorithm
//!   together with two naive baselines.
//! * [`regret`] scores a finished run against a discretised ground truth.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiation.

pub mod bounds;
pub mod dyadic;
pub mod error;
pub mod oracle;
pub mod optimizer;
pub mod path;
pub mod regret;
pub mod rng;
pub mod scalar;

pub use bounds::{alpha, bridge_max_survival, eta};
pub use dyadic::{DyadicPoint, MAX_DEPTH};
pub use error::{Error, Result};
pub use oracle::{NoisyOracle, Objective, Observation};
pub use optimizer::{
    kappa, lcb, n_samples, recommend, select_candidates, split, ucb, Averages, ConfidenceParams,
    EpochRecord, EpochState, EpochUcb, IntervalRec, Optimizer, PointStats, QueryRecord,
    RandomSearch, RecommendMode, RunTrace, UniformGrid,
};
pub use path::{Domain, DyadicPath, Grid, MaxRecord, MAX_GRID_DEPTH};
pub use regret::{score, score_with_truth, RegretReport, Truth};
pub use scalar::Scalar;

/// Brownian path with `f64` values.
pub type Path = DyadicPath<f64>;
/// Dense `f64` grid of path values.
pub type PathGrid = Grid<f64>;
/// Noisy oracle over an `f64` Brownian path.
pub type Oracle = NoisyOracle<f64, Path>;
/// `f64` run trace.
pub type Trace = RunTrace<f64>;
/// `f64` regret report.
pub type Report = RegretReport<f64>;
/// `f64` confidence parameters.
pub type Params = ConfidenceParams<f64>;
