//! Budgeted noisy evaluation oracle.

use serde::Serialize;

use crate::dyadic::DyadicPoint;
use crate::error::{Error, Result};
use crate::path::DyadicPath;
use crate::rng::{keyed_normal, stream_key, tag};
use crate::scalar::Scalar;

/// A noiseless function of a dyadic point.
pub trait Objective<S> {
    fn evaluate(&mut self, p: DyadicPoint) -> Result<S>;
}

impl<S: Scalar> Objective<S> for DyadicPath<S> {
    fn evaluate(&mut self, p: DyadicPoint) -> Result<S> {
        self.value(p)
    }
}

impl<S, F: Objective<S> + ?Sized> Objective<S> for &mut F {
    fn evaluate(&mut self, p: DyadicPoint) -> Result<S> {
        (**self).evaluate(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation<S> {
    pub point: DyadicPoint,
    pub value: S,
}

/// Returns `f(x) + N(0, sigma2)` for at most `budget` queries.
///
/// The noise of query `t` comes from a stream keyed by the noise seed and
/// `t`, independent of the objective's own randomness.
#[derive(Debug, Clone)]
pub struct NoisyOracle<S, F = DyadicPath<S>> {
    objective: F,
    sigma2: S,
    sigma: f64,
    budget: u64,
    noise_key: u64,
    log: Vec<Observation<S>>,
}

impl<S: Scalar, F: Objective<S>> NoisyOracle<S, F> {
    pub fn new(objective: F, sigma2: S, budget: u64, noise_seed: u64) -> Result<Self> {
        if !(sigma2 >= S::zero()) || !sigma2.is_finite() {
            return Err(Error::InvalidParam(format!("noise variance {sigma2} must be >= 0")));
        }
        Ok(Self {
            objective,
            sigma2,
            sigma: sigma2.as_f64().sqrt(),
            budget,
            noise_key: stream_key(&[tag::NOISE, noise_seed]),
            log: Vec::new(),
        })
    }

    /// One noisy observation at `p`.
    pub fn query(&mut self, p: DyadicPoint) -> Result<S> {
        if self.spent() >= self.budget {
            return Err(Error::BudgetExhausted {
                budget: self.budget,
            });
        }
        let f = self.objective.evaluate(p)?;
        let z = keyed_normal(&[self.noise_key, self.log.len() as u64]);
        let value = f + S::lit(self.sigma * z);
        self.log.push(Observation { point: p, value });
        Ok(value)
    }

    #[inline]
    pub fn remaining(&self) -> u64 {
        self.budget - self.spent()
    }

    #[inline]
    pub fn spent(&self) -> u64 {
        self.log.len() as u64
    }

    #[inline]
    pub fn budget(&self) -> u64 {
        self.budget
    }

    #[inline]
    pub fn sigma2(&self) -> S {
        self.sigma2
    }

    pub fn log(&self) -> &[Observation<S>] {
        &self.log
    }

    /// Ground-truth channel; optimizers must not call this.
    pub fn objective_mut(&mut self) -> &mut F {
        &mut self.objective
    }

    pub fn into_objective(self) -> F {
        self.objective
    }
}
