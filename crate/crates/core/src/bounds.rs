//! Closed-form confidence widths and Brownian running-maximum laws.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn checked_log<S: Scalar>(arg: S, x: S, delta: S) -> Result<S> {
    if !(arg > S::one()) {
        return Err(Error::LogDomain {
            x: x.as_f64(),
            delta: delta.as_f64(),
            arg: arg.as_f64(),
        });
    }
    Ok(arg.ln())
}

fn check_inputs<S: Scalar>(x: S, delta: S) -> Result<()> {
    if !(x > S::zero() && x <= S::one()) {
        return Err(Error::InvalidParam(format!("interval length {x} not in (0, 1]")));
    }
    if !(delta > S::zero() && delta <= S::one()) {
        return Err(Error::InvalidParam(format!("delta {delta} not in (0, 1]")));
    }
    Ok(())
}

/// Running-maximum slack `sqrt(5x/2 * ln(2 / (x delta)))` for an interval of
/// length `x`.
pub fn eta<S: Scalar>(x: S, delta: S) -> Result<S> {
    check_inputs(x, delta)?;
    let log = checked_log(S::lit(2.0) / (x * delta), x, delta)?;
    Ok((S::lit(2.5) * x * log).sqrt())
}

/// Increment / averaging slack `sqrt(6x * ln(1 / (x delta)))`.
pub fn alpha<S: Scalar>(x: S, delta: S) -> Result<S> {
    check_inputs(x, delta)?;
    let log = checked_log(S::one() / (x * delta), x, delta)?;
    Ok((S::lit(6.0) * x * log).sqrt())
}

/// `P[max over [a, b] of W > y | W_a = w_a, W_b = w_b]` for a Brownian
/// bridge over an interval of length `len`.
///
/// Levels at or below `max(w_a, w_b)` are exceeded surely, so the function
/// returns 1 there instead of evaluating the formula outside its range.
pub fn bridge_max_survival<S: Scalar>(w_a: S, w_b: S, len: S, y: S) -> Result<S> {
    if !(len > S::zero()) {
        return Err(Error::InvalidParam(format!("bridge length {len} must be positive")));
    }
    if y <= w_a.max(w_b) {
        return Ok(S::one());
    }
    Ok((-S::lit(2.0) * (y - w_a) * (y - w_b) / len).exp())
}
