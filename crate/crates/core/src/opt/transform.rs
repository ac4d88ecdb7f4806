//! Smooth bijections used to keep lengths, durations and terminal hitch
//! angles inside their admissible ranges while optimizing over all of R.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("input {0} must be positive")]
    NonPositiveInput(f64),
    #[error("offset {offset} outside (-{bound}, {bound})")]
    OutOfRange { offset: f64, bound: f64 },
}

/// Maps `(0, inf)` onto `R`, twice continuously differentiable, with
/// `lc2(1) = 0` and unit slope there.
pub fn lc2(x: f64) -> Result<f64, TransformError> {
    if !(x > 0.0) {
        return Err(TransformError::NonPositiveInput(x));
    }
    Ok(if x <= 1.0 { 1.0 - (2.0 / x - 1.0).sqrt() } else { (2.0 * x - 1.0).sqrt() - 1.0 })
}

/// First derivative of [`lc2`].
pub fn lc2_deriv(x: f64) -> f64 {
    if x <= 1.0 {
        1.0 / (x * x * (2.0 / x - 1.0).sqrt())
    } else {
        1.0 / (2.0 * x - 1.0).sqrt()
    }
}

/// Inverse of [`lc2`] and its derivative `dx/dy`.
pub fn lc2_inv(y: f64) -> (f64, f64) {
    if y > 0.0 {
        let u = y + 1.0;
        (0.5 * (u * u + 1.0), u)
    } else {
        let u = 1.0 - y;
        let den = u * u + 1.0;
        (2.0 / den, 4.0 * u / (den * den))
    }
}

/// Terminal hitch angle from its unconstrained image, with derivative.
/// The result always lies strictly inside `(-bound, bound)`.
pub fn hitch_from_free(free: f64, bound: f64) -> (f64, f64) {
    let (sigma, dsigma) = lc2_inv(free);
    let theta = bound * (sigma - 1.0) / (sigma + 1.0);
    let dtheta = bound * 2.0 / ((sigma + 1.0) * (sigma + 1.0)) * dsigma;
    (theta, dtheta)
}

/// Unconstrained image of a hitch angle inside `(-bound, bound)`.
pub fn hitch_to_free(theta: f64, bound: f64) -> Result<f64, TransformError> {
    if !(theta.abs() < bound) {
        return Err(TransformError::OutOfRange { offset: theta, bound });
    }
    lc2((bound + theta) / (bound - theta))
}
