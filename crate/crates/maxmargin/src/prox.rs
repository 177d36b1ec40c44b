//! Proximal map driving every dual update.
//!
//! One solver step minimizes, coordinatewise, the model of the penalized dual
//! objective around the gradient point `p`:
//!
//! ```text
//! prox(p) = argmin_{s in [-1/lambda, 0]}  s + (s - p)^2 / (2 gamma),
//! ```
//!
//! i.e. the proximal map of `gamma * (<1, .> + indicator of the box)`. The
//! unconstrained minimizer is `p - gamma`, so the closed form is a shifted
//! clamp:
//!
//! ```text
//! prox(p) = clamp(p - gamma, -1/lambda, 0).
//! ```
//!
//! The linear term of the dual objective is absorbed here, which is why the
//! solver gradient steps use only the quadratic part `Q u`.

use ndarray::Array1;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProxError {
    #[error("step size gamma = {gamma} must be positive and finite")]
    InvalidGamma { gamma: f64 },
    #[error("penalty lambda = {lambda} must be positive and finite")]
    InvalidLambda { lambda: f64 },
}

/// Step size and penalty of one proximal step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxParams {
    pub gamma: f64,
    pub lambda: f64,
}

impl ProxParams {
    pub fn new(gamma: f64, lambda: f64) -> Result<Self, ProxError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ProxError::InvalidGamma { gamma });
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(ProxError::InvalidLambda { lambda });
        }
        Ok(Self { gamma, lambda })
    }
}

/// Scalar proximal map: `clamp(p - gamma, -1/lambda, 0)`.
pub fn prox_conj_hinge(p: f64, params: &ProxParams) -> f64 {
    (p - params.gamma).clamp(-1.0 / params.lambda, 0.0)
}

/// Coordinatewise proximal map of a whole dual vector.
pub fn prox_conj_hinge_vec(p: &Array1<f64>, params: &ProxParams) -> Array1<f64> {
    let lower = -1.0 / params.lambda;
    p.mapv(|v| (v - params.gamma).clamp(lower, 0.0))
}
