//! Dissipative change of variables `φ = (1+t)^(-μ/2) u` and the decaying
//! source coefficient it produces.

use crate::model::ModelParams;

/// `(1+t)^(-μ(p-1)/2)`, the factor multiplying `|u|^p` in the transformed equation.
pub fn source_coefficient(params: &ModelParams, t: f64) -> f64 {
    (1.0 + t).powf(-0.5 * params.mu() * (params.p() - 1.0))
}

/// `(1+t)^(-μ/2)`
pub fn decay_factor(params: &ModelParams, t: f64) -> f64 {
    (1.0 + t).powf(-0.5 * params.mu())
}

/// Map the transformed unknown `u` back to the physical field `φ`.
pub fn to_physical(u: f64, t: f64, params: &ModelParams) -> f64 {
    u * decay_factor(params, t)
}

/// Inverse of [`to_physical`] at the same `t`.
pub fn from_physical(phi: f64, t: f64, params: &ModelParams) -> f64 {
    // Dividing by the same factor keeps the round trip within one rounding.
    phi / decay_factor(params, t)
}
