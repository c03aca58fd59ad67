//! Scalar soft-constraint residuals and their derivatives.

use nalgebra::{RowVector3, Vector3};

/// Two-sided hinge on a joint coordinate.
pub fn hinge_limit_residual(q: f64, lower: f64, upper: f64, alpha: f64, eps: f64) -> f64 {
    alpha * (lower - q + eps).max(0.0) + alpha * (q - upper + eps).max(0.0)
}

/// Derivative of [`hinge_limit_residual`]; zero exactly at a kink.
pub fn hinge_limit_derivative(q: f64, lower: f64, upper: f64, alpha: f64, eps: f64) -> f64 {
    let mut d = 0.0;
    if lower - q + eps > 0.0 {
        d -= alpha;
    }
    if q - upper + eps > 0.0 {
        d += alpha;
    }
    d
}

pub fn min_torque_residual(tau: f64, sigma: f64) -> f64 {
    tau / sigma
}

/// `max(0, ‖f − (f·n)n‖ − μ f·n)` for a contact force `f` and unit normal `n`.
pub fn friction_cone_residual(f: &Vector3<f64>, n: &Vector3<f64>, mu: f64) -> f64 {
    let normal = f.dot(n);
    let tangential = f - n * normal;
    (tangential.norm() - mu * normal).max(0.0)
}

/// Gradient of [`friction_cone_residual`] with respect to `f`.
pub fn friction_cone_gradient(f: &Vector3<f64>, n: &Vector3<f64>, mu: f64) -> RowVector3<f64> {
    if friction_cone_residual(f, n, mu) <= 0.0 {
        return RowVector3::zeros();
    }
    let normal = f.dot(n);
    let tangential = f - n * normal;
    let t = tangential.norm();
    let mut g = -mu * n.transpose();
    if t > 0.0 {
        let u = tangential / t;
        // d‖t‖/df = uᵀ(I − nnᵀ) = uᵀ since u ⟂ n.
        g += u.transpose();
    }
    g
}
