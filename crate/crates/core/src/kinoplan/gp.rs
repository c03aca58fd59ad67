//! Constant-acceleration Gaussian-process smoothness prior.

use nalgebra::{DMatrix, DVector, Matrix3};

use super::KinoplanError;

/// Scalar state transition for `(q, q̇, q̈)` over `dt`.
pub fn phi_scalar(dt: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, dt, 0.5 * dt * dt, 0.0, 1.0, dt, 0.0, 0.0, 1.0)
}

/// Scalar process covariance over `dt` for unit spectral density.
pub fn sigma_scalar(dt: f64) -> Matrix3<f64> {
    let (d2, d3) = (dt * dt, dt * dt * dt);
    let (d4, d5) = (d2 * d2, d2 * d3);
    Matrix3::new(
        0.5 * d5,
        d4 / 8.0,
        d3 / 6.0,
        d4 / 8.0,
        d3 / 3.0,
        0.5 * d2,
        d3 / 6.0,
        0.5 * d2,
        dt,
    )
}

/// Power-spectral density `Q_C` of the prior, one row/column per joint.
#[derive(Debug, Clone, PartialEq)]
pub struct GpPriorParams {
    pub qc: DMatrix<f64>,
}

impl GpPriorParams {
    pub fn new(qc: DMatrix<f64>) -> Result<Self, KinoplanError> {
        if !qc.is_square() || (&qc - qc.transpose()).amax() > 1e-12 || qc.clone().cholesky().is_none() {
            return Err(KinoplanError::NonSpdSigma);
        }
        Ok(Self { qc })
    }

    pub fn isotropic(n: usize, qc: f64) -> Result<Self, KinoplanError> {
        Self::new(DMatrix::identity(n, n) * qc)
    }

    pub fn dof(&self) -> usize {
        self.qc.nrows()
    }
}

/// `(Φ, Σ)` for the stacked state `[q; q̇; q̈]` of `n` joints.
pub fn gp_transition(dt: f64, params: &GpPriorParams) -> Result<(DMatrix<f64>, DMatrix<f64>), KinoplanError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(KinoplanError::Config(format!("time step must be positive, got {dt}")));
    }
    let n = params.dof();
    let phi = DMatrix::from_fn(3, 3, |r, c| phi_scalar(dt)[(r, c)]).kronecker(&DMatrix::identity(n, n));
    let sigma = DMatrix::from_fn(3, 3, |r, c| sigma_scalar(dt)[(r, c)]).kronecker(&params.qc);
    Ok((phi, sigma))
}

/// `Σ^{-1/2}` as the inverse Cholesky factor.
pub fn whitener(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>, KinoplanError> {
    let l = sigma.clone().cholesky().ok_or(KinoplanError::NonSpdSigma)?.unpack();
    let n = l.nrows();
    l.solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(KinoplanError::NonSpdSigma)
}

/// Whitened `x_next − Φ·x_prev`.
pub fn gp_factor_residual(
    x_prev: &DVector<f64>,
    x_next: &DVector<f64>,
    phi: &DMatrix<f64>,
    whiten: &DMatrix<f64>,
) -> DVector<f64> {
    whiten * (x_next - phi * x_prev)
}
