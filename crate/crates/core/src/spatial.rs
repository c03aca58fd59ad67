//! Spatial algebra on SE(3): poses, adjoints, twists, wrenches and inertias.
//!
//! All 6-vectors put the angular part first: a twist is `(ω, v)` and a wrench
//! is `(m, f)`. A [`Pose`] `T_ab` maps coordinates in frame `b` to frame `a`,
//! so `Ad(T_ab)` carries twists from `b` to `a` and `Ad(T_ab)ᵀ` carries wrenches
//! from `a` to `b`.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6, SVD};
use thiserror::Error;

/// Rotation drift (max entry of `RᵀR − I`) above which a product is re-projected.
pub const RENORMALIZE_DRIFT: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpatialError {
    #[error("matrix is not a rotation (orthonormality error {0:.3e})")]
    NotARotation(f64),
    #[error("invalid spatial inertia: {0}")]
    InvalidInertia(String),
    #[error("invalid screw axis: {0}")]
    InvalidScrewAxis(String),
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).amax()
}

/// Nearest rotation in the Frobenius sense (polar factor).
fn polar_project(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = SVD::new(*r, true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut out = u * v_t;
    if out.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        out = u * v_t;
    }
    out
}

/// Rigid transform: rotation matrix plus translation (meters).
#[derive(Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl fmt::Debug for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pose")
            .field("rotation", &self.rotation.as_slice())
            .field("translation", &self.translation.as_slice())
            .finish()
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose from a near-orthonormal matrix, projecting it onto SO(3).
    ///
    /// Matrices further than `1e-6` from orthonormal, or with negative
    /// determinant, are rejected.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, SpatialError> {
        if rotation.iter().chain(translation.iter()).any(|x| !x.is_finite()) {
            return Err(SpatialError::NonFinite("pose"));
        }
        let err = orthonormality_error(&rotation);
        if err > 1e-6 || rotation.determinant() <= 0.0 {
            return Err(SpatialError::NotARotation(err));
        }
        let rotation = if err > 1e-12 {
            polar_project(&rotation)
        } else {
            rotation
        };
        Ok(Self { rotation, translation })
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Result<Self, SpatialError> {
        Self::new(rotation, Vector3::zeros())
    }

    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_rotation_unchecked(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    pub fn rot_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_rotation_unchecked(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_rotation_unchecked(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// URDF convention: fixed-axis roll, pitch, yaw, i.e. `Rz(yaw)·Ry(pitch)·Rx(roll)`.
    pub fn from_xyz_rpy(xyz: Vector3<f64>, rpy: Vector3<f64>) -> Self {
        let r = Self::rot_z(rpy.z).rotation * Self::rot_y(rpy.y).rotation * Self::rot_x(rpy.x).rotation;
        Self {
            rotation: r,
            translation: xyz,
        }
    }

    fn from_rotation_unchecked(rotation: Matrix3<f64>) -> Self {
        Self {
            rotation,
            translation: Vector3::zeros(),
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Group product `self · other` (apply `other` first in the right frame).
    pub fn compose(&self, other: &Pose) -> Pose {
        let mut rotation = self.rotation * other.rotation;
        if orthonormality_error(&rotation) > RENORMALIZE_DRIFT {
            rotation = polar_project(&rotation);
        }
        Pose {
            rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `[[R, 0], [[p]ₓR, R]]`.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 3>(3, 0)
            .copy_from(&(skew(&self.translation) * self.rotation));
        m
    }

    /// Exponential of the twist coordinates `xi = (ω, v)` (already scaled by time/angle).
    pub fn exp(xi: &Vector6<f64>) -> Pose {
        let w = xi.fixed_rows::<3>(0).into_owned();
        let v = xi.fixed_rows::<3>(3).into_owned();
        let theta2 = w.norm_squared();
        let theta = theta2.sqrt();
        // Coefficients of [ω] and [ω]² in the rotation and in the left Jacobian.
        let (a, b, c) = if theta < 1e-3 {
            let theta4 = theta2 * theta2;
            (
                1.0 - theta2 / 6.0 + theta4 / 120.0,
                0.5 - theta2 / 24.0 + theta4 / 720.0,
                1.0 / 6.0 - theta2 / 120.0 + theta4 / 5040.0,
            )
        } else {
            let (s, co) = theta.sin_cos();
            (s / theta, (1.0 - co) / theta2, (theta - s) / (theta2 * theta))
        };
        let wx = skew(&w);
        let wx2 = wx * wx;
        let rotation = Matrix3::identity() + wx * a + wx2 * b;
        let jac = Matrix3::identity() + wx * b + wx2 * c;
        Pose {
            rotation,
            translation: jac * v,
        }
    }

    /// Max deviation of the rotation block from orthonormality.
    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.rotation)
    }

    pub fn approx_eq(&self, other: &Pose, tol: f64) -> bool {
        (self.rotation - other.rotation).amax() <= tol && (self.translation - other.translation).amax() <= tol
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a Pose> for &'a Pose {
    type Output = Pose;
    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

/// Free function form of [`Pose::compose`].
pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

/// Free function form of [`Pose::adjoint`].
pub fn adjoint(t: &Pose) -> Matrix6<f64> {
    t.adjoint()
}

/// Lie bracket matrix `[[ [ω]ₓ, 0 ], [ [v]ₓ, [ω]ₓ ]]`.
pub fn ad(v: &Vector6<f64>) -> Matrix6<f64> {
    let w = skew(&v.fixed_rows::<3>(0).into_owned());
    let lin = skew(&v.fixed_rows::<3>(3).into_owned());
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&lin);
    m
}

/// Jacobian of `V ↦ ad(V)ᵀ·w` for a fixed wrench `w = (m, f)`: `[[ [m]ₓ, [f]ₓ ], [ [f]ₓ, 0 ]]`.
pub fn coad_jacobian(w: &Vector6<f64>) -> Matrix6<f64> {
    let m = skew(&w.fixed_rows::<3>(0).into_owned());
    let f = skew(&w.fixed_rows::<3>(3).into_owned());
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&m);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&f);
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&f);
    out
}

/// Spatial velocity (or acceleration), angular part first.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist(pub Vector6<f64>);

impl Twist {
    pub fn zero() -> Self {
        Self(Vector6::zeros())
    }

    pub fn new(angular: Vector3<f64>, linear: Vector3<f64>) -> Self {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&angular);
        v.fixed_rows_mut::<3>(3).copy_from(&linear);
        Self(v)
    }

    pub fn angular(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn linear(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(3).into_owned()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl From<Vector6<f64>> for Twist {
    fn from(v: Vector6<f64>) -> Self {
        Self(v)
    }
}

/// Moment then force.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench(pub Vector6<f64>);

impl Wrench {
    pub fn zero() -> Self {
        Self(Vector6::zeros())
    }

    pub fn new(moment: Vector3<f64>, force: Vector3<f64>) -> Self {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&moment);
        v.fixed_rows_mut::<3>(3).copy_from(&force);
        Self(v)
    }

    pub fn moment(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn force(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(3).into_owned()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl From<Vector6<f64>> for Wrench {
    fn from(v: Vector6<f64>) -> Self {
        Self(v)
    }
}

/// 6×6 spatial inertia in a body frame.
///
/// Point masses (zero rotational inertia at the center of mass) are accepted:
/// the rotational block only needs to be positive semidefinite, the mass
/// strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialInertia {
    matrix: Matrix6<f64>,
}

impl SpatialInertia {
    pub fn new(matrix: Matrix6<f64>) -> Result<Self, SpatialError> {
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(SpatialError::NonFinite("spatial inertia"));
        }
        let asym = (matrix - matrix.transpose()).amax();
        if asym > 1e-12 * matrix.amax().max(1.0) {
            return Err(SpatialError::InvalidInertia(format!("asymmetric by {asym:.3e}")));
        }
        let sym = (matrix + matrix.transpose()) * 0.5;
        let mass = sym[(3, 3)];
        if !(mass > 0.0) {
            return Err(SpatialError::InvalidInertia("mass must be positive".into()));
        }
        let min_eig = sym.symmetric_eigenvalues().min();
        if min_eig < -1e-9 * sym.amax() {
            return Err(SpatialError::InvalidInertia(format!(
                "not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self { matrix: sym })
    }

    /// Inertia expressed at the center of mass: `diag(I, m·1)`.
    pub fn at_com(mass: f64, rotational: Matrix3<f64>) -> Result<Self, SpatialError> {
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotational);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Matrix3::identity() * mass));
        Self::new(m)
    }

    pub fn point_mass(mass: f64) -> Result<Self, SpatialError> {
        Self::at_com(mass, Matrix3::zeros())
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.matrix
    }

    pub fn mass(&self) -> f64 {
        self.matrix[(3, 3)]
    }

    /// Re-expresses this inertia (given in frame `b`) in frame `a`, where
    /// `t_ba` is the pose of `a` in `b`: `Ad(t_ba)ᵀ·G·Ad(t_ba)`.
    pub fn transformed(&self, t_ba: &Pose) -> SpatialInertia {
        let ad = t_ba.adjoint();
        let m = ad.transpose() * self.matrix * ad;
        SpatialInertia {
            matrix: (m + m.transpose()) * 0.5,
        }
    }

    pub fn add(&self, other: &SpatialInertia) -> SpatialInertia {
        SpatialInertia {
            matrix: self.matrix + other.matrix,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScrewKind {
    Revolute,
    Prismatic,
}

/// Unit screw axis of a 1-DoF joint, expressed in the child body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewAxis {
    axis: Vector6<f64>,
    kind: ScrewKind,
}

impl ScrewAxis {
    /// Revolute axis through `point` (in the body frame) along `direction`.
    pub fn revolute(direction: Vector3<f64>, point: Vector3<f64>) -> Result<Self, SpatialError> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(SpatialError::InvalidScrewAxis("zero or non-finite direction".into()));
        }
        let w = direction / n;
        let v = -w.cross(&point);
        let mut axis = Vector6::zeros();
        axis.fixed_rows_mut::<3>(0).copy_from(&w);
        axis.fixed_rows_mut::<3>(3).copy_from(&v);
        Ok(Self {
            axis,
            kind: ScrewKind::Revolute,
        })
    }

    pub fn prismatic(direction: Vector3<f64>) -> Result<Self, SpatialError> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(SpatialError::InvalidScrewAxis("zero or non-finite direction".into()));
        }
        let mut axis = Vector6::zeros();
        axis.fixed_rows_mut::<3>(3).copy_from(&(direction / n));
        Ok(Self {
            axis,
            kind: ScrewKind::Prismatic,
        })
    }

    /// Validates a raw 6-vector: unit angular part (revolute) or zero angular
    /// and unit linear part (prismatic), each to `1e-12`.
    pub fn from_vector(axis: Vector6<f64>, kind: ScrewKind) -> Result<Self, SpatialError> {
        let w = axis.fixed_rows::<3>(0).norm();
        let v = axis.fixed_rows::<3>(3).norm();
        let ok = match kind {
            ScrewKind::Revolute => (w - 1.0).abs() <= 1e-12,
            ScrewKind::Prismatic => w <= 1e-12 && (v - 1.0).abs() <= 1e-12,
        };
        if !ok {
            return Err(SpatialError::InvalidScrewAxis(format!(
                "{kind:?} axis with |ω| = {w}, |v| = {v}"
            )));
        }
        Ok(Self { axis, kind })
    }

    pub fn vector(&self) -> &Vector6<f64> {
        &self.axis
    }

    pub fn kind(&self) -> ScrewKind {
        self.kind
    }

    /// Same screw expressed in frame `a`, given `t_ab` (pose of this frame in `a`).
    pub fn transformed(&self, t_ab: &Pose) -> ScrewAxis {
        ScrewAxis {
            axis: t_ab.adjoint() * self.axis,
            kind: self.kind,
        }
    }
}

/// Parent-to-child transform of a joint: `offset · exp(axis·q)`.
pub fn joint_pose(axis: &ScrewAxis, q: f64, offset: &Pose) -> Pose {
    if q == 0.0 {
        return *offset;
    }
    offset.compose(&Pose::exp(&(axis.vector() * q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn assert_mat_close(a: &Matrix6<f64>, b: &Matrix6<f64>, tol: f64) {
        let d = (a - b).amax();
        assert!(d <= tol, "matrices differ by {d:e}\n{a}\n{b}");
    }

    #[test]
    fn identity_composes_to_identity() {
        let i = Pose::identity();
        assert_eq!(i.compose(&i), i);
    }

    #[test]
    fn quarter_turn_with_offset_composes_like_homogeneous_matrices() {
        let p = Pose::rot_z(FRAC_PI_2).compose(&Pose::from_translation(Vector3::x()));
        let composed = p.compose(&p);
        let h = p.to_homogeneous() * p.to_homogeneous();
        assert!((composed.to_homogeneous() - h).amax() < 1e-15);
        assert!((composed.rotation() - Pose::rot_z(std::f64::consts::PI).rotation()).amax() < 1e-15);
        assert!((composed.translation() - Vector3::new(-1.0, 1.0, 0.0)).amax() < 1e-15);
    }

    #[test]
    fn adjoint_of_identity_and_pure_rotation() {
        assert_eq!(Pose::identity().adjoint(), Matrix6::identity());
        let r = Pose::rot_x(0.3).compose(&Pose::rot_y(-1.1));
        let ad = r.adjoint();
        let mut expected = Matrix6::zeros();
        expected.fixed_view_mut::<3, 3>(0, 0).copy_from(r.rotation());
        expected.fixed_view_mut::<3, 3>(3, 3).copy_from(r.rotation());
        assert_mat_close(&ad, &expected, 0.0);
    }

    #[test]
    fn ad_of_zero_twist_is_zero() {
        assert_eq!(ad(&Vector6::zeros()), Matrix6::zeros());
    }

    #[test]
    fn revolute_z_quarter_turn_matches_rodrigues() {
        let axis = ScrewAxis::revolute(Vector3::z(), Vector3::zeros()).unwrap();
        let t = joint_pose(&axis, FRAC_PI_2, &Pose::identity());
        // Rodrigues: R = I + sinθ K + (1 − cosθ) K².
        let k = skew(&Vector3::z());
        let r = Matrix3::identity() + k * FRAC_PI_2.sin() + k * k * (1.0 - FRAC_PI_2.cos());
        assert!((t.rotation() - r).amax() < 1e-15);
        assert!(t.translation().amax() < 1e-15);
    }

    #[test]
    fn prismatic_joint_translates() {
        let axis = ScrewAxis::prismatic(Vector3::x()).unwrap();
        let t = joint_pose(&axis, 0.3, &Pose::identity());
        assert_eq!(*t.rotation(), Matrix3::identity());
        assert!((t.translation() - Vector3::new(0.3, 0.0, 0.0)).amax() < 1e-16);
    }

    #[test]
    fn zero_joint_angle_returns_offset() {
        let axis = ScrewAxis::revolute(Vector3::y(), Vector3::new(0.2, 0.0, 0.0)).unwrap();
        let off = Pose::from_xyz_rpy(Vector3::new(1.0, 2.0, 3.0), Vector3::new(0.1, 0.2, 0.3));
        assert_eq!(joint_pose(&axis, 0.0, &off), off);
    }

    #[test]
    fn screw_axis_validation() {
        let mut v = Vector6::zeros();
        v[2] = 1.0;
        assert!(ScrewAxis::from_vector(v, ScrewKind::Revolute).is_ok());
        assert!(ScrewAxis::from_vector(v, ScrewKind::Prismatic).is_err());
        v[2] = 1.0 + 1e-9;
        assert!(ScrewAxis::from_vector(v, ScrewKind::Revolute).is_err());
        assert!(ScrewAxis::revolute(Vector3::zeros(), Vector3::zeros()).is_err());
    }

    #[test]
    fn inertia_validation() {
        assert!(SpatialInertia::point_mass(1.0).is_ok());
        assert!(SpatialInertia::point_mass(0.0).is_err());
        assert!(SpatialInertia::at_com(1.0, Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0))).is_err());
        let mut m = *SpatialInertia::point_mass(2.0).unwrap().matrix();
        m[(0, 4)] = 0.5;
        assert!(SpatialInertia::new(m).is_err());
    }

    #[test]
    fn rejects_reflections_and_projects_small_drift() {
        let mut r = Matrix3::identity();
        r[(2, 2)] = -1.0;
        assert!(Pose::new(r, Vector3::zeros()).is_err());
        let mut r = *Pose::rot_z(0.4).rotation();
        r[(0, 0)] += 1e-8;
        let p = Pose::new(r, Vector3::zeros()).unwrap();
        assert!(p.orthonormality_error() < 1e-12);
        assert!((p.rotation().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exp_small_angle_branch_is_continuous() {
        let xi = Vector6::new(1e-6, -2e-6, 3e-6, 0.1, 0.2, 0.3);
        let a = Pose::exp(&xi);
        let b = Pose::exp(&(xi * (1.0 + 1e-9)));
        assert!(a.approx_eq(&b, 1e-9));
        let big = Vector6::new(2e-5, 0.0, 0.0, 0.0, 1.0, 0.0);
        let c = Pose::exp(&big);
        assert!((c.translation().y - 2e-5f64.sin() / 2e-5).abs() < 1e-14);
    }
}
