//! Rigid-body free-flyer: state, controls, vehicle limits and obstacles.
//!
//! Quaternions are stored scalar-last, `(x, y, z, w)`, everywhere in the
//! crate. The attitude maps body coordinates to world coordinates and the
//! angular velocity is expressed in the body frame.

mod dynamics;
mod geometry;

pub use dynamics::{
    continuous_dynamics, discrete_step, linearize_step, quat_kinematics_matrix, rk4_step,
    state_jacobians, LinearizedStep,
};
pub use geometry::{signed_distance, signed_distance_gradient, ObstacleBox, Workspace};

use nalgebra::{Matrix3, Quaternion, SVector, UnitQuaternion, Vector3, Vector4};
use thiserror::Error;

pub const STATE_DIM: usize = 13;
pub const CONTROL_DIM: usize = 6;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type ControlVector = SVector<f64, CONTROL_DIM>;

/// Offsets of the state blocks inside a [`StateVector`].
pub mod idx {
    pub const R: usize = 0;
    pub const V: usize = 3;
    pub const Q: usize = 6;
    pub const W: usize = 10;
    pub const F: usize = 0;
    pub const M: usize = 3;
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("mass must be positive, got {0}")]
    Mass(f64),
    #[error("inertia must be symmetric positive definite")]
    Inertia,
    #[error("{0} must be positive, got {1}")]
    Limit(&'static str, f64),
    #[error("obstacle half extents must be nonnegative and finite")]
    HalfExtents,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeFlyerState {
    pub r: Vector3<f64>,
    pub v: Vector3<f64>,
    /// Attitude, scalar-last.
    pub q: Vector4<f64>,
    /// Body angular velocity.
    pub w: Vector3<f64>,
}

impl FreeFlyerState {
    pub fn at_rest(r: Vector3<f64>, q: Vector4<f64>) -> Self {
        Self {
            r,
            v: Vector3::zeros(),
            q,
            w: Vector3::zeros(),
        }
    }

    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            r: x.fixed_rows::<3>(idx::R).into(),
            v: x.fixed_rows::<3>(idx::V).into(),
            q: x.fixed_rows::<4>(idx::Q).into(),
            w: x.fixed_rows::<3>(idx::W).into(),
        }
    }

    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<3>(idx::R).copy_from(&self.r);
        x.fixed_rows_mut::<3>(idx::V).copy_from(&self.v);
        x.fixed_rows_mut::<4>(idx::Q).copy_from(&self.q);
        x.fixed_rows_mut::<3>(idx::W).copy_from(&self.w);
        x
    }

    pub fn normalize(&mut self) {
        self.q = normalize_quat(&self.q);
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

impl ControlInput {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_vector(u: &ControlVector) -> Self {
        Self {
            force: u.fixed_rows::<3>(idx::F).into(),
            moment: u.fixed_rows::<3>(idx::M).into(),
        }
    }

    pub fn to_vector(&self) -> ControlVector {
        let mut u = ControlVector::zeros();
        u.fixed_rows_mut::<3>(idx::F).copy_from(&self.force);
        u.fixed_rows_mut::<3>(idx::M).copy_from(&self.moment);
        u
    }
}

/// Mass properties and actuator/speed limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    mass: f64,
    inertia: Matrix3<f64>,
    inertia_inv: Matrix3<f64>,
    pub radius: f64,
    pub v_max: f64,
    pub w_max: f64,
    pub f_max: f64,
    pub m_max: f64,
}

impl VehicleParams {
    pub fn new(
        mass: f64,
        inertia: Matrix3<f64>,
        radius: f64,
        v_max: f64,
        w_max: f64,
        f_max: f64,
        m_max: f64,
    ) -> Result<Self, ModelError> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(ModelError::Mass(mass));
        }
        let asym = (inertia - inertia.transpose()).abs().max();
        if asym > 1e-12 * inertia.abs().max().max(1.0) || inertia.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Inertia);
        }
        let eig = inertia.symmetric_eigenvalues();
        if eig.iter().any(|&e| e <= 0.0) {
            return Err(ModelError::Inertia);
        }
        let inertia_inv = inertia.try_inverse().ok_or(ModelError::Inertia)?;
        for (name, v) in [
            ("radius", radius),
            ("v_max", v_max),
            ("w_max", w_max),
            ("f_max", f_max),
            ("m_max", m_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::Limit(name, v));
            }
        }
        Ok(Self {
            mass,
            inertia,
            inertia_inv,
            radius,
            v_max,
            w_max,
            f_max,
            m_max,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn inertia(&self) -> &Matrix3<f64> {
        &self.inertia
    }

    pub fn inertia_inv(&self) -> &Matrix3<f64> {
        &self.inertia_inv
    }
}

impl Default for VehicleParams {
    /// Roughly a 30 cm cube-shaped free flyer. These numbers are
    /// configurable defaults, not measured properties of any vehicle.
    fn default() -> Self {
        Self::new(
            9.58,
            Matrix3::identity() * 0.153,
            0.26,
            0.5,
            0.5,
            0.85,
            0.25,
        )
        .expect("default vehicle parameters are valid")
    }
}

pub fn identity_quat() -> Vector4<f64> {
    Vector4::new(0.0, 0.0, 0.0, 1.0)
}

/// Normalizes a quaternion; falls back to identity when the norm vanishes.
pub fn normalize_quat(q: &Vector4<f64>) -> Vector4<f64> {
    let n = q.norm();
    if n < 1e-12 {
        identity_quat()
    } else if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
        // already unit; dividing again can move the last bit
        *q
    } else {
        q / n
    }
}

pub fn quat_from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Vector4<f64> {
    let axis = axis.normalize();
    let (s, c) = (0.5 * angle).sin_cos();
    Vector4::new(axis.x * s, axis.y * s, axis.z * s, c)
}

pub(crate) fn to_unit(q: &Vector4<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::from_quaternion(Quaternion::from(*q))
}

pub(crate) fn from_unit(q: &UnitQuaternion<f64>) -> Vector4<f64> {
    q.quaternion().coords
}

/// Angle on S³ between two attitudes, sign-invariant: `acos(|⟨q₁, q₂⟩|)`
/// for unit inputs. The rotation angle between them is twice this value.
pub fn quat_geodesic_distance(a: &Vector4<f64>, b: &Vector4<f64>) -> f64 {
    let d = (normalize_quat(a).dot(&normalize_quat(b))).abs().min(1.0);
    d.acos()
}

/// Spherical interpolation along the shorter arc.
pub fn quat_slerp(a: &Vector4<f64>, b: &Vector4<f64>, t: f64) -> Vector4<f64> {
    let qa = to_unit(a);
    let mut qb = to_unit(b);
    if a.dot(b) < 0.0 {
        qb = UnitQuaternion::from_quaternion(-qb.into_inner());
    }
    from_unit(&qa.slerp(&qb, t))
}

/// Body-frame rotation vector taking `a` to `b` along the shorter arc:
/// `b = a ⊗ exp(φ / 2)`.
pub fn quat_relative_rotation(a: &Vector4<f64>, b: &Vector4<f64>) -> Vector3<f64> {
    let qa = to_unit(a);
    let qb = to_unit(b);
    let mut rel = qa.inverse() * qb;
    if rel.w < 0.0 {
        rel = UnitQuaternion::from_quaternion(-rel.into_inner());
    }
    rel.scaled_axis()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_vector_round_trip() {
        let s = FreeFlyerState {
            r: Vector3::new(1.0, 2.0, 3.0),
            v: Vector3::new(4.0, 5.0, 6.0),
            q: Vector4::new(0.1, 0.2, 0.3, 0.9),
            w: Vector3::new(7.0, 8.0, 9.0),
        };
        assert_eq!(FreeFlyerState::from_vector(&s.to_vector()), s);
    }

    #[test]
    fn normalize_gives_unit_quaternion() {
        let mut s = FreeFlyerState::at_rest(Vector3::zeros(), Vector4::new(1.0, 2.0, -3.0, 0.5));
        s.normalize();
        assert!((s.q.norm() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn vehicle_validation() {
        let j = Matrix3::identity();
        assert!(VehicleParams::new(0.0, j, 0.2, 1.0, 1.0, 1.0, 1.0).is_err());
        let mut bad = j;
        bad[(0, 1)] = 0.5;
        assert_eq!(
            VehicleParams::new(1.0, bad, 0.2, 1.0, 1.0, 1.0, 1.0),
            Err(ModelError::Inertia)
        );
        assert_eq!(
            VehicleParams::new(1.0, -j, 0.2, 1.0, 1.0, 1.0, 1.0),
            Err(ModelError::Inertia)
        );
        assert!(VehicleParams::new(1.0, j, 0.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn slerp_takes_short_path() {
        let a = identity_quat();
        let b = -quat_from_axis_angle(&Vector3::z(), 0.5);
        let mid = quat_slerp(&a, &b, 0.5);
        assert!(quat_geodesic_distance(&mid, &quat_from_axis_angle(&Vector3::z(), 0.25)) < 1e-12);
    }

    #[test]
    fn relative_rotation_about_z() {
        let a = identity_quat();
        let b = quat_from_axis_angle(&Vector3::z(), std::f64::consts::FRAC_PI_2);
        let phi = quat_relative_rotation(&a, &b);
        assert!((phi - Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2)).norm() < 1e-12);
    }
}
