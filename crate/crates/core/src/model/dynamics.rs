use super::{
    idx, ControlInput, ControlVector, FreeFlyerState, StateVector, VehicleParams, CONTROL_DIM,
    STATE_DIM,
};
use nalgebra::{Matrix3, Matrix4, SMatrix, Vector3, Vector4};

pub type StateJacobian = SMatrix<f64, STATE_DIM, STATE_DIM>;
pub type ControlJacobian = SMatrix<f64, STATE_DIM, CONTROL_DIM>;

/// Affine model of one discrete step: `x⁺ ≈ A x + B u + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedStep {
    pub a: StateJacobian,
    pub b: ControlJacobian,
    pub c: StateVector,
}

impl LinearizedStep {
    pub fn apply(&self, x: &StateVector, u: &ControlVector) -> StateVector {
        self.a * x + self.b * u + self.c
    }
}

/// `Ξ(ω)` such that `q̇ = ½ Ξ(ω) q` for scalar-last quaternions and body
/// rates. Skew-symmetric.
pub fn quat_kinematics_matrix(w: &Vector3<f64>) -> Matrix4<f64> {
    let (a, b, c) = (w.x, w.y, w.z);
    Matrix4::new(
        0.0, c, -b, a, //
        -c, 0.0, a, b, //
        b, -a, 0.0, c, //
        -a, -b, -c, 0.0,
    )
}

/// `Q(q)` with `Ξ(ω) q = Q(q) ω`.
fn quat_rate_matrix(q: &Vector4<f64>) -> SMatrix<f64, 4, 3> {
    let (x, y, z, w) = (q[0], q[1], q[2], q[3]);
    SMatrix::<f64, 4, 3>::new(
        w, -z, y, //
        z, w, -x, //
        -y, x, w, //
        -x, -y, -z,
    )
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    v.cross_matrix()
}

fn rhs(x: &StateVector, u: &ControlVector, p: &VehicleParams) -> StateVector {
    let v = x.fixed_rows::<3>(idx::V);
    let q: Vector4<f64> = x.fixed_rows::<4>(idx::Q).into();
    let w: Vector3<f64> = x.fixed_rows::<3>(idx::W).into();
    let f = u.fixed_rows::<3>(idx::F);
    let m: Vector3<f64> = u.fixed_rows::<3>(idx::M).into();
    let jw = p.inertia() * w;
    let mut dx = StateVector::zeros();
    dx.fixed_rows_mut::<3>(idx::R).copy_from(&v);
    dx.fixed_rows_mut::<3>(idx::V).copy_from(&(f / p.mass()));
    dx.fixed_rows_mut::<4>(idx::Q)
        .copy_from(&(0.5 * quat_kinematics_matrix(&w) * q));
    dx.fixed_rows_mut::<3>(idx::W)
        .copy_from(&(p.inertia_inv() * (m - w.cross(&jw))));
    dx
}

/// Continuous-time right-hand side `ẋ = f(x, u)`.
pub fn continuous_dynamics(x: &FreeFlyerState, u: &ControlInput, p: &VehicleParams) -> StateVector {
    rhs(&x.to_vector(), &u.to_vector(), p)
}

/// Jacobians `(∂f/∂x, ∂f/∂u)` of the continuous dynamics.
pub fn state_jacobians(x: &StateVector, p: &VehicleParams) -> (StateJacobian, ControlJacobian) {
    let q: Vector4<f64> = x.fixed_rows::<4>(idx::Q).into();
    let w: Vector3<f64> = x.fixed_rows::<3>(idx::W).into();
    let mut fx = StateJacobian::zeros();
    fx.fixed_view_mut::<3, 3>(idx::R, idx::V)
        .copy_from(&Matrix3::identity());
    fx.fixed_view_mut::<4, 4>(idx::Q, idx::Q)
        .copy_from(&(0.5 * quat_kinematics_matrix(&w)));
    fx.fixed_view_mut::<4, 3>(idx::Q, idx::W)
        .copy_from(&(0.5 * quat_rate_matrix(&q)));
    let j = p.inertia();
    let dgyro = skew(&w) * j - skew(&(j * w));
    fx.fixed_view_mut::<3, 3>(idx::W, idx::W)
        .copy_from(&(-p.inertia_inv() * dgyro));
    let mut fu = ControlJacobian::zeros();
    fu.fixed_view_mut::<3, 3>(idx::V, idx::F)
        .copy_from(&(Matrix3::identity() / p.mass()));
    fu.fixed_view_mut::<3, 3>(idx::W, idx::M)
        .copy_from(p.inertia_inv());
    (fx, fu)
}

fn rk4_raw(x: &StateVector, u: &ControlVector, p: &VehicleParams, dt: f64) -> StateVector {
    let k1 = rhs(x, u, p);
    let k2 = rhs(&(x + 0.5 * dt * k1), u, p);
    let k3 = rhs(&(x + 0.5 * dt * k2), u, p);
    let k4 = rhs(&(x + dt * k3), u, p);
    x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// One classical Runge–Kutta step with zero-order-hold control and no
/// quaternion re-normalization.
pub fn rk4_step(x: &FreeFlyerState, u: &ControlInput, p: &VehicleParams, dt: f64) -> FreeFlyerState {
    FreeFlyerState::from_vector(&rk4_raw(&x.to_vector(), &u.to_vector(), p, dt))
}

/// The discrete dynamics used throughout the planner: an RK4 step followed
/// by quaternion re-normalization.
pub fn discrete_step(x: &FreeFlyerState, u: &ControlInput, p: &VehicleParams, dt: f64) -> FreeFlyerState {
    debug_assert!(dt > 0.0);
    let mut next = rk4_step(x, u, p, dt);
    next.normalize();
    next
}

/// Exact Jacobians of [`discrete_step`], propagated through the four RK4
/// stages and the final normalization.
pub fn linearize_step(x: &FreeFlyerState, u: &ControlInput, p: &VehicleParams, dt: f64) -> LinearizedStep {
    linearize_step_vec(&x.to_vector(), &u.to_vector(), p, dt)
}

pub(crate) fn linearize_step_vec(
    x: &StateVector,
    u: &ControlVector,
    p: &VehicleParams,
    dt: f64,
) -> LinearizedStep {
    let id = StateJacobian::identity();
    let k1 = rhs(x, u, p);
    let (f1x, f1u) = state_jacobians(x, p);
    let x2 = x + 0.5 * dt * k1;
    let k2 = rhs(&x2, u, p);
    let (f2x, f2u) = state_jacobians(&x2, p);
    let x3 = x + 0.5 * dt * k2;
    let k3 = rhs(&x3, u, p);
    let (f3x, f3u) = state_jacobians(&x3, p);
    let x4 = x + dt * k3;
    let k4 = rhs(&x4, u, p);
    let (f4x, f4u) = state_jacobians(&x4, p);

    let dk1x = f1x;
    let dk1u = f1u;
    let dk2x = f2x * (id + 0.5 * dt * dk1x);
    let dk2u = f2x * (0.5 * dt * dk1u) + f2u;
    let dk3x = f3x * (id + 0.5 * dt * dk2x);
    let dk3u = f3x * (0.5 * dt * dk2u) + f3u;
    let dk4x = f4x * (id + dt * dk3x);
    let dk4u = f4x * (dt * dk3u) + f4u;

    let raw = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    let mut a = id + dt / 6.0 * (dk1x + 2.0 * dk2x + 2.0 * dk3x + dk4x);
    let mut b = dt / 6.0 * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u);

    // normalization q ↦ q / ‖q‖ has Jacobian (I − q̂q̂ᵀ) / ‖q‖
    let q: Vector4<f64> = raw.fixed_rows::<4>(idx::Q).into();
    let nq = q.norm();
    let qh = q / nq;
    let nmat = (Matrix4::identity() - qh * qh.transpose()) / nq;
    let aq = nmat * a.fixed_rows::<4>(idx::Q);
    a.fixed_rows_mut::<4>(idx::Q).copy_from(&aq);
    let bq = nmat * b.fixed_rows::<4>(idx::Q);
    b.fixed_rows_mut::<4>(idx::Q).copy_from(&bq);

    let mut next = raw;
    next.fixed_rows_mut::<4>(idx::Q).copy_from(&qh);
    let c = next - a * x - b * u;
    LinearizedStep { a, b, c }
}

#[cfg(test)]
mod tests {
    use super::super::{identity_quat, quat_from_axis_angle};
    use super::*;

    fn params() -> VehicleParams {
        VehicleParams::default()
    }

    #[test]
    fn zero_rate_gives_zero_matrix() {
        assert_eq!(quat_kinematics_matrix(&Vector3::zeros()), Matrix4::zeros());
    }

    #[test]
    fn identity_spinning_about_z() {
        let qdot = 0.5 * quat_kinematics_matrix(&Vector3::z()) * identity_quat();
        assert_eq!(qdot, Vector4::new(0.0, 0.0, 0.5, 0.0));
    }

    #[test]
    fn kinematics_matrix_is_skew() {
        let w = Vector3::new(0.3, -1.2, 2.5);
        let xi = quat_kinematics_matrix(&w);
        assert_eq!(xi.transpose(), -xi);
    }

    #[test]
    fn rate_matrix_matches_kinematics() {
        let q = Vector4::new(0.1, -0.4, 0.3, 0.8);
        let w = Vector3::new(0.7, 0.2, -0.5);
        let lhs = quat_kinematics_matrix(&w) * q;
        let rhs = quat_rate_matrix(&q) * w;
        assert!((lhs - rhs).norm() < 1e-15);
    }

    #[test]
    fn equilibrium_at_rest() {
        let x = FreeFlyerState::at_rest(Vector3::new(1.0, 2.0, 3.0), identity_quat());
        let dx = continuous_dynamics(&x, &ControlInput::zero(), &params());
        assert_eq!(dx, StateVector::zeros());
    }

    #[test]
    fn force_equals_mass_times_acceleration() {
        let p = params();
        let x = FreeFlyerState::at_rest(Vector3::zeros(), identity_quat());
        let u = ControlInput {
            force: Vector3::new(p.mass(), 0.0, 0.0),
            moment: Vector3::zeros(),
        };
        let dx = continuous_dynamics(&x, &u, &p);
        assert!((dx.fixed_rows::<3>(idx::V) - Vector3::x()).norm() < 1e-15);
    }

    #[test]
    fn principal_axis_spin_is_steady() {
        let p = VehicleParams::new(
            5.0,
            Matrix3::from_diagonal(&Vector3::new(0.1, 0.2, 0.3)),
            0.2,
            1.0,
            1.0,
            1.0,
            1.0,
        )
        .unwrap();
        let mut x = FreeFlyerState::at_rest(Vector3::zeros(), identity_quat());
        x.w = Vector3::new(0.8, 0.0, 0.0);
        let dx = continuous_dynamics(&x, &ControlInput::zero(), &p);
        assert_eq!(dx.fixed_rows::<3>(idx::W).norm(), 0.0);
    }

    #[test]
    fn coasting_translation_is_exact() {
        let mut x = FreeFlyerState::at_rest(Vector3::zeros(), identity_quat());
        x.v = Vector3::x();
        let next = discrete_step(&x, &ControlInput::zero(), &params(), 0.05);
        assert_eq!(next.r, Vector3::new(0.05, 0.0, 0.0));
    }

    #[test]
    fn tiny_step_is_continuous() {
        let mut x = FreeFlyerState::at_rest(Vector3::new(0.2, 0.1, 0.0), quat_from_axis_angle(&Vector3::y(), 0.4));
        x.v = Vector3::new(0.1, 0.0, -0.1);
        x.w = Vector3::new(0.05, 0.1, 0.0);
        let u = ControlInput {
            force: Vector3::new(0.2, 0.1, 0.0),
            moment: Vector3::new(0.0, 0.01, 0.02),
        };
        let next = discrete_step(&x, &u, &params(), 1e-9);
        assert!((next.to_vector() - x.to_vector()).norm() < 1e-8);
    }

    #[test]
    fn spin_about_z_returns_after_two_pi() {
        // closed form: q(t) = (0, 0, sin(t/2), cos(t/2)) for ω = ẑ
        let p = params();
        let mut x = FreeFlyerState::at_rest(Vector3::zeros(), identity_quat());
        x.w = Vector3::z();
        let dt = 0.01;
        let horizon = 2.0 * std::f64::consts::PI;
        let steps = (horizon / dt).floor() as usize;
        for _ in 0..steps {
            x = discrete_step(&x, &ControlInput::zero(), &p, dt);
        }
        // final partial step lands exactly on 2π
        x = discrete_step(&x, &ControlInput::zero(), &p, horizon - steps as f64 * dt);
        let t = horizon;
        let exact = Vector4::new(0.0, 0.0, (0.5 * t).sin(), (0.5 * t).cos());
        assert!((x.q - exact).norm() < 1e-6);
        let back = (x.q - identity_quat()).norm().min((x.q + identity_quat()).norm());
        assert!(back < 1e-4, "distance to ±q0 = {back}");
    }

    #[test]
    fn translation_block_structure() {
        let x = FreeFlyerState::at_rest(Vector3::new(0.3, -0.2, 0.1), identity_quat());
        let dt = 0.05;
        let lin = linearize_step(&x, &ControlInput::zero(), &params(), dt);
        let arv = lin.a.fixed_view::<3, 3>(idx::R, idx::V);
        let arr = lin.a.fixed_view::<3, 3>(idx::R, idx::R);
        assert!((arv - Matrix3::identity() * dt).norm() < 1e-15);
        assert_eq!(arr, Matrix3::identity());
    }

    #[test]
    fn affine_residual_reproduces_step() {
        let mut x = FreeFlyerState::at_rest(Vector3::new(0.3, -0.2, 0.1), quat_from_axis_angle(&Vector3::new(1.0, 1.0, 0.0), 0.7));
        x.w = Vector3::new(0.1, -0.3, 0.2);
        x.v = Vector3::new(0.0, 0.1, 0.2);
        let u = ControlInput {
            force: Vector3::new(0.3, 0.0, -0.1),
            moment: Vector3::new(0.05, 0.02, 0.0),
        };
        let p = params();
        let lin = linearize_step(&x, &u, &p, 0.2);
        let pred = lin.apply(&x.to_vector(), &u.to_vector());
        let exact = discrete_step(&x, &u, &p, 0.2).to_vector();
        assert!((pred - exact).amax() <= 1e-12);
    }
}
