use crate::model::{discrete_step, idx, linearize_step, FreeFlyerState};
use crate::ocp::{ProblemParameters, Trajectory};
use nalgebra::{DMatrix, DVector, Matrix3, Quaternion, UnitQuaternion, Vector3, Vector4};

const ATTITUDE_PASSES: usize = 8;
const ATTITUDE_TOL: f64 = 1e-12;
const MOMENT_NEWTON_STEPS: usize = 3;

fn unit(q: &Vector4<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::from_quaternion(Quaternion::from(*q))
}

/// Turns a decoded prediction into a dynamically consistent rest-to-rest
/// reference that starts at the start state and ends at the goal pose.
///
/// Translation: the predicted path is first shifted by a ramp that moves its
/// end points (`raw_start` is the prediction at `τ = 0`, before the start
/// state was overwritten) onto the start and goal, then projected per axis
/// onto the double-integrator dynamics with zero final velocity, staying as
/// close as possible to the predicted positions, velocities and forces.
///
/// Rotation: the final rate is zeroed, moments are solved so the rate
/// sequence obeys the Euler equations, attitudes are integrated from the
/// start, and a constant world-frame rate is folded into the interior rates
/// until the final attitude reaches the goal.
///
/// Componentwise fits leave defects between knots; a reference with defects
/// can only be repaired by steps larger than a shrunken trust region, and an
/// attitude defect keeps the linearized norm penalties active in every
/// subproblem.
pub fn repair_warm_start(traj: &mut Trajectory, raw_start: &FreeFlyerState, params: &ProblemParameters) {
    let n = params.horizon;
    let total = params.duration();
    let e0 = params.x_init.r - raw_start.r;
    let e1 = params.r_goal - traj.states[n].r;
    for (k, s) in traj.states.iter_mut().enumerate().skip(1) {
        let tau = k as f64 / n as f64;
        s.r += e0 * (1.0 - tau) + e1 * tau;
        if k < n {
            s.v += (e1 - e0) / total;
        }
    }
    project_translation(traj, params);

    traj.states[n].w = Vector3::zeros();
    for pass in 0..=ATTITUDE_PASSES {
        fit_moments(traj, params);
        integrate_attitude(traj, params);
        let q_end = traj.states[n].q;
        let miss = (unit(&params.goal_quat_near(&q_end)) * unit(&q_end).inverse()).scaled_axis();
        if miss.norm() <= ATTITUDE_TOL || pass == ATTITUDE_PASSES {
            break;
        }
        for (k, s) in traj.states.iter_mut().enumerate().take(n).skip(1) {
            let ramp = UnitQuaternion::from_scaled_axis(miss * (k as f64 / n as f64));
            let q = ramp * unit(&s.q);
            s.w += q.inverse() * (miss / total);
        }
    }
}

/// Least-squares projection of positions, velocities and forces onto the
/// exact zero-order-hold double integrator with fixed start, goal position
/// and zero final velocity. Axes decouple and share one KKT matrix.
fn project_translation(traj: &mut Trajectory, params: &ProblemParameters) {
    let n = params.horizon;
    let h = params.dt;
    let c = h / params.vehicle.mass();
    // r_k = r0 + k h v0 + Σ_{j<k} sr[k][j] F_j,  v_k = v0 + Σ_{j<k} c F_j
    let sr = DMatrix::from_fn(n + 1, n, |k, j| if j < k { h * c * ((k - j) as f64 - 0.5) } else { 0.0 });
    let sv = DMatrix::from_fn(n + 1, n, |k, j| if j < k { c } else { 0.0 });
    let (sr_in, sv_in) = (sr.rows(1, n - 1), sv.rows(1, n - 1));
    let reg = (h * c).powi(2);
    let hess = sr_in.transpose() * sr_in + h * h * sv_in.transpose() * sv_in + DMatrix::identity(n, n) * reg;
    let mut kkt = DMatrix::zeros(n + 2, n + 2);
    kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
    for j in 0..n {
        kkt[(n, j)] = sr[(n, j)];
        kkt[(j, n)] = sr[(n, j)];
        kkt[(n + 1, j)] = sv[(n, j)];
        kkt[(j, n + 1)] = sv[(n, j)];
    }
    let lu = kkt.lu();
    let x0 = params.x_init;
    for a in 0..3 {
        let (r0, v0) = (x0.r[a], x0.v[a]);
        let r_free = DVector::from_fn(n - 1, |i, _| traj.states[i + 1].r[a] - r0 - (i + 1) as f64 * h * v0);
        let v_free = DVector::from_fn(n - 1, |i, _| traj.states[i + 1].v[a] - v0);
        let f_hat = DVector::from_fn(n, |j, _| traj.controls[j].force[a]);
        let grad = sr_in.transpose() * r_free + h * h * sv_in.transpose() * v_free + f_hat * reg;
        let mut rhs = DVector::zeros(n + 2);
        rhs.rows_mut(0, n).copy_from(&grad);
        rhs[n] = params.r_goal[a] - r0 - n as f64 * h * v0;
        rhs[n + 1] = -v0;
        let Some(sol) = lu.solve(&rhs) else { return };
        let f = sol.rows(0, n);
        let (r, v) = (&sr * f, &sv * f);
        for k in 0..=n {
            traj.states[k].r[a] = r0 + k as f64 * h * v0 + r[k];
            traj.states[k].v[a] = v0 + v[k];
        }
        for j in 0..n {
            traj.controls[j].force[a] = f[j];
        }
    }
}

/// Moments that carry each rate to the next through the model; the rate
/// dynamics do not depend on the other states, and a few Newton steps on
/// the nearly linear step suffice.
fn fit_moments(traj: &mut Trajectory, params: &ProblemParameters) {
    for k in 0..params.horizon {
        for _ in 0..MOMENT_NEWTON_STEPS {
            let (x, u) = (&traj.states[k], &traj.controls[k]);
            let resid = discrete_step(x, u, &params.vehicle, params.dt).w - traj.states[k + 1].w;
            let lin = linearize_step(x, u, &params.vehicle, params.dt);
            let jac: Matrix3<f64> = lin.b.fixed_view::<3, 3>(idx::W, idx::M).into_owned();
            match jac.lu().solve(&resid) {
                Some(d) => traj.controls[k].moment -= d,
                None => break,
            }
        }
    }
}

fn integrate_attitude(traj: &mut Trajectory, params: &ProblemParameters) {
    for k in 0..params.horizon {
        let next = discrete_step(&traj.states[k], &traj.controls[k], &params.vehicle, params.dt);
        traj.states[k + 1].q = next.q;
    }
}

/// Largest change in attitude across one step not explained by the model.
pub fn attitude_defect(traj: &Trajectory, params: &ProblemParameters) -> f64 {
    (0..traj.controls.len())
        .map(|k| {
            let next = discrete_step(&traj.states[k], &traj.controls[k], &params.vehicle, params.dt);
            let d: Vector3<f64> = (unit(&next.q).inverse() * unit(&traj.states[k + 1].q)).scaled_axis();
            d.norm()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{quat_from_axis_angle, quat_geodesic_distance};
    use crate::ocp::{evaluate_feasibility, straight_line_initialization};

    fn problem() -> ProblemParameters {
        let q0 = quat_from_axis_angle(&Vector3::new(1.0, 2.0, 0.5).normalize(), 0.4);
        let q1 = quat_from_axis_angle(&Vector3::new(-0.3, 0.2, 1.0).normalize(), 2.2);
        ProblemParameters::rest_to_rest(Vector3::new(0.1, -0.4, 0.2), q0, Vector3::new(0.5, 1.5, -0.1), q1, 30, 0.75)
    }

    #[test]
    fn repaired_reference_is_consistent_and_meets_boundary() {
        let p = problem();
        let mut t = straight_line_initialization(&p);
        for (k, s) in t.states.iter_mut().enumerate() {
            s.r.x += 0.05 + 0.01 * k as f64;
            s.v.y += 0.02 * (k as f64 * 0.4).cos();
            s.w += Vector3::new(0.01, -0.02, 0.005) * (k as f64 * 0.3).sin();
            s.q = (s.q + Vector4::new(0.05, -0.02, 0.03, 0.0) * (k as f64 * 0.3).sin()).normalize();
        }
        let raw_start = t.states[0];
        t.states[0] = p.x_init;
        assert!(evaluate_feasibility(&t, &p).max_dynamics_defect > 1e-3);
        repair_warm_start(&mut t, &raw_start, &p);
        let n = p.horizon;
        let fr = evaluate_feasibility(&t, &p);
        assert!(fr.max_dynamics_defect < 1e-9, "{fr:?}");
        assert!(fr.goal_position < 1e-12 && fr.terminal_rate < 1e-12, "{fr:?}");
        assert_eq!(t.states[0], p.x_init);
        assert!((t.states[n].r - p.r_goal).norm() < 1e-9);
        assert!(quat_geodesic_distance(&t.states[n].q, &p.q_goal) < 1e-8);
        assert!(attitude_defect(&t, &p) < 1e-12);
    }

    #[test]
    fn consistent_reference_is_unchanged() {
        // bang-bang translation at a fixed attitude
        let mut p = problem();
        p.q_goal = p.x_init.q;
        let mut t = straight_line_initialization(&p);
        let n = p.horizon;
        for (k, u) in t.controls.iter_mut().enumerate() {
            u.force = Vector3::new(0.1, -0.05, 0.02) * if k < n / 2 { 1.0 } else { -1.0 };
            u.moment = Vector3::zeros();
        }
        t.states[0] = p.x_init;
        for k in 0..n {
            t.states[k + 1] = discrete_step(&t.states[k], &t.controls[k], &p.vehicle, p.dt);
        }
        p.r_goal = t.states[n].r;
        let before = t.clone();
        repair_warm_start(&mut t, &before.states[0], &p);
        for (a, b) in t.states.iter().zip(&before.states) {
            assert!((a.to_vector() - b.to_vector()).amax() < 1e-9);
        }
        for (a, b) in t.controls.iter().zip(&before.controls) {
            assert!((a.to_vector() - b.to_vector()).amax() < 1e-9);
        }
    }

    #[test]
    fn repair_is_idempotent() {
        let p = problem();
        let mut t = straight_line_initialization(&p);
        t.states[7].w = Vector3::new(0.03, 0.0, -0.01);
        repair_warm_start(&mut t, &p.x_init, &p);
        let once = t.clone();
        repair_warm_start(&mut t, &p.x_init, &p);
        for (a, b) in t.states.iter().zip(&once.states) {
            assert!((a.to_vector() - b.to_vector()).amax() < 1e-9);
        }
    }
}
