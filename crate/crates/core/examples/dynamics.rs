//! Rigid-body model: propagate a tumbling state, watch the quaternion norm,
//! and compare the step Jacobian with finite differences.

use ffplan::model::{discrete_step, identity_quat, linearize_step, ControlInput, FreeFlyerState, VehicleParams};
use nalgebra::Vector3;

fn main() {
    let veh = VehicleParams::default();
    let dt = 0.2;
    let mut x = FreeFlyerState::at_rest(Vector3::zeros(), identity_quat());
    x.w = Vector3::new(0.3, -0.1, 0.2);
    let u = ControlInput {
        force: Vector3::new(0.05, 0.0, -0.02),
        moment: Vector3::new(0.0, 0.01, 0.0),
    };

    let mut s = x;
    for k in 0..=50 {
        if k % 10 == 0 {
            println!("t={:4.1}  r={:?}  |q|-1={:+.1e}", k as f64 * dt, s.r.as_slice(), s.q.norm() - 1.0);
        }
        s = discrete_step(&s, &u, &veh, dt);
    }

    let lin = linearize_step(&x, &u, &veh, dt);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for j in 0..13 {
        let mut xp = x.to_vector();
        let mut xm = xp;
        xp[j] += h;
        xm[j] -= h;
        let fp = discrete_step(&FreeFlyerState::from_vector(&xp), &u, &veh, dt).to_vector();
        let fm = discrete_step(&FreeFlyerState::from_vector(&xm), &u, &veh, dt).to_vector();
        worst = worst.max(((fp - fm) / (2.0 * h) - lin.a.column(j)).amax());
    }
    println!("max |A - finite difference| = {worst:.2e}");
}
