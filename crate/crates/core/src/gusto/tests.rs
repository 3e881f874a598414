use super::*;
use crate::conic::solve;
use crate::model::{identity_quat, quat_from_axis_angle, ControlInput, ObstacleBox};
use nalgebra::Vector3;

fn problem(goal: Vector3<f64>, q_goal: nalgebra::Vector4<f64>) -> ProblemParameters {
    ProblemParameters::rest_to_rest(Vector3::zeros(), identity_quat(), goal, q_goal, 40, 0.5)
}

#[test]
fn start_at_goal_converges_immediately() {
    let p = problem(Vector3::zeros(), identity_quat());
    let rep = solve_cold(&p, &GustoConfig::default()).unwrap();
    assert_eq!(rep.status, GustoStatus::Converged);
    assert_eq!(rep.accepted, 1);
    assert_eq!(rep.outer_iterations, 1);
    assert!(rep.cost <= 1e-12);
    for u in &rep.trajectory.controls {
        assert!(u.to_vector().amax() <= 1e-6);
    }
}

#[test]
fn translation_matches_single_convex_solve() {
    let p = problem(Vector3::new(1.0, 0.4, -0.3), identity_quat());
    let mut cfg = GustoConfig::default();
    cfg.inner = cfg.inner.with_tolerance(1e-9);
    let rep = solve_cold(&p, &cfg).unwrap();
    assert_eq!(rep.status, GustoStatus::Converged);
    assert!(rep.gbar <= cfg.epsilon);

    let init = straight_line_initialization(&p);
    let sp = build_subproblem(&init, &p, PenaltyState { omega: cfg.omega0, delta: cfg.delta0 }).unwrap();
    let direct = solve(&sp.program, &cfg.inner.with_tolerance(1e-10), None).unwrap();
    let oracle = cost(&sp.unpack(&direct.x), &p);
    assert!((rep.cost - oracle).abs() <= 1e-6 * oracle, "{} vs {oracle}", rep.cost);
}

#[test]
fn rotation_converges_with_unit_quaternions() {
    let p = problem(Vector3::zeros(), quat_from_axis_angle(&Vector3::z(), std::f64::consts::FRAC_PI_2));
    let cfg = GustoConfig::default();
    let rep = solve_cold(&p, &cfg).unwrap();
    assert_eq!(rep.status, GustoStatus::Converged, "{:?}", rep.trace);
    for s in &rep.trajectory.states {
        assert!((s.q.norm() - 1.0).abs() <= cfg.epsilon);
    }
}

#[test]
fn cold_equals_explicit_straight_line() {
    let p = problem(Vector3::new(0.5, 0.0, 0.2), quat_from_axis_angle(&Vector3::x(), 0.6));
    let cfg = GustoConfig::default();
    let a = solve_cold(&p, &cfg).unwrap();
    let b = solve_ocp(&p, straight_line_initialization(&p), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn goal_inside_obstacle_fails() {
    let goal = Vector3::new(1.0, 0.0, 0.0);
    let p = problem(goal, identity_quat()).with_obstacle(ObstacleBox::new(goal, Vector3::repeat(0.2)).unwrap());
    let rep = solve_cold(&p, &GustoConfig::default()).unwrap();
    assert_eq!(rep.status, GustoStatus::Failure);
}

#[test]
fn obstacle_is_avoided() {
    let p = problem(Vector3::new(1.5, 0.0, 0.0), identity_quat())
        .with_obstacle(ObstacleBox::new(Vector3::new(0.75, 0.05, 0.0), Vector3::new(0.1, 0.1, 0.1)).unwrap());
    // at ω = 1 cutting the corner is cheaper than the hinge, and the reset
    // after each feasible round makes the iterates alternate
    let stuck = solve_cold(&p, &GustoConfig { omega0: 1.0, ..GustoConfig::default() }).unwrap();
    assert_eq!(stuck.status, GustoStatus::MaxOuter);
    let cfg = GustoConfig::default();
    let rep = solve_cold(&p, &cfg).unwrap();
    assert_eq!(rep.status, GustoStatus::Converged, "{:?}", rep.trace);
    let fr = evaluate_feasibility(&rep.trajectory, &p);
    assert!(fr.obstacle <= cfg.epsilon);
}

#[test]
fn trace_invariants() {
    let p = problem(Vector3::new(0.8, -0.3, 0.1), quat_from_axis_angle(&Vector3::new(1.0, 1.0, 0.0), 1.2));
    let cfg = GustoConfig::default();
    let rep = solve_cold(&p, &cfg).unwrap();
    assert_eq!(rep.trace.len(), rep.outer_iterations);
    assert_eq!(rep.inner_iterations, rep.trace.iter().map(|r| r.inner_iterations).sum::<usize>());
    for r in rep.trace.iter().filter(|r| r.accepted()) {
        assert!(r.step_norm <= r.delta);
    }
    for w in rep.trace.windows(2) {
        assert!(w[1].omega >= w[0].omega || w[1].omega == cfg.omega0);
    }
}

#[test]
fn rejects_mismatched_initialization() {
    let p = problem(Vector3::new(1.0, 0.0, 0.0), identity_quat());
    let mut init = straight_line_initialization(&p);
    init.controls.push(ControlInput::zero());
    assert!(solve_ocp(&p, init, &GustoConfig::default()).is_err());
}
