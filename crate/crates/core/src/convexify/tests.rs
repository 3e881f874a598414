use super::*;
use crate::conic::{solve, Settings, SolveStatus};
use crate::model::{discrete_step, identity_quat, ControlInput, FreeFlyerState, ObstacleBox};
use crate::ocp::straight_line_initialization;

fn transfer(n: usize) -> ProblemParameters {
    ProblemParameters::rest_to_rest(
        Vector3::zeros(),
        identity_quat(),
        Vector3::new(1.0, 0.5, -0.2),
        identity_quat(),
        n,
        1.0,
    )
}

fn hold(x: FreeFlyerState, n: usize, dt: f64) -> Trajectory {
    Trajectory {
        states: vec![x; n + 1],
        controls: vec![ControlInput::zero(); n],
        dt,
    }
}

fn pen(omega: f64) -> PenaltyState {
    PenaltyState::new(omega, 10.0).unwrap()
}

#[test]
fn variable_count_without_obstacles() {
    let n = 12;
    let p = transfer(n);
    let sp = build_subproblem(&straight_line_initialization(&p), &p, pen(1.0)).unwrap();
    assert_eq!(sp.program.num_vars(), 13 * (n + 1) + 6 * n + (n + 1) + 2 * (n + 1));
    let q = p.clone().with_obstacle(ObstacleBox::new(Vector3::new(5.0, 5.0, 5.0), Vector3::repeat(0.2)).unwrap());
    let sp = build_subproblem(&straight_line_initialization(&q), &q, pen(1.0)).unwrap();
    assert_eq!(sp.program.num_vars(), 13 * (n + 1) + 6 * n + 4 * (n + 1));
}

#[test]
fn layout_round_trips() {
    let p = transfer(7);
    let mut tr = straight_line_initialization(&p);
    for (t, u) in tr.controls.iter_mut().enumerate() {
        u.force = Vector3::new(t as f64, -1.0, 0.5);
        u.moment = Vector3::new(0.1, t as f64 * 0.01, 0.0);
    }
    let lay = VarLayout::new(7, 1);
    assert_eq!(lay.unpack(&lay.pack(&tr), tr.dt), tr);
}

#[test]
fn rejects_bad_inputs() {
    let p = transfer(6);
    let tr = straight_line_initialization(&p);
    assert!(matches!(
        build_subproblem(&tr, &p, PenaltyState { omega: 0.5, delta: 1.0 }),
        Err(ConvexifyError::Penalty { .. })
    ));
    let mut short = tr.clone();
    short.controls.pop();
    assert!(matches!(build_subproblem(&short, &p, pen(1.0)), Err(ConvexifyError::Problem(_))));
}

#[test]
fn penalty_part_is_linear_in_omega() {
    let p = transfer(10).with_obstacle(ObstacleBox::new(Vector3::new(0.5, 0.25, -0.1), Vector3::repeat(0.2)).unwrap());
    let reference = straight_line_initialization(&p);
    let mut cand = reference.clone();
    cand.states[4].r.x += 0.3;
    cand.states[6].q *= 1.1;
    cand.controls[2].force.y = 0.4;
    let base = cost(&cand, &p);
    let a = build_subproblem(&reference, &p, pen(3.0)).unwrap().model_objective(&cand, &p) - base;
    let b = build_subproblem(&reference, &p, pen(6.0)).unwrap().model_objective(&cand, &p) - base;
    assert!(a > 0.0);
    assert!((b - 2.0 * a).abs() <= 1e-12 * b.abs());
    let ta = true_penalized_cost(&cand, &reference, &p, pen(3.0)) - base;
    let tb = true_penalized_cost(&cand, &reference, &p, pen(6.0)) - base;
    assert!((tb - 2.0 * ta).abs() <= 1e-12 * tb.abs());
}

/// Accelerate for one step, brake for one step: only state 1 moves.
fn pulse() -> (ProblemParameters, Trajectory) {
    let dt = 2.0;
    let mut p = transfer(2);
    p.dt = dt;
    let f = Vector3::new(0.8, 0.0, 0.0);
    let controls = vec![
        ControlInput { force: f, moment: Vector3::zeros() },
        ControlInput { force: -f, moment: Vector3::zeros() },
    ];
    let mut states = vec![p.x_init];
    for u in &controls {
        let next = discrete_step(states.last().unwrap(), u, &p.vehicle, dt);
        states.push(next);
    }
    states[2].v = Vector3::zeros();
    p.r_goal = states[2].r;
    (p, Trajectory { states, controls, dt })
}

#[test]
fn true_cost_of_feasible_trajectory_is_plain_cost() {
    let (p, tr) = pulse();
    let c = true_penalized_cost(&tr, &tr, &p, pen(10.0));
    assert!((c - cost(&tr, &p)).abs() < 1e-12, "{c} vs {}", cost(&tr, &p));
    assert!((cost(&tr, &p) - 2.0 * 0.64).abs() < 1e-12);
}

#[test]
fn true_cost_charges_speed_violation() {
    let (mut p, tr) = pulse();
    let peak = tr.states[1].v.norm();
    p.vehicle.v_max = peak - 0.1;
    let c = true_penalized_cost(&tr, &tr, &p, pen(10.0));
    assert!((c - (cost(&tr, &p) + 1.0)).abs() < 1e-12);
}

#[test]
fn obstacle_linearization_error_scales_with_omega() {
    // reference above the +y face, candidate beside the +x/+y edge
    let obs = ObstacleBox::new(Vector3::zeros(), Vector3::repeat(0.5)).unwrap();
    let n = 4;
    let cand_x = FreeFlyerState::at_rest(Vector3::new(0.9, 0.62, 0.0), identity_quat());
    let ref_x = FreeFlyerState::at_rest(Vector3::new(0.0, 0.9, 0.0), identity_quat());
    let mut p = ProblemParameters::rest_to_rest(cand_x.r, identity_quat(), cand_x.r, identity_quat(), n, 1.0);
    p.obstacles.push(obs);
    let reference = hold(ref_x, n, 1.0);
    let cand = hold(cand_x, n, 1.0);
    // linearized: 0.05 − (0.4 − 0.26) − (0.62 − 0.9) = 0.19; true sd is clear
    let per_state = 0.19;
    for omega in [1.0, 4.0] {
        let big = PenaltyState::new(omega, 100.0).unwrap();
        let sp = build_subproblem(&reference, &p, big).unwrap();
        let model = sp.model_objective(&cand, &p);
        let truth = true_penalized_cost(&cand, &reference, &p, big);
        assert!((model - truth - omega * per_state * (n + 1) as f64).abs() < 1e-12);
        assert!(accuracy_ratio(truth, model) > 0.0);
    }
}

#[test]
fn accuracy_ratio_floors_denominator() {
    assert_eq!(accuracy_ratio(0.0, 0.0), 0.0);
    assert!((accuracy_ratio(1e-9, 0.0) - 1.0).abs() < 1e-15);
    assert!((accuracy_ratio(3.0, 2.0) - 0.5).abs() < 1e-15);
}

fn tight() -> Settings {
    Settings::default().with_tolerance(1e-9)
}

#[test]
fn translation_only_model_is_exact() {
    let p = transfer(20);
    let reference = straight_line_initialization(&p);
    let sp = build_subproblem(&reference, &p, pen(1.0)).unwrap();
    let res = solve(&sp.program, &tight(), None).unwrap();
    assert_eq!(res.status, SolveStatus::Solved);
    let cand = sp.unpack(&res.x);
    let model = sp.model_objective(&cand, &p);
    let truth = true_penalized_cost(&cand, &reference, &p, sp.penalty);
    assert!((model - truth).abs() <= 1e-9, "model {model} true {truth}");
    assert!(accuracy_ratio(truth, model) <= 1e-6);
    assert!((model - res.objective).abs() <= 1e-6 * model.abs().max(1.0));
}

#[test]
fn slacks_are_tight_and_clear_obstacle_is_inactive() {
    let far = ObstacleBox::new(Vector3::new(0.5, -1.5, 0.0), Vector3::new(0.3, 0.2, 0.3)).unwrap();
    let p = transfer(15).with_obstacle(far);
    let reference = straight_line_initialization(&p);
    let sp = build_subproblem(&reference, &p, pen(1.0)).unwrap();
    let res = solve(&sp.program, &tight(), None).unwrap();
    assert_eq!(res.status, SolveStatus::Solved);
    let lay = sp.layout;
    for t in 0..=15 {
        assert!(res.x[lay.obstacle_slack(0, t)].abs() <= 1e-7);
    }
    let repacked = sp.pack_with_slacks(&sp.unpack(&res.x));
    for k in lay.slack_start()..lay.num_vars() {
        assert!((repacked[k] - res.x[k]).abs() <= 1e-6, "slack {k}: {} vs {}", repacked[k], res.x[k]);
    }
}

#[test]
fn blocking_obstacle_pushes_path_out() {
    // off-center so every cut pushes toward −y
    let wall = ObstacleBox::new(Vector3::new(0.5, 0.33, -0.1), Vector3::new(0.1, 0.1, 0.1)).unwrap();
    let p = transfer(15).with_obstacle(wall);
    let reference = straight_line_initialization(&p);
    let sp = build_subproblem(&reference, &p, pen(100.0)).unwrap();
    let res = solve(&sp.program, &tight(), None).unwrap();
    assert_eq!(res.status, SolveStatus::Solved);
    let cand = sp.unpack(&res.x);
    for (t, s) in cand.states.iter().enumerate() {
        let lin = sp.cuts[0][t].offset - sp.cuts[0][t].normal.dot(&s.r);
        assert!(lin <= 1e-6, "step {t}: linearized violation {lin}");
    }
}
