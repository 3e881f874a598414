//! One convexification about the straight-line guess of an obstacle
//! problem: program size, the solved candidate, and how well the convex
//! model predicted the true penalized cost.

use ffplan::conic::{solve, Settings};
use ffplan::convexify::{accuracy_ratio, build_subproblem, true_penalized_cost, PenaltyState};
use ffplan::model::{identity_quat, ObstacleBox};
use ffplan::ocp::{evaluate_feasibility, straight_line_initialization, ProblemParameters};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ProblemParameters::rest_to_rest(Vector3::new(-1.2, 0.0, 0.0), identity_quat(), Vector3::new(1.2, 0.1, 0.0), identity_quat(), 30, 0.75)
        .with_obstacle(ObstacleBox::new(Vector3::new(0.0, 0.05, 0.0), Vector3::new(0.25, 0.25, 0.25))?);
    let reference = straight_line_initialization(&params);
    let before = evaluate_feasibility(&reference, &params);
    println!("straight line: obstacle violation {:.3}", before.obstacle);

    for (omega, delta) in [(1.0, 10.0), (100.0, 10.0), (100.0, 1.0)] {
        let pen = PenaltyState::new(omega, delta)?;
        let sub = build_subproblem(&reference, &params, pen)?;
        let res = solve(&sub.program, &Settings::default().with_tolerance(1e-6), None)?;
        let cand = sub.unpack(&res.x);
        let model = sub.model_objective(&cand, &params);
        let truth = true_penalized_cost(&cand, &reference, &params, pen);
        let after = evaluate_feasibility(&cand, &params);
        println!(
            "ω={omega:5} Δ={delta:4}: {} vars, {} rows, {} iterations; slack sum {:.2e}, obstacle {:.3}, defect {:.2e}, ρ={:.3}",
            sub.program.num_vars(),
            sub.program.num_rows(),
            res.iterations,
            sub.slack_sum(&res.x),
            after.obstacle,
            after.max_dynamics_defect,
            accuracy_ratio(truth, model)
        );
    }
    Ok(())
}
