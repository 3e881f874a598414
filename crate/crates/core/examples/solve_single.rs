//! Cold-start solve of a rotation-and-translation transfer past one box,
//! writing the trajectory CSV and a top-view SVG to the working directory.

use ffplan::gusto::{solve_cold, GustoConfig};
use ffplan::model::{quat_from_axis_angle, ObstacleBox};
use ffplan::ocp::{evaluate_feasibility, trajectory_svg, write_trajectory_csv, ProblemParameters};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q0 = quat_from_axis_angle(&Vector3::z(), 0.0);
    let q1 = quat_from_axis_angle(&Vector3::new(1.0, 1.0, 0.0).normalize(), 1.2);
    let params = ProblemParameters::rest_to_rest(Vector3::new(-1.5, -0.2, 0.0), q0, Vector3::new(1.5, 0.3, 0.1), q1, 40, 0.75)
        .with_obstacle(ObstacleBox::new(Vector3::new(0.0, 0.0, 0.0), Vector3::new(0.3, 0.3, 0.3))?);

    let rep = solve_cold(&params, &GustoConfig::default())?;
    println!(
        "{:?} after {} rounds ({} accepted), {} conic iterations, cost {:.5}",
        rep.status, rep.outer_iterations, rep.accepted, rep.inner_iterations, rep.cost
    );
    for (k, round) in rep.trace.iter().enumerate() {
        println!(
            "  round {k:2}: {:?} Δ={:.3} ω={:.0} inner={}",
            round.outcome, round.delta, round.omega, round.inner_iterations
        );
    }
    let feas = evaluate_feasibility(&rep.trajectory, &params);
    println!("violation {:.2e}, dynamics defect {:.2e}", feas.max_constraint_violation, feas.max_dynamics_defect);

    std::fs::write("solve_single.csv", write_trajectory_csv(&rep.trajectory))?;
    std::fs::write("solve_single.svg", trajectory_svg(&rep.trajectory, &params))?;
    Ok(())
}
