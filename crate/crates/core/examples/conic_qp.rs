//! The conic solver on its own: a small QP mixing equality, box and
//! second-order-cone rows, solved cold and then re-solved from the first
//! solution after a cost perturbation.

use ffplan::conic::{solve, Cone, ConicProgram, CscMatrix, Settings, TripletBuilder, WarmStart};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // min ½‖x‖² + qᵀx
    // s.t. x0 + x1 + x2 = 1,  −0.2 ≤ x ≤ 0.8,  ‖(x1, x2)‖ ≤ 0.6
    let n = 3;
    let mut p = TripletBuilder::new(n, n);
    for i in 0..n {
        p.push(i, i, 1.0);
    }
    let mut a = TripletBuilder::new(1 + n + 3, n);
    for j in 0..n {
        a.push(0, j, 1.0);
        a.push(1 + j, j, 1.0);
    }
    a.push(5, 1, 1.0);
    a.push(6, 2, 1.0);
    let cones = vec![
        Cone::equal_to(vec![1.0]),
        Cone::Box {
            lower: vec![-0.2; n],
            upper: vec![0.8; n],
        },
        // (0.6, x1, x2) in the Lorentz cone: constant first row via the shift.
        Cone::SecondOrder {
            shift: vec![-0.6, 0.0, 0.0],
        },
    ];
    let (p, a): (CscMatrix, CscMatrix) = (p.build(), a.build());
    let prog = ConicProgram::new(p.clone(), vec![-1.0, 0.5, -0.3], a.clone(), cones.clone())?;
    let settings = Settings::default().with_tolerance(1e-8);

    let cold = solve(&prog, &settings, None)?;
    println!("cold: {:?} in {} iterations, x = {:.5?}", cold.status, cold.iterations, cold.x);

    let nudged = ConicProgram::new(p, vec![-1.0, 0.45, -0.3], a, cones)?;
    let warm = solve(
        &nudged,
        &settings,
        Some(WarmStart {
            x: &cold.x,
            y: Some(&cold.y),
        }),
    )?;
    let again = solve(&nudged, &settings, None)?;
    println!(
        "perturbed: {} iterations from the old solution, {} from zero, x = {:.5?}",
        warm.iterations, again.iterations, warm.x
    );
    Ok(())
}
