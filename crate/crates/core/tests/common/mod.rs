#![allow(dead_code)]

use ffplan::conic::{Cone, ConicProgram, CscMatrix, TripletBuilder};
use ffplan::model::{normalize_quat, ControlInput, FreeFlyerState};
use nalgebra::{DMatrix, DVector, Vector3, Vector4};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn upper(full: &DMatrix<f64>) -> CscMatrix {
    let n = full.nrows();
    let mut b = TripletBuilder::new(n, n);
    for j in 0..n {
        for i in 0..=j {
            if full[(i, j)] != 0.0 {
                b.push(i, j, full[(i, j)]);
            }
        }
    }
    b.build()
}

pub fn csc(m: &DMatrix<f64>) -> CscMatrix {
    let mut b = TripletBuilder::new(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != 0.0 {
                b.push(i, j, m[(i, j)]);
            }
        }
    }
    b.build()
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    m.transpose() * &m + DMatrix::identity(n, n)
}

pub fn unit_vec(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Builds a strictly convex program whose unique primal solution is known by
/// construction: pick x*, choose multipliers in the normal cone of each
/// segment at A x*, and set q = −P x* − Aᵀ y*.
pub fn manufactured_program(rng: &mut ChaCha8Rng) -> (ConicProgram, Vec<f64>) {
    // more variables than active constraints keeps the multipliers unique
    let n = rng.random_range(9..16);
    let p = random_spd(rng, n);
    let xs = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut cones = Vec::new();
    let new_rows = |k: usize, rng: &mut ChaCha8Rng, rows: &mut Vec<DVector<f64>>| {
        let start = rows.len();
        for _ in 0..k {
            rows.push(DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)));
        }
        (start..start + k)
            .map(|i| rows[i].dot(&xs))
            .collect::<Vec<f64>>()
    };
    // zero segment
    let z = new_rows(2, rng, &mut rows);
    ys.extend((0..2).map(|_| rng.random_range(-1.0..1.0)));
    cones.push(Cone::equal_to(z));
    // box segment: one inactive row, one at lower, one at upper
    let z = new_rows(3, rng, &mut rows);
    cones.push(Cone::Box {
        lower: vec![z[0] - 0.5, z[1], z[2] - 1.0],
        upper: vec![z[0] + 0.5, z[1] + 1.0, z[2]],
    });
    ys.extend([0.0, -rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)]);
    // active ball
    let k = rng.random_range(2..4);
    let z = new_rows(k, rng, &mut rows);
    let dir = unit_vec(rng, k);
    let radius = rng.random_range(0.2..1.0);
    let center: Vec<f64> = z.iter().zip(&dir).map(|(zi, d)| zi - radius * d).collect();
    let lam = rng.random_range(0.1..1.0);
    ys.extend(dir.iter().map(|d| lam * d));
    cones.push(Cone::ball(center, radius));
    // inactive ball
    let z = new_rows(2, rng, &mut rows);
    cones.push(Cone::ball(z.clone(), 0.5));
    ys.extend([0.0, 0.0]);
    // active second-order cone: z − shift = (t, v), ‖v‖ = t
    let k = rng.random_range(3..5);
    let z = new_rows(k, rng, &mut rows);
    let t = rng.random_range(0.2..1.5);
    let v: Vec<f64> = unit_vec(rng, k - 1).iter().map(|d| d * t).collect();
    let shift: Vec<f64> = z
        .iter()
        .enumerate()
        .map(|(i, zi)| zi - if i == 0 { t } else { v[i - 1] })
        .collect();
    let mu = rng.random_range(0.1..1.0);
    ys.push(-mu * t);
    ys.extend(v.iter().map(|vi| mu * vi));
    cones.push(Cone::SecondOrder { shift });
    // strictly interior second-order cone
    let k = 3;
    let z = new_rows(k, rng, &mut rows);
    let shift = vec![z[0] - 2.0, z[1] - 0.3, z[2] + 0.2];
    cones.push(Cone::SecondOrder { shift });
    ys.extend([0.0, 0.0, 0.0]);

    let m = rows.len();
    let a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let y = DVector::from_vec(ys);
    let q = -(&p * &xs) - a.transpose() * y;
    let prog = ConicProgram::new(upper(&p), q.iter().copied().collect(), csc(&a), cones).unwrap();
    (prog, xs.iter().copied().collect())
}

pub fn cone_strategy() -> impl Strategy<Value = (Cone, Vec<f64>, Vec<f64>)> {
    let dim = 2usize..6;
    (dim, 0u8..4).prop_flat_map(|(d, kind)| {
        let vecs = (
            prop::collection::vec(-5.0f64..5.0, d),
            prop::collection::vec(-5.0f64..5.0, d),
            prop::collection::vec(-5.0f64..5.0, d),
            prop::collection::vec(0.0f64..3.0, d),
            0.0f64..3.0,
        );
        vecs.prop_map(move |(a, b, c, w, r)| {
            let cone = match kind {
                0 => Cone::equal_to(c.clone()),
                1 => Cone::Box {
                    lower: c.clone(),
                    upper: c.iter().zip(&w).map(|(l, w)| l + w).collect(),
                },
                2 => Cone::ball(c.clone(), r),
                _ => Cone::SecondOrder { shift: c.clone() },
            };
            (cone, a, b)
        })
    })
}


pub fn random_state(rng: &mut ChaCha8Rng) -> FreeFlyerState {
    let v3 = |rng: &mut ChaCha8Rng, s: f64| Vector3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s));
    let q = Vector4::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    FreeFlyerState {
        r: v3(rng, 2.0),
        v: v3(rng, 0.5),
        q: normalize_quat(&q),
        w: v3(rng, 0.5),
    }
}

pub fn random_control(rng: &mut ChaCha8Rng) -> ControlInput {
    ControlInput {
        force: Vector3::new(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8)),
        moment: Vector3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)),
    }
}
