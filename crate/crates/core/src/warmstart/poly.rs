use crate::model::{idx, identity_quat, ControlInput, ControlVector, FreeFlyerState, StateVector, CONTROL_DIM, STATE_DIM};
use crate::ocp::{ProblemParameters, Trajectory};
use nalgebra::{DMatrix, SMatrix};

/// Polynomial degree of every fitted dimension.
pub const DEGREE: usize = 3;
pub const NUM_COEFFS: usize = DEGREE + 1;
/// Length of the flattened coefficient vector.
pub const TARGET_DIM: usize = (STATE_DIM + CONTROL_DIM) * NUM_COEFFS;

/// Cubic-in-normalized-time parameterization of a trajectory. Row `i` holds
/// the coefficients of dimension `i`, lowest power first, in `τ = t / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyWarmStart {
    pub alpha: SMatrix<f64, STATE_DIM, NUM_COEFFS>,
    pub beta: SMatrix<f64, CONTROL_DIM, NUM_COEFFS>,
    /// Duration `T` in seconds.
    pub horizon_time: f64,
}

impl PolyWarmStart {
    /// State rows then control rows, each row's coefficients contiguous.
    pub fn to_vector(&self) -> [f64; TARGET_DIM] {
        let mut v = [0.0; TARGET_DIM];
        for i in 0..STATE_DIM {
            for j in 0..NUM_COEFFS {
                v[i * NUM_COEFFS + j] = self.alpha[(i, j)];
            }
        }
        let off = STATE_DIM * NUM_COEFFS;
        for i in 0..CONTROL_DIM {
            for j in 0..NUM_COEFFS {
                v[off + i * NUM_COEFFS + j] = self.beta[(i, j)];
            }
        }
        v
    }

    pub fn from_slice(v: &[f64], horizon_time: f64) -> Self {
        assert_eq!(v.len(), TARGET_DIM, "coefficient vector length");
        let off = STATE_DIM * NUM_COEFFS;
        Self {
            alpha: SMatrix::from_fn(|i, j| v[i * NUM_COEFFS + j]),
            beta: SMatrix::from_fn(|i, j| v[off + i * NUM_COEFFS + j]),
            horizon_time,
        }
    }

    /// Multiplies the quaternion polynomials by `sign`.
    pub fn with_attitude_sign(mut self, sign: f64) -> Self {
        for i in idx::Q..idx::Q + 4 {
            for j in 0..NUM_COEFFS {
                self.alpha[(i, j)] *= sign;
            }
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.iter().chain(self.beta.iter()).all(|v| v.is_finite()) && self.horizon_time.is_finite()
    }

    pub fn state_at(&self, tau: f64) -> StateVector {
        self.alpha * powers(tau)
    }

    pub fn control_at(&self, tau: f64) -> ControlVector {
        self.beta * powers(tau)
    }
}

fn powers(tau: f64) -> SMatrix<f64, NUM_COEFFS, 1> {
    SMatrix::from_fn(|j, _| tau.powi(j as i32))
}

/// Least-squares coefficients for samples `ys[k]` (one column per dimension)
/// taken at `taus[k]`.
fn least_squares(taus: &[f64], ys: &DMatrix<f64>) -> DMatrix<f64> {
    let v = DMatrix::from_fn(taus.len(), NUM_COEFFS, |k, j| taus[k].powi(j as i32));
    let qr = v.qr();
    let rhs = qr.q().transpose() * ys;
    qr.r()
        .solve_upper_triangular(&rhs)
        .expect("Vandermonde matrix of distinct nodes has full column rank")
}

/// Normalized sample times of states (`N + 1` nodes) and controls (`N`).
fn nodes(horizon: usize) -> (Vec<f64>, Vec<f64>) {
    let n = horizon as f64;
    let states = (0..=horizon).map(|t| t as f64 / n).collect();
    let controls = (0..horizon).map(|t| t as f64 / n).collect();
    (states, controls)
}

/// Per-dimension least-squares cubic over `τ ∈ [0, 1]`.
///
/// # Panics
/// When the horizon is below 4, where a cubic is not determined by the
/// control samples.
pub fn fit_polynomials(traj: &Trajectory) -> PolyWarmStart {
    let n = traj.horizon();
    assert!(n >= NUM_COEFFS, "cubic fit needs a horizon of at least {NUM_COEFFS}");
    let (ts, tc) = nodes(n);
    let xs = DMatrix::from_fn(n + 1, STATE_DIM, |t, i| traj.states[t].to_vector()[i]);
    let us = DMatrix::from_fn(n, CONTROL_DIM, |t, i| traj.controls[t].to_vector()[i]);
    let a = least_squares(&ts, &xs);
    let b = least_squares(&tc, &us);
    PolyWarmStart {
        alpha: SMatrix::from_fn(|i, j| a[(j, i)]),
        beta: SMatrix::from_fn(|i, j| b[(j, i)]),
        horizon_time: n as f64 * traj.dt,
    }
}

/// Samples the polynomials on the problem's grid and repairs the result into
/// a usable initialization: unit quaternions, controls inside the actuator
/// balls, and the exact start state.
pub fn decode_warm_start(pw: &PolyWarmStart, params: &ProblemParameters) -> Trajectory {
    let n = params.horizon;
    let (ts, tc) = nodes(n);
    let mut states: Vec<FreeFlyerState> = ts
        .iter()
        .map(|&tau| {
            let mut s = FreeFlyerState::from_vector(&pw.state_at(tau));
            let norm = s.q.norm();
            s.q = if norm < 1e-6 { identity_quat() } else { s.q / norm };
            s
        })
        .collect();
    states[0] = params.x_init;
    let veh = &params.vehicle;
    let controls = tc
        .iter()
        .map(|&tau| {
            let u = pw.control_at(tau);
            let mut c = ControlInput::from_vector(&u);
            c.force = clamp_norm(u.fixed_rows::<3>(idx::F).into_owned(), veh.f_max);
            c.moment = clamp_norm(u.fixed_rows::<3>(idx::M).into_owned(), veh.m_max);
            c
        })
        .collect();
    Trajectory {
        states,
        controls,
        dt: params.dt,
    }
}

fn clamp_norm(v: nalgebra::Vector3<f64>, max: f64) -> nalgebra::Vector3<f64> {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::quat_from_axis_angle;
    use nalgebra::Vector3;

    fn params(n: usize) -> ProblemParameters {
        ProblemParameters::rest_to_rest(
            Vector3::new(1.0, 2.0, 3.0),
            identity_quat(),
            Vector3::zeros(),
            identity_quat(),
            n,
            0.5,
        )
    }

    /// Trajectory whose every dimension is an exact cubic in τ.
    fn cubic_traj(p: &ProblemParameters) -> (Trajectory, PolyWarmStart) {
        let pw = PolyWarmStart {
            alpha: SMatrix::from_fn(|i, j| ((i * 7 + j * 3) % 5) as f64 * 0.1 - 0.2),
            beta: SMatrix::from_fn(|i, j| ((i + 2 * j) % 3) as f64 * 0.01),
            horizon_time: p.duration(),
        };
        let n = p.horizon;
        let traj = Trajectory {
            states: (0..=n).map(|t| FreeFlyerState::from_vector(&pw.state_at(t as f64 / n as f64))).collect(),
            controls: (0..n).map(|t| ControlInput::from_vector(&pw.control_at(t as f64 / n as f64))).collect(),
            dt: p.dt,
        };
        (traj, pw)
    }

    #[test]
    fn constant_dimension_gives_constant_coefficients() {
        let p = params(10);
        let mut tr = crate::ocp::straight_line_initialization(&p);
        for s in tr.states.iter_mut() {
            s.r.x = 2.0;
        }
        let pw = fit_polynomials(&tr);
        let row = pw.alpha.row(idx::R);
        assert!((row[0] - 2.0).abs() < 1e-12);
        assert!(row.columns(1, 3).amax() < 1e-11);
    }

    #[test]
    fn recovers_cubic_coefficients() {
        let p = params(12);
        let mut tr = crate::ocp::straight_line_initialization(&p);
        for (t, s) in tr.states.iter_mut().enumerate() {
            let tau = t as f64 / 12.0;
            s.v.y = 1.0 + 2.0 * tau - tau.powi(3);
        }
        let pw = fit_polynomials(&tr);
        let row = pw.alpha.row(idx::V + 1);
        for (got, want) in row.iter().zip([1.0, 2.0, 0.0, -1.0]) {
            assert!((got - want).abs() < 1e-9, "{row}");
        }
        assert_eq!(pw.horizon_time, 6.0);
    }

    #[test]
    fn cubic_residual_not_above_quadratic() {
        let p = params(15);
        let mut tr = crate::ocp::straight_line_initialization(&p);
        for (t, s) in tr.states.iter_mut().enumerate() {
            s.r.z = (t as f64 * 0.7).sin();
        }
        let pw = fit_polynomials(&tr);
        let (ts, _) = nodes(15);
        let ys = DMatrix::from_fn(16, 1, |t, _| tr.states[t].r.z);
        let quad = DMatrix::from_fn(16, 3, |k, j| ts[k].powi(j as i32));
        let qr = quad.clone().qr();
        let c2 = qr.r().solve_upper_triangular(&(qr.q().transpose() * &ys)).unwrap();
        let res2 = (&quad * c2 - &ys).norm();
        let res3: f64 = ts
            .iter()
            .enumerate()
            .map(|(k, &tau)| (pw.state_at(tau)[idx::R + 2] - ys[k]).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(res3 <= res2 + 1e-12);
    }

    #[test]
    fn round_trip_on_cubic_data() {
        let p = params(20);
        let (traj, pw) = cubic_traj(&p);
        let fit = fit_polynomials(&traj);
        assert!((fit.alpha - pw.alpha).amax() < 1e-9);
        assert!((fit.beta - pw.beta).amax() < 1e-9);
        let v = fit.to_vector();
        assert_eq!(PolyWarmStart::from_slice(&v, fit.horizon_time), fit);
    }

    #[test]
    fn decode_repairs_quaternions_controls_and_start() {
        let mut p = params(10);
        p.x_init.q = quat_from_axis_angle(&Vector3::x(), 0.3);
        let mut pw = fit_polynomials(&crate::ocp::straight_line_initialization(&p));
        pw.alpha.row_mut(idx::Q).fill(0.0);
        pw.alpha[(idx::Q, 0)] = 3.0;
        pw.alpha.row_mut(idx::Q + 3).fill(0.0);
        pw.beta[(idx::F, 0)] = 50.0;
        pw.beta[(idx::M + 2, 1)] = -9.0;
        let tr = decode_warm_start(&pw, &p);
        assert_eq!(tr.states.len(), 11);
        assert_eq!(tr.controls.len(), 10);
        assert_eq!(tr.states[0], p.x_init);
        for s in &tr.states {
            assert!((s.q.norm() - 1.0).abs() < 1e-12);
        }
        for u in &tr.controls {
            assert!(u.force.norm() <= p.vehicle.f_max * (1.0 + 1e-12));
            assert!(u.moment.norm() <= p.vehicle.m_max * (1.0 + 1e-12));
        }
    }

    #[test]
    fn decode_falls_back_to_identity_for_vanishing_quaternion() {
        let p = params(6);
        let mut pw = fit_polynomials(&crate::ocp::straight_line_initialization(&p));
        for k in 0..4 {
            pw.alpha.row_mut(idx::Q + k).fill(0.0);
        }
        let tr = decode_warm_start(&pw, &p);
        assert_eq!(tr.states[3].q, identity_quat());
    }

    #[test]
    fn decode_of_fit_reproduces_cubic_states() {
        let p = params(16);
        let (mut traj, pw) = cubic_traj(&p);
        // make quaternion rows constant and unit so decoding leaves them alone
        let mut pw = pw;
        for k in 0..4 {
            pw.alpha.row_mut(idx::Q + k).fill(0.0);
        }
        pw.alpha[(idx::Q + 3, 0)] = 1.0;
        pw.beta.fill(0.0);
        for (t, s) in traj.states.iter_mut().enumerate() {
            *s = FreeFlyerState::from_vector(&pw.state_at(t as f64 / 16.0));
        }
        for u in traj.controls.iter_mut() {
            *u = ControlInput::zero();
        }
        let mut q = p.clone();
        q.x_init = traj.states[0];
        let dec = decode_warm_start(&fit_polynomials(&traj), &q);
        for (a, b) in dec.states.iter().zip(&traj.states) {
            assert!((a.to_vector() - b.to_vector()).amax() < 1e-9);
        }
    }
}
