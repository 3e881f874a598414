//! Convex subproblem around a reference trajectory, plus the penalized
//! objectives used to judge how well that model predicts the real problem.
//!
//! Linearized dynamics, the start state and the terminal set are hard
//! constraints; the convex vehicle limits are norm balls. The obstacle
//! clearance, the quaternion norm and the trust region are softened with
//! nonnegative slacks weighted by `ω`.

mod layout;

pub use layout::VarLayout;

use crate::conic::{Cone, ConicProgram, CscMatrix, SolverError, TripletBuilder};
use crate::model::{
    idx, linearize_step, normalize_quat, signed_distance, signed_distance_gradient,
    LinearizedStep, StateVector, CONTROL_DIM, STATE_DIM,
};
use crate::ocp::{cost, ProblemError, ProblemParameters, Trajectory};
use nalgebra::{Vector3, Vector4};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConvexifyError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("penalty weight must be ≥ 1 and trust radius > 0 (got ω = {omega}, Δ = {delta})")]
    Penalty { omega: f64, delta: f64 },
    #[error("reference trajectory contains non-finite values")]
    NonFinite,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Penalty weight `ω` and trust-region radius `Δ` of one round.
///
/// `Δ` bounds the stacked state deviation of the whole trajectory; each of
/// the `N + 1` states is penalized outside the radius `Δ / √(N + 1)`, so a
/// candidate with no trust penalty is always inside `Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyState {
    pub omega: f64,
    pub delta: f64,
}

impl PenaltyState {
    pub fn step_radius(&self, horizon: usize) -> f64 {
        self.delta / ((horizon + 1) as f64).sqrt()
    }

    pub fn new(omega: f64, delta: f64) -> Result<Self, ConvexifyError> {
        let s = Self { omega, delta };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), ConvexifyError> {
        if self.omega >= 1.0 && self.omega.is_finite() && self.delta > 0.0 && self.delta.is_finite() {
            Ok(())
        } else {
            Err(ConvexifyError::Penalty {
                omega: self.omega,
                delta: self.delta,
            })
        }
    }
}

/// Linearized obstacle constraint `δ_sd − sd(r̄) − n·(r − r̄) ≤ s`, stored as
/// `offset − n·r ≤ s`.
#[derive(Debug, Clone, Copy)]
struct ObstacleCut {
    normal: Vector3<f64>,
    offset: f64,
}

#[derive(Debug, Clone)]
pub struct ConvexSubproblem {
    pub program: ConicProgram,
    pub layout: VarLayout,
    pub reference: Trajectory,
    pub penalty: PenaltyState,
    steps: Vec<LinearizedStep>,
    /// Unit reference quaternion per state.
    quat_dirs: Vec<Vector4<f64>>,
    /// `cuts[k][t]` for obstacle `k` at state `t`.
    cuts: Vec<Vec<ObstacleCut>>,
    goal_quat: Vector4<f64>,
}

fn chord_radius(delta_att: f64) -> f64 {
    2.0 * (0.5 * delta_att).sin()
}

#[derive(Default)]
struct Rows {
    ri: Vec<usize>,
    ci: Vec<usize>,
    vals: Vec<f64>,
    cones: Vec<Cone>,
    m: usize,
}

impl Rows {
    fn segment(&mut self, cone: Cone) -> usize {
        let start = self.m;
        self.m += cone.dim();
        self.cones.push(cone);
        start
    }

    fn entry(&mut self, row: usize, col: usize, v: f64) {
        if v != 0.0 {
            self.ri.push(row);
            self.ci.push(col);
            self.vals.push(v);
        }
    }
}

/// Builds the convex subproblem linearized about `reference`.
pub fn build_subproblem(
    reference: &Trajectory,
    params: &ProblemParameters,
    pen: PenaltyState,
) -> Result<ConvexSubproblem, ConvexifyError> {
    params.validate()?;
    reference.check_shape(params)?;
    pen.validate()?;
    if !reference.is_finite() {
        return Err(ConvexifyError::NonFinite);
    }
    let n = params.horizon;
    let veh = &params.vehicle;
    let lay = VarLayout::new(n, params.obstacles.len());
    let nv = lay.num_vars();

    let steps: Vec<LinearizedStep> = (0..n)
        .map(|t| linearize_step(&reference.states[t], &reference.controls[t], veh, params.dt))
        .collect();
    let quat_dirs: Vec<Vector4<f64>> = reference.states.iter().map(|s| normalize_quat(&s.q)).collect();
    let cuts: Vec<Vec<ObstacleCut>> = params
        .obstacles
        .iter()
        .map(|obs| {
            reference
                .states
                .iter()
                .map(|s| {
                    let normal = signed_distance_gradient(&s.r, veh.radius, obs);
                    let sd = signed_distance(&s.r, veh.radius, obs);
                    ObstacleCut {
                        normal,
                        offset: params.delta_sd - sd + normal.dot(&s.r),
                    }
                })
                .collect()
        })
        .collect();
    let goal_quat = params.goal_quat_near(&reference.states[n].q);

    let mut rows = Rows::default();

    let r0 = rows.segment(Cone::equal_to(params.x_init.to_vector().as_slice().to_vec()));
    for i in 0..STATE_DIM {
        rows.entry(r0 + i, lay.state(0) + i, 1.0);
    }
    for (t, st) in steps.iter().enumerate() {
        let r = rows.segment(Cone::equal_to(st.c.as_slice().to_vec()));
        for i in 0..STATE_DIM {
            rows.entry(r + i, lay.state(t + 1) + i, 1.0);
            for j in 0..STATE_DIM {
                rows.entry(r + i, lay.state(t) + j, -st.a[(i, j)]);
            }
            for j in 0..CONTROL_DIM {
                rows.entry(r + i, lay.control(t) + j, -st.b[(i, j)]);
            }
        }
    }

    let ball = |rows: &mut Rows, col: usize, center: &[f64], radius: f64| {
        let r = rows.segment(Cone::ball(center.to_vec(), radius));
        for k in 0..center.len() {
            rows.entry(r + k, col + k, 1.0);
        }
    };
    for t in 0..n {
        ball(&mut rows, lay.control(t) + idx::F, &[0.0; 3], veh.f_max);
        ball(&mut rows, lay.control(t) + idx::M, &[0.0; 3], veh.m_max);
    }
    for t in 1..n {
        ball(&mut rows, lay.state(t) + idx::V, &[0.0; 3], veh.v_max);
        ball(&mut rows, lay.state(t) + idx::W, &[0.0; 3], veh.w_max);
    }
    ball(&mut rows, lay.state(n) + idx::R, params.r_goal.as_slice(), params.delta_goal);
    // Only the component of q_N tangent to the goal is bounded; the radial
    // part is left to the norm penalty, which the linearized kinematics
    // cannot otherwise reach from an inconsistent reference.
    let rq = rows.segment(Cone::ball(vec![0.0; 4], chord_radius(params.delta_att)));
    for i in 0..4 {
        for j in 0..4 {
            let proj = if i == j { 1.0 } else { 0.0 } - goal_quat[i] * goal_quat[j];
            rows.entry(rq + i, lay.state(n) + idx::Q + j, proj);
        }
    }
    let rt = rows.segment(Cone::zero(6));
    for k in 0..3 {
        rows.entry(rt + k, lay.state(n) + idx::V + k, 1.0);
        rows.entry(rt + 3 + k, lay.state(n) + idx::W + k, 1.0);
    }

    for (k, obs_cuts) in cuts.iter().enumerate() {
        let lower: Vec<f64> = obs_cuts.iter().map(|c| c.offset).collect();
        let r = rows.segment(Cone::Box {
            upper: vec![f64::INFINITY; lower.len()],
            lower,
        });
        for (t, c) in obs_cuts.iter().enumerate() {
            for a in 0..3 {
                rows.entry(r + t, lay.state(t) + idx::R + a, c.normal[a]);
            }
            rows.entry(r + t, lay.obstacle_slack(k, t), 1.0);
        }
    }

    // q̂·q − s⁺ ≤ 1 and q̂·q + s⁻ ≥ 1
    let hi = rows.segment(Cone::Box {
        lower: vec![f64::NEG_INFINITY; n + 1],
        upper: vec![1.0; n + 1],
    });
    let lo = rows.segment(Cone::Box {
        lower: vec![1.0; n + 1],
        upper: vec![f64::INFINITY; n + 1],
    });
    for (t, d) in quat_dirs.iter().enumerate() {
        for a in 0..4 {
            rows.entry(hi + t, lay.state(t) + idx::Q + a, d[a]);
            rows.entry(lo + t, lay.state(t) + idx::Q + a, d[a]);
        }
        rows.entry(hi + t, lay.quat_slack(t, 0), -1.0);
        rows.entry(lo + t, lay.quat_slack(t, 1), 1.0);
    }

    // (s + Δ, x − x̄) in the second-order cone
    for (t, s) in reference.states.iter().enumerate() {
        let mut shift = vec![-pen.step_radius(n)];
        shift.extend_from_slice(s.to_vector().as_slice());
        let r = rows.segment(Cone::SecondOrder { shift });
        rows.entry(r, lay.trust_slack(t), 1.0);
        for i in 0..STATE_DIM {
            rows.entry(r + 1 + i, lay.state(t) + i, 1.0);
        }
    }

    let ns = lay.num_slacks();
    let rs = rows.segment(Cone::nonnegative(ns));
    for k in 0..ns {
        rows.entry(rs + k, lay.slack_start() + k, 1.0);
    }

    let a = CscMatrix::from_triplets(rows.m, nv, &rows.ri, &rows.ci, &rows.vals);

    let mut pt = TripletBuilder::new(nv, nv);
    let w = &params.control_weight;
    for t in 0..n {
        let c0 = lay.control(t);
        for j in 0..CONTROL_DIM {
            for i in 0..=j {
                if w[(i, j)] != 0.0 {
                    pt.push(c0 + i, c0 + j, 2.0 * w[(i, j)]);
                }
            }
        }
    }
    let p: CscMatrix = pt.build();
    let mut q = vec![0.0; nv];
    for v in &mut q[lay.slack_start()..] {
        *v = pen.omega;
    }
    let program = ConicProgram::new(p, q, a, rows.cones)?;

    Ok(ConvexSubproblem {
        program,
        layout: lay,
        reference: reference.clone(),
        penalty: pen,
        steps,
        quat_dirs,
        cuts,
        goal_quat,
    })
}

/// Violation sums shared by the model and the true objective: every term
/// that does not depend on the linearization.
fn common_penalties(traj: &Trajectory, params: &ProblemParameters) -> f64 {
    let veh = &params.vehicle;
    let h = |v: f64| v.max(0.0);
    let mut sum = 0.0;
    for s in &traj.states {
        sum += h(s.v.norm() - veh.v_max) + h(s.w.norm() - veh.w_max);
    }
    for u in &traj.controls {
        sum += h(u.force.norm() - veh.f_max) + h(u.moment.norm() - veh.m_max);
    }
    if let Some(last) = traj.states.last() {
        sum += h((last.r - params.r_goal).norm() - params.delta_goal);
        sum += last.v.norm() + last.w.norm();
    }
    if let Some(first) = traj.states.first() {
        sum += (first.to_vector() - params.x_init.to_vector()).abs().sum();
    }
    sum
}

fn trust_penalty(traj: &Trajectory, reference: &Trajectory, pen: PenaltyState) -> f64 {
    let delta = pen.step_radius(reference.horizon());
    traj.states
        .iter()
        .zip(&reference.states)
        .map(|(x, xr)| ((x.to_vector() - xr.to_vector()).norm() - delta).max(0.0))
        .sum()
}

fn stacked(traj: &Trajectory, t: usize) -> (StateVector, crate::model::ControlVector) {
    (traj.states[t].to_vector(), traj.controls[t].to_vector())
}

/// Objective of the nonlinear problem with every constraint violation,
/// the dynamics defect (1-norm) and the trust-region excess charged at `ω`.
pub fn true_penalized_cost(
    traj: &Trajectory,
    reference: &Trajectory,
    params: &ProblemParameters,
    pen: PenaltyState,
) -> f64 {
    let veh = &params.vehicle;
    let h = |v: f64| v.max(0.0);
    let mut viol = common_penalties(traj, params);
    for s in &traj.states {
        viol += (s.q.norm() - 1.0).abs();
        for obs in &params.obstacles {
            viol += h(params.delta_sd - signed_distance(&s.r, veh.radius, obs));
        }
    }
    if let Some(last) = traj.states.last() {
        let g = normalize_quat(&params.q_goal);
        let chord = (last.q - g).norm().min((last.q + g).norm());
        viol += h(chord - chord_radius(params.delta_att));
    }
    for t in 0..traj.controls.len().min(traj.states.len().saturating_sub(1)) {
        let next = crate::model::discrete_step(&traj.states[t], &traj.controls[t], veh, traj.dt);
        viol += (traj.states[t + 1].to_vector() - next.to_vector()).abs().sum();
    }
    cost(traj, params) + pen.omega * (viol + trust_penalty(traj, reference, pen))
}

/// Relative mismatch between the true penalized cost and the convex model's
/// objective at the same candidate; the denominator is floored at 1e-9.
pub fn accuracy_ratio(true_cost: f64, model_objective: f64) -> f64 {
    (true_cost - model_objective).abs() / model_objective.abs().max(1e-9)
}

impl ConvexSubproblem {
    /// The convex model's penalized objective at `traj`, with each slack at
    /// its smallest feasible value and any residual in the linear equalities
    /// charged like a dynamics defect. Equals the solver objective at an
    /// exact subproblem solution.
    pub fn model_objective(&self, traj: &Trajectory, params: &ProblemParameters) -> f64 {
        let h = |v: f64| v.max(0.0);
        let pen = self.penalty;
        let mut viol = common_penalties(traj, params);
        for (t, s) in traj.states.iter().enumerate() {
            viol += (self.quat_dirs[t].dot(&s.q) - 1.0).abs();
            for cuts in &self.cuts {
                viol += h(cuts[t].offset - cuts[t].normal.dot(&s.r));
            }
        }
        if let Some(last) = traj.states.last() {
            viol += h((last.q - self.goal_quat).norm() - chord_radius(params.delta_att));
        }
        for (t, st) in self.steps.iter().enumerate() {
            let (x, u) = stacked(traj, t);
            viol += (traj.states[t + 1].to_vector() - st.apply(&x, &u)).abs().sum();
        }
        cost(traj, params) + pen.omega * (viol + trust_penalty(traj, &self.reference, pen))
    }

    /// Solver vector for `traj` with every slack at its smallest feasible
    /// value for this subproblem.
    pub fn pack_with_slacks(&self, traj: &Trajectory) -> Vec<f64> {
        let lay = &self.layout;
        let mut z = lay.pack(traj);
        let h = |v: f64| v.max(0.0);
        for (t, s) in traj.states.iter().enumerate() {
            let ell = self.quat_dirs[t].dot(&s.q);
            z[lay.quat_slack(t, 0)] = h(ell - 1.0);
            z[lay.quat_slack(t, 1)] = h(1.0 - ell);
            let dx = s.to_vector() - self.reference.states[t].to_vector();
            z[lay.trust_slack(t)] = h(dx.norm() - self.penalty.step_radius(lay.horizon));
            for (k, cuts) in self.cuts.iter().enumerate() {
                z[lay.obstacle_slack(k, t)] = h(cuts[t].offset - cuts[t].normal.dot(&s.r));
            }
        }
        z
    }

    pub fn unpack(&self, z: &[f64]) -> Trajectory {
        self.layout.unpack(z, self.reference.dt)
    }

    /// Sum of all slack values in a solver vector.
    pub fn slack_sum(&self, z: &[f64]) -> f64 {
        z[self.layout.slack_start()..].iter().sum()
    }
}

#[cfg(test)]
mod tests;
