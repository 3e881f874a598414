//! The parametric planning problem: parameters, trajectories, cost and
//! nonlinear feasibility evaluation.

mod export;
mod file;

pub use export::{parse_trajectory_csv, trajectory_svg, write_trajectory_csv, TrajectoryCsvError, TRAJECTORY_HEADER};
pub use file::{parse_problem, write_problem};

use crate::kv::KvError;
use crate::model::{
    discrete_step, normalize_quat, quat_geodesic_distance, quat_relative_rotation, quat_slerp,
    signed_distance, ControlInput, FreeFlyerState, ModelError, ObstacleBox, VehicleParams,
    Workspace,
};
use nalgebra::{Matrix6, Vector3, Vector4};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("horizon must be at least 2 steps, got {0}")]
    Horizon(usize),
    #[error("time step must be positive and finite, got {0}")]
    TimeStep(f64),
    #[error("control weight must be symmetric positive definite")]
    ControlWeight,
    #[error("{0} must be positive and finite, got {1}")]
    Tolerance(&'static str, f64),
    #[error("clearance must be nonnegative and finite, got {0}")]
    Clearance(f64),
    #[error("start position lies outside the workspace")]
    StartOutside,
    #[error("{0} contains non-finite values")]
    NonFinite(&'static str),
    #[error("{0} quaternion has zero norm")]
    ZeroQuaternion(&'static str),
    #[error("trajectory has {states} states and {controls} controls; expected {expected_states} and {expected_controls}")]
    Shape {
        states: usize,
        controls: usize,
        expected_states: usize,
        expected_controls: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    File(#[from] KvError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParameters {
    pub x_init: FreeFlyerState,
    pub r_goal: Vector3<f64>,
    pub q_goal: Vector4<f64>,
    pub delta_goal: f64,
    /// Terminal attitude tolerance on the S³ geodesic distance.
    pub delta_att: f64,
    pub obstacles: Vec<ObstacleBox>,
    pub delta_sd: f64,
    pub horizon: usize,
    pub dt: f64,
    pub control_weight: Matrix6<f64>,
    pub vehicle: VehicleParams,
    pub workspace: Workspace,
}

impl ProblemParameters {
    /// Rest-to-rest transfer with default vehicle, weights and tolerances.
    pub fn rest_to_rest(
        r_init: Vector3<f64>,
        q_init: Vector4<f64>,
        r_goal: Vector3<f64>,
        q_goal: Vector4<f64>,
        horizon: usize,
        dt: f64,
    ) -> Self {
        Self {
            x_init: FreeFlyerState::at_rest(r_init, normalize_quat(&q_init)),
            r_goal,
            q_goal: normalize_quat(&q_goal),
            delta_goal: 0.01,
            delta_att: 1e-2,
            obstacles: Vec::new(),
            delta_sd: 0.05,
            horizon,
            dt,
            control_weight: Matrix6::identity(),
            vehicle: VehicleParams::default(),
            workspace: Workspace::centered(Vector3::repeat(20.0)),
        }
    }

    pub fn with_obstacle(mut self, obs: ObstacleBox) -> Self {
        self.obstacles.push(obs);
        self
    }

    pub fn duration(&self) -> f64 {
        self.horizon as f64 * self.dt
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.horizon < 2 {
            return Err(ProblemError::Horizon(self.horizon));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ProblemError::TimeStep(self.dt));
        }
        let r = &self.control_weight;
        if r.iter().any(|v| !v.is_finite())
            || (r - r.transpose()).abs().max() > 1e-12 * r.abs().max().max(1.0)
            || r.cholesky().is_none()
        {
            return Err(ProblemError::ControlWeight);
        }
        if !(self.delta_goal > 0.0 && self.delta_goal.is_finite()) {
            return Err(ProblemError::Tolerance("delta_goal", self.delta_goal));
        }
        if !(self.delta_att > 0.0 && self.delta_att.is_finite()) {
            return Err(ProblemError::Tolerance("delta_att", self.delta_att));
        }
        if !(self.delta_sd >= 0.0 && self.delta_sd.is_finite()) {
            return Err(ProblemError::Clearance(self.delta_sd));
        }
        if !self.x_init.is_finite() {
            return Err(ProblemError::NonFinite("start state"));
        }
        if self.r_goal.iter().chain(self.q_goal.iter()).any(|v| !v.is_finite()) {
            return Err(ProblemError::NonFinite("goal pose"));
        }
        if self.x_init.q.norm() < 1e-12 {
            return Err(ProblemError::ZeroQuaternion("start"));
        }
        if self.q_goal.norm() < 1e-12 {
            return Err(ProblemError::ZeroQuaternion("goal"));
        }
        if !self.workspace.contains(&self.x_init.r) {
            return Err(ProblemError::StartOutside);
        }
        Ok(())
    }

    /// Goal attitude on the same hemisphere as `q`.
    pub fn goal_quat_near(&self, q: &Vector4<f64>) -> Vector4<f64> {
        let g = normalize_quat(&self.q_goal);
        if g.dot(q) < 0.0 {
            -g
        } else {
            g
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<FreeFlyerState>,
    pub controls: Vec<ControlInput>,
    pub dt: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn check_shape(&self, params: &ProblemParameters) -> Result<(), ProblemError> {
        let n = params.horizon;
        if self.states.len() != n + 1 || self.controls.len() != n {
            return Err(ProblemError::Shape {
                states: self.states.len(),
                controls: self.controls.len(),
                expected_states: n + 1,
                expected_controls: n,
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.states.iter().all(FreeFlyerState::is_finite)
            && self
                .controls
                .iter()
                .all(|u| u.to_vector().iter().all(|v| v.is_finite()))
    }
}

/// Σ uᵀ R u.
pub fn cost(traj: &Trajectory, params: &ProblemParameters) -> f64 {
    traj.controls
        .iter()
        .map(|u| {
            let v = u.to_vector();
            v.dot(&(params.control_weight * v))
        })
        .sum()
}

/// Worst violation per constraint family, all nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeasibilityReport {
    /// Largest ∞-norm gap between a state and the propagated predecessor,
    /// including the mismatch of the first state against `x_init`.
    pub max_dynamics_defect: f64,
    /// ḡ: the maximum over every entry below.
    pub max_constraint_violation: f64,
    pub speed: f64,
    pub spin: f64,
    pub force: f64,
    pub moment: f64,
    pub obstacle: f64,
    pub quat_norm: f64,
    pub goal_position: f64,
    pub goal_attitude: f64,
    /// Terminal linear and angular speed; the transfer ends at rest.
    pub terminal_rate: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self, eps: f64, defect_tol: f64) -> bool {
        self.max_constraint_violation <= eps && self.max_dynamics_defect <= defect_tol
    }
}

/// Nonlinear constraint violations of one trajectory. Pure evaluation; the
/// caller applies tolerances through [`FeasibilityReport::is_feasible`].
pub fn evaluate_feasibility(traj: &Trajectory, params: &ProblemParameters) -> FeasibilityReport {
    let veh = &params.vehicle;
    let mut rep = FeasibilityReport::default();
    let hinge = |v: f64| v.max(0.0);
    for x in &traj.states {
        rep.speed = rep.speed.max(hinge(x.v.norm() - veh.v_max));
        rep.spin = rep.spin.max(hinge(x.w.norm() - veh.w_max));
        rep.quat_norm = rep.quat_norm.max((x.q.norm() - 1.0).abs());
        for obs in &params.obstacles {
            let sd = signed_distance(&x.r, veh.radius, obs);
            rep.obstacle = rep.obstacle.max(hinge(params.delta_sd - sd));
        }
    }
    for u in &traj.controls {
        rep.force = rep.force.max(hinge(u.force.norm() - veh.f_max));
        rep.moment = rep.moment.max(hinge(u.moment.norm() - veh.m_max));
    }
    if let Some(last) = traj.states.last() {
        rep.goal_position = hinge((last.r - params.r_goal).norm() - params.delta_goal);
        rep.goal_attitude = hinge(quat_geodesic_distance(&last.q, &params.q_goal) - params.delta_att);
        rep.terminal_rate = last.v.norm().max(last.w.norm());
    }
    rep.max_constraint_violation = [
        rep.speed,
        rep.spin,
        rep.force,
        rep.moment,
        rep.obstacle,
        rep.quat_norm,
        rep.goal_position,
        rep.goal_attitude,
        rep.terminal_rate,
    ]
    .into_iter()
    .fold(0.0, f64::max);

    if let Some(first) = traj.states.first() {
        rep.max_dynamics_defect = (first.to_vector() - params.x_init.to_vector()).amax();
    }
    for (t, u) in traj.controls.iter().enumerate() {
        if t + 1 >= traj.states.len() {
            break;
        }
        let pred = discrete_step(&traj.states[t], u, veh, traj.dt);
        let d = (traj.states[t + 1].to_vector() - pred.to_vector()).amax();
        rep.max_dynamics_defect = rep.max_dynamics_defect.max(d);
    }
    rep
}

/// Straight-line, constant-rate interpolation from the start pose to the goal
/// pose with zero controls.
pub fn straight_line_initialization(params: &ProblemParameters) -> Trajectory {
    let n = params.horizon;
    let total = params.duration();
    let r0 = params.x_init.r;
    let q0 = normalize_quat(&params.x_init.q);
    let q1 = params.goal_quat_near(&q0);
    let v = (params.r_goal - r0) / total;
    let w = quat_relative_rotation(&q0, &q1) / total;
    let states = (0..=n)
        .map(|t| {
            let s = t as f64 / n as f64;
            let (r, q) = if t == n {
                (params.r_goal, q1)
            } else {
                (r0 + (params.r_goal - r0) * s, quat_slerp(&q0, &q1, s))
            };
            FreeFlyerState { r, v, q, w }
        })
        .collect();
    Trajectory {
        states,
        controls: vec![ControlInput::zero(); n],
        dt: params.dt,
    }
}
