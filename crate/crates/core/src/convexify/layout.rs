use crate::model::{ControlInput, ControlVector, FreeFlyerState, StateVector, CONTROL_DIM, STATE_DIM};
use crate::ocp::Trajectory;

/// Positions of the decision variables in the solver vector: states,
/// controls, then slacks (trust region, quaternion pairs, obstacles).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub horizon: usize,
    pub num_obstacles: usize,
}

impl VarLayout {
    pub fn new(horizon: usize, num_obstacles: usize) -> Self {
        Self {
            horizon,
            num_obstacles,
        }
    }

    pub fn state(&self, t: usize) -> usize {
        STATE_DIM * t
    }

    pub fn control(&self, t: usize) -> usize {
        STATE_DIM * (self.horizon + 1) + CONTROL_DIM * t
    }

    pub fn slack_start(&self) -> usize {
        self.control(self.horizon)
    }

    pub fn trust_slack(&self, t: usize) -> usize {
        self.slack_start() + t
    }

    /// `side` 0 bounds the norm from above, 1 from below.
    pub fn quat_slack(&self, t: usize, side: usize) -> usize {
        self.slack_start() + (self.horizon + 1) + 2 * t + side
    }

    pub fn obstacle_slack(&self, k: usize, t: usize) -> usize {
        self.slack_start() + 3 * (self.horizon + 1) + k * (self.horizon + 1) + t
    }

    pub fn num_slacks(&self) -> usize {
        (3 + self.num_obstacles) * (self.horizon + 1)
    }

    pub fn num_vars(&self) -> usize {
        self.slack_start() + self.num_slacks()
    }

    /// States and controls of `traj`; slacks zero.
    pub fn pack(&self, traj: &Trajectory) -> Vec<f64> {
        let mut z = vec![0.0; self.num_vars()];
        for (t, s) in traj.states.iter().enumerate() {
            let o = self.state(t);
            z[o..o + STATE_DIM].copy_from_slice(s.to_vector().as_slice());
        }
        for (t, u) in traj.controls.iter().enumerate() {
            let o = self.control(t);
            z[o..o + CONTROL_DIM].copy_from_slice(u.to_vector().as_slice());
        }
        z
    }

    pub fn unpack(&self, z: &[f64], dt: f64) -> Trajectory {
        let states = (0..=self.horizon)
            .map(|t| {
                let o = self.state(t);
                FreeFlyerState::from_vector(&StateVector::from_column_slice(&z[o..o + STATE_DIM]))
            })
            .collect();
        let controls = (0..self.horizon)
            .map(|t| {
                let o = self.control(t);
                ControlInput::from_vector(&ControlVector::from_column_slice(&z[o..o + CONTROL_DIM]))
            })
            .collect();
        Trajectory { states, controls, dt }
    }
}
