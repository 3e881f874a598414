//! Trust-region penalty SCP: repeatedly convexify about the last accepted
//! iterate, solve, and accept or reject the candidate by the model accuracy
//! ratio while adapting the trust radius `Δ` and penalty weight `ω`.

mod config;

pub use config::{parse_config, write_config, GustoConfig, InnerStart};

use crate::conic::{SolveStatus, WarmStart, Workspace};
use crate::convexify::{accuracy_ratio, build_subproblem, true_penalized_cost, ConvexifyError, PenaltyState};
use crate::ocp::{cost, evaluate_feasibility, straight_line_initialization, ProblemParameters, Trajectory};
use crate::warmstart::{predict_trajectory, Mlp};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GustoError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Convexify(#[from] ConvexifyError),
    #[error("warm start: {0}")]
    WarmStart(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GustoStatus {
    Converged,
    /// `ω` exceeded its ceiling.
    Failure,
    MaxOuter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundOutcome {
    Accepted,
    /// Candidate left the trust region.
    RejectedTrust,
    /// Model accuracy ratio above `ρ¹`.
    RejectedModel,
    /// The conic solver hit its iteration limit.
    RejectedInner,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTrace {
    /// Radius and weight the subproblem was built with.
    pub delta: f64,
    pub omega: f64,
    /// Accuracy ratio; `None` when the round was rejected before it was computed.
    pub rho: Option<f64>,
    pub outcome: RoundOutcome,
    pub inner_iterations: usize,
    /// Stacked state distance of the candidate from the reference.
    pub step_norm: f64,
    /// ḡ of the candidate, for accepted rounds.
    pub gbar: Option<f64>,
}

impl RoundTrace {
    pub fn accepted(&self) -> bool {
        self.outcome == RoundOutcome::Accepted
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GustoReport {
    /// Last accepted iterate (the initialization when none was accepted).
    pub trajectory: Trajectory,
    pub status: GustoStatus,
    pub outer_iterations: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Conic solver iterations summed over all rounds.
    pub inner_iterations: usize,
    pub cost: f64,
    /// Worst constraint violation or dynamics defect of `trajectory`.
    pub gbar: f64,
    pub trace: Vec<RoundTrace>,
    pub warm: bool,
}

impl GustoReport {
    pub fn converged(&self) -> bool {
        self.status == GustoStatus::Converged
    }
}

/// ḡ used by the loop: constraint violation and dynamics defect together, so
/// a converged trajectory is also dynamically consistent.
pub fn max_violation(traj: &Trajectory, params: &ProblemParameters) -> f64 {
    let rep = evaluate_feasibility(traj, params);
    rep.max_constraint_violation.max(rep.max_dynamics_defect)
}

struct StepSize {
    stacked: f64,
    /// Largest 2-norm over individual states.
    per_state: f64,
    inf: f64,
}

fn step_size(a: &Trajectory, b: &Trajectory) -> StepSize {
    let mut s = StepSize {
        stacked: 0.0,
        per_state: 0.0,
        inf: 0.0,
    };
    for (x, y) in a.states.iter().zip(&b.states) {
        let d = x.to_vector() - y.to_vector();
        s.stacked += d.norm_squared();
        s.per_state = s.per_state.max(d.norm());
        s.inf = s.inf.max(d.amax());
    }
    s.stacked = s.stacked.sqrt();
    s
}

pub fn solve_ocp(params: &ProblemParameters, init: Trajectory, cfg: &GustoConfig) -> Result<GustoReport, GustoError> {
    cfg.validate().map_err(GustoError::Config)?;
    params.validate().map_err(ConvexifyError::from)?;
    init.check_shape(params).map_err(ConvexifyError::from)?;

    let mut current = init;
    let mut delta = cfg.delta0;
    let mut omega = cfg.omega0;
    let mut trace = Vec::new();
    let mut inner_total = 0;
    let mut last_xy: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut status = GustoStatus::MaxOuter;

    for _ in 0..cfg.max_outer_iters {
        let pen = PenaltyState { omega, delta };
        let sp = build_subproblem(&current, params, pen)?;
        let mut ws = Workspace::new(&sp.program, cfg.inner).map_err(ConvexifyError::from)?;
        let first_guess;
        let warm = match (&last_xy, cfg.inner_start) {
            (Some((x, y)), _) => Some(WarmStart { x, y: Some(y) }),
            (None, InnerStart::Reference) => {
                first_guess = sp.pack_with_slacks(&current);
                Some(WarmStart { x: &first_guess, y: None })
            }
            (None, InnerStart::Zero) => None,
        };
        let res = ws.solve(warm).map_err(ConvexifyError::from)?;
        inner_total += res.iterations;
        let mut round = RoundTrace {
            delta,
            omega,
            rho: None,
            outcome: RoundOutcome::Accepted,
            inner_iterations: res.iterations,
            step_norm: f64::NAN,
            gbar: None,
        };
        if cfg.inner_warm {
            last_xy = Some((res.x.clone(), res.y.clone()));
        }

        let mut converged = false;
        if res.status != SolveStatus::Solved {
            round.outcome = RoundOutcome::RejectedInner;
            omega *= cfg.gamma_fail;
        } else {
            let cand = sp.unpack(&res.x);
            let step = step_size(&cand, &current);
            round.step_norm = step.stacked;
            if step.stacked > delta {
                round.outcome = RoundOutcome::RejectedTrust;
                omega *= cfg.gamma_fail;
            } else {
                let model = sp.model_objective(&cand, params);
                let truth = true_penalized_cost(&cand, &current, params, pen);
                let rho = accuracy_ratio(truth, model);
                round.rho = Some(rho);
                if rho > cfg.rho1 {
                    round.outcome = RoundOutcome::RejectedModel;
                    delta *= cfg.beta_fail;
                } else {
                    if rho < cfg.rho0 {
                        delta = (cfg.beta_succ * delta).min(cfg.delta0);
                    }
                    let gbar = max_violation(&cand, params);
                    round.gbar = Some(gbar);
                    omega = if gbar <= cfg.epsilon { cfg.omega0 } else { cfg.gamma_fail * omega };
                    // a short step forced by a small trust region is not convergence
                    let trust_inactive = step.per_state <= 0.5 * pen.step_radius(params.horizon);
                    converged = step.inf <= cfg.convergence_tol_x && trust_inactive && gbar <= cfg.epsilon;
                    current = cand;
                }
            }
        }
        trace.push(round);
        if converged {
            status = GustoStatus::Converged;
            break;
        }
        if omega > cfg.omega_max {
            status = GustoStatus::Failure;
            break;
        }
    }

    let accepted = trace.iter().filter(|r| r.accepted()).count();
    Ok(GustoReport {
        cost: cost(&current, params),
        gbar: max_violation(&current, params),
        outer_iterations: trace.len(),
        accepted,
        rejected: trace.len() - accepted,
        inner_iterations: inner_total,
        trajectory: current,
        status,
        trace,
        warm: false,
    })
}

/// [`solve_ocp`] from the straight-line initialization.
pub fn solve_cold(params: &ProblemParameters, cfg: &GustoConfig) -> Result<GustoReport, GustoError> {
    params.validate().map_err(ConvexifyError::from)?;
    solve_ocp(params, straight_line_initialization(params), cfg)
}

/// [`solve_ocp`] from the network's predicted initialization.
pub fn solve_warm(params: &ProblemParameters, model: &Mlp, cfg: &GustoConfig) -> Result<GustoReport, GustoError> {
    params.validate().map_err(ConvexifyError::from)?;
    let init = predict_trajectory(model, params).map_err(|e| GustoError::WarmStart(e.to_string()))?;
    let mut rep = solve_ocp(params, init, cfg)?;
    rep.warm = true;
    Ok(rep)
}

#[cfg(test)]
mod tests;
