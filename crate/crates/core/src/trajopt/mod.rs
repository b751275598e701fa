//! Constrained trajectory tracking by a projection-operator Newton method.
//!
//! Each iteration linearises the discrete dynamics along the current
//! trajectory, solves the LQ subproblem for a descent direction, and moves
//! along it through the projection operator (a stabilising LQR feedback
//! closed around the perturbed curve). Constraints enter through a relaxed
//! log barrier whose weight and threshold shrink between stages.

mod lqr;
mod problem;

pub use lqr::{riccati_gains, Gain, InputWeight};
pub use problem::{
    directional_derivative, objective_value, project_rollout, quad_weight, search_direction, Direction, LinearPlant, Objective, Plant,
    StageCost, StageGrad, StageHess,
};

use serde::{Deserialize, Serialize};

use crate::constraints::{
    activity_from_history, residual_history, BarrierParams, ConstraintActivity, ConstraintSet, RelaxedBarrier,
    ACTIVE_EPS,
};
use crate::error_space::{CoupledModel, Curve, Grid, Trajectory};
use crate::guidance::{desired_curve, initial_trajectory, predicted_time};
use crate::scenarios::Scenario;
use crate::{Error, InputVec, Result, StateMat, StateVec, NU, NX};

/// Vertical-error threshold defining rendezvous, m.
pub const RENDEZVOUS_TOL: f64 = 0.1;

/// Diagonal tracking weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Weights {
    #[serde(rename = "Q")]
    pub q: [f64; NX],
    #[serde(rename = "R")]
    pub r: [f64; NU],
    #[serde(rename = "P1")]
    pub p1: [f64; NX],
}

impl Default for Weights {
    fn default() -> Self {
        let q = [1.0, 1.0, 4.0, 0.5, 10.0, 10.0, 1.0, 0.1, 0.0];
        Self {
            q,
            r: [0.5, 50.0, 50.0, 0.5],
            p1: q.map(|w| 10.0 * w),
        }
    }
}

impl Weights {
    pub fn q(&self) -> StateVec {
        StateVec::from(self.q)
    }

    pub fn r(&self) -> InputVec {
        InputVec::from(self.r)
    }

    pub fn p1(&self) -> StateVec {
        StateVec::from(self.p1)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, w) in self.q.iter().enumerate() {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::validation(format!("weights.Q[{i}]"), "must be finite and nonnegative"));
            }
        }
        for (i, w) in self.p1.iter().enumerate() {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::validation(format!("weights.P1[{i}]"), "must be finite and nonnegative"));
            }
        }
        for (i, w) in self.r.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::validation(format!("weights.R[{i}]"), "must be finite and positive"));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, q: f64, r: f64, p1: f64) -> Self {
        Self {
            q: self.q.map(|w| w * q),
            r: self.r.map(|w| w * r),
            p1: self.p1.map(|w| w * p1),
        }
    }
}

/// Weights of the stabilising feedback used by the projection operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LqrWeights {
    #[serde(rename = "Q")]
    pub q: [f64; NX],
    #[serde(rename = "R")]
    pub r: [f64; NU],
}

impl Default for LqrWeights {
    fn default() -> Self {
        Self {
            q: [1.0, 1.0, 1.0, 1.0, 10.0, 10.0, 1.0, 1.0, 0.01],
            r: [0.5, 50.0, 50.0, 0.5],
        }
    }
}

impl LqrWeights {
    pub fn validate(&self) -> Result<()> {
        for (i, w) in self.q.iter().enumerate() {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::validation(format!("solver.lqr_reg.Q[{i}]"), "must be finite and nonnegative"));
            }
        }
        for (i, w) in self.r.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::validation(format!("solver.lqr_reg.R[{i}]"), "must be finite and positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Newton iterations allowed per barrier stage.
    pub max_newton: usize,
    /// Stop a stage once the squared Newton decrement falls below
    /// `grad_tol * (1 + |cost|)`.
    pub grad_tol: f64,
    /// Smallest line-search step before the stage is declared stalled.
    pub step_tol: f64,
    /// Grid step, s.
    pub step: f64,
    pub barrier: BarrierParams,
    pub lqr_reg: LqrWeights,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_newton: 300,
            grad_tol: 1e-6,
            step_tol: 1e-6,
            step: 0.05,
            barrier: BarrierParams::default(),
            lqr_reg: LqrWeights::default(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_newton == 0 {
            return Err(Error::validation("solver.max_newton", "must be at least 1"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::validation("solver.grad_tol", "must be positive"));
        }
        if !(self.step_tol > 0.0 && self.step_tol < 1.0) {
            return Err(Error::validation("solver.step_tol", "must lie in (0, 1)"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::validation("solver.step", "must be positive"));
        }
        self.barrier.validate()?;
        self.lqr_reg.validate()
    }
}

const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    MaxIterations,
    /// Some stage ended with a failed line search before reaching the tolerance.
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageOutcome {
    Converged,
    /// Line search could not make progress; the iterate is kept.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Total cost (tracking + barrier) of the accepted iterate.
    pub cost: f64,
    pub barrier: f64,
    pub barrier_mu: f64,
    /// Newton decrement at the iterate the step started from.
    pub grad_norm: f64,
    pub step: f64,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub mu: f64,
    pub delta: f64,
    pub initial_cost: f64,
    pub iterations: Vec<IterationRecord>,
    pub outcome: StageOutcome,
    pub final_decrement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub status: SolverStatus,
    pub stages: Vec<StageRecord>,
    pub iterations: usize,
    pub final_cost: f64,
    pub tracking_cost: f64,
    /// Time from manoeuvre start until `-e_z <= 0.1 m`.
    pub rendezvous_time: Option<f64>,
    pub predicted_time: f64,
    pub max_defect: f64,
    /// Largest normalized residual over all constraints and nodes.
    pub worst_residual: f64,
    pub constraint_activity: Vec<ConstraintActivity>,
}

impl SolverReport {
    pub fn active_constraints(&self) -> Vec<&str> {
        self.constraint_activity
            .iter()
            .filter(|a| !a.intervals.is_empty())
            .map(|a| a.constraint.as_str())
            .collect()
    }

    pub fn activity(&self, name: &str) -> Option<&ConstraintActivity> {
        self.constraint_activity.iter().find(|a| a.constraint == name)
    }

    /// Checks that accepted costs never increase inside a stage.
    pub fn stages_monotone(&self) -> bool {
        self.stages.iter().all(|s| {
            let mut last = s.initial_cost;
            s.iterations.iter().all(|it| {
                let ok = it.cost <= last;
                last = it.cost;
                ok
            })
        })
    }
}

/// Result of a solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub desired: Curve,
    pub initial: Trajectory,
    pub report: SolverReport,
    pub model: CoupledModel,
}

fn zero_gains(n: usize) -> Vec<Gain> {
    vec![Gain::zeros(); n]
}

/// Projection operator on a coupled-model curve.
pub fn project(model: &CoupledModel, curve: &Curve, gains: &[Gain], x0: &StateVec) -> Result<Trajectory> {
    if gains.len() != curve.grid.len {
        return Err(Error::solver(format!("{} gains for {} nodes", gains.len(), curve.grid.len), None));
    }
    let (states, inputs) = project_rollout(model, &curve.states, &curve.inputs, gains, x0, curve.grid)?;
    Ok(Trajectory {
        grid: curve.grid,
        states,
        inputs,
        anchor: model.ugv_state(x0)?,
    })
}

/// Time-varying LQR gains about `traj` with stage weights `h * Q_r`, `h * R_r`
/// and terminal weight `Q_r`.
pub fn lqr_gain(model: &CoupledModel, traj: &Trajectory, reg: &LqrWeights) -> Result<Vec<Gain>> {
    let h = traj.grid.step;
    let jac = (0..traj.grid.len - 1)
        .map(|k| {
            model
                .step_jacobians(&traj.states[k], &traj.inputs[k], h)
                .map_err(|e| e.at_time(traj.grid.time(k)))
        })
        .collect::<Result<Vec<_>>>()?;
    lqr_from_jacobians(&jac, reg, h)
}

fn lqr_from_jacobians(jac: &[(StateMat, crate::InputMat)], reg: &LqrWeights, h: f64) -> Result<Vec<Gain>> {
    let q = StateMat::from_diagonal(&StateVec::from(reg.q));
    let r = InputWeight::from_diagonal(&InputVec::from(reg.r));
    Ok(riccati_gains(jac, &(q * h), &(r * h), &q, h)?.0)
}

/// Cost of a trajectory: trapezoidal tracking and barrier integral plus terminal penalty.
pub fn total_cost(
    model: &CoupledModel,
    traj: &Trajectory,
    desired: &Curve,
    weights: &Weights,
    set: &ConstraintSet,
    barrier: Option<RelaxedBarrier>,
) -> Result<f64> {
    if traj.grid != desired.grid {
        return Err(Error::solver("trajectory and desired curve use different grids", None));
    }
    let obj = Objective {
        desired,
        weights,
        barrier: barrier.map(|b| (model, *set, b)),
    };
    objective_value(&obj, &traj.states, &traj.inputs, traj.grid)
}

fn barrier_integral(obj: &Objective, traj_states: &[StateVec], inputs: &[InputVec], grid: Grid) -> Result<f64> {
    let n = traj_states.len();
    let mut total = 0.0;
    for k in 0..n {
        total += quad_weight(k, n, grid.step) * obj.barrier_value(&traj_states[k], &inputs[k])?;
    }
    Ok(total)
}

/// Newton iterations with Armijo backtracking for one objective.
fn newton_stage(
    model: &CoupledModel,
    obj: &Objective,
    traj: &mut Trajectory,
    opts: &SolverOptions,
    tol: f64,
    record: &mut StageRecord,
    iter_offset: usize,
) -> Result<()> {
    let grid = traj.grid;
    let x0 = traj.states[0];
    let mut cost = objective_value(obj, &traj.states, &traj.inputs, grid)?;
    record.initial_cost = cost;
    record.outcome = StageOutcome::MaxIterations;
    for it in 0..opts.max_newton {
        let dir = search_direction(model, obj, &traj.states, &traj.inputs, grid)?;
        let dec2 = -dir.slope;
        record.final_decrement = dir.decrement();
        if dec2 <= tol * (1.0 + cost.abs()) {
            record.outcome = StageOutcome::Converged;
            return Ok(());
        }
        let gains = lqr_from_jacobians(&dir.jacobians, &opts.lqr_reg, grid.step)?;
        let mut gamma = 1.0;
        let mut accepted = None;
        while gamma >= opts.step_tol {
            let alpha: Vec<StateVec> = traj.states.iter().zip(&dir.z).map(|(x, z)| x + z * gamma).collect();
            let mu: Vec<InputVec> = traj.inputs.iter().zip(&dir.v).map(|(u, v)| u + v * gamma).collect();
            let trial = project_rollout(model, &alpha, &mu, &gains, &x0, grid)
                .and_then(|(s, u)| objective_value(obj, &s, &u, grid).map(|c| (s, u, c)));
            if let Ok((s, u, c)) = trial {
                if c.is_finite() && c <= cost + ARMIJO_C * gamma * dir.slope {
                    accepted = Some((s, u, c));
                    break;
                }
            }
            gamma *= BACKTRACK;
        }
        let Some((states, inputs, c)) = accepted else {
            log::debug!("stage {}: line search stalled at iteration {}", record.stage, it);
            record.outcome = StageOutcome::Stalled;
            return Ok(());
        };
        traj.states = states;
        traj.inputs = inputs;
        cost = c;
        let barrier = barrier_integral(obj, &traj.states, &traj.inputs, grid)?;
        log::debug!(
            "stage {} iter {}: cost {:.6e} decrement {:.3e} step {}",
            record.stage,
            iter_offset + it,
            cost,
            dir.decrement(),
            gamma
        );
        record.iterations.push(IterationRecord {
            iter: iter_offset + it,
            cost,
            barrier,
            barrier_mu: obj.barrier.map(|b| b.2.mu).unwrap_or(0.0),
            grad_norm: dir.decrement(),
            step: gamma,
            shift: dir.shift,
        });
    }
    // one last decrement evaluation tells whether the cap was hit at a stationary point
    let dir = search_direction(model, obj, &traj.states, &traj.inputs, grid)?;
    record.final_decrement = dir.decrement();
    if -dir.slope <= tol * (1.0 + cost.abs()) {
        record.outcome = StageOutcome::Converged;
    }
    Ok(())
}

/// Solve the rendezvous tracking problem for a scenario.
pub fn solve(scenario: &Scenario, weights: &Weights, opts: &SolverOptions) -> Result<Solution> {
    scenario.validate()?;
    weights.validate()?;
    opts.validate()?;
    let model = scenario.model();
    let grid = scenario.grid(opts.step);
    let desired = desired_curve(scenario, grid)?;
    let initial = initial_trajectory(scenario, grid)?;
    let set = ConstraintSet::new(scenario.limits);

    let mut traj = initial.clone();
    let mut stages = Vec::with_capacity(opts.barrier.stages);
    let mut iterations = 0;
    for i in 0..opts.barrier.stages {
        let barrier = opts.barrier.stage(i);
        let obj = Objective {
            desired: &desired,
            weights,
            barrier: Some((&model, set, barrier)),
        };
        let mut record = StageRecord {
            stage: i,
            mu: barrier.mu,
            delta: barrier.delta,
            initial_cost: f64::NAN,
            iterations: Vec::new(),
            outcome: StageOutcome::MaxIterations,
            final_decrement: f64::NAN,
        };
        // early stages only need rough centering; the final stage uses grad_tol itself
        let tol = opts.grad_tol * barrier.mu / opts.barrier.last_stage().mu;
        newton_stage(&model, &obj, &mut traj, opts, tol, &mut record, iterations)?;
        iterations += record.iterations.len();
        log::info!(
            "stage {i} (mu = {:.2e}): {} iterations, {:?}",
            barrier.mu,
            record.iterations.len(),
            record.outcome
        );
        stages.push(record);
    }

    let last = opts.barrier.last_stage();
    let final_cost = total_cost(&model, &traj, &desired, weights, &set, Some(last))?;
    let tracking_cost = total_cost(&model, &traj, &desired, weights, &set, None)?;
    let hist = residual_history(&model, &scenario.limits, &traj)?;
    let worst_residual = hist.iter().flat_map(|r| r.iter().copied()).fold(f64::NEG_INFINITY, f64::max);
    let report = SolverReport {
        status: if stages.iter().any(|s| s.outcome == StageOutcome::MaxIterations) {
            SolverStatus::MaxIterations
        } else if stages.iter().any(|s| s.outcome == StageOutcome::Stalled) {
            SolverStatus::Stalled
        } else {
            SolverStatus::Converged
        },
        stages,
        iterations,
        final_cost,
        tracking_cost,
        rendezvous_time: traj.rendezvous_duration(scenario.spec.t0, RENDEZVOUS_TOL),
        predicted_time: predicted_time(&scenario.spec, &scenario.params, &scenario.limits)?,
        max_defect: model.max_defect(&traj)?,
        worst_residual,
        constraint_activity: activity_from_history(&hist, grid.step, ACTIVE_EPS),
    };
    Ok(Solution {
        trajectory: traj,
        desired,
        initial,
        report,
        model,
    })
}

/// Projection of a curve with zero feedback, i.e. open-loop integration of its inputs.
pub fn open_loop(model: &CoupledModel, curve: &Curve, x0: &StateVec) -> Result<Trajectory> {
    project(model, curve, &zero_gains(curve.grid.len), x0)
}

#[cfg(test)]
mod tests;
