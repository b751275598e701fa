//! Inequality constraints in `c(x, u) <= 0` form, the relaxed log barrier and
//! constraint-activity reports.

use nalgebra::{SMatrix, SVector};
use num_dual::{hessian, Dual2SVec64};
use serde::{Deserialize, Serialize};

use crate::error_space::{CoupledModel, Trajectory};
use crate::models::{air_data, lift_drag, Limits};
use crate::{Error, InputVec, Result, Scalar, StateVec, NU, NX};

pub const N_CONSTRAINTS: usize = 18;

const NZ: usize = NX + NU;
type Hd = Dual2SVec64<NZ>;

/// Constraint names, in residual order.
pub const NAMES: [&str; N_CONSTRAINTS] = [
    "airspeed_max",
    "airspeed_min",
    "load_factor_max",
    "load_factor_min",
    "gamma_max",
    "gamma_min",
    "thrust_min",
    "thrust_max",
    "roll_max",
    "roll_min",
    "roll_rate_max",
    "roll_rate_min",
    "lift_coeff_max",
    "lift_coeff_min",
    "friction_circle",
    "altitude",
    "docking_plus",
    "docking_minus",
];

/// Named residual list with the normalization span of each entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSet {
    pub limits: Limits,
}

impl ConstraintSet {
    pub fn new(limits: Limits) -> Self {
        Self { limits }
    }

    pub fn names(&self) -> &'static [&'static str; N_CONSTRAINTS] {
        &NAMES
    }

    pub fn index(name: &str) -> Option<usize> {
        NAMES.iter().position(|n| *n == name)
    }

    /// Span used to make each residual dimensionless.
    pub fn scales(&self) -> [f64; N_CONSTRAINTS] {
        let l = &self.limits;
        let v = l.v_max - l.v_min;
        let n = l.nlf_max - l.nlf_min;
        let g = l.gamma_max - l.gamma_min;
        [
            v,
            v,
            n,
            n,
            g,
            g,
            l.u1_max,
            l.u1_max,
            2.0 * l.phi_max,
            2.0 * l.phi_max,
            2.0 * l.u2_max,
            2.0 * l.u2_max,
            2.0 * l.u3_max,
            2.0 * l.u3_max,
            l.a_max * l.a_max,
            l.ebar_z,
            1.0,
            1.0,
        ]
    }

    /// Raw residuals; entry `i <= 0` iff constraint `i` holds.
    pub fn residuals<T: Scalar>(&self, model: &CoupledModel, x: &[T; NX], u: &[T; NU]) -> Result<[T; N_CONSTRAINTS]> {
        let l = &self.limits;
        let [e_x, e_y, e_z, e_v, e_gamma, e_chi, e_phi, v_g, s_g] = *x;
        let [thrust, roll_rate, c_l, accel] = *u;
        let (chi_g, sigma) = model.path.heading(s_g)?;
        let (v_a, _, _) = air_data(e_v + v_g, e_chi + chi_g, e_gamma, &model.wind)?;
        let (lift, _) = lift_drag(v_a, c_l, &model.params);
        let n_lf = lift / model.params.weight();
        let a_lat = v_g * v_g * sigma;
        let (r_plus, r_minus) = docking_residual(e_x, e_y, e_z, e_chi, l);
        Ok([
            v_a - l.v_max,
            -v_a + l.v_min,
            n_lf - l.nlf_max,
            -n_lf + l.nlf_min,
            e_gamma - l.gamma_max,
            -e_gamma + l.gamma_min,
            -thrust,
            thrust - l.u1_max,
            e_phi - l.phi_max,
            -e_phi - l.phi_max,
            roll_rate - l.u2_max,
            -roll_rate - l.u2_max,
            c_l - l.u3_max,
            -c_l - l.u3_max,
            accel * accel + a_lat * a_lat - l.a_max * l.a_max,
            e_z,
            r_plus,
            r_minus,
        ])
    }

    /// Residuals divided by their spans.
    pub fn normalized<T: Scalar>(&self, model: &CoupledModel, x: &[T; NX], u: &[T; NU]) -> Result<[T; N_CONSTRAINTS]> {
        let r = self.residuals(model, x, u)?;
        let s = self.scales();
        Ok(std::array::from_fn(|i| r[i] * (1.0 / s[i])))
    }
}

/// Named residual vector at one state-input pair.
pub fn eval_constraints(
    model: &CoupledModel,
    limits: &Limits,
    x: &StateVec,
    u: &InputVec,
) -> Result<Vec<(&'static str, f64)>> {
    let r = ConstraintSet::new(*limits).residuals(model, &(*x).into(), &(*u).into())?;
    Ok(NAMES.iter().copied().zip(r).collect())
}

/// Split docking constraint `|e_chi| <= q(e)` as `(e_chi - q, -e_chi - q)` with
/// `q = (e_x/ē_x)² + (e_y/ē_y)² + (e_z/ē_z)² + (e_chi/ē_chi)²`.
pub fn docking_residual<T: Scalar>(e_x: T, e_y: T, e_z: T, e_chi: T, limits: &Limits) -> (T, T) {
    let sq = |e: T, bar: f64| {
        let r = e * (1.0 / bar);
        r * r
    };
    let q = sq(e_x, limits.ebar_x) + sq(e_y, limits.ebar_y) + sq(e_z, limits.ebar_z) + sq(e_chi, limits.ebar_chi);
    (e_chi - q, -e_chi - q)
}

/// Relaxed log barrier parameters and continuation schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierParams {
    pub delta: f64,
    pub mu: f64,
    pub shrink: f64,
    pub stages: usize,
}

impl Default for BarrierParams {
    fn default() -> Self {
        Self {
            delta: 0.05,
            mu: 0.1,
            shrink: 0.2,
            stages: 5,
        }
    }
}

impl BarrierParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::validation("solver.barrier.delta", "must be positive"));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::validation("solver.barrier.mu", "must be positive"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::validation("solver.barrier.shrink", "must lie in (0, 1)"));
        }
        if self.stages == 0 {
            return Err(Error::validation("solver.barrier.stages", "at least one stage required"));
        }
        Ok(())
    }

    /// Weight and threshold of continuation stage `i`; both shrink together.
    pub fn stage(&self, i: usize) -> RelaxedBarrier {
        let f = self.shrink.powi(i as i32);
        RelaxedBarrier {
            mu: self.mu * f,
            delta: self.delta * f,
        }
    }

    pub fn last_stage(&self) -> RelaxedBarrier {
        self.stage(self.stages - 1)
    }
}

/// One stage of the barrier: `mu * beta_delta(-c)` per normalized residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxedBarrier {
    pub mu: f64,
    pub delta: f64,
}

/// `-log z` for `z >= delta`, quadratic continuation below.
pub fn relaxed_log<T: Scalar>(z: T, delta: f64) -> T {
    if z.re() >= delta {
        -z.ln()
    } else {
        let r = (z - 2.0 * delta) * (1.0 / delta);
        (r * r - 1.0) * 0.5 - delta.ln()
    }
}

/// Barrier value, gradient and Hessian with respect to `(x, u)` at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierTerms {
    pub value: f64,
    pub grad: SVector<f64, NZ>,
    pub hess: SMatrix<f64, NZ, NZ>,
}

impl RelaxedBarrier {
    pub fn value<T: Scalar>(&self, set: &ConstraintSet, model: &CoupledModel, x: &[T; NX], u: &[T; NU]) -> Result<T> {
        let r = set.normalized(model, x, u)?;
        Ok(r.iter().fold(T::c(0.0), |acc, &c| acc + relaxed_log(-c, self.delta)) * self.mu)
    }

    /// Sum over residuals `[c_i]` already normalized.
    pub fn of_residuals(&self, residuals: &[f64]) -> f64 {
        self.mu * residuals.iter().map(|&c| relaxed_log(-c, self.delta)).sum::<f64>()
    }

    pub fn terms(&self, set: &ConstraintSet, model: &CoupledModel, x: &StateVec, u: &InputVec) -> Result<BarrierTerms> {
        self.value(set, model, &(*x).into(), &(*u).into())?;
        let z = SVector::<f64, NZ>::from_iterator(x.iter().chain(u.iter()).copied());
        let (value, grad, hess) = hessian(
            |z: SVector<Hd, NZ>| {
                let xs: [Hd; NX] = std::array::from_fn(|i| z[i]);
                let us: [Hd; NU] = std::array::from_fn(|i| z[NX + i]);
                self.value(set, model, &xs, &us).unwrap_or(Hd::from(f64::NAN))
            },
            &z,
        );
        Ok(BarrierTerms { value, grad, hess })
    }
}

/// Barrier value plus derivatives at one node; the stage-free entry point.
pub fn barrier_cost(
    model: &CoupledModel,
    limits: &Limits,
    barrier: &RelaxedBarrier,
    x: &StateVec,
    u: &InputVec,
) -> Result<BarrierTerms> {
    barrier.terms(&ConstraintSet::new(*limits), model, x, u)
}

/// Activity of one constraint along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintActivity {
    pub constraint: String,
    pub intervals: Vec<[f64; 2]>,
    /// Largest normalized residual along the trajectory.
    pub worst_residual: f64,
}

impl ConstraintActivity {
    pub fn active_time(&self) -> f64 {
        self.intervals.iter().map(|[a, b]| b - a).sum()
    }

    /// Active time inside `[t_a, t_b]`.
    pub fn active_time_within(&self, t_a: f64, t_b: f64) -> f64 {
        self.intervals
            .iter()
            .map(|[a, b]| (b.min(t_b) - a.max(t_a)).max(0.0))
            .sum()
    }
}

/// Default activity threshold on normalized residuals.
pub const ACTIVE_EPS: f64 = 1e-3;

/// Normalized residuals at every node, `[node][constraint]`.
pub fn residual_history(model: &CoupledModel, limits: &Limits, traj: &Trajectory) -> Result<Vec<[f64; N_CONSTRAINTS]>> {
    let set = ConstraintSet::new(*limits);
    traj.states
        .iter()
        .zip(&traj.inputs)
        .enumerate()
        .map(|(k, (x, u))| {
            set.normalized(model, &(*x).into(), &(*u).into())
                .map_err(|e| e.at_time(traj.grid.time(k)))
        })
        .collect()
}

/// Full report: every constraint with its worst residual; intervals where the
/// normalized residual exceeds `-eps`. Intervals span node times, so a single
/// active node yields a zero-length interval.
pub fn constraint_report(
    model: &CoupledModel,
    limits: &Limits,
    traj: &Trajectory,
    eps: f64,
) -> Result<Vec<ConstraintActivity>> {
    let hist = residual_history(model, limits, traj)?;
    Ok(activity_from_history(&hist, traj.grid.step, eps))
}

pub(crate) fn activity_from_history(hist: &[[f64; N_CONSTRAINTS]], step: f64, eps: f64) -> Vec<ConstraintActivity> {
    (0..N_CONSTRAINTS)
        .map(|i| {
            let mut intervals = Vec::new();
            let mut open: Option<usize> = None;
            let mut worst = f64::NEG_INFINITY;
            for (k, r) in hist.iter().enumerate() {
                worst = worst.max(r[i]);
                let active = r[i] > -eps;
                match (active, open) {
                    (true, None) => open = Some(k),
                    (false, Some(a)) => {
                        intervals.push([a as f64 * step, (k - 1) as f64 * step]);
                        open = None;
                    }
                    _ => {}
                }
            }
            if let Some(a) = open {
                intervals.push([a as f64 * step, (hist.len() - 1) as f64 * step]);
            }
            ConstraintActivity {
                constraint: NAMES[i].to_string(),
                intervals,
                worst_residual: worst,
            }
        })
        .collect()
}

/// Only the constraints that were active somewhere.
pub fn active_only(report: &[ConstraintActivity]) -> Vec<ConstraintActivity> {
    report.iter().filter(|a| !a.intervals.is_empty()).cloned().collect()
}
