//! Discretised tracking problem, its local quadratic model and the projection
//! operator, written against small traits so that frozen linear instances can
//! be solved with the same code.

use nalgebra::{SMatrix, SVector};

use super::lqr::Gain;
use super::Weights;
use crate::constraints::{ConstraintSet, RelaxedBarrier};
use crate::error_space::{CoupledModel, Curve, Grid};
use crate::{Error, InputMat, InputVec, Result, StateMat, StateVec, NU, NX};

pub const NZ: usize = NX + NU;
pub type StageGrad = SVector<f64, NZ>;
pub type StageHess = SMatrix<f64, NZ, NZ>;
type InputSq = SMatrix<f64, NU, NU>;
type CrossMat = SMatrix<f64, NU, NX>;

/// Discrete-time dynamics `x+ = F(x, u)` over one grid step.
pub trait Plant {
    fn step(&self, x: &StateVec, u: &InputVec, h: f64) -> Result<StateVec>;
    fn jacobians(&self, x: &StateVec, u: &InputVec, h: f64) -> Result<(StateMat, InputMat)>;
}

impl Plant for CoupledModel {
    fn step(&self, x: &StateVec, u: &InputVec, h: f64) -> Result<StateVec> {
        self.step_vec(x, u, h)
    }

    fn jacobians(&self, x: &StateVec, u: &InputVec, h: f64) -> Result<(StateMat, InputMat)> {
        self.step_jacobians(x, u, h)
    }
}

/// Linear time-invariant plant `x+ = A x + B u` (the step length is ignored).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPlant {
    pub a: StateMat,
    pub b: InputMat,
}

impl Plant for LinearPlant {
    fn step(&self, x: &StateVec, u: &InputVec, _h: f64) -> Result<StateVec> {
        Ok(self.a * x + self.b * u)
    }

    fn jacobians(&self, _x: &StateVec, _u: &InputVec, _h: f64) -> Result<(StateMat, InputMat)> {
        Ok((self.a, self.b))
    }
}

/// Running cost `l_k(x, u)` and terminal cost `m(x_N)`.
pub trait StageCost {
    fn running(&self, k: usize, x: &StateVec, u: &InputVec) -> Result<f64>;
    /// Value, gradient and (model) Hessian of the running cost in `(x, u)`.
    fn running_derivatives(&self, k: usize, x: &StateVec, u: &InputVec) -> Result<(f64, StageGrad, StageHess)>;
    fn terminal(&self, x: &StateVec) -> (f64, StateVec, StateMat);
}

/// Tracking cost with an optional relaxed-barrier term.
pub struct Objective<'a> {
    pub desired: &'a Curve,
    pub weights: &'a Weights,
    pub barrier: Option<(&'a CoupledModel, ConstraintSet, RelaxedBarrier)>,
}

impl Objective<'_> {
    fn tracking(&self, k: usize, x: &StateVec, u: &InputVec) -> f64 {
        let dx = x - self.desired.states[k];
        let du = u - self.desired.inputs[k];
        let w = self.weights;
        0.5 * (dx.component_mul(&dx).dot(&w.q()) + du.component_mul(&du).dot(&w.r()))
    }

    pub fn barrier_value(&self, x: &StateVec, u: &InputVec) -> Result<f64> {
        match &self.barrier {
            Some((model, set, b)) => b.value(set, model, &(*x).into(), &(*u).into()),
            None => Ok(0.0),
        }
    }
}

impl StageCost for Objective<'_> {
    fn running(&self, k: usize, x: &StateVec, u: &InputVec) -> Result<f64> {
        Ok(self.tracking(k, x, u) + self.barrier_value(x, u)?)
    }

    fn running_derivatives(&self, k: usize, x: &StateVec, u: &InputVec) -> Result<(f64, StageGrad, StageHess)> {
        let w = self.weights;
        let dx = (x - self.desired.states[k]).component_mul(&w.q());
        let du = (u - self.desired.inputs[k]).component_mul(&w.r());
        let mut grad = StageGrad::from_iterator(dx.iter().chain(du.iter()).copied());
        let mut hess = StageHess::from_diagonal(&StageGrad::from_iterator(w.q().iter().chain(w.r().iter()).copied()));
        let mut value = self.tracking(k, x, u);
        if let Some((model, set, b)) = &self.barrier {
            let t = b.terms(set, model, x, u)?;
            if !(t.grad.iter().all(|v| v.is_finite()) && t.hess.iter().all(|v| v.is_finite())) {
                return Err(Error::domain("non-finite barrier derivatives"));
            }
            value += t.value;
            grad += t.grad;
            hess += psd_part(&t.hess);
        }
        Ok((value, grad, hess))
    }

    fn terminal(&self, x: &StateVec) -> (f64, StateVec, StateMat) {
        let p1 = self.weights.p1();
        let dx = x - self.desired.states.last().expect("non-empty curve");
        let g = dx.component_mul(&p1);
        (0.5 * dx.dot(&g), g, StateMat::from_diagonal(&p1))
    }
}

/// Symmetric matrix with negative eigenvalues clipped to zero.
fn psd_part(h: &StageHess) -> StageHess {
    let eig = (0.5 * (h + h.transpose())).symmetric_eigen();
    if eig.eigenvalues.min() >= 0.0 {
        return 0.5 * (h + h.transpose());
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    eig.eigenvectors * StageHess::from_diagonal(&clipped) * eig.eigenvectors.transpose()
}

/// Evaluate `f` at every node index, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
fn map_nodes<R: Send>(n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_nodes<R: Send>(n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    (0..n).map(f).collect()
}

/// Trapezoidal quadrature weight of node `k` on an `n`-node grid.
pub fn quad_weight(k: usize, n: usize, h: f64) -> f64 {
    if n == 1 {
        0.0
    } else if k == 0 || k + 1 == n {
        0.5 * h
    } else {
        h
    }
}

/// Trapezoidal running cost plus terminal cost.
pub fn objective_value(
    cost: &(impl StageCost + Sync),
    states: &[StateVec],
    inputs: &[InputVec],
    grid: Grid,
) -> Result<f64> {
    let n = states.len();
    let running = map_nodes(n, |k| Ok(quad_weight(k, n, grid.step) * cost.running(k, &states[k], &inputs[k])?))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    Ok(running.iter().sum::<f64>() + cost.terminal(&states[n - 1]).0)
}

/// Descent direction `(z, v)` on the tangent space of the trajectory manifold.
#[derive(Debug, Clone)]
pub struct Direction {
    pub z: Vec<StateVec>,
    pub v: Vec<InputVec>,
    /// Directional derivative of the cost along the direction (negative).
    pub slope: f64,
    /// Value of the local quadratic model at the direction, relative to zero.
    pub model_change: f64,
    /// Levenberg shift that was needed for positive definiteness.
    pub shift: f64,
    pub jacobians: Vec<(StateMat, InputMat)>,
    pub cost: f64,
}

impl Direction {
    /// `sqrt(-slope)`, the Newton decrement.
    pub fn decrement(&self) -> f64 {
        (-self.slope).max(0.0).sqrt()
    }
}

struct Expansion {
    jac: Vec<(StateMat, InputMat)>,
    grads: Vec<StageGrad>,
    hess: Vec<StageHess>,
    term_grad: StateVec,
    term_hess: StateMat,
    cost: f64,
}

fn expand(
    plant: &(impl Plant + Sync),
    cost: &(impl StageCost + Sync),
    states: &[StateVec],
    inputs: &[InputVec],
    grid: Grid,
) -> Result<Expansion> {
    let n = states.len();
    let nodes = map_nodes(n, |k| {
        let t = grid.time(k);
        let jac = if k + 1 < n {
            Some(plant.jacobians(&states[k], &inputs[k], grid.step).map_err(|e| e.at_time(t))?)
        } else {
            None
        };
        let c = quad_weight(k, n, grid.step);
        let (l, g, h) = cost.running_derivatives(k, &states[k], &inputs[k]).map_err(|e| e.at_time(t))?;
        Ok((jac, c * l, g * c, h * c))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut jac = Vec::with_capacity(n - 1);
    let mut grads = Vec::with_capacity(n);
    let mut hess = Vec::with_capacity(n);
    let mut total = 0.0;
    for (j, l, g, h) in nodes {
        jac.extend(j);
        total += l;
        grads.push(g);
        hess.push(h);
    }
    let (m, term_grad, term_hess) = cost.terminal(&states[n - 1]);
    Ok(Expansion {
        jac,
        grads,
        hess,
        term_grad,
        term_hess,
        cost: total + m,
    })
}

fn blocks(h: &StageHess) -> (StateMat, InputSq, CrossMat) {
    (
        h.fixed_view::<NX, NX>(0, 0).into_owned(),
        h.fixed_view::<NU, NU>(NX, NX).into_owned(),
        h.fixed_view::<NU, NX>(NX, 0).into_owned(),
    )
}

fn split_grad(g: &StageGrad) -> (StateVec, InputVec) {
    (g.fixed_rows::<NX>(0).into_owned(), g.fixed_rows::<NU>(NX).into_owned())
}

/// Riccati solve of the LQ subproblem with a given Levenberg shift. Returns
/// `None` when some input block is not positive definite.
fn lq_solve(e: &Expansion, shift: f64) -> Option<(Vec<StateVec>, Vec<InputVec>)> {
    let n = e.grads.len();
    let eye_u = InputSq::identity() * shift;
    let eye_x = StateMat::identity() * shift;

    // the final input only enters its own running cost, so eliminate it first
    let (hxx, huu, hux) = blocks(&e.hess[n - 1]);
    let (gx, gu) = split_grad(&e.grads[n - 1]);
    let chol = (huu + eye_u).cholesky()?;
    let k_last = -chol.solve(&hux);
    let kk_last = -chol.solve(&gu);
    let mut p = e.term_hess + hxx + eye_x + hux.transpose() * k_last;
    let mut pv = e.term_grad + gx + hux.transpose() * kk_last;
    p = 0.5 * (p + p.transpose());

    let mut gains = vec![(CrossMat::zeros(), InputVec::zeros()); n];
    gains[n - 1] = (k_last, kk_last);
    for k in (0..n - 1).rev() {
        let (a, b) = &e.jac[k];
        let (hxx, huu, hux) = blocks(&e.hess[k]);
        let (gx, gu) = split_grad(&e.grads[k]);
        let pa = p * a;
        let pb = p * b;
        let qxx = hxx + eye_x + a.transpose() * pa;
        let quu = huu + eye_u + b.transpose() * pb;
        let qux = hux + b.transpose() * pa;
        let qx = gx + a.transpose() * pv;
        let qu = gu + b.transpose() * pv;
        let chol = quu.cholesky()?;
        let kg = -chol.solve(&qux);
        let kf = -chol.solve(&qu);
        let next = qxx + qux.transpose() * kg;
        p = 0.5 * (next + next.transpose());
        pv = qx + qux.transpose() * kf;
        if !(p.iter().all(|v| v.is_finite()) && pv.iter().all(|v| v.is_finite())) {
            return None;
        }
        gains[k] = (kg, kf);
    }

    let mut z = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut zk = StateVec::zeros();
    for k in 0..n {
        let vk = gains[k].0 * zk + gains[k].1;
        z.push(zk);
        v.push(vk);
        if k + 1 < n {
            let (a, b) = &e.jac[k];
            zk = a * zk + b * vk;
        }
    }
    Some((z, v))
}

fn slope_and_model(e: &Expansion, z: &[StateVec], v: &[InputVec]) -> (f64, f64) {
    let n = z.len();
    let mut slope = 0.0;
    let mut quad = 0.0;
    for k in 0..n {
        let zeta = StageGrad::from_iterator(z[k].iter().chain(v[k].iter()).copied());
        slope += e.grads[k].dot(&zeta);
        quad += zeta.dot(&(e.hess[k] * zeta));
    }
    slope += e.term_grad.dot(&z[n - 1]);
    quad += z[n - 1].dot(&(e.term_hess * z[n - 1]));
    (slope, slope + 0.5 * quad)
}

/// Derivative of the discretised cost along a perturbation `(z, v)` of the
/// trajectory, from the same first-order expansion the search direction uses.
pub fn directional_derivative(
    plant: &(impl Plant + Sync),
    cost: &(impl StageCost + Sync),
    states: &[StateVec],
    inputs: &[InputVec],
    grid: Grid,
    z: &[StateVec],
    v: &[InputVec],
) -> Result<f64> {
    if z.len() != states.len() || v.len() != inputs.len() {
        return Err(Error::solver("perturbation length does not match the trajectory", None));
    }
    let e = expand(plant, cost, states, inputs, grid)?;
    Ok(slope_and_model(&e, z, v).0)
}

/// Newton-type search direction: minimiser of the local quadratic model of
/// the cost over trajectory perturbations with `z_0 = 0`.
pub fn search_direction(
    plant: &(impl Plant + Sync),
    cost: &(impl StageCost + Sync),
    states: &[StateVec],
    inputs: &[InputVec],
    grid: Grid,
) -> Result<Direction> {
    let e = expand(plant, cost, states, inputs, grid)?;
    let scale = e
        .hess
        .iter()
        .map(|h| h.diagonal().amax())
        .fold(e.term_hess.diagonal().amax(), f64::max)
        .max(1e-12);
    let mut shift = 0.0;
    for _ in 0..40 {
        if let Some((z, v)) = lq_solve(&e, shift) {
            let (slope, model_change) = slope_and_model(&e, &z, &v);
            if slope.is_finite() && (slope < 0.0 || z.iter().all(|x| x.amax() == 0.0) && v.iter().all(|u| u.amax() == 0.0)) {
                return Ok(Direction {
                    z,
                    v,
                    slope: slope.min(0.0),
                    model_change,
                    shift,
                    jacobians: e.jac,
                    cost: e.cost,
                });
            }
            if slope.is_finite() && slope.abs() <= 1e-14 * (1.0 + e.cost.abs()) {
                return Ok(Direction {
                    z,
                    v,
                    slope: 0.0,
                    model_change,
                    shift,
                    jacobians: e.jac,
                    cost: e.cost,
                });
            }
        }
        shift = if shift == 0.0 { 1e-8 * scale } else { shift * 10.0 };
    }
    Err(Error::solver("no descent direction after maximal regularisation", None))
}

/// Projection operator: track the curve `(alpha, mu)` with feedback `K` and
/// roll the dynamics out from `x0`.
pub fn project_rollout(
    plant: &impl Plant,
    alpha: &[StateVec],
    mu: &[InputVec],
    gains: &[Gain],
    x0: &StateVec,
    grid: Grid,
) -> Result<(Vec<StateVec>, Vec<InputVec>)> {
    let n = alpha.len();
    let mut states = Vec::with_capacity(n);
    let mut inputs = Vec::with_capacity(n);
    let mut x = *x0;
    for k in 0..n {
        let u = mu[k] + gains[k] * (alpha[k] - x);
        states.push(x);
        inputs.push(u);
        if k + 1 < n {
            x = plant.step(&x, &u, grid.step).map_err(|e| e.at_time(grid.time(k)))?;
            if !x.iter().all(|v| v.is_finite()) {
                return Err(Error::solver("non-finite state during projection", Some(grid.time(k))));
            }
        }
    }
    Ok((states, inputs))
}
