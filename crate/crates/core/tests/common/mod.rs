//! Shared oracles for the integration tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rendezvous::error_space::{Curve, Grid};
use rendezvous::trajopt::{project_rollout, quad_weight, search_direction, Gain, LinearPlant, Objective, Weights};
use rendezvous::{InputMat, InputVec, StateMat, StateVec, NU, NX};

/// Outcome of one Newton step on a random linear-quadratic instance.
pub struct LqCheck {
    /// Largest state deviation from the dense solution.
    pub state_err: f64,
    /// Largest input deviation from the dense solution.
    pub input_err: f64,
    /// Newton decrement squared left after the step.
    pub remaining: f64,
    pub shift: f64,
}

/// Dense solve of the discretised problem: eliminate the states through
/// `x_k = A^k x0 + sum_j A^(k-1-j) B u_j` and solve the normal equations.
pub fn dense_qp(plant: &LinearPlant, x0: &StateVec, desired: &Curve, w: &Weights) -> (Vec<StateVec>, Vec<InputVec>) {
    let n = desired.grid.len;
    let h = desired.grid.step;
    let a = DMatrix::from_column_slice(NX, NX, plant.a.as_slice());
    let b = DMatrix::from_column_slice(NX, NU, plant.b.as_slice());
    let mut phi = DMatrix::zeros(NX * n, NX);
    let mut gamma = DMatrix::zeros(NX * n, NU * n);
    let mut ak = DMatrix::identity(NX, NX);
    for k in 0..n {
        phi.view_mut((NX * k, 0), (NX, NX)).copy_from(&ak);
        ak = &a * ak;
    }
    for k in 1..n {
        for j in 0..k {
            let mut m = b.clone();
            for _ in 0..(k - 1 - j) {
                m = &a * m;
            }
            gamma.view_mut((NX * k, NU * j), (NX, NU)).copy_from(&m);
        }
    }
    let mut wx = DMatrix::zeros(NX * n, NX * n);
    let mut wu = DMatrix::zeros(NU * n, NU * n);
    for k in 0..n {
        let c = quad_weight(k, n, h);
        for i in 0..NX {
            wx[(NX * k + i, NX * k + i)] = c * w.q[i] + if k + 1 == n { w.p1[i] } else { 0.0 };
        }
        for i in 0..NU {
            wu[(NU * k + i, NU * k + i)] = c * w.r[i];
        }
    }
    let xd = DVector::from_iterator(NX * n, desired.states.iter().flat_map(|x| x.iter().copied()));
    let ud = DVector::from_iterator(NU * n, desired.inputs.iter().flat_map(|u| u.iter().copied()));
    let x0 = DVector::from_column_slice(x0.as_slice());
    let hmat = gamma.transpose() * &wx * &gamma + &wu;
    let g = gamma.transpose() * &wx * (&phi * &x0 - &xd) - &wu * &ud;
    let u = hmat.cholesky().expect("positive definite").solve(&(-g));
    let x = &phi * &x0 + &gamma * &u;
    (
        (0..n).map(|k| StateVec::from_column_slice(&x.as_slice()[NX * k..NX * (k + 1)])).collect(),
        (0..n).map(|k| InputVec::from_column_slice(&u.as_slice()[NU * k..NU * (k + 1)])).collect(),
    )
}

/// Random frozen linear plant and quadratic tracking cost; one Newton step
/// from the zero-input trajectory, compared with [`dense_qp`].
pub fn lq_check(seed: u64) -> LqCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid { step: 0.1, len: 15 };
    let a = StateMat::identity() + StateMat::from_fn(|_, _| rng.random_range(-0.05..0.05));
    let b = InputMat::from_fn(|_, _| rng.random_range(-0.1..0.1));
    let plant = LinearPlant { a, b };
    let w = Weights {
        q: std::array::from_fn(|_| rng.random_range(0.5..2.0)),
        r: std::array::from_fn(|_| rng.random_range(0.5..2.0)),
        p1: std::array::from_fn(|_| rng.random_range(0.5..5.0)),
    };
    let desired = Curve {
        grid,
        states: (0..grid.len).map(|_| StateVec::from_fn(|_, _| rng.random_range(-1.0..1.0))).collect(),
        inputs: (0..grid.len).map(|_| InputVec::from_fn(|_, _| rng.random_range(-1.0..1.0))).collect(),
    };
    let obj = Objective {
        desired: &desired,
        weights: &w,
        barrier: None,
    };
    let x0 = StateVec::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let zeros = vec![Gain::zeros(); grid.len];
    let (states, inputs) = project_rollout(
        &plant,
        &vec![StateVec::zeros(); grid.len],
        &vec![InputVec::zeros(); grid.len],
        &zeros,
        &x0,
        grid,
    )
    .unwrap();

    let dir = search_direction(&plant, &obj, &states, &inputs, grid).unwrap();
    let xs: Vec<_> = states.iter().zip(&dir.z).map(|(x, z)| x + z).collect();
    let us: Vec<_> = inputs.iter().zip(&dir.v).map(|(u, v)| u + v).collect();
    let (xq, uq) = dense_qp(&plant, &x0, &desired, &w);
    let state_err = xs.iter().zip(&xq).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
    let input_err = us.iter().zip(&uq).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
    let again = search_direction(&plant, &obj, &xs, &us, grid).unwrap();
    LqCheck {
        state_err,
        input_err,
        remaining: -again.slope,
        shift: dir.shift,
    }
}
