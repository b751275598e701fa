//! Coordinates attached to the UGV velocity frame and the coupled UAV–UGV
//! dynamics expressed in them.

mod dynamics;
mod integrate;

pub use dynamics::CoupledModel;
pub use integrate::{equivalence_check, equivalence_check_with, rk4_step};

use serde::{Deserialize, Serialize};

use crate::models::UgvState;
use crate::{InputVec, StateVec};

/// Error-space state. Position errors are expressed in the UGV velocity frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoupledState {
    pub e_x: f64,
    pub e_y: f64,
    pub e_z: f64,
    pub e_v: f64,
    pub e_gamma: f64,
    pub e_chi: f64,
    pub e_phi: f64,
    pub v_g: f64,
    pub s_g: f64,
}

impl CoupledState {
    pub const NAMES: [&'static str; 9] =
        ["e_x", "e_y", "e_z", "e_v", "e_gamma", "e_chi", "e_phi", "v_G", "s_G"];

    pub fn to_vec(&self) -> StateVec {
        StateVec::from([
            self.e_x,
            self.e_y,
            self.e_z,
            self.e_v,
            self.e_gamma,
            self.e_chi,
            self.e_phi,
            self.v_g,
            self.s_g,
        ])
    }

    pub fn from_vec(x: &StateVec) -> Self {
        Self {
            e_x: x[0],
            e_y: x[1],
            e_z: x[2],
            e_v: x[3],
            e_gamma: x[4],
            e_chi: x[5],
            e_phi: x[6],
            v_g: x[7],
            s_g: x[8],
        }
    }
}

/// Coupled input: the three UAV controls and the UGV longitudinal acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoupledInput {
    pub thrust: f64,
    pub roll_rate: f64,
    pub lift_coeff: f64,
    pub ugv_accel: f64,
}

impl CoupledInput {
    pub const NAMES: [&'static str; 4] = ["u1", "u2", "u3", "u4"];

    pub fn to_vec(&self) -> InputVec {
        InputVec::from([self.thrust, self.roll_rate, self.lift_coeff, self.ugv_accel])
    }

    pub fn from_vec(u: &InputVec) -> Self {
        Self {
            thrust: u[0],
            roll_rate: u[1],
            lift_coeff: u[2],
            ugv_accel: u[3],
        }
    }
}

/// Uniform time grid `t_k = k * step`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub step: f64,
    pub len: usize,
}

impl Grid {
    /// Smallest grid with the given step covering `[0, horizon]`.
    pub fn covering(step: f64, horizon: f64) -> Self {
        let intervals = (horizon / step - 1e-9).ceil().max(0.0) as usize;
        Self {
            step,
            len: intervals + 1,
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.time(self.len.saturating_sub(1))
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|k| self.time(k))
    }
}

/// State-input pair on a grid with no feasibility requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub grid: Grid,
    pub states: Vec<StateVec>,
    pub inputs: Vec<InputVec>,
}

/// State-input pair that satisfies the discretised coupled dynamics: each
/// state is the RK4 image of its predecessor under the stored (zero-order
/// held) input.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    pub states: Vec<StateVec>,
    pub inputs: Vec<InputVec>,
    /// UGV state at `t = 0`.
    pub anchor: UgvState,
}

impl Trajectory {
    pub fn as_curve(&self) -> Curve {
        Curve {
            grid: self.grid,
            states: self.states.clone(),
            inputs: self.inputs.clone(),
        }
    }

    pub fn state(&self, k: usize) -> CoupledState {
        CoupledState::from_vec(&self.states[k])
    }

    pub fn input(&self, k: usize) -> CoupledInput {
        CoupledInput::from_vec(&self.inputs[k])
    }

    /// Time elapsed after `t0` until the vertical error first satisfies
    /// `-e_z <= tol`, or `None` when it never does.
    pub fn rendezvous_duration(&self, t0: f64, tol: f64) -> Option<f64> {
        self.states
            .iter()
            .enumerate()
            .map(|(k, x)| (self.grid.time(k), x[2]))
            .find(|&(t, e_z)| t > t0 && -e_z <= tol)
            .map(|(t, _)| t - t0)
    }
}

/// `p_A = p_G + R_z(chi_G) e` with the UGV on the ground.
pub fn error_to_inertial(e: [f64; 3], ugv: &UgvState) -> [f64; 3] {
    let (s, c) = ugv.chi.sin_cos();
    [
        ugv.x + c * e[0] - s * e[1],
        ugv.y + s * e[0] + c * e[1],
        e[2],
    ]
}

/// Inverse of [`error_to_inertial`].
pub fn inertial_to_error(p: [f64; 3], ugv: &UgvState) -> [f64; 3] {
    let (s, c) = ugv.chi.sin_cos();
    let dx = p[0] - ugv.x;
    let dy = p[1] - ugv.y;
    [c * dx + s * dy, -s * dx + c * dy, p[2]]
}
